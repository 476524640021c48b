"""Independent brute-force reference implementations used to check the
package's vectorized code. Everything here is written with explicit loops
and the plainest possible formulas, on purpose."""

import math

import numpy as np


# ---------------------------------------------------------------------------
# classification / agreement metrics

def confusion_oracle(y, y_hat, classes):
    mat = [[0] * classes for _ in range(classes)]
    for a, b in zip(y, y_hat):
        mat[int(a)][int(b)] += 1
    return mat


def qwk_oracle(y, y_hat, classes=5):
    obs = confusion_oracle(y, y_hat, classes)
    n = len(y)
    row = [sum(obs[i]) for i in range(classes)]
    col = [sum(obs[i][j] for i in range(classes)) for j in range(classes)]
    num = 0.0
    den = 0.0
    for i in range(classes):
        for j in range(classes):
            w = (i - j) ** 2 / (classes - 1) ** 2
            num += w * obs[i][j]
            den += w * row[i] * col[j] / n
    if den == 0:
        return 1.0 if all(int(a) == int(b) for a, b in zip(y, y_hat)) else 0.0
    return 1.0 - num / den


def macro_f1_oracle(y, y_hat, classes=5):
    total = 0.0
    for c in range(classes):
        tp = sum(1 for a, b in zip(y, y_hat) if a == c and b == c)
        fp = sum(1 for a, b in zip(y, y_hat) if a != c and b == c)
        fn = sum(1 for a, b in zip(y, y_hat) if a == c and b != c)
        denom = 2 * tp + fp + fn
        total += (2 * tp / denom) if denom > 0 else 0.0
    return total / classes


def balanced_accuracy_oracle(y, y_hat, classes=5):
    recalls = []
    for c in range(classes):
        support = sum(1 for a in y if a == c)
        if support == 0:
            continue
        hit = sum(1 for a, b in zip(y, y_hat) if a == c and b == c)
        recalls.append(hit / support)
    return sum(recalls) / len(recalls)


def binary_auc_oracle(y_bin, score):
    """Pairwise probability that a positive outranks a negative (ties 0.5)."""
    pos = [s for yy, s in zip(y_bin, score) if yy == 1]
    neg = [s for yy, s in zip(y_bin, score) if yy == 0]
    total = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                total += 1.0
            elif p == q:
                total += 0.5
    return total / (len(pos) * len(neg))


def macro_auc_oracle(y, probs):
    aucs = []
    for c in sorted(set(int(v) for v in y)):
        y_bin = [1 if int(v) == c else 0 for v in y]
        if 0 < sum(y_bin) < len(y_bin):
            aucs.append(binary_auc_oracle(y_bin, [row[c] for row in probs]))
    return sum(aucs) / len(aucs)


def icc_oracle(x, y):
    """ICC(2,1) straight from the two-way ANOVA table, scalar arithmetic."""
    n = len(x)
    k = 2
    data = [[float(a), float(b)] for a, b in zip(x, y)]
    grand = sum(sum(row) for row in data) / (n * k)
    row_means = [sum(row) / k for row in data]
    col_means = [sum(data[i][j] for i in range(n)) / n for j in range(k)]
    ss_rows = k * sum((m - grand) ** 2 for m in row_means)
    ss_cols = n * sum((m - grand) ** 2 for m in col_means)
    ss_total = sum((v - grand) ** 2 for row in data for v in row)
    ss_err = ss_total - ss_rows - ss_cols
    ms_r = ss_rows / (n - 1)
    ms_c = ss_cols / (k - 1)
    ms_e = ss_err / ((n - 1) * (k - 1))
    denom = ms_r + (k - 1) * ms_e + k * (ms_c - ms_e) / n
    if denom == 0:
        return 1.0 if all(a == b for a, b in zip(x, y)) else 0.0
    return (ms_r - ms_e) / denom


# ---------------------------------------------------------------------------
# segmentation metrics

def dice_oracle(mask_a, mask_b, label):
    a = {(i, j) for i in range(len(mask_a)) for j in range(len(mask_a[0]))
         if mask_a[i][j] == label}
    b = {(i, j) for i in range(len(mask_b)) for j in range(len(mask_b[0]))
         if mask_b[i][j] == label}
    if not a and not b:
        return 1.0
    return 2.0 * len(a & b) / (len(a) + len(b))


def boundary_oracle(region):
    """8-connected boundary; the image border counts as outside."""
    h = len(region)
    w = len(region[0])
    pts = []
    for i in range(h):
        for j in range(w):
            if not region[i][j]:
                continue
            edge = False
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    if di == 0 and dj == 0:
                        continue
                    ii, jj = i + di, j + dj
                    if ii < 0 or ii >= h or jj < 0 or jj >= w or not region[ii][jj]:
                        edge = True
            if edge:
                pts.append((i, j))
    return pts


def hd95_oracle(mask_a, mask_b, label):
    a = boundary_oracle([[v == label for v in row] for row in mask_a])
    b = boundary_oracle([[v == label for v in row] for row in mask_b])
    dists = []
    for src, dst in ((a, b), (b, a)):
        for p in src:
            dists.append(min(math.dist(p, q) for q in dst))
    return float(np.percentile(dists, 95))


# ---------------------------------------------------------------------------
# texture

def bilinear_sample_oracle(img, y, x):
    h, w = img.shape
    y0 = math.floor(y)
    x0 = math.floor(x)
    ty = y - y0
    tx = x - x0
    y1 = min(max(y0 + 1, 0), h - 1)
    x1 = min(max(x0 + 1, 0), w - 1)
    y0 = min(max(y0, 0), h - 1)
    x0 = min(max(x0, 0), w - 1)
    return ((1 - ty) * (1 - tx) * img[y0, x0] + (1 - ty) * tx * img[y0, x1]
            + ty * (1 - tx) * img[y1, x0] + ty * tx * img[y1, x1])


def lbp_histogram_oracle(band, radius, eps=1e-12):
    """Per-pixel loop over interior pixels; riu2 mapping by explicit circular
    transition counting."""
    band = np.asarray(band, dtype=float)
    h, w = band.shape
    counts = [0] * 10
    for i in range(radius, h - radius):
        for j in range(radius, w - radius):
            center = band[i, j]
            bits = []
            for k in range(8):
                theta = 2.0 * math.pi * k / 8
                dy = -radius * math.sin(theta)
                dx = radius * math.cos(theta)
                if abs(dy - round(dy)) < 1e-9:
                    dy = round(dy)
                if abs(dx - round(dx)) < 1e-9:
                    dx = round(dx)
                sample = bilinear_sample_oracle(band, i + dy, j + dx)
                bits.append(1 if sample >= center - eps else 0)
            transitions = sum(1 for k in range(8) if bits[k] != bits[k - 1])
            code = sum(bits) if transitions <= 2 else 9
            counts[code] += 1
    total = sum(counts)
    return [c / total for c in counts]


def glcm_matrix_oracle(band, offset, levels=32):
    band = np.asarray(band, dtype=float)
    h, w = band.shape
    q = [[min(max(int(band[i, j] * levels), 0), levels - 1) for j in range(w)]
         for i in range(h)]
    mat = [[0.0] * levels for _ in range(levels)]
    dy, dx = offset
    for i in range(h):
        for j in range(w):
            ii, jj = i + dy, j + dx
            if 0 <= ii < h and 0 <= jj < w:
                mat[q[i][j]][q[ii][jj]] += 1.0
                mat[q[ii][jj]][q[i][j]] += 1.0  # symmetric accumulation
    total = sum(sum(row) for row in mat)
    if total:
        mat = [[v / total for v in row] for row in mat]
    return np.array(mat)


def glcm_features_oracle(band, levels=32):
    offsets = ((0, 1), (-1, 1), (-1, 0), (-1, -1))
    p = sum(glcm_matrix_oracle(band, off, levels) for off in offsets) / len(offsets)
    contrast = corr_num = energy = homog = entropy = 0.0
    mu_i = sum(i * p[i, j] for i in range(levels) for j in range(levels))
    mu_j = sum(j * p[i, j] for i in range(levels) for j in range(levels))
    sig_i = math.sqrt(sum((i - mu_i) ** 2 * p[i, j]
                          for i in range(levels) for j in range(levels)))
    sig_j = math.sqrt(sum((j - mu_j) ** 2 * p[i, j]
                          for i in range(levels) for j in range(levels)))
    for i in range(levels):
        for j in range(levels):
            v = p[i, j]
            contrast += (i - j) ** 2 * v
            corr_num += (i - mu_i) * (j - mu_j) * v
            energy += v * v
            homog += v / (1 + (i - j) ** 2)
            if v > 0:
                entropy -= v * math.log(v)
    correlation = corr_num / (sig_i * sig_j) if sig_i * sig_j > 0 else 0.0
    return [contrast, correlation, energy, homog, entropy]


def fractal_dimension_oracle(band, grid_sizes=(2, 4, 8, 16)):
    band = np.asarray(band, dtype=float)
    s_max = max(grid_sizes)
    h0 = (band.shape[0] // s_max) * s_max
    w0 = (band.shape[1] // s_max) * s_max
    surf = band[:h0, :w0]
    gray_range = float(surf.max() - surf.min())
    extent = min(h0, w0)
    xs, ys = [], []
    for s in grid_sizes:
        n = 0.0
        for bi in range(0, h0, s):
            for bj in range(0, w0, s):
                cell = surf[bi:bi + s, bj:bj + s]
                if gray_range == 0:
                    n += 1.0
                else:
                    box_h = s * gray_range / extent
                    n += math.ceil((cell.max() - cell.min()) / box_h) + 1
        xs.append(math.log(1.0 / s))
        ys.append(math.log(n))
    # least-squares slope by the closed form
    mx = sum(xs) / len(xs)
    my = sum(ys) / len(ys)
    slope = (sum((x - mx) * (yv - my) for x, yv in zip(xs, ys))
             / sum((x - mx) ** 2 for x in xs))
    return min(max(slope, 2.0), 3.0)


# ---------------------------------------------------------------------------
# CLAHE

def clahe_oracle(img, clip_limit, tiles):
    """Scalar-loop CLAHE with the same tile/clip/blend semantics."""
    img = np.asarray(img, dtype=float)
    h, w = img.shape
    ty, tx = tiles
    n_bins = 256
    ye = [int(round(h * i / ty)) for i in range(ty + 1)]
    xe = [int(round(w * j / tx)) for j in range(tx + 1)]
    maps = {}
    cy = [(ye[i] + ye[i + 1] - 1) / 2.0 for i in range(ty)]
    cx = [(xe[j] + xe[j + 1] - 1) / 2.0 for j in range(tx)]
    for i in range(ty):
        for j in range(tx):
            hist = [0.0] * n_bins
            npx = 0
            for r in range(ye[i], ye[i + 1]):
                for c in range(xe[j], xe[j + 1]):
                    b = min(max(int(img[r, c] * n_bins), 0), n_bins - 1)
                    hist[b] += 1
                    npx += 1
            limit = clip_limit * npx / n_bins
            excess = sum(max(v - limit, 0.0) for v in hist)
            hist = [min(v, limit) + excess / n_bins for v in hist]
            cdf = []
            run = 0.0
            for v in hist:
                run += v
                cdf.append(run / npx)
            maps[(i, j)] = cdf

    out = np.zeros_like(img)
    for r in range(h):
        i1 = ty - 1
        for i in range(ty):
            if cy[i] >= r:
                i1 = i
                break
        i0 = max(i1 - 1, 0)
        if i1 > i0:
            dy = min(max((r - cy[i0]) / (cy[i1] - cy[i0]), 0.0), 1.0)
        else:
            dy = 0.0
        for c in range(w):
            j1 = tx - 1
            for j in range(tx):
                if cx[j] >= c:
                    j1 = j
                    break
            j0 = max(j1 - 1, 0)
            if j1 > j0:
                dx = min(max((c - cx[j0]) / (cx[j1] - cx[j0]), 0.0), 1.0)
            else:
                dx = 0.0
            b = min(max(int(img[r, c] * n_bins), 0), n_bins - 1)
            v = ((1 - dy) * (1 - dx) * maps[(i0, j0)][b]
                 + (1 - dy) * dx * maps[(i0, j1)][b]
                 + dy * (1 - dx) * maps[(i1, j0)][b]
                 + dy * dx * maps[(i1, j1)][b])
            out[r, c] = min(max(v, 0.0), 1.0)
    return out
