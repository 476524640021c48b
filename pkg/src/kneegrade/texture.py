"""Subchondral texture descriptors: rotation-invariant uniform LBP, GLCM
statistics, differential box-counting fractal dimension and intensity
statistics, assembled into the 18-dim sclerosis sub-vector."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataio import LabelMask, Radiograph
from .errors import CompartmentAbsentError
from .features import SCL_DIM
from .roi import SUBCHONDRAL_DEPTH, band_strip, subchondral_band

LBP_RADII = (1, 2, 3)
LBP_NEIGHBORS = 8
LBP_BINS = LBP_NEIGHBORS + 2  # riu2 codes 0..8 plus the non-uniform bin

GLCM_LEVELS = 32
GLCM_OFFSETS = ((0, 1), (-1, 1), (-1, 0), (-1, -1))  # 0, 45, 90, 135 degrees

FRACTAL_GRID_SIZES = (2, 4, 8, 16)

_SAMPLE_EPS = 1e-12  # tolerance absorbing bilinear rounding in the >= compare


@dataclass
class SclerosisFeatures:
    """18-dim sclerosis sub-vector with a measurement-quality flag."""

    lbp: np.ndarray        # (entropy, energy) per radius 1, 2, 3
    glcm: np.ndarray       # contrast, correlation, energy, homogeneity, entropy
    fractal_dim: float
    intensity: np.ndarray  # (mean, std, skew) medial then lateral
    quality: str           # measured | imputed_med | imputed_lat | imputed_both

    def to_vector(self) -> np.ndarray:
        vec = np.concatenate([self.lbp, self.glcm, [self.fractal_dim], self.intensity])
        assert vec.shape == (SCL_DIM,)
        return vec


def _entropy(p: np.ndarray) -> float:
    nz = p[p > 0]
    return float(-(nz * np.log(nz)).sum())


def _bilinear_shift(img: np.ndarray, dy: float, dx: float,
                    r: int) -> np.ndarray:
    """Values sampled at (y+dy, x+dx) for the interior region [r, H-r)."""
    h, w = img.shape
    yy = np.arange(r, h - r, dtype=float) + dy
    xx = np.arange(r, w - r, dtype=float) + dx
    y0 = np.floor(yy).astype(int)
    x0 = np.floor(xx).astype(int)
    ty = (yy - y0)[:, None]
    tx = (xx - x0)[None, :]
    y1 = np.clip(y0 + 1, 0, h - 1)
    x1 = np.clip(x0 + 1, 0, w - 1)
    y0 = np.clip(y0, 0, h - 1)
    x0 = np.clip(x0, 0, w - 1)
    return ((1 - ty) * (1 - tx) * img[np.ix_(y0, x0)]
            + (1 - ty) * tx * img[np.ix_(y0, x1)]
            + ty * (1 - tx) * img[np.ix_(y1, x0)]
            + ty * tx * img[np.ix_(y1, x1)])


def lbp_histogram(band: np.ndarray, radius: int) -> np.ndarray:
    """Normalized 10-bin histogram of rotation-invariant uniform LBP codes.

    8 neighbors on a circle of the given radius, bilinearly interpolated;
    a neighbor >= center sets its bit. Uniform patterns (<= 2 circular
    transitions) map to their popcount 0..8, all others to bin 9. Only
    pixels whose full neighborhood is interior contribute.
    """
    band = np.asarray(band, dtype=float)
    h, w = band.shape
    if h < 2 * radius + 1 or w < 2 * radius + 1:
        raise ValueError(f"band {band.shape} too small for LBP radius {radius}")
    center = band[radius:h - radius, radius:w - radius]
    bits = []
    for k in range(LBP_NEIGHBORS):
        theta = 2.0 * np.pi * k / LBP_NEIGHBORS
        dy = -radius * np.sin(theta)
        dx = radius * np.cos(theta)
        # snap offsets that are integers up to trig roundoff
        if abs(dy - round(dy)) < 1e-9:
            dy = round(dy)
        if abs(dx - round(dx)) < 1e-9:
            dx = round(dx)
        sample = _bilinear_shift(band, dy, dx, radius)
        bits.append(sample >= center - _SAMPLE_EPS)
    bits = np.stack(bits)  # (8, H', W')
    transitions = (bits != np.roll(bits, 1, axis=0)).sum(axis=0)
    popcount = bits.sum(axis=0)
    codes = np.where(transitions <= 2, popcount, LBP_BINS - 1)
    hist = np.bincount(codes.ravel(), minlength=LBP_BINS).astype(float)
    return hist / hist.sum()


def lbp_features(band: np.ndarray, radius: int) -> tuple[float, float]:
    """(entropy, energy) of the LBP histogram at the given radius."""
    hist = lbp_histogram(band, radius)
    return _entropy(hist), float((hist ** 2).sum())


def quantize(band: np.ndarray, levels: int = GLCM_LEVELS) -> np.ndarray:
    """Map [0, 1] intensities onto integer levels 0..levels-1."""
    return np.clip((np.asarray(band, dtype=float) * levels).astype(int), 0, levels - 1)


def glcm_matrix(band: np.ndarray, offset: tuple[int, int],
                levels: int = GLCM_LEVELS) -> np.ndarray:
    """Symmetric, normalized co-occurrence matrix for one pixel offset."""
    q = quantize(band, levels)
    dy, dx = offset
    h, w = q.shape
    ys = slice(max(0, -dy), min(h, h - dy))
    xs = slice(max(0, -dx), min(w, w - dx))
    a = q[ys, xs].ravel()
    b = q[max(0, dy):min(h, h + dy), max(0, dx):min(w, w + dx)].ravel()
    mat = np.zeros((levels, levels))
    np.add.at(mat, (a, b), 1.0)
    mat = mat + mat.T
    total = mat.sum()
    return mat / total if total else mat


def glcm_features(band: np.ndarray, levels: int = GLCM_LEVELS) -> np.ndarray:
    """[contrast, correlation, energy, homogeneity, entropy] of the
    angle-averaged co-occurrence matrix (distance 1, four angles)."""
    band = np.asarray(band, dtype=float)
    if band.size == 0:
        raise ValueError("empty band")
    p = np.mean([glcm_matrix(band, off, levels) for off in GLCM_OFFSETS], axis=0)
    i = np.arange(levels, dtype=float)
    ii, jj = np.meshgrid(i, i, indexing="ij")
    contrast = float(((ii - jj) ** 2 * p).sum())
    mu_i = float((ii * p).sum())
    mu_j = float((jj * p).sum())
    sig_i = float(np.sqrt((((ii - mu_i) ** 2) * p).sum()))
    sig_j = float(np.sqrt((((jj - mu_j) ** 2) * p).sum()))
    if sig_i * sig_j > 0:
        correlation = float((((ii - mu_i) * (jj - mu_j) * p).sum()) / (sig_i * sig_j))
    else:
        correlation = 0.0
    energy = float((p ** 2).sum())
    homogeneity = float((p / (1.0 + (ii - jj) ** 2)).sum())
    return np.array([contrast, correlation, energy, homogeneity, _entropy(p.ravel())])


def fractal_dimension(band: np.ndarray,
                      grid_sizes=FRACTAL_GRID_SIZES) -> float:
    """Differential box counting on the intensity surface.

    The band is cropped to multiples of the largest grid size; per s x s
    cell the box count is ceil((max-min)/h)+1 with box height
    h = s * gray_range / grid_extent, and the dimension is the least-squares
    slope of ln N(s) against ln(1/s), clamped to [2, 3].
    """
    band = np.asarray(band, dtype=float)
    s_max = max(grid_sizes)
    h0 = (band.shape[0] // s_max) * s_max
    w0 = (band.shape[1] // s_max) * s_max
    if h0 < s_max or w0 < s_max:
        raise ValueError(f"band {band.shape} smaller than {s_max}x{s_max}")
    surf = band[:h0, :w0]
    gray_range = float(surf.max() - surf.min())
    extent = min(h0, w0)
    counts = []
    for s in grid_sizes:
        cells = surf.reshape(h0 // s, s, w0 // s, s)
        cmax = cells.max(axis=(1, 3))
        cmin = cells.min(axis=(1, 3))
        if gray_range == 0:
            n_boxes = np.ones_like(cmax)
        else:
            box_h = s * gray_range / extent
            n_boxes = np.ceil((cmax - cmin) / box_h) + 1
        counts.append(n_boxes.sum())
    x = np.log(1.0 / np.array(grid_sizes, dtype=float))
    yv = np.log(np.array(counts))
    slope = np.polyfit(x, yv, 1)[0]
    return float(np.clip(slope, 2.0, 3.0))


def intensity_stats(band: np.ndarray) -> np.ndarray:
    """[mean, population std, Fisher skewness]; skewness 0 when std is 0."""
    band = np.asarray(band, dtype=float).ravel()
    if band.size == 0:
        raise ValueError("empty band")
    mean = float(band.mean())
    std = float(band.std())
    # tolerance guards constant bands whose float std is only roundoff-zero
    if std < 1e-12:
        std = 0.0
        skew = 0.0
    else:
        skew = float(((band - mean) ** 3).mean() / std ** 3)
    return np.array([mean, std, skew])


_QUALITY = {
    (False, False): "measured",
    (True, False): "imputed_med",
    (False, True): "imputed_lat",
    (True, True): "imputed_both",
}


def sclerosis_subvector(img: Radiograph | np.ndarray, mask: LabelMask,
                        depth: int = SUBCHONDRAL_DEPTH) -> SclerosisFeatures:
    """18-dim sclerosis sub-vector from the subchondral bands of both
    compartments.

    LBP/GLCM/fractal descriptors are computed on the single texture field
    formed by the side-by-side compartment band strips; intensity statistics
    are per compartment. The image must already be preprocessed at the
    sclerosis stage (no CLAHE). Missing compartments are flagged and their
    slots left NaN for imputation.
    """
    strips = {}
    for comp in ("medial", "lateral"):
        try:
            band = subchondral_band(mask, comp, depth)
            strips[comp] = band_strip(img, band)
        except CompartmentAbsentError:
            strips[comp] = None
    missing_med = strips["medial"] is None
    missing_lat = strips["lateral"] is None
    quality = _QUALITY[(missing_med, missing_lat)]

    fields = [s for s in strips.values() if s is not None]
    if not fields:
        return SclerosisFeatures(
            lbp=np.full(6, np.nan), glcm=np.full(5, np.nan),
            fractal_dim=np.nan, intensity=np.full(6, np.nan), quality=quality)

    field = np.concatenate(fields, axis=1)
    lbp = np.empty(6)
    for k, r in enumerate(LBP_RADII):
        lbp[2 * k], lbp[2 * k + 1] = lbp_features(field, r)
    glcm = glcm_features(field)
    try:
        fd = fractal_dimension(field)
    except ValueError:
        fd = np.nan
    intensity = np.concatenate([
        intensity_stats(strips["medial"]) if not missing_med else np.full(3, np.nan),
        intensity_stats(strips["lateral"]) if not missing_lat else np.full(3, np.nan),
    ])
    return SclerosisFeatures(lbp=lbp, glcm=glcm, fractal_dim=fd,
                             intensity=intensity, quality=quality)
