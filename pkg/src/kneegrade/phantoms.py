"""Synthetic phantoms: geometric joint-space masks, matching radiographs and
fully synthetic feature tables. Used by the test suite and the experiment
scripts; no clinical data required."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
from PIL import Image

from .dataio import LABEL_LATERAL, LABEL_MEDIAL
from .features import (FEATURE_NAMES, JSN_DIM, OSP_DIM, SCL_DIM, TOTAL_DIM,
                       StructuredVector)

DEFAULT_SHAPE = (224, 224)


def band_mask(gap: int, *, medial_span=(25, 95), lateral_span=(130, 200),
              top: int = 105, shape=DEFAULT_SHAPE) -> np.ndarray:
    """Two parallel joint-space bands whose femoral-tibial distance is `gap`.

    The band occupies rows top..top+gap inclusive, so the per-column
    boundary distance (max row - min row) equals gap exactly.
    """
    labels = np.zeros(shape, dtype=np.int64)
    labels[top:top + gap + 1, medial_span[0]:medial_span[1] + 1] = LABEL_MEDIAL
    labels[top:top + gap + 1, lateral_span[0]:lateral_span[1] + 1] = LABEL_LATERAL
    return labels


def wedge_mask(gap_lo: int, gap_hi: int, *, span=(25, 95), top: int = 105,
               label: int = LABEL_MEDIAL, shape=DEFAULT_SHAPE) -> np.ndarray:
    """A single compartment whose gap grows linearly from gap_lo to gap_hi
    across the span (fixed femoral boundary at `top`)."""
    labels = np.zeros(shape, dtype=np.int64)
    cols = np.arange(span[0], span[1] + 1)
    gaps = np.round(np.linspace(gap_lo, gap_hi, cols.size)).astype(int)
    for c, g in zip(cols, gaps):
        labels[top:top + g + 1, c] = label
    return labels


def phantom_image(mask: np.ndarray, seed: int = 0) -> np.ndarray:
    """A plausible radiograph for a mask: bright bone, darker joint space,
    seeded speckle so texture descriptors have signal. Values in [0, 1]."""
    rng = np.random.default_rng(seed)
    img = 0.55 + 0.08 * rng.standard_normal(mask.shape)
    img[mask > 0] = 0.15 + 0.05 * rng.standard_normal((mask > 0).sum())
    # brighter subchondral bone under the joint space
    rows_with = np.flatnonzero(mask.any(axis=1))
    if rows_with.size:
        bottom = rows_with.max()
        img[bottom + 1:bottom + 30, :] += 0.2
    return np.clip(img, 0.0, 1.0)


def save_png(array: np.ndarray, path, *, scale: bool = True) -> None:
    arr = np.asarray(array)
    if scale:
        arr = np.clip(arr * 255.0, 0, 255)
    Image.fromarray(arr.astype(np.uint8), mode="L").save(path)


def make_phantom_dataset(out_dir, n: int = 100, seed: int = 0,
                         split_fracs=(0.7, 0.1, 0.2)) -> Path:
    """Write n phantom image/mask pairs plus a manifest CSV; returns the
    manifest path. KL grade, osteophyte grades and sclerosis labels are
    noisy monotone functions of the joint-space gap."""
    out_dir = Path(out_dir)
    (out_dir / "images").mkdir(parents=True, exist_ok=True)
    (out_dir / "masks").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    manifest = out_dir / "manifest.csv"
    n_train = int(round(split_fracs[0] * n))
    n_val = int(round(split_fracs[1] * n))
    with open(manifest, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["image_path", "mask_path", "split", "kl_grade", "side",
                         "osp_mf", "osp_lf", "osp_mt", "osp_lt", "sclerosis"])
        for i in range(n):
            grade = int(rng.integers(0, 5))
            gap = max(3, int(round(16 - 3 * grade + rng.normal(0, 0.8))))
            top = int(rng.integers(95, 115))
            mask = band_mask(gap, top=top)
            img = phantom_image(mask, seed=int(rng.integers(0, 2**31)))
            img_path = out_dir / "images" / f"ph{i:05d}.png"
            mask_path = out_dir / "masks" / f"ph{i:05d}.png"
            save_png(img, img_path)
            save_png(mask, mask_path, scale=False)
            split = "train" if i < n_train else ("val" if i < n_train + n_val else "test")
            osp = np.clip(np.round(0.75 * grade + rng.normal(0, 0.5, size=4)),
                          0, 3).astype(int)
            scl = int(grade >= 2 and rng.random() < 0.8)
            writer.writerow([str(img_path), str(mask_path), split, grade, "left",
                             *osp.tolist(), scl])
    return manifest


def synthetic_feature_table(n: int = 2000, seed: int = 0, *, jsn_signal: float = 1.0,
                            osp_signal: float = 0.0, scl_signal: float = 0.0,
                            label_noise: float = 0.25,
                            split_fracs=(0.7, 0.1, 0.2)) -> list[StructuredVector]:
    """Feature table whose KL labels are a noisy monotone function of a
    latent severity expressed (by default) only through the JSN block."""
    rng = np.random.default_rng(seed)
    severity = rng.uniform(0.0, 4.0, size=n)
    y = np.clip(np.round(severity + rng.normal(0, label_noise, size=n)),
                0, 4).astype(int)

    X = rng.normal(0, 1.0, size=(n, TOTAL_DIM))
    sev = (severity - 2.0) / 1.2

    def inject(block: slice, strength: float):
        if strength <= 0:
            return
        dims = X[:, block].shape[1]
        loadings = rng.uniform(0.6, 1.4, size=dims)
        X[:, block] += strength * 2.5 * np.outer(sev, loadings)

    inject(slice(0, JSN_DIM), jsn_signal)
    inject(slice(JSN_DIM, JSN_DIM + OSP_DIM), osp_signal)
    inject(slice(JSN_DIM + OSP_DIM, TOTAL_DIM), scl_signal)

    n_train = int(round(split_fracs[0] * n))
    n_val = int(round(split_fracs[1] * n))
    rows = []
    for i in range(n):
        split = "train" if i < n_train else ("val" if i < n_train + n_val else "test")
        rows.append(StructuredVector(id=f"syn{i:05d}", split=split,
                                     kl_grade=int(y[i]), values=X[i]))
    return rows
