"""Deterministic intensity pipeline: CLAHE, percentile clipping,
normalization and standardization, with per-stage composition rules."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

N_BINS = 256

STAGES = ("jsn", "osteophyte_fullimage", "osteophyte_roi", "sclerosis")


@dataclass
class PreprocessConfig:
    clahe_clip_limit: float = 3.0
    clahe_tiles: tuple[int, int] = (8, 8)
    clip_lo: float = 5.0
    clip_hi: float = 99.0
    standardize_mu: float = 0.485
    standardize_sigma: float = 0.229
    apply_clahe: bool = True

    def __post_init__(self):
        if not (0 <= self.clip_lo < self.clip_hi <= 100):
            raise ValueError("require 0 <= clip_lo < clip_hi <= 100")
        if self.clahe_clip_limit <= 0:
            raise ValueError("clahe_clip_limit must be > 0")
        if self.standardize_sigma <= 0:
            raise ValueError("standardize_sigma must be > 0")


def _tile_edges(n: int, tiles: int) -> np.ndarray:
    # boundaries of `tiles` contiguous tiles covering n pixels
    return np.linspace(0, n, tiles + 1).round().astype(int)


def _tile_mappings(img: np.ndarray, cfg: PreprocessConfig):
    """Per-tile clipped-equalization lookup tables plus tile centers.

    Clip limit semantics: limit = clip_limit * (tile pixel count / 256 bins);
    excess mass is redistributed uniformly over all bins in a single pass.
    The mapping of a tile is the normalized CDF of its clipped histogram.
    """
    ty, tx = cfg.clahe_tiles
    h, w = img.shape
    if h // ty < 2 or w // tx < 2:
        raise ValueError(f"image {img.shape} too small for a {ty}x{tx} tile grid")
    bins = np.clip((img * N_BINS).astype(int), 0, N_BINS - 1)
    ye = _tile_edges(h, ty)
    xe = _tile_edges(w, tx)
    maps = np.empty((ty, tx, N_BINS))
    cy = np.empty(ty)
    cx = np.empty(tx)
    for i in range(ty):
        cy[i] = (ye[i] + ye[i + 1] - 1) / 2.0
        for j in range(tx):
            tile = bins[ye[i]:ye[i + 1], xe[j]:xe[j + 1]]
            npx = tile.size
            hist = np.bincount(tile.ravel(), minlength=N_BINS).astype(float)
            limit = cfg.clahe_clip_limit * npx / N_BINS
            excess = np.maximum(hist - limit, 0.0).sum()
            hist = np.minimum(hist, limit) + excess / N_BINS
            maps[i, j] = np.cumsum(hist) / npx
    for j in range(tx):
        cx[j] = (xe[j] + xe[j + 1] - 1) / 2.0
    return maps, cy, cx


def clahe(img: np.ndarray, cfg: PreprocessConfig | None = None) -> np.ndarray:
    """Contrast-limited adaptive histogram equalization in [0, 1].

    Tile mappings are blended per pixel by bilinear interpolation between the
    four nearest tile centers (edge tiles clamp). Fully deterministic.
    """
    cfg = cfg or PreprocessConfig()
    img = np.asarray(img, dtype=float)
    maps, cy, cx = _tile_mappings(img, cfg)
    ty, tx = cfg.clahe_tiles
    h, w = img.shape
    bins = np.clip((img * N_BINS).astype(int), 0, N_BINS - 1)

    yy = np.arange(h, dtype=float)
    xx = np.arange(w, dtype=float)
    i1 = np.clip(np.searchsorted(cy, yy), 0, ty - 1)
    i0 = np.clip(i1 - 1, 0, ty - 1)
    j1 = np.clip(np.searchsorted(cx, xx), 0, tx - 1)
    j0 = np.clip(j1 - 1, 0, tx - 1)
    dy = np.where(i1 > i0, (yy - cy[i0]) / (cy[i1] - cy[i0] + (i1 == i0)), 0.0)
    dy = np.clip(dy, 0.0, 1.0)
    dx = np.where(j1 > j0, (xx - cx[j0]) / (cx[j1] - cx[j0] + (j1 == j0)), 0.0)
    dx = np.clip(dx, 0.0, 1.0)

    I0 = i0[:, None]
    I1 = i1[:, None]
    J0 = j0[None, :]
    J1 = j1[None, :]
    wy = dy[:, None]
    wx = dx[None, :]
    out = ((1 - wy) * (1 - wx) * maps[I0, J0, bins]
           + (1 - wy) * wx * maps[I0, J1, bins]
           + wy * (1 - wx) * maps[I1, J0, bins]
           + wy * wx * maps[I1, J1, bins])
    return np.clip(out, 0.0, 1.0)


def clip_normalize(img: np.ndarray, cfg: PreprocessConfig | None = None) -> np.ndarray:
    """Clip to the image's own [p_lo, p_hi] percentiles, then rescale to [0, 1].

    If the two percentiles coincide the output is all zeros.
    """
    cfg = cfg or PreprocessConfig()
    img = np.asarray(img, dtype=float)
    lo, hi = np.percentile(img, [cfg.clip_lo, cfg.clip_hi])
    if hi <= lo:
        return np.zeros_like(img)
    return (np.clip(img, lo, hi) - lo) / (hi - lo)


def standardize(img: np.ndarray, cfg: PreprocessConfig | None = None) -> np.ndarray:
    """Affine standardization (x - mu) / sigma; export surface only."""
    cfg = cfg or PreprocessConfig()
    return (np.asarray(img, dtype=float) - cfg.standardize_mu) / cfg.standardize_sigma


def preprocess_for(stage: str, img: np.ndarray,
                   cfg: PreprocessConfig | None = None) -> np.ndarray:
    """Stage-specific composition of the pipeline.

    jsn / osteophyte_fullimage: CLAHE then percentile clip-normalize.
    osteophyte_roi: identity (CLAHE is never re-applied to extracted ROIs).
    sclerosis: clip-normalize only; CLAHE is withheld so texture descriptors
    see the natural subchondral intensity distribution.
    """
    cfg = cfg or PreprocessConfig()
    if stage not in STAGES:
        raise ValueError(f"unknown stage {stage!r}")
    img = np.asarray(img, dtype=float)
    if stage in ("jsn", "osteophyte_fullimage"):
        if cfg.apply_clahe:
            img = clahe(img, cfg)
        return clip_normalize(img, cfg)
    if stage == "osteophyte_roi":
        return img
    return clip_normalize(img, cfg)
