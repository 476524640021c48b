"""Osteophyte site localization (three-tier cascade, 140x140 patches) and
subchondral band extraction for sclerosis texture analysis."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataio import LabelMask, Radiograph
from .errors import CompartmentAbsentError
from .jsn import TRIM_FRAC, extract_contours, measure_compartment

PATCH_SIZE = 140
FEMUR_OFFSET = 35   # px above the femoral boundary
TIBIA_OFFSET = 35   # px below the tibial boundary
SUBCHONDRAL_DEPTH = 28

SITES = ("medial_femur", "lateral_femur", "medial_tibia", "lateral_tibia")

# last-resort normalized (x, y) patch centers
FIXED_CENTERS = {
    "medial_femur": (0.30, 0.40),
    "lateral_femur": (0.70, 0.40),
    "medial_tibia": (0.30, 0.60),
    "lateral_tibia": (0.70, 0.60),
}

MIRROR_SITE = {
    "medial_femur": "lateral_femur",
    "lateral_femur": "medial_femur",
    "medial_tibia": "lateral_tibia",
    "lateral_tibia": "medial_tibia",
}


@dataclass
class RoiBox:
    site: str
    center: tuple[float, float]  # (x, y)
    tier: str                    # mask_landmark | heuristic | fixed
    size: int = PATCH_SIZE

    def to_dict(self) -> dict:
        return {"site": self.site, "center": [float(self.center[0]), float(self.center[1])],
                "size": self.size, "tier": self.tier}


@dataclass
class SubchondralBand:
    compartment: str
    columns: np.ndarray      # integer columns of the trimmed span
    top_profile: np.ndarray  # tibial boundary y per column
    depth: int = SUBCHONDRAL_DEPTH


def _tier1_boxes(profile, compartment: str) -> list[RoiBox]:
    # outermost landmark: medial-most column for medial sites, lateral-most
    # for lateral sites (canonical frame puts medial on image-left)
    idx = 0 if compartment == "medial" else -1
    x = float(profile.x[idx])
    femur = RoiBox(site=f"{compartment}_femur",
                   center=(x, float(profile.f_y[idx]) - FEMUR_OFFSET),
                   tier="mask_landmark")
    tibia = RoiBox(site=f"{compartment}_tibia",
                   center=(x, float(profile.t_y[idx]) + TIBIA_OFFSET),
                   tier="mask_landmark")
    return [femur, tibia]


def locate_sites(mask: LabelMask | None, img: Radiograph) -> list[RoiBox]:
    """Locate the four osteophyte site boxes; the cascade always answers.

    Tier 1 uses per-compartment landmark geometry where the mask supports it;
    tier 2 mirrors a present compartment's boxes across its span midline for
    the missing one; tier 3 falls back to fixed normalized crop centers.
    """
    h, w = img.pixels.shape
    profiles = {}
    if mask is not None:
        for comp in ("medial", "lateral"):
            profiles[comp] = measure_compartment(mask, comp)
    else:
        profiles = {"medial": None, "lateral": None}

    boxes: dict[str, RoiBox] = {}
    for comp, prof in profiles.items():
        if prof is not None:
            for b in _tier1_boxes(prof, comp):
                boxes[b.site] = b

    present = [c for c, p in profiles.items() if p is not None]
    if len(present) == 1:
        comp = present[0]
        prof = profiles[comp]
        mid = (float(prof.x[0]) + float(prof.x[-1])) / 2.0
        for b in _tier1_boxes(prof, comp):
            mirrored = RoiBox(site=MIRROR_SITE[b.site],
                              center=(2.0 * mid - b.center[0], b.center[1]),
                              tier="heuristic")
            boxes[mirrored.site] = mirrored

    for site in SITES:
        if site not in boxes:
            fx, fy = FIXED_CENTERS[site]
            boxes[site] = RoiBox(site=site, center=(fx * w, fy * h), tier="fixed")
    return [boxes[site] for site in SITES]


def extract_patch(img: Radiograph | np.ndarray, box: RoiBox) -> np.ndarray:
    """Exact size x size crop around the box center with edge replication
    where the box exceeds the image bounds."""
    pixels = img.pixels if isinstance(img, Radiograph) else np.asarray(img)
    h, w = pixels.shape
    half = box.size // 2
    top = int(round(box.center[1])) - half
    left = int(round(box.center[0])) - half
    rows = np.clip(np.arange(top, top + box.size), 0, h - 1)
    cols = np.clip(np.arange(left, left + box.size), 0, w - 1)
    return pixels[np.ix_(rows, cols)]


def subchondral_band(mask: LabelMask, compartment: str,
                     depth: int = SUBCHONDRAL_DEPTH) -> SubchondralBand:
    """Band of `depth` rows immediately inferior to the tibial boundary,
    over the same endpoint-trimmed span used for landmark sampling."""
    if depth <= 0:
        raise ValueError("depth must be > 0")
    contours = extract_contours(mask, compartment)
    x_min, x_max = contours.column_span
    n_cols = x_max - x_min + 1
    lo = int(np.ceil(x_min + TRIM_FRAC * n_cols))
    hi = int(np.floor(x_min + (1.0 - TRIM_FRAC) * n_cols))
    if hi < lo:
        raise CompartmentAbsentError(compartment, n_cols)
    columns = np.arange(lo, hi + 1)
    f, t = contours.boundary_at(columns)
    return SubchondralBand(compartment=compartment, columns=columns,
                           top_profile=np.asarray(t), depth=depth)


def band_strip(img: Radiograph | np.ndarray, band: SubchondralBand) -> np.ndarray:
    """Rectangular (depth, n_columns) strip following the tibial boundary.

    For each column the rows (top, top + depth] are taken; rows past the
    bottom image edge are filled by edge replication so the strip is always
    rectangular.
    """
    pixels = img.pixels if isinstance(img, Radiograph) else np.asarray(img)
    h = pixels.shape[0]
    tops = np.round(band.top_profile).astype(int)
    rows = tops[None, :] + np.arange(1, band.depth + 1)[:, None]
    rows = np.clip(rows, 0, h - 1)
    return pixels[rows, band.columns[None, :]]


def band_pixel_rows(band: SubchondralBand, height: int) -> list[np.ndarray]:
    """Per-column row indices of the band, clipped to the image height."""
    tops = np.round(band.top_profile).astype(int)
    return [np.arange(t + 1, min(t + band.depth, height - 1) + 1) for t in tops]
