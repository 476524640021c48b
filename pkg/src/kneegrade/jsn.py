"""Contour-based joint-space quantification: boundary extraction, landmark
sampling, minimum joint space width, narrowing rate, asymmetry and the
22-dim JSN sub-vector."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataio import LABEL_LATERAL, LABEL_MEDIAL, LabelMask
from .errors import CompartmentAbsentError, NotFittedError
from .features import JSN_DIM

MIN_COMPARTMENT_PIXELS = 50
MIN_SPAN_COLUMNS = 20
N_STATIONS = 16
TRIM_FRAC = 0.10

COMPARTMENT_LABELS = {"medial": LABEL_MEDIAL, "lateral": LABEL_LATERAL}

QUALITY_BY_MISSING = {
    (False, False): "measured",
    (True, False): "imputed_med",
    (False, True): "imputed_lat",
    (True, True): "imputed_both",
}


@dataclass
class ContourPair:
    """Per-column femoral (upper) and tibial (lower) joint-space boundaries."""

    compartment: str
    femoral_boundary: np.ndarray  # y per column over the span
    tibial_boundary: np.ndarray
    column_span: tuple[int, int]  # [x_min, x_max] inclusive

    def boundary_at(self, x: float) -> tuple[float, float]:
        """Linearly interpolated (femoral_y, tibial_y) at a possibly
        non-integer column."""
        cols = np.arange(self.column_span[0], self.column_span[1] + 1)
        f = np.interp(x, cols, self.femoral_boundary)
        t = np.interp(x, cols, self.tibial_boundary)
        return f, t


@dataclass
class LandmarkProfile:
    compartment: str
    x: np.ndarray        # 16 strictly increasing columns
    f_y: np.ndarray
    t_y: np.ndarray
    widths: np.ndarray   # t_y - f_y, all >= 0


@dataclass
class JsnFeatures:
    """The 22-dim JSN sub-vector plus measurement-quality metadata."""

    mjsw_med: float
    mjsw_lat: float
    profile_med: np.ndarray  # 8 widths (every second station)
    profile_lat: np.ndarray
    jsn_rate_med: float
    jsn_rate_lat: float
    ml_ratio: float
    asymmetry_score: float
    quality: str

    def to_vector(self) -> np.ndarray:
        vec = np.concatenate([
            [self.mjsw_med, self.mjsw_lat],
            self.profile_med, self.profile_lat,
            [self.jsn_rate_med, self.jsn_rate_lat,
             self.ml_ratio, self.asymmetry_score],
        ])
        assert vec.shape == (JSN_DIM,)
        return vec


@dataclass
class Kl0Reference:
    """Per-compartment median mJSW of the healthy training population."""

    median_mjsw_med: float
    median_mjsw_lat: float
    n_images: int

    def median(self, compartment: str) -> float:
        return self.median_mjsw_med if compartment == "medial" else self.median_mjsw_lat

    def to_dict(self) -> dict:
        return {"median_mjsw_med": self.median_mjsw_med,
                "median_mjsw_lat": self.median_mjsw_lat,
                "n_images": self.n_images}

    @classmethod
    def from_dict(cls, d: dict) -> "Kl0Reference":
        return cls(d["median_mjsw_med"], d["median_mjsw_lat"], d["n_images"])


def extract_contours(mask: LabelMask, compartment: str) -> ContourPair:
    """Per-column min/max rows of the compartment label over its column span.

    Columns inside the span with no labelled pixel are filled by linear
    interpolation from neighbouring columns.
    """
    label = COMPARTMENT_LABELS[compartment]
    region = mask.labels == label
    count = int(region.sum())
    if count < MIN_COMPARTMENT_PIXELS:
        raise CompartmentAbsentError(compartment, count)
    col_has = region.any(axis=0)
    cols = np.flatnonzero(col_has)
    x_min, x_max = int(cols[0]), int(cols[-1])
    if x_max - x_min + 1 < MIN_SPAN_COLUMNS:
        raise CompartmentAbsentError(compartment, count)

    rows = np.arange(mask.height)
    span = np.arange(x_min, x_max + 1)
    fem = np.full(span.size, np.nan)
    tib = np.full(span.size, np.nan)
    sub = region[:, x_min:x_max + 1]
    present = sub.any(axis=0)
    rows_grid = np.where(sub, rows[:, None], np.nan)
    with np.errstate(all="ignore"):
        fem[present] = np.nanmin(rows_grid[:, present], axis=0)
        tib[present] = np.nanmax(rows_grid[:, present], axis=0)
    if not present.all():
        good = np.flatnonzero(present)
        fem = np.interp(np.arange(span.size), good, fem[good])
        tib = np.interp(np.arange(span.size), good, tib[good])
    return ContourPair(compartment=compartment, femoral_boundary=fem,
                       tibial_boundary=tib, column_span=(x_min, x_max))


def sample_landmarks(contours: ContourPair, n: int = N_STATIONS,
                     trim_frac: float = TRIM_FRAC) -> LandmarkProfile:
    """Place n equidistant stations on the endpoint-trimmed span.

    The span is shrunk by trim_frac of its column count at each end to
    suppress false minima at the compartment rims; widths are vertical
    femoral-to-tibial distances with boundaries interpolated at non-integer
    columns.
    """
    x_min, x_max = contours.column_span
    n_cols = x_max - x_min + 1
    lo = x_min + trim_frac * n_cols
    hi = x_min + (1.0 - trim_frac) * n_cols
    if hi - lo < n - 1:
        raise CompartmentAbsentError(contours.compartment, n_cols)
    x = np.linspace(lo, hi, n)
    f, t = contours.boundary_at(x)
    widths = t - f
    return LandmarkProfile(compartment=contours.compartment,
                           x=x, f_y=np.asarray(f), t_y=np.asarray(t),
                           widths=np.asarray(widths))


def mjsw(profile: LandmarkProfile) -> float:
    """Minimum joint space width: min over the station widths."""
    return float(np.min(profile.widths))


def kl0_reference(features: list[JsnFeatures]) -> Kl0Reference:
    """Fit per-compartment reference medians from training-split KL0 images.

    Only measured (non-imputed) compartments contribute; medians are the
    linearly interpolated sample medians.
    """
    med = [f.mjsw_med for f in features if f.quality in ("measured", "imputed_lat")]
    lat = [f.mjsw_lat for f in features if f.quality in ("measured", "imputed_med")]
    if not med or not lat:
        raise NotFittedError("no eligible KL0 training images for the reference")
    return Kl0Reference(median_mjsw_med=float(np.median(med)),
                        median_mjsw_lat=float(np.median(lat)),
                        n_images=len(features))


def jsn_rate(mjsw_c: float, ref: Kl0Reference, compartment: str) -> float:
    """Narrowing rate in percent relative to the KL0 reference median."""
    m = ref.median(compartment)
    if m <= 0:
        raise ValueError("KL0 reference median must be > 0")
    return 100.0 * (1.0 - mjsw_c / m)


def asymmetry(mjsw_med: float, mjsw_lat: float) -> float:
    """|med - lat| / (med + lat); 0 when both widths are zero."""
    total = mjsw_med + mjsw_lat
    if total <= 0:
        return 0.0
    return abs(mjsw_med - mjsw_lat) / total


def measure_compartment(mask: LabelMask, compartment: str) -> LandmarkProfile | None:
    """Landmark profile for one compartment, or None when absent/too small."""
    try:
        contours = extract_contours(mask, compartment)
        return sample_landmarks(contours)
    except CompartmentAbsentError:
        return None


def jsn_subvector(mask: LabelMask, ref: Kl0Reference | None) -> JsnFeatures:
    """Full 22-dim JSN sub-vector; missing compartments yield NaN slots and a
    quality flag instead of an exception."""
    profiles = {c: measure_compartment(mask, c) for c in ("medial", "lateral")}
    values = {}
    for comp, prof in profiles.items():
        if prof is None:
            values[comp] = (np.nan, np.full(8, np.nan), np.nan)
        else:
            m = mjsw(prof)
            rate = jsn_rate(m, ref, comp) if ref is not None else np.nan
            values[comp] = (m, prof.widths[0::2].copy(), rate)
    m_med, p_med, r_med = values["medial"]
    m_lat, p_lat, r_lat = values["lateral"]
    missing_med = profiles["medial"] is None
    missing_lat = profiles["lateral"] is None
    if missing_med or missing_lat:
        ratio = np.nan
        asym = np.nan
    else:
        ratio = 0.0 if m_lat == 0 else m_med / m_lat
        asym = asymmetry(m_med, m_lat)
    return JsnFeatures(
        mjsw_med=m_med, mjsw_lat=m_lat,
        profile_med=p_med, profile_lat=p_lat,
        jsn_rate_med=r_med, jsn_rate_lat=r_lat,
        ml_ratio=ratio, asymmetry_score=asym,
        quality=QUALITY_BY_MISSING[(missing_med, missing_lat)],
    )
