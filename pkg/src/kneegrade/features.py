"""Assembly of the 50-dim structured feature vector: naming, imputation,
z-score normalization and inference-time interventions."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import NotFittedError, SchemaError

JSN_DIM = 22
OSP_DIM = 10
SCL_DIM = 18
TOTAL_DIM = JSN_DIM + OSP_DIM + SCL_DIM

FEATURE_NAMES: tuple[str, ...] = tuple(
    [f"jsn_{i:02d}" for i in range(1, JSN_DIM + 1)]
    + [f"osp_{i:02d}" for i in range(1, OSP_DIM + 1)]
    + [f"scl_{i:02d}" for i in range(1, SCL_DIM + 1)]
)

# Column slices of each feature family inside the frozen 50-dim layout.
FAMILY_SLICES: dict[str, slice] = {
    "jsn": slice(0, JSN_DIM),
    "osp": slice(JSN_DIM, JSN_DIM + OSP_DIM),
    "scl": slice(JSN_DIM + OSP_DIM, TOTAL_DIM),
    "all": slice(0, TOTAL_DIM),
}

# Human-readable meaning of every canonical column (documented contract).
FEATURE_MEANINGS: dict[str, str] = {
    "jsn_01": "minimum joint space width, medial (px)",
    "jsn_02": "minimum joint space width, lateral (px)",
    **{f"jsn_{i + 3:02d}": f"medial JSW profile sample {i + 1} of 8 (px)" for i in range(8)},
    **{f"jsn_{i + 11:02d}": f"lateral JSW profile sample {i + 1} of 8 (px)" for i in range(8)},
    "jsn_19": "joint space narrowing rate, medial (%)",
    "jsn_20": "joint space narrowing rate, lateral (%)",
    "jsn_21": "medial-to-lateral mJSW ratio",
    "jsn_22": "compartmental asymmetry score",
    "osp_01": "osteophyte grade, medial femur",
    "osp_02": "osteophyte grade, lateral femur",
    "osp_03": "osteophyte grade, medial tibia",
    "osp_04": "osteophyte grade, lateral tibia",
    "osp_05": "total osteophyte burden (sum of site grades)",
    "osp_06": "maximum site grade",
    "osp_07": "femoral composite (medial+lateral femur)",
    "osp_08": "tibial composite (medial+lateral tibia)",
    "osp_09": "medial composite (femur+tibia)",
    "osp_10": "lateral composite (femur+tibia)",
    "scl_01": "LBP entropy, radius 1",
    "scl_02": "LBP energy, radius 1",
    "scl_03": "LBP entropy, radius 2",
    "scl_04": "LBP energy, radius 2",
    "scl_05": "LBP entropy, radius 3",
    "scl_06": "LBP energy, radius 3",
    "scl_07": "GLCM contrast",
    "scl_08": "GLCM correlation",
    "scl_09": "GLCM energy",
    "scl_10": "GLCM homogeneity",
    "scl_11": "GLCM entropy",
    "scl_12": "fractal dimension (differential box counting)",
    "scl_13": "subchondral intensity mean, medial",
    "scl_14": "subchondral intensity std, medial",
    "scl_15": "subchondral intensity skewness, medial",
    "scl_16": "subchondral intensity mean, lateral",
    "scl_17": "subchondral intensity std, lateral",
    "scl_18": "subchondral intensity skewness, lateral",
}


@dataclass
class OsteophyteFeatures:
    """10-dim osteophyte sub-vector derived from the four per-site grades."""

    grades: tuple[float, float, float, float]  # mf, lf, mt, lt; NaN when unknown

    def to_vector(self) -> np.ndarray:
        mf, lf, mt, lt = self.grades
        return np.array(
            [mf, lf, mt, lt,
             mf + lf + mt + lt,
             max(self.grades) if not any(np.isnan(self.grades)) else np.nan,
             mf + lf, mt + lt, mf + mt, lf + lt],
            dtype=float,
        )

    @property
    def measured(self) -> bool:
        return not any(np.isnan(g) for g in self.grades)


def osteophyte_subvector(grades) -> OsteophyteFeatures:
    """Build the 10-dim sub-vector [mf, lf, mt, lt, sum, max, composites x4].

    Grades may contain NaN (missing annotation); those propagate and are
    imputed at assembly time. Finite grades must lie in [0, 3].
    """
    grades = tuple(float(g) for g in grades)
    if len(grades) != 4:
        raise ValueError(f"expected 4 site grades, got {len(grades)}")
    for g in grades:
        if not np.isnan(g) and not (0 <= g <= 3):
            raise ValueError(f"osteophyte grade {g} outside [0, 3]")
    return OsteophyteFeatures(grades)


@dataclass
class StructuredVector:
    """One row of the feature table: the frozen 50-dim vector plus metadata."""

    id: str
    split: str
    kl_grade: int
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (TOTAL_DIM,):
            raise SchemaError(
                f"structured vector must have {TOTAL_DIM} values, got {self.values.shape}"
            )

    def family(self, name: str) -> np.ndarray:
        return self.values[FAMILY_SLICES[name]]


@dataclass
class MedianImputer:
    """Per-dimension training-split medians used to fill missing features."""

    medians: np.ndarray | None = None

    def fit(self, train_matrix: np.ndarray) -> "MedianImputer":
        train_matrix = np.asarray(train_matrix, dtype=float)
        with warnings.catch_warnings():
            # all-NaN columns surface as a SchemaError below, not a warning
            warnings.simplefilter("ignore", RuntimeWarning)
            self.medians = np.nanmedian(train_matrix, axis=0)
        if np.isnan(self.medians).any():
            bad = [FEATURE_NAMES[i] if train_matrix.shape[1] == TOTAL_DIM else str(i)
                   for i in np.flatnonzero(np.isnan(self.medians))]
            raise SchemaError(f"cannot impute: no training values for {bad}")
        return self

    def transform(self, matrix: np.ndarray) -> np.ndarray:
        if self.medians is None:
            raise NotFittedError("imputer used before fit")
        matrix = np.array(matrix, dtype=float)
        nan = np.isnan(matrix)
        matrix[nan] = np.broadcast_to(self.medians, matrix.shape)[nan]
        return matrix


def assemble(jsn_vec, osp: OsteophyteFeatures, scl_vec, imputer: MedianImputer | None,
             *, id: str = "", split: str = "", kl_grade: int = 0) -> StructuredVector:
    """Concatenate [jsn(22) | osp(10) | scl(18)] and impute missing slots.

    `jsn_vec` / `scl_vec` are 22- and 18-dim arrays possibly containing NaN
    (e.g. a missing compartment); missing slots are replaced by training-split
    medians.
    """
    jsn_vec = np.asarray(jsn_vec, dtype=float)
    scl_vec = np.asarray(scl_vec, dtype=float)
    if jsn_vec.shape != (JSN_DIM,) or scl_vec.shape != (SCL_DIM,):
        raise SchemaError("family sub-vector has wrong length")
    raw = np.concatenate([jsn_vec, osp.to_vector(), scl_vec])
    if np.isnan(raw).any():
        if imputer is None or imputer.medians is None:
            raise NotFittedError("missing features present but imputer not fitted")
        raw = imputer.transform(raw[None, :])[0]
    return StructuredVector(id=id, split=split, kl_grade=kl_grade, values=raw)


STD_FLOOR = 1e-8


@dataclass
class Normalizer:
    """Per-dimension z-score parameters fitted on the training split."""

    mean: np.ndarray | None = None
    std: np.ndarray | None = None
    fitted_on: str = "train"

    def fit(self, train_matrix: np.ndarray) -> "Normalizer":
        train_matrix = np.asarray(train_matrix, dtype=float)
        self.mean = train_matrix.mean(axis=0)
        std = train_matrix.std(axis=0)
        std[std < STD_FLOOR] = 1.0
        self.std = std
        return self

    def apply(self, matrix: np.ndarray) -> np.ndarray:
        if self.mean is None:
            raise NotFittedError("normalizer used before fit")
        return (np.asarray(matrix, dtype=float) - self.mean) / self.std

    def invert(self, matrix: np.ndarray) -> np.ndarray:
        if self.mean is None:
            raise NotFittedError("normalizer used before fit")
        return np.asarray(matrix, dtype=float) * self.std + self.mean

    def to_dict(self) -> dict:
        return {"mean": list(map(float, self.mean)),
                "std": list(map(float, self.std)),
                "fitted_on": self.fitted_on}

    @classmethod
    def from_dict(cls, d: dict) -> "Normalizer":
        return cls(mean=np.array(d["mean"], dtype=float),
                   std=np.array(d["std"], dtype=float),
                   fitted_on=d.get("fitted_on", "train"))


def family_columns(feature_names, family: str) -> np.ndarray:
    """Indices of the given family's columns within an arbitrary name list."""
    if family == "all":
        return np.arange(len(feature_names))
    prefix = family + "_"
    cols = np.array([i for i, n in enumerate(feature_names) if n.startswith(prefix)],
                    dtype=int)
    return cols


def intervene(matrix: np.ndarray, family: str, mode: str, seed: int,
              feature_names=FEATURE_NAMES) -> np.ndarray:
    """Inference-time intervention on a (normalized) feature matrix.

    zero: set the family's columns to 0 (the training mean in z-space).
    permute: jointly row-shuffle the family's columns with one seeded
    permutation; rows stay internally consistent within the family but are
    misaligned with their images. Other columns are untouched.
    """
    if family not in ("jsn", "osp", "scl", "all"):
        raise ValueError(f"unknown family {family!r}")
    out = np.array(matrix, dtype=float)
    cols = family_columns(feature_names, family)
    if mode == "zero":
        out[:, cols] = 0.0
    elif mode == "permute":
        if out.shape[0] < 2:
            raise ValueError("permute requires at least 2 rows")
        perm = np.random.default_rng(seed).permutation(out.shape[0])
        out[:, cols] = out[perm][:, cols]
    else:
        raise ValueError(f"unknown intervention mode {mode!r}")
    return out
