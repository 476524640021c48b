"""Loading of manifests, radiographs and masks, and feature-table CSV I/O."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ManifestError, SchemaError
from .features import FEATURE_NAMES, TOTAL_DIM, StructuredVector

SPLITS = ("train", "val", "test")
SIDES = ("left", "right")

MANIFEST_COLUMNS = ("image_path", "mask_path", "split", "kl_grade", "side",
                    "osp_mf", "osp_lf", "osp_mt", "osp_lt", "sclerosis")

EXPECTED_SIZE = (224, 224)

LABEL_BACKGROUND = 0
LABEL_MEDIAL = 1
LABEL_LATERAL = 2


@dataclass
class ManifestRow:
    image_path: str
    mask_path: str | None
    split: str
    kl_grade: int
    side: str
    osteophyte_grades: tuple[int, int, int, int] | None  # mf, lf, mt, lt
    sclerosis_label: int | None

    @property
    def id(self) -> str:
        return Path(self.image_path).stem


@dataclass
class DatasetManifest:
    rows: list[ManifestRow]

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def subset(self, split: str) -> "DatasetManifest":
        return DatasetManifest([r for r in self.rows if r.split == split])


@dataclass
class Radiograph:
    pixels: np.ndarray  # (H, W) float in [0, 1]
    side: str
    canonical: bool = True

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass
class LabelMask:
    labels: np.ndarray  # (H, W) int in {0, 1, 2}

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]


def _parse_grade(text: str, row_idx: int, column: str, lo: int, hi: int):
    if text is None or text.strip() == "":
        return None
    try:
        value = int(text)
    except ValueError:
        raise ManifestError(f"row {row_idx}: column {column!r} is not an integer: {text!r}")
    if not lo <= value <= hi:
        raise ManifestError(
            f"row {row_idx}: column {column!r} value {value} outside [{lo}, {hi}]")
    return value


def load_manifest(path) -> DatasetManifest:
    """Read and validate a manifest CSV; row order is preserved."""
    path = Path(path)
    if not path.is_file():
        raise ManifestError(f"manifest not found: {path}")
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in MANIFEST_COLUMNS if c not in header]
        if missing:
            raise ManifestError(f"manifest missing columns: {missing}")
        for i, rec in enumerate(reader, start=1):
            if not rec["image_path"]:
                raise ManifestError(f"row {i}: empty image_path")
            split = rec["split"]
            if split not in SPLITS:
                raise ManifestError(f"row {i}: unknown split {split!r}")
            side = rec["side"]
            if side not in SIDES:
                raise ManifestError(f"row {i}: unknown side {side!r}")
            kl = _parse_grade(rec["kl_grade"], i, "kl_grade", 0, 4)
            if kl is None:
                raise ManifestError(f"row {i}: missing kl_grade")
            osp = tuple(
                _parse_grade(rec[c], i, c, 0, 3)
                for c in ("osp_mf", "osp_lf", "osp_mt", "osp_lt"))
            if any(g is None for g in osp):
                osp = None
            scl = _parse_grade(rec["sclerosis"], i, "sclerosis", 0, 1)
            rows.append(ManifestRow(
                image_path=rec["image_path"],
                mask_path=rec["mask_path"] or None,
                split=split,
                kl_grade=kl,
                side=side,
                osteophyte_grades=osp,
                sclerosis_label=scl,
            ))
    return DatasetManifest(rows)


def load_radiograph(path, side: str) -> Radiograph:
    """Load an 8-bit grayscale PNG, scale to [0, 1] and canonicalize laterality.

    Right-knee images are mirrored horizontally so the medial compartment sits
    on image-left in every downstream computation.
    """
    path = Path(path)
    try:
        img = Image.open(path)
        img.load()
    except Exception as exc:
        raise SchemaError(f"unreadable image {path}: {exc}") from exc
    if img.mode not in ("L", "I;16", "1"):
        raise SchemaError(f"{path}: expected grayscale input, got mode {img.mode}")
    arr = np.asarray(img.convert("L"), dtype=float) / 255.0
    if arr.shape != EXPECTED_SIZE:
        warnings.warn(f"{path}: dimensions {arr.shape} differ from expected {EXPECTED_SIZE}")
    if side not in SIDES:
        raise ValueError(f"unknown side {side!r}")
    if side == "right":
        arr = arr[:, ::-1].copy()
    return Radiograph(pixels=arr, side=side, canonical=True)


def canonicalize_mask_array(labels: np.ndarray, side: str) -> np.ndarray:
    """Mirror a right-knee mask into the canonical medial-left frame.

    The horizontal flip is paired with a 1<->2 label swap so that label 1
    keeps denoting the medial compartment. Applying this twice is the
    identity.
    """
    if side == "left":
        return labels
    flipped = labels[:, ::-1].copy()
    swapped = flipped.copy()
    swapped[flipped == LABEL_MEDIAL] = LABEL_LATERAL
    swapped[flipped == LABEL_LATERAL] = LABEL_MEDIAL
    return swapped


def load_mask(path, side: str = "left", radiograph: Radiograph | None = None) -> LabelMask:
    """Load an 8-bit PNG compartment mask with values in {0, 1, 2}."""
    path = Path(path)
    try:
        img = Image.open(path)
        img.load()
    except Exception as exc:
        raise SchemaError(f"unreadable mask {path}: {exc}") from exc
    labels = np.asarray(img.convert("L"), dtype=np.int64)
    bad = np.setdiff1d(np.unique(labels), [0, 1, 2])
    if bad.size:
        raise SchemaError(f"{path}: mask values outside {{0,1,2}}: {bad.tolist()}")
    if side not in SIDES:
        raise ValueError(f"unknown side {side!r}")
    labels = canonicalize_mask_array(labels, side)
    mask = LabelMask(labels=labels)
    if radiograph is not None and labels.shape != radiograph.pixels.shape:
        raise SchemaError(
            f"{path}: mask dimensions {labels.shape} do not match radiograph "
            f"{radiograph.pixels.shape}")
    return mask


# ---------------------------------------------------------------------------
# Feature table CSV

FEATURE_TABLE_HEADER = ("id", "split", "kl_grade") + FEATURE_NAMES


def write_feature_table(rows: list[StructuredVector], path) -> None:
    """Write structured vectors to CSV with the canonical 53-column header."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(FEATURE_TABLE_HEADER)
        for row in rows:
            writer.writerow([row.id, row.split, row.kl_grade]
                            + [repr(float(v)) for v in row.values])


def read_feature_table(path) -> list[StructuredVector]:
    """Read a feature CSV back into structured vectors (round-trip exact)."""
    path = Path(path)
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = tuple(next(reader))
        except StopIteration:
            raise SchemaError(f"{path}: empty file")
        if header != FEATURE_TABLE_HEADER:
            missing = set(FEATURE_TABLE_HEADER) - set(header)
            extra = set(header) - set(FEATURE_TABLE_HEADER)
            raise SchemaError(
                f"{path}: feature table header mismatch"
                + (f"; missing columns {sorted(missing)}" if missing else "")
                + (f"; unexpected columns {sorted(extra)}" if extra else ""))
        for i, rec in enumerate(reader, start=1):
            if len(rec) != len(header):
                raise SchemaError(f"{path}: row {i} has {len(rec)} cells")
            try:
                values = np.array([float(v) for v in rec[3:]], dtype=float)
            except ValueError as exc:
                raise SchemaError(f"{path}: row {i}: non-numeric cell ({exc})")
            rows.append(StructuredVector(
                id=rec[0], split=rec[1], kl_grade=int(rec[2]), values=values))
    return rows


def feature_matrix(rows: list[StructuredVector]):
    """Stack rows into (X, y, splits, ids) arrays."""
    X = np.stack([r.values for r in rows]) if rows else np.empty((0, TOTAL_DIM))
    y = np.array([r.kl_grade for r in rows], dtype=int)
    splits = np.array([r.split for r in rows])
    ids = [r.id for r in rows]
    return X, y, splits, ids
