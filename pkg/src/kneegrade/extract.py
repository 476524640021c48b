"""Per-image feature extraction pipeline: preprocessing, JSN measurement,
ROI localization, texture descriptors and the audit record consumed by the
overlay renderer."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataio import ManifestRow, load_mask, load_radiograph
from .features import StructuredVector, osteophyte_subvector
from .jsn import JsnFeatures, Kl0Reference, jsn_subvector, measure_compartment
from .preprocess import PreprocessConfig, preprocess_for
from .roi import extract_patch, locate_sites
from .texture import SclerosisFeatures, sclerosis_subvector

log = logging.getLogger(__name__)


@dataclass
class ExtractionResult:
    id: str
    vector: StructuredVector        # raw values, NaN where imputation is due
    audit: dict


def _landmark_audit(mask) -> dict:
    out = {}
    for comp in ("medial", "lateral"):
        prof = measure_compartment(mask, comp) if mask is not None else None
        if prof is None:
            out[comp] = None
        else:
            widths = prof.widths
            out[comp] = {
                "x": [float(v) for v in prof.x],
                "f_y": [float(v) for v in prof.f_y],
                "t_y": [float(v) for v in prof.t_y],
                "widths": [float(v) for v in widths],
                "min_station": int(np.argmin(widths)),
            }
    return out


def extract_row(row: ManifestRow, ref: Kl0Reference | None,
                cfg: PreprocessConfig | None = None,
                dump_rois: Path | None = None) -> ExtractionResult:
    """Compute the raw (pre-imputation) 50-dim vector and audit record for
    one manifest row."""
    cfg = cfg or PreprocessConfig()
    img = load_radiograph(row.image_path, row.side)
    mask = None
    if row.mask_path:
        mask = load_mask(row.mask_path, row.side, radiograph=img)

    if mask is not None:
        jsn_feat = jsn_subvector(mask, ref)
    else:
        jsn_feat = JsnFeatures(
            mjsw_med=np.nan, mjsw_lat=np.nan,
            profile_med=np.full(8, np.nan), profile_lat=np.full(8, np.nan),
            jsn_rate_med=np.nan, jsn_rate_lat=np.nan,
            ml_ratio=np.nan, asymmetry_score=np.nan, quality="imputed_both")

    osp_feat = osteophyte_subvector(
        row.osteophyte_grades if row.osteophyte_grades is not None
        else (np.nan,) * 4)

    img_full = preprocess_for("osteophyte_fullimage", img.pixels, cfg)
    boxes = locate_sites(mask, img)
    if dump_rois is not None:
        from .phantoms import save_png
        dump_rois.mkdir(parents=True, exist_ok=True)
        for box in boxes:
            patch = extract_patch(img_full, box)
            save_png(patch, dump_rois / f"{row.id}_{box.site}_{box.tier}.png")

    img_scl = preprocess_for("sclerosis", img.pixels, cfg)
    if mask is not None:
        scl_feat = sclerosis_subvector(img_scl, mask)
    else:
        scl_feat = SclerosisFeatures(
            lbp=np.full(6, np.nan), glcm=np.full(5, np.nan), fractal_dim=np.nan,
            intensity=np.full(6, np.nan), quality="imputed_both")

    raw = np.concatenate([jsn_feat.to_vector(), osp_feat.to_vector(),
                          scl_feat.to_vector()])
    vector = StructuredVector(id=row.id, split=row.split, kl_grade=row.kl_grade,
                              values=raw)
    audit = {
        "id": row.id,
        "image_path": str(row.image_path),
        "side": row.side,
        "landmarks": _landmark_audit(mask),
        "roi_boxes": [b.to_dict() for b in boxes],
        "quality": {"jsn": jsn_feat.quality,
                    "osteophyte": "measured" if osp_feat.measured else "imputed",
                    "sclerosis": scl_feat.quality},
        "texture": {
            "lbp": [float(v) for v in scl_feat.lbp],
            "glcm": [float(v) for v in scl_feat.glcm],
            "fractal_dim": float(scl_feat.fractal_dim),
            "intensity": [float(v) for v in scl_feat.intensity],
        },
    }
    return ExtractionResult(id=row.id, vector=vector, audit=audit)


def fit_kl0_reference(manifest, cfg: PreprocessConfig | None = None) -> Kl0Reference:
    """First pass over training-split KL0 rows with masks, fitting the
    per-compartment mJSW reference medians."""
    from .jsn import kl0_reference
    feats = []
    for row in manifest:
        if row.split != "train" or row.kl_grade != 0 or not row.mask_path:
            continue
        try:
            img = load_radiograph(row.image_path, row.side)
            mask = load_mask(row.mask_path, row.side, radiograph=img)
        except Exception as exc:
            log.warning("skipping %s in reference fit: %s", row.id, exc)
            continue
        feat = jsn_subvector(mask, ref=None)
        if feat.quality != "imputed_both":
            feats.append(feat)
    return kl0_reference(feats)


def write_audit(audit: dict, out_dir: Path) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{audit['id']}.json"
    path.write_text(json.dumps(audit, sort_keys=True, indent=1))
    return path
