"""Command-line surface: extract, assemble, train, evaluate, ablate,
attribute, overlay and report subcommands."""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .ablation import (ablation_family, ablation_intervention, evaluate_split,
                       family_table_markdown, intervention_table_markdown)
from .attribution import occlusion_attribution, permutation_importance
from .boosting import GbtEnsemble, GbtParams, gbt_train, stratified_kfold
from .dataio import (feature_matrix, load_manifest, read_feature_table,
                     write_feature_table)
from .errors import KneegradeError, ManifestError
from .extract import extract_row, fit_kl0_reference, write_audit
from .features import (FEATURE_NAMES, MedianImputer, Normalizer,
                       StructuredVector)
from .metrics import bootstrap_ci, macro_auc, macro_f1, qwk
from .overlay import render_overlay
from .preprocess import PreprocessConfig

log = logging.getLogger("kneegrade")

DISCLAIMER = ("Metric values below are functions of the supplied images and "
              "annotations only; they are not comparable to, and must not be "
              "read as reproductions of, any externally published results.")


def _parse_overrides(pairs):
    out = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise SystemExit(f"--config expects key=value, got {pair!r}")
        key, value = pair.split("=", 1)
        try:
            out[key] = json.loads(value)
        except json.JSONDecodeError:
            out[key] = value
    return out


def _config_hash(config: dict) -> str:
    return hashlib.sha256(
        json.dumps(config, sort_keys=True, default=str).encode()).hexdigest()[:16]


def _meta(args, config: dict) -> dict:
    return {"tool_version": __version__, "seed": args.seed,
            "config_hash": _config_hash(config)}


def _gbt_params(overrides: dict, seed: int) -> GbtParams:
    kwargs = {k.split(".", 1)[1]: v for k, v in overrides.items()
              if k.startswith("model.")}
    kwargs.setdefault("seed", seed)
    return GbtParams(**kwargs)


def _write_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=1))


def _load_table(path):
    rows = read_feature_table(path)
    return rows, feature_matrix(rows)


# ---------------------------------------------------------------------------
# subcommands

def cmd_extract(args) -> int:
    overrides = _parse_overrides(args.config)
    try:
        manifest = load_manifest(args.manifest)
    except ManifestError as exc:
        log.error("%s", exc)
        return 2
    tiles = tuple(int(t) for t in args.clahe_tiles.split("x"))
    cfg = PreprocessConfig(clahe_clip_limit=args.clahe_clip, clahe_tiles=tiles,
                           clip_lo=args.clip_lo, clip_hi=args.clip_hi)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        ref = fit_kl0_reference(manifest, cfg)
    except KneegradeError as exc:
        log.error("cannot fit KL0 reference: %s", exc)
        return 1
    dump = Path(args.dump_rois) if args.dump_rois else None

    def work(item):
        i, row = item
        try:
            return i, extract_row(row, ref, cfg, dump_rois=dump)
        except Exception as exc:
            log.warning("row %d (%s) failed: %s", i, row.id, exc)
            return i, None

    items = list(enumerate(manifest))
    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(work, items))
    else:
        results = [work(it) for it in items]
    results.sort(key=lambda r: r[0])
    ok = [r for _, r in results if r is not None]
    if not ok:
        log.error("no images processed successfully")
        return 1
    for res in ok:
        if res.audit["quality"]["jsn"] != "measured":
            log.warning("%s: jsn quality %s (imputation downstream)",
                        res.id, res.audit["quality"]["jsn"])
        write_audit(res.audit, out_dir / "audit")
    write_feature_table([r.vector for r in ok], out_dir / "features_raw.csv")
    meta = _meta(args, {"preprocess": vars(cfg), **overrides})
    _write_json(out_dir / "kl0_reference.json", {**ref.to_dict(), **meta})
    _write_json(out_dir / "extract.meta.json",
                {**meta, "rows": len(ok), "failed": len(items) - len(ok)})
    return 0


def cmd_assemble(args) -> int:
    overrides = _parse_overrides(args.config)
    rows, (X, y, splits, ids) = _load_table(args.features)
    imputer = MedianImputer().fit(X[splits == "train"])
    X_imp = imputer.transform(X)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    assembled = [StructuredVector(id=r.id, split=r.split, kl_grade=r.kl_grade,
                                  values=X_imp[i]) for i, r in enumerate(rows)]
    write_feature_table(assembled, out_dir / "features.csv")
    meta = _meta(args, overrides)
    _write_json(out_dir / "imputer.json",
                {"medians": [float(v) for v in imputer.medians], **meta})
    return 0


def cmd_train(args) -> int:
    overrides = _parse_overrides(args.config)
    rows, (X, y, splits, ids) = _load_table(args.features)
    train = splits == "train"
    if not train.any():
        log.error("no train split rows in %s", args.features)
        return 2
    params = _gbt_params(overrides, args.seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    folds = stratified_kfold(y[train], k=args.folds, seed=args.seed)
    Xt, yt = X[train], y[train]
    cv_qwk = []
    for f in range(args.folds):
        fit = folds != f
        norm = Normalizer().fit(Xt[fit])
        model = gbt_train(norm.apply(Xt[fit]), yt[fit], params,
                          feature_names=list(FEATURE_NAMES), normalizer=norm)
        y_hat = model.predict(Xt[~fit])
        cv_qwk.append(qwk(yt[~fit], y_hat, classes=params.class_count))

    norm = Normalizer().fit(Xt)
    model = gbt_train(norm.apply(Xt), yt, params,
                      feature_names=list(FEATURE_NAMES), normalizer=norm)
    model.save(out_dir / "model.json")
    meta = _meta(args, overrides)
    _write_json(out_dir / "train_report.json", {
        **meta,
        "cv_qwk_mean": float(np.mean(cv_qwk)),
        "cv_qwk_std": float(np.std(cv_qwk)),
        "cv_qwk_folds": [float(v) for v in cv_qwk],
        "n_train": int(train.sum()),
        "params": {k: getattr(params, k) for k in vars(params)},
    })
    print(f"cv qwk {np.mean(cv_qwk):.4f} +/- {np.std(cv_qwk):.4f}")
    return 0


def _evaluate_payload(model, X, y, split_name, b, seed):
    metrics, y_hat, proba = evaluate_split(model, X, y)
    classes = model.params.class_count
    ci = {}
    skipped = {}
    specs = {
        "qwk": (lambda yy, yh: qwk(yy, yh, classes=classes), y_hat),
        "accuracy": (lambda yy, yh: float(np.mean(yy == yh)), y_hat),
        "macro_f1": (lambda yy, yh: macro_f1(yy, yh, classes=classes), y_hat),
        "macro_auc": (lambda yy, pp: macro_auc(yy, pp), proba),
    }
    for name, (fn, pred) in specs.items():
        lo, hi, sk = bootstrap_ci(fn, y, pred, b=b, seed=seed)
        ci[name] = [lo, hi]
        skipped[name] = sk
    return {"split": split_name, "n": int(len(y)), "metrics": metrics,
            "ci95": ci, "bootstrap_resamples": b,
            "bootstrap_skipped": skipped}


def cmd_evaluate(args) -> int:
    overrides = _parse_overrides(args.config)
    b = int(overrides.get("eval.bootstrap_resamples", 1000))
    rows, (X, y, splits, ids) = _load_table(args.features)
    model = GbtEnsemble.load(args.model)
    test = splits == "test"
    if not test.any():
        log.error("no test split rows in %s", args.features)
        return 2
    payload = _evaluate_payload(model, X[test], y[test], "test", b, args.seed)
    payload.update(_meta(args, overrides))
    payload["disclaimer"] = DISCLAIMER
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(out_dir / "evaluation.json", payload)
    md = ["# KL grading evaluation (test split)", "", DISCLAIMER, "",
          "| Metric | Value | 95% CI |", "|---|---:|---:|"]
    for name, value in payload["metrics"].items():
        lo, hi = payload["ci95"].get(name, (float("nan"), float("nan")))
        md.append(f"| {name} | {value:.4f} | [{lo:.4f}, {hi:.4f}] |")
    (out_dir / "evaluation.md").write_text("\n".join(md) + "\n")
    print(f"test qwk {payload['metrics']['qwk']:.4f}")
    return 0


def cmd_ablate(args) -> int:
    overrides = _parse_overrides(args.config)
    rows, (X, y, splits, ids) = _load_table(args.features)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = {**_meta(args, overrides), "disclaimer": DISCLAIMER}
    md = ["# Ablation protocols", "", DISCLAIMER, ""]
    if args.protocol in ("family", "both"):
        params = _gbt_params(overrides, args.seed)
        fam_rows = ablation_family(X, y, splits, list(FEATURE_NAMES), params)
        payload["family"] = fam_rows
        md += ["## Feature-family retraining", "", family_table_markdown(fam_rows), ""]
    if args.protocol in ("intervention", "both"):
        if not args.model:
            log.error("--model is required for the intervention protocol")
            return 2
        model = GbtEnsemble.load(args.model)
        test = splits == "test"
        int_rows = ablation_intervention(model, X[test], y[test], seed=args.seed)
        payload["intervention"] = int_rows
        md += ["## Inference-time interventions", "",
               intervention_table_markdown(int_rows), ""]
    _write_json(out_dir / "ablation.json", payload)
    (out_dir / "ablation.md").write_text("\n".join(md))
    return 0


def cmd_attribute(args) -> int:
    overrides = _parse_overrides(args.config)
    rows, (X, y, splits, ids) = _load_table(args.features)
    model = GbtEnsemble.load(args.model)
    test = splits == "test"
    imp = permutation_importance(model, X[test], y[test],
                                 repeats=args.repeats, seed=args.seed)
    payload = {**_meta(args, overrides), "permutation_importance": imp}
    if args.row:
        if args.row not in ids:
            log.error("row id %r not found", args.row)
            return 2
        x = X[ids.index(args.row)]
        payload["occlusion"] = {"id": args.row,
                                "deltas": occlusion_attribution(model, x)}
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(out_dir / "attribution.json", payload)
    top = sorted(imp["per_feature"].items(), key=lambda kv: -abs(kv[1]))[:10]
    for name, drop in top:
        print(f"{name}\t{drop:+.4f}")
    return 0


def cmd_overlay(args) -> int:
    render_overlay(args.image, args.audit, args.out)
    return 0


def cmd_report(args) -> int:
    rc = cmd_evaluate(args)
    if rc:
        return rc
    args.protocol = "both"
    rc = cmd_ablate(args)
    if rc:
        return rc
    out_dir = Path(args.out)
    report = ["# Structured grading report", "", DISCLAIMER, "",
              (out_dir / "evaluation.md").read_text(),
              (out_dir / "ablation.md").read_text()]
    (out_dir / "report.md").write_text("\n".join(report))
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kneegrade",
        description="Structured radiographic feature extraction and "
                    "transparent KL grading")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--config", action="append", metavar="KEY=VALUE",
                       help="parameter override, e.g. model.n_rounds=150")
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("-v", "--verbose", action="store_true")

    p = sub.add_parser("extract", help="manifest -> raw feature CSV + audit JSON")
    p.add_argument("--manifest", required=True)
    p.add_argument("--dump-rois", help="directory for per-site patch PNGs")
    p.add_argument("--clahe-clip", type=float, default=3.0)
    p.add_argument("--clahe-tiles", default="8x8")
    p.add_argument("--clip-lo", type=float, default=5.0)
    p.add_argument("--clip-hi", type=float, default=99.0)
    common(p)
    p.set_defaults(fn=cmd_extract)

    p = sub.add_parser("assemble", help="impute missing slots from training medians")
    p.add_argument("--features", required=True, help="raw feature CSV")
    common(p)
    p.set_defaults(fn=cmd_assemble)

    p = sub.add_parser("train", help="train the boosted model with stratified CV")
    p.add_argument("--features", required=True)
    p.add_argument("--folds", type=int, default=5)
    common(p)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("evaluate", help="test-split metrics with bootstrap CIs")
    p.add_argument("--features", required=True)
    p.add_argument("--model", required=True)
    common(p)
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("ablate", help="family and/or intervention ablations")
    p.add_argument("--features", required=True)
    p.add_argument("--model")
    p.add_argument("--protocol", choices=("family", "intervention", "both"),
                   default="both")
    common(p)
    p.set_defaults(fn=cmd_ablate)

    p = sub.add_parser("attribute", help="permutation importance and occlusion")
    p.add_argument("--features", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--row", help="row id for a per-image occlusion report")
    p.add_argument("--repeats", type=int, default=10)
    common(p)
    p.set_defaults(fn=cmd_attribute)

    p = sub.add_parser("overlay", help="render an audit record onto an image")
    p.add_argument("--image", required=True)
    p.add_argument("--audit", required=True)
    p.add_argument("--out", required=True, help="output PNG path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(fn=cmd_overlay)

    p = sub.add_parser("report", help="evaluation + both ablations in one report")
    p.add_argument("--features", required=True)
    p.add_argument("--model", required=True)
    common(p)
    p.set_defaults(fn=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if getattr(args, "verbose", False) else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.fn(args)
    except KneegradeError as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
