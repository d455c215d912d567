"""Operator command line chaining the pipeline stages.

Every stage reads and writes plain files so runs compose through the
filesystem. All randomness hangs off an explicit --seed. Existing outputs
are never overwritten without --force. Exit codes: 0 success, 1 domain
error (single machine-parsable stderr line), 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import augment, dataset, engine, folds, imaging, manifest, metrics, model, service
from .errors import LesionScreenError
from .manifest import CLASS_LABELS

DEFAULT_LABELING = {label: label for label in CLASS_LABELS}


def _check_output(path: Path, force: bool) -> None:
    if path.exists() and not force:
        raise LesionScreenError(f"refusing to overwrite {path} (use --force)")


def _cmd_ingest(args) -> int:
    m = dataset.ingest(args.root, DEFAULT_LABELING)
    _check_output(args.out, args.force)
    manifest.save(m, args.out)
    counts = " ".join(f"{label}={m.class_counts[label]}" for label in CLASS_LABELS)
    print(f"ingested {len(m)} records, {m.patient_count} patients: {counts}")
    return 0


def _cmd_screen(args) -> int:
    m = manifest.load(args.manifest)
    cfg = dataset.QualityThresholds(
        blur_threshold=args.blur_threshold, min_side_threshold=args.min_side
    )
    screened, reports = dataset.screen_manifest(m, args.root, cfg)
    _check_output(args.out, args.force)
    manifest.save(screened, args.out)
    passed = sum(1 for r in reports.values() if r.passed)
    print(f"screened {len(reports)} records: {passed} passed, {len(reports) - passed} failed")
    return 0


def _cmd_dedup(args) -> int:
    m = manifest.load(args.manifest)
    groups = dataset.find_duplicates(m, args.root, args.threshold)
    _check_output(args.out, args.force)
    args.out.write_text(
        "".join("\t".join(group) + "\n" for group in groups), encoding="utf-8"
    )
    print(f"{len(groups)} duplicate groups")
    return 0


def _cmd_split(args) -> int:
    m = manifest.load(args.manifest)
    plan = folds.make_folds(m, args.seed)
    _check_output(args.out, args.force)
    folds.save(plan, args.out)
    print(f"5 folds over {m.patient_count} patients written to {args.out}")
    return 0


def _cmd_augment(args) -> int:
    m = manifest.load(args.manifest)
    plan = folds.load(args.plan)
    grid = augment.default_grid() if args.grid == "default" else None
    spec = None
    if args.multiplier > 0:
        spec = augment.StandardAugmentSpec(seed=args.seed, multiplier=args.multiplier)
    out_dir = args.out
    out_manifest = out_dir / "manifest.tsv"
    _check_output(out_manifest, args.force)
    extended = augment.augment_corpus(
        m, plan, args.fold, args.root, out_dir, spec=spec, grid=grid
    )
    manifest.save(extended, out_manifest)
    print(f"fold {args.fold}: {len(m)} -> {len(extended)} records under {out_dir}")
    return 0


def _cmd_predict(args) -> int:
    graph = model.load_model(args.model.read_bytes())
    raster = imaging.decode_image(args.image.read_bytes())
    prediction = engine.predict(graph, raster, args.threshold)
    if args.heatmap is not None:
        from .gradcam import grad_cam

        _check_output(args.heatmap, args.force)
        target = graph.class_names.index(prediction.argmax_label)
        result = grad_cam(graph, raster, target)
        base = imaging.crop_resize(raster, graph.input_side)
        args.heatmap.write_bytes(imaging.heatmap_overlay_png(base, result.heatmap))
    print(
        json.dumps(
            {
                "probabilities": dict(zip(graph.class_names, prediction.probabilities)),
                "argmax_label": prediction.argmax_label,
                "mpox_probability": prediction.mpox_probability,
                "suspected_mpox": prediction.suspected_mpox,
                "model_id": graph.model_id,
            },
            sort_keys=True,
        )
    )
    return 0


def _read_labels(path: Path) -> list[str]:
    return [line for line in path.read_text(encoding="utf-8").splitlines() if line]


def _cmd_evaluate(args) -> int:
    preds = _read_labels(args.preds)
    truth = _read_labels(args.truth)
    cm = metrics.confusion(preds, truth)
    report = metrics.metrics(cm)
    if args.out is not None:
        _check_output(args.out, args.force)
        args.out.write_text(metrics.report_json(args.name, report, cm), encoding="utf-8")
    if args.confusion_png is not None:
        _check_output(args.confusion_png, args.force)
        args.confusion_png.write_bytes(metrics.confusion_png(cm.normalized()))
    print(metrics.report_table(args.name, report, weighted=args.weighted), end="")
    return 0


def _cmd_export_model(args) -> int:
    if args.arch == "reference":
        graph = model.reference_architecture(args.seed)
    else:
        graph = model.classifier_head_fixture(args.seed)
    _check_output(args.out, args.force)
    args.out.write_bytes(model.serialize_model(graph))
    print(f"wrote {args.arch} model ({args.out.stat().st_size} bytes) to {args.out}")
    return 0


def _cmd_serve(args) -> int:
    cfg = service.load_config(args.config)
    if args.host is not None:
        cfg.host = args.host
    if args.port is not None:
        cfg.port = args.port
    service.run(cfg)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lesionscreen")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="catalog a directory tree into a manifest")
    p.add_argument("--root", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(fn=_cmd_ingest)

    p = sub.add_parser("screen", help="quality-screen manifest records")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--root", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--blur-threshold", type=float, default=100.0)
    p.add_argument("--min-side", type=int, default=64)
    p.add_argument("--force", action="store_true")
    p.set_defaults(fn=_cmd_screen)

    p = sub.add_parser("dedup", help="find near-duplicate images")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--root", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--threshold", type=int, default=4)
    p.add_argument("--force", action="store_true")
    p.set_defaults(fn=_cmd_dedup)

    p = sub.add_parser("split", help="build the 5-fold patient-disjoint plan")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--folds", type=int, default=5, help="reserved; must stay 5")
    p.add_argument("--force", action="store_true")
    p.set_defaults(fn=_cmd_split)

    p = sub.add_parser("augment", help="expand one fold's train/val images")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--plan", type=Path, required=True)
    p.add_argument("--fold", type=int, default=0)
    p.add_argument("--root", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--grid", choices=["default", "none"], default="default")
    p.add_argument("--multiplier", type=int, default=0, help="standard pass; 0 disables")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--force", action="store_true")
    p.set_defaults(fn=_cmd_augment)

    p = sub.add_parser("predict", help="classify one image file")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--image", type=Path, required=True)
    p.add_argument("--threshold", type=float, default=engine.DEFAULT_THRESHOLD)
    p.add_argument("--heatmap", type=Path, default=None, help="write overlay PNG here")
    p.add_argument("--force", action="store_true")
    p.set_defaults(fn=_cmd_predict)

    p = sub.add_parser("evaluate", help="score prediction vs truth label files")
    p.add_argument("--preds", type=Path, required=True)
    p.add_argument("--truth", type=Path, required=True)
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--name", default="model")
    p.add_argument("--weighted", action="store_true")
    p.add_argument("--confusion-png", type=Path, default=None)
    p.add_argument("--force", action="store_true")
    p.set_defaults(fn=_cmd_evaluate)

    p = sub.add_parser("export-model", help="write a fixture weight file")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--arch", choices=["reference", "head"], default="reference")
    p.add_argument("--force", action="store_true")
    p.set_defaults(fn=_cmd_export_model)

    p = sub.add_parser("serve", help="run the screening HTTP service")
    p.add_argument("--config", type=Path, default=None)
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)
    p.set_defaults(fn=_cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "folds", 5) != 5:
        print("error: UsageError: --folds is fixed at 5", file=sys.stderr)
        return 2
    try:
        return args.fn(args)
    except LesionScreenError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: IoFailure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
