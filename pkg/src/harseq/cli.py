"""Command-line front end: ``harseq {synth,rasterize,train,predict,cv,reproduce}``."""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, dataset, models, synthetic
from .dataset import DatasetError
from .evaluation import (EvaluationError, FoldError, accuracy, cross_validate, predict_minutes,
                         render_confusion_svg, write_confusion_csv, write_report_json)
from .features import FeatureConfig, FeatureError, featurize

# best published configuration per house, with its accuracy / mpca
REPRODUCTION = {
    "A": ({"representation": "ob", "concat_k": 5, "tod_encoding": "unary",
           "deltat_encoding": "unary7"}, 98.95, 88.40),
    "B": ({"representation": "ob", "concat_k": 5, "tod_encoding": "unary",
           "deltat_encoding": "unary48"}, 96.07, 79.08),
    "C": ({"representation": "ob", "concat_k": 10, "tod_encoding": "onehot",
           "deltat_encoding": "unary48"}, 94.10, 76.54),
}
ACC_TOL, MPCA_TOL = 2.0, 5.0

FEATURE_FLAGS = {"repr": "representation", "concat": "concat_k", "tod": "tod_encoding",
                 "deltat": "deltat_encoding", "granularity": "eval_granularity"}
FEATURE_DEFAULTS = {"repr": "raw", "concat": 1, "tod": "none", "deltat": "none",
                    "granularity": "minute"}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# argument parsing

def _feature_args(p):
    g = p.add_argument_group("features")
    g.add_argument("--repr", choices=["raw", "changepoint", "lastfired", "ob"])
    g.add_argument("--concat", type=int, metavar="K")
    g.add_argument("--tod", choices=["none", "onehot", "unary"])
    g.add_argument("--deltat", choices=["none", "onehot7", "onehot48", "unary7", "unary48"])
    g.add_argument("--granularity", choices=["minute", "segment"])


def _model_args(p, model_default="crf"):
    g = p.add_argument_group("model")
    g.add_argument("--model", choices=list(models.MODEL_KINDS), default=model_default)
    g.add_argument("--reg", type=float, default=models.ModelOptions.reg)
    g.add_argument("--alpha", type=float, default=models.ModelOptions.alpha)
    g.add_argument("--dmax", type=int, default=models.ModelOptions.d_max)
    g.add_argument("--max-iter", type=int, default=models.ModelOptions.max_iter)


def _cv_args(p):
    p.add_argument("--mpca-aggregation", choices=["fold", "pooled"], default="fold")
    p.add_argument("--ob-test-split", choices=["sensor", "label"], default="sensor",
                   help="how held-out days are compacted under OB (default: sensor changes only)")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.add_argument("--svg", action=argparse.BooleanOptionalAction, default=True,
                   help="also write confusion.svg")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="harseq", description=__doc__)
    parser.add_argument("--version", action="version", version=f"harseq {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic corpus as events.csv + meta.json")
    p.add_argument("out_dir", type=Path)
    p.add_argument("--kind", choices=["house-a", "bundled"], default="house-a")
    p.add_argument("--days", type=int, default=25)
    p.add_argument("--seed", type=int, default=7)

    p = sub.add_parser("rasterize", help="events CSV + metadata -> timeslice container")
    p.add_argument("events", type=Path)
    p.add_argument("meta", type=Path)
    p.add_argument("out", type=Path)

    p = sub.add_parser("train", help="fit one model on every day of a dataset")
    p.add_argument("dataset", type=Path)
    p.add_argument("--out-dir", type=Path, required=True)
    _feature_args(p)
    _model_args(p)

    p = sub.add_parser("predict", help="decode a dataset with a saved model")
    p.add_argument("dataset", type=Path)
    p.add_argument("model", type=Path)
    p.add_argument("--out", type=Path, required=True, help="predictions CSV")
    p.add_argument("--ob-test-split", choices=["sensor", "label"], default="sensor")
    _feature_args(p)

    p = sub.add_parser("cv", help="leave-one-day-out cross-validation")
    p.add_argument("dataset", type=Path)
    p.add_argument("--out-dir", type=Path, required=True)
    _feature_args(p)
    _model_args(p)
    _cv_args(p)

    p = sub.add_parser("reproduce", help="run the best published configuration for a house")
    p.add_argument("--house", choices=sorted(REPRODUCTION), default="A")
    p.add_argument("--events", type=Path, help="events CSV (default: bundled synthetic house A)")
    p.add_argument("--meta", type=Path)
    p.add_argument("--out-dir", type=Path, required=True)
    _model_args(p)
    _cv_args(p)
    return parser


def feature_config(args, base: dict | None = None) -> FeatureConfig:
    """FeatureConfig from explicit flags layered over ``base`` (or the defaults)."""
    d = dict(base) if base else {FEATURE_FLAGS[k]: v for k, v in FEATURE_DEFAULTS.items()}
    for flag, key in FEATURE_FLAGS.items():
        v = getattr(args, flag, None)
        if v is not None:
            d[key] = v
    try:
        return FeatureConfig.from_dict(d)
    except (FeatureError, TypeError, ValueError) as exc:
        raise UsageError(f"invalid feature flags: {exc}") from None


def model_options(args) -> models.ModelOptions:
    if args.reg < 0:
        raise UsageError("--reg must be >= 0")
    if args.alpha <= 0:
        raise UsageError("--alpha must be > 0")
    if args.dmax < 1:
        raise UsageError("--dmax must be >= 1")
    if args.max_iter < 0:
        raise UsageError("--max-iter must be >= 0")
    return models.ModelOptions(alpha=args.alpha, d_max=args.dmax, reg=args.reg,
                               max_iter=args.max_iter)


def _check_jobs(args):
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")


# ---------------------------------------------------------------------------
# helpers

def _write_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _snapshot(args, **extra) -> dict:
    snap = {"harseq_version": __version__, "command": args.command}
    for k, v in sorted(vars(args).items()):
        if k == "command":
            continue
        snap[k] = str(v) if isinstance(v, Path) else v
    snap.update(extra)
    return snap


def _require(paths):
    missing = [str(p) for p in paths if not Path(p).is_file()]
    if missing:
        raise RuntimeError(f"artifacts not written: {', '.join(missing)}")


def _load_days(path):
    seq, meta = dataset.load_timeslices(path)
    return dataset.split_days(seq), meta


def _config_diff(a: dict, b: dict) -> str:
    keys = sorted(set(a) | set(b))
    return "\n".join(f"  {k}: model={a.get(k)!r} requested={b.get(k)!r}"
                     for k in keys if a.get(k) != b.get(k))


# ---------------------------------------------------------------------------
# subcommands

def cmd_synth(args):
    args.out_dir.mkdir(parents=True, exist_ok=True)
    ev_path, meta_path = args.out_dir / "events.csv", args.out_dir / "meta.json"
    if args.kind == "bundled":
        src_ev, src_meta = synthetic.bundled_house_a_paths()
        events, meta = dataset.load_events(src_ev, meta_path=src_meta)
    else:
        if args.days < 1:
            raise UsageError("--days must be >= 1")
        events, meta = synthetic.house_a_like(args.days, args.seed)
    dataset.write_events(ev_path, events, meta)
    dataset.write_meta(meta_path, meta)
    _require([ev_path, meta_path])
    print(f"wrote {ev_path} ({len(events)} events) and {meta_path}")


def cmd_rasterize(args):
    events, meta = dataset.load_events(args.events, meta_path=args.meta)
    if not events:
        raise DatasetError(f"{args.events}: no events")
    start, end = dataset.events_range(events)
    start -= start % dataset.MINUTES_PER_DAY
    if end % dataset.MINUTES_PER_DAY:
        end += dataset.MINUTES_PER_DAY - end % dataset.MINUTES_PER_DAY
    seq = dataset.rasterize(events, meta, start, end)
    dataset.save_timeslices(args.out, seq, meta)
    _require([args.out, dataset.meta_path_for(args.out)])
    print(f"T: {seq.T}  N: {meta.n_sensors}  C: {meta.n_classes}")
    print(f"days: {len(dataset.split_days(seq))}")


def cmd_train(args):
    cfg = feature_config(args)
    opts = model_options(args)
    days, meta = _load_days(args.dataset)
    data = [featurize(d, cfg, split_on_label=True) for d in days]
    model = models.fit(args.model, data, meta.n_classes, opts)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    model_path, cfg_path = args.out_dir / "model.json", args.out_dir / "config.json"
    models.save_model(model_path, model, cfg, {"model_opts": opts.to_dict(),
                                               "house_id": meta.house_id})
    _write_json(cfg_path, _snapshot(args, features=cfg.to_dict(), model_opts=opts.to_dict()))
    _require([model_path, cfg_path])
    preds = [predict_minutes(model, d, cfg, "label") for d in days]
    acc = accuracy(np.concatenate([p for p, _ in preds]), np.concatenate([t for _, t in preds]))
    print(f"training accuracy: {100 * acc:.2f}")


def cmd_predict(args):
    model, doc = models.load_model(args.model)
    stored = doc.get("config") or {}
    cfg = feature_config(args, base=stored)
    if stored and cfg.to_dict() != FeatureConfig.from_dict(stored).to_dict():
        raise UsageError("feature configuration differs from the model's:\n"
                         + _config_diff(FeatureConfig.from_dict(stored).to_dict(), cfg.to_dict()))
    days, meta = _load_days(args.dataset)
    width = cfg.width(meta.n_sensors)
    if width != model.F:
        raise UsageError(f"feature width mismatch: model expects F={model.F}, "
                         f"dataset gives F={width}")
    if meta.n_classes != model.C:
        raise UsageError(f"class count mismatch: model C={model.C}, dataset C={meta.n_classes}")
    args.out.parent.mkdir(parents=True, exist_ok=True)
    all_pred, all_true = [], []
    for d in days:
        pred, truth = predict_minutes(model, d, cfg, args.ob_test_split)
        all_pred.append(pred)
        all_true.append(truth)
    pred, truth = np.concatenate(all_pred), np.concatenate(all_true)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["timeslice_index", "true", "pred"])
        for i, (t, p) in enumerate(zip(truth.tolist(), pred.tolist())):
            w.writerow([i, t, p])
    cfg_path = args.out.with_name(args.out.stem + ".config.json")
    _write_json(cfg_path, _snapshot(args, features=cfg.to_dict()))
    _require([args.out, cfg_path])
    print(f"accuracy: {100 * accuracy(pred, truth):.2f}")


def _run_cv(args, days, meta, cfg, opts, out_dir: Path, extra=None):
    report = cross_validate(days, cfg, args.model, opts, meta.n_classes, args.mpca_aggregation,
                            args.ob_test_split, jobs=min(args.jobs, len(days)))
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = [out_dir / "report.json", out_dir / "confusion.csv", out_dir / "config.json"]
    write_report_json(paths[0], report)
    write_confusion_csv(paths[1], report.pooled_confusion, meta.activity_names)
    _write_json(paths[2], _snapshot(args, features=cfg.to_dict(), model_opts=opts.to_dict(),
                                    **(extra or {})))
    if args.svg:
        paths.append(out_dir / "confusion.svg")
        render_confusion_svg(report.pooled_confusion, meta.activity_names, paths[-1])
    _require(paths)
    return report


def cmd_cv(args):
    cfg = feature_config(args)
    opts = model_options(args)
    _check_jobs(args)
    days, meta = _load_days(args.dataset)
    report = _run_cv(args, days, meta, cfg, opts, args.out_dir)
    print(report.summary())


def cmd_reproduce(args):
    opts = model_options(args)
    _check_jobs(args)
    if (args.events is None) != (args.meta is None):
        raise UsageError("--events and --meta go together")
    features, acc_target, mpca_target = REPRODUCTION[args.house]
    cfg = FeatureConfig.from_dict(features)
    if args.events is None:
        ev_path, meta_path = synthetic.bundled_house_a_paths()
        source = "bundled synthetic house A"
    else:
        ev_path, meta_path = args.events, args.meta
        source = str(ev_path)
    events, meta = dataset.load_events(ev_path, meta_path=meta_path)
    start, end = dataset.events_range(events)
    start -= start % dataset.MINUTES_PER_DAY
    if end % dataset.MINUTES_PER_DAY:
        end += dataset.MINUTES_PER_DAY - end % dataset.MINUTES_PER_DAY
    days = dataset.split_days(dataset.rasterize(events, meta, start, end))
    report = _run_cv(args, days, meta, cfg, opts, args.out_dir,
                     {"house": args.house, "source": source})
    acc, mpca = 100 * report.accuracy_mean, 100 * report.mpca_mean
    result = {
        "house": args.house, "source": source, "features": cfg.to_dict(),
        "accuracy": acc, "mpca": mpca,
        "target_accuracy": acc_target, "target_mpca": mpca_target,
        "within_tolerance": bool(abs(acc - acc_target) <= ACC_TOL
                                 and abs(mpca - mpca_target) <= MPCA_TOL),
    }
    path = args.out_dir / "reproduction.json"
    _write_json(path, result)
    _require([path])
    print(report.summary())
    print(f"target:   {acc_target:.2f}  mpca: {mpca_target:.2f}  "
          f"within tolerance: {'yes' if result['within_tolerance'] else 'no'}")


COMMANDS = {"synth": cmd_synth, "rasterize": cmd_rasterize, "train": cmd_train,
            "predict": cmd_predict, "cv": cmd_cv, "reproduce": cmd_reproduce}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"harseq {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except FoldError as exc:
        print(f"harseq {args.command}: {exc}", file=sys.stderr)
        return 1
    except (DatasetError, EvaluationError, FeatureError, ValueError, OSError, RuntimeError) as exc:
        print(f"harseq {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
