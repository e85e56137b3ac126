"""Metrics and the leave-one-day-out cross-validation driver."""
from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

from . import models
from .features import FeatureConfig, Granularity, Representation, expand_spans, featurize


class EvaluationError(ValueError):
    pass


class FoldError(RuntimeError):
    def __init__(self, fold, cause):
        super().__init__(f"fold {fold} failed: {cause}")
        self.fold = fold


def _pair(pred, truth):
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise EvaluationError(f"length mismatch: {pred.shape} vs {truth.shape}")
    if truth.size == 0:
        raise EvaluationError("empty input")
    return pred, truth


def accuracy(pred, truth) -> float:
    pred, truth = _pair(pred, truth)
    return float(np.mean(pred == truth))


def confusion_matrix(pred, truth, C: int) -> np.ndarray:
    """Counts with rows = truth, columns = prediction."""
    pred, truth = _pair(pred, truth)
    cm = np.zeros((C, C), dtype=np.int64)
    np.add.at(cm, (truth, pred), 1)
    return cm


def per_class_accuracy(confusion) -> dict[int, float]:
    confusion = np.asarray(confusion)
    rows = confusion.sum(axis=1)
    return {c: float(confusion[c, c] / rows[c]) for c in range(len(rows)) if rows[c] > 0}


def mean_per_class_accuracy(pred, truth, C: int) -> float:
    """Mean of per-class accuracies over classes present in ``truth``."""
    pcs = per_class_accuracy(confusion_matrix(pred, truth, C))
    return float(np.mean(list(pcs.values())))


@dataclass
class FoldReport:
    fold_index: int
    accuracy: float
    per_class_accuracy: dict
    confusion: np.ndarray
    n_timeslices: int
    diagnostics: dict = field(default_factory=dict)

    @property
    def mpca(self) -> float:
        return float(np.mean(list(self.per_class_accuracy.values())))

    @classmethod
    def from_predictions(cls, fold_index, pred, truth, C, diagnostics=None):
        cm = confusion_matrix(pred, truth, C)
        return cls(fold_index, float(np.trace(cm) / cm.sum()), per_class_accuracy(cm), cm,
                   int(cm.sum()), diagnostics or {})

    def to_dict(self):
        return {
            "fold_index": self.fold_index,
            "accuracy": self.accuracy,
            "mpca": self.mpca,
            "per_class_accuracy": {str(k): v for k, v in self.per_class_accuracy.items()},
            "confusion": self.confusion.tolist(),
            "n_timeslices": self.n_timeslices,
            "diagnostics": self.diagnostics,
        }


@dataclass
class CvReport:
    folds: list
    accuracy_mean: float
    accuracy_std: float
    mpca_mean: float
    mpca_std: float
    pooled_confusion: np.ndarray
    mpca_aggregation: str
    config: dict

    def to_dict(self):
        pooled_pc = per_class_accuracy(self.pooled_confusion)
        return {
            "config": self.config,
            "folds": [f.to_dict() for f in self.folds],
            "aggregates": {
                "accuracy_mean": self.accuracy_mean,
                "accuracy_std": self.accuracy_std,
                "mpca_mean": self.mpca_mean,
                "mpca_std": self.mpca_std,
                "mpca_aggregation": self.mpca_aggregation,
                "pooled_per_class_accuracy": {str(k): v for k, v in pooled_pc.items()},
            },
            "pooled_confusion": self.pooled_confusion.tolist(),
        }

    def summary(self) -> str:
        return (f"accuracy: {100 * self.accuracy_mean:.2f} ± {100 * self.accuracy_std:.2f}  "
                f"mpca: {100 * self.mpca_mean:.2f} ± {100 * self.mpca_std:.2f}")


def aggregate(folds, C, mpca_aggregation="fold", config=None) -> CvReport:
    if mpca_aggregation not in ("fold", "pooled"):
        raise EvaluationError(f"unknown mpca aggregation {mpca_aggregation!r}")
    accs = np.array([f.accuracy for f in folds])
    pooled = np.zeros((C, C), dtype=np.int64)
    for f in folds:
        pooled += f.confusion
    if mpca_aggregation == "fold":
        vals = np.array([f.mpca for f in folds])
    else:
        # pooled predictions: spread is taken across the pooled per-class values
        vals = np.array(list(per_class_accuracy(pooled).values()))
    return CvReport(list(folds), float(accs.mean()), float(accs.std()), float(vals.mean()),
                    float(vals.std()), pooled, mpca_aggregation, config or {})


# ---------------------------------------------------------------------------
# cross-validation

def predict_minutes(model, day, cfg: FeatureConfig, ob_test_split: str = "sensor"):
    """Decode one held-out day; returns ``(pred, truth)`` at ``cfg.eval_granularity``.

    For OB at minute granularity, segment predictions are expanded back over
    the minutes they cover and compared with the original per-minute labels.
    """
    split = ob_test_split == "label"
    fs = featurize(day, cfg, split_on_label=split)
    pred = np.asarray(model.predict(fs))
    if cfg.representation is Representation.OB and cfg.eval_granularity is Granularity.MINUTE:
        return expand_spans(fs.minute_spans, pred), day.y
    return pred, fs.labels


def _run_fold(args):
    i, days, cfg, kind, opts, C, ob_test_split = args
    train = [featurize(d, cfg, split_on_label=True) for j, d in enumerate(days) if j != i]
    try:
        model = models.fit(kind, train, C, opts)
        pred, truth = predict_minutes(model, days[i], cfg, ob_test_split)
    except Exception as exc:
        raise FoldError(i, exc) from exc
    return FoldReport.from_predictions(i, pred, truth, C, getattr(model, "diagnostics", {}))


def cross_validate(days, cfg: FeatureConfig, model_kind: str, model_opts=None, C: int | None = None,
                   mpca_aggregation: str = "fold", ob_test_split: str = "sensor",
                   jobs: int = 1) -> CvReport:
    """Leave-one-day-out: each day is decoded by a model fitted on all others.

    ``ob_test_split`` controls how held-out days are compacted under OB:
    ``"sensor"`` (default) splits on sensor changes only, so no label
    information reaches the test features; ``"label"`` also splits at label
    changes, like the training days.
    """
    days = list(days)
    if len(days) < 2:
        raise EvaluationError("need at least two days")
    if model_kind not in models.MODEL_KINDS:
        raise EvaluationError(f"unknown model kind {model_kind!r}")
    if ob_test_split not in ("sensor", "label"):
        raise EvaluationError(f"unknown ob_test_split {ob_test_split!r}")
    model_opts = model_opts or models.ModelOptions()
    if C is None:
        C = int(max(d.y.max() for d in days)) + 1
    tasks = [(i, days, cfg, model_kind, model_opts, C, ob_test_split) for i in range(len(days))]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            folds = list(pool.map(_run_fold, tasks))
    else:
        folds = [_run_fold(t) for t in tasks]
    config = {
        "features": cfg.to_dict(),
        "model": model_kind,
        "model_opts": model_opts.to_dict(),
        "n_classes": C,
        "n_days": len(days),
        "mpca_aggregation": mpca_aggregation,
        "ob_test_split": ob_test_split,
    }
    return aggregate(folds, C, mpca_aggregation, config)


# ---------------------------------------------------------------------------
# report artefacts

def write_report_json(path, report: CvReport) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=1, sort_keys=True)
        fh.write("\n")


def write_confusion_csv(path, confusion, names) -> None:
    confusion = np.asarray(confusion)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["truth\\pred", *names])
        for name, row in zip(names, confusion.tolist()):
            w.writerow([name, *row])


def render_confusion_svg(confusion, names, path=None, cell=44) -> str:
    """Heatmap with row-normalised shading and raw counts in every cell."""
    cm = np.asarray(confusion)
    C = cm.shape[0]
    if cm.ndim != 2 or cm.shape[1] != C:
        raise EvaluationError("confusion matrix must be square")
    if len(names) != C:
        raise EvaluationError(f"{len(names)} names for a {C}x{C} matrix")
    rows = cm.sum(axis=1, keepdims=True)
    share = np.divide(cm, rows, out=np.zeros(cm.shape, dtype=float), where=rows > 0)
    label_w = 8 * max(len(n) for n in names) + 16
    top = label_w
    width = label_w + C * cell + 10
    height = top + C * cell + 10
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
    ]
    for j, name in enumerate(names):
        x = label_w + j * cell + cell / 2
        out.append(f'<text x="{x:.1f}" y="{top - 6}" transform="rotate(-60 {x:.1f} {top - 6})">'
                   f'{escape(name)}</text>')
    for i, name in enumerate(names):
        y = top + i * cell
        out.append(f'<text x="{label_w - 6}" y="{y + cell / 2 + 4:.1f}" text-anchor="end">{escape(name)}</text>')
        for j in range(C):
            v = share[i, j]
            shade = int(round(255 * (1.0 - v)))
            fill = f"#{shade:02x}{shade:02x}ff"
            ink = "#ffffff" if v > 0.5 else "#000000"
            x = label_w + j * cell
            out.append(f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="{fill}" stroke="#cccccc"/>')
            out.append(f'<text x="{x + cell / 2:.1f}" y="{y + cell / 2 + 4:.1f}" text-anchor="middle" '
                       f'fill="{ink}">{int(cm[i, j])}</text>')
    out.append("</svg>")
    svg = "\n".join(out) + "\n"
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(svg)
    return svg
