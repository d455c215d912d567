"""Per-fold classification metrics and fold-aggregated confusion matrices.

Zero-denominator precision/recall/F1 are defined as 0 so degenerate folds
stay well-defined. Macro (unweighted) averaging is the headline; weighted
averaging is available behind a flag. Fold summaries use the sample
(n - 1) standard deviation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatch, UnknownLabel, WrongFoldCount
from .manifest import CLASS_LABELS

N_CLASSES = len(CLASS_LABELS)


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray  # (6, 6) int64; rows = true label, columns = predicted

    def __post_init__(self):
        c = np.asarray(self.counts)
        if c.shape != (N_CLASSES, N_CLASSES) or not np.issubdtype(c.dtype, np.integer):
            raise ValueError("counts must be a 6x6 integer matrix")
        if (c < 0).any():
            raise ValueError("counts must be non-negative")
        object.__setattr__(self, "counts", c.astype(np.int64))

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def normalized(self) -> np.ndarray:
        """Row-normalized proportions; all-zero rows stay all-zero."""
        sums = self.counts.sum(axis=1, keepdims=True)
        safe = np.where(sums == 0, 1, sums)
        out = self.counts.astype(np.float64) / safe
        return np.where(sums == 0, 0.0, out)


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    precision: tuple[float, ...]
    recall: tuple[float, ...]
    f1: tuple[float, ...]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float


@dataclass(frozen=True)
class FoldSummary:
    reports: tuple[MetricsReport, ...]
    mean: dict[str, float]
    std: dict[str, float]


def confusion(preds: list[str], truth: list[str]) -> ConfusionMatrix:
    if len(preds) != len(truth):
        raise LengthMismatch(f"{len(preds)} predictions vs {len(truth)} truths")
    if not preds:
        raise LengthMismatch("need at least one sample")
    index = {label: i for i, label in enumerate(CLASS_LABELS)}
    counts = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    for p, t in zip(preds, truth):
        if p not in index or t not in index:
            raise UnknownLabel(f"unknown label in pair ({t!r}, {p!r})")
        counts[index[t], index[p]] += 1
    return ConfusionMatrix(counts)


def aggregate_and_normalize(cms: list[ConfusionMatrix]) -> tuple[ConfusionMatrix, np.ndarray]:
    """Element-wise sum of fold matrices and the row-normalized result."""
    total = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    for cm in cms:
        total += cm.counts
    summed = ConfusionMatrix(total)
    return summed, summed.normalized()


def _safe_div(num: float, den: float) -> float:
    return num / den if den else 0.0


def metrics(cm: ConfusionMatrix) -> MetricsReport:
    counts = cm.counts.astype(np.float64)
    tp = np.diag(counts)
    col = counts.sum(axis=0)
    row = counts.sum(axis=1)
    precision = tuple(_safe_div(tp[i], col[i]) for i in range(N_CLASSES))
    recall = tuple(_safe_div(tp[i], row[i]) for i in range(N_CLASSES))
    f1 = tuple(
        _safe_div(2.0 * precision[i] * recall[i], precision[i] + recall[i])
        for i in range(N_CLASSES)
    )
    total = counts.sum()
    weights = [_safe_div(row[i], total) for i in range(N_CLASSES)]
    return MetricsReport(
        accuracy=_safe_div(tp.sum(), total),
        precision=precision,
        recall=recall,
        f1=f1,
        macro_precision=sum(precision) / N_CLASSES,
        macro_recall=sum(recall) / N_CLASSES,
        macro_f1=sum(f1) / N_CLASSES,
        weighted_precision=sum(w * p for w, p in zip(weights, precision)),
        weighted_recall=sum(w * r for w, r in zip(weights, recall)),
        weighted_f1=sum(w * f for w, f in zip(weights, f1)),
    )


_SUMMARY_METRICS = ("accuracy", "macro_precision", "macro_recall", "macro_f1")


def summarize_folds(reports: list[MetricsReport]) -> FoldSummary:
    if len(reports) != 5:
        raise WrongFoldCount(f"expected 5 fold reports, got {len(reports)}")
    mean = {}
    std = {}
    for name in _SUMMARY_METRICS:
        values = [getattr(r, name) for r in reports]
        m = sum(values) / len(values)
        mean[name] = m
        std[name] = math.sqrt(sum((v - m) ** 2 for v in values) / (len(values) - 1))
    return FoldSummary(reports=tuple(reports), mean=mean, std=std)


def report_json(name: str, report: MetricsReport, cm: ConfusionMatrix) -> str:
    payload = {
        "network": name,
        "accuracy": report.accuracy,
        "per_class": {
            label: {
                "precision": report.precision[i],
                "recall": report.recall[i],
                "f1": report.f1[i],
            }
            for i, label in enumerate(CLASS_LABELS)
        },
        "macro": {
            "precision": report.macro_precision,
            "recall": report.macro_recall,
            "f1": report.macro_f1,
        },
        "weighted": {
            "precision": report.weighted_precision,
            "recall": report.weighted_recall,
            "f1": report.weighted_f1,
        },
        "confusion": cm.counts.tolist(),
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def report_table(name: str, report: MetricsReport, weighted: bool = False) -> str:
    """One-row comparison table: Network | Accuracy (%) | Precision | Recall | F1 score."""
    if weighted:
        p, r, f = report.weighted_precision, report.weighted_recall, report.weighted_f1
    else:
        p, r, f = report.macro_precision, report.macro_recall, report.macro_f1
    header = f"{'Network':<16} {'Accuracy (%)':>12} {'Precision':>10} {'Recall':>8} {'F1 score':>9}"
    line = f"{name:<16} {report.accuracy * 100:>12.2f} {p:>10.2f} {r:>8.2f} {f:>9.2f}"
    return header + "\n" + line + "\n"


def confusion_png(normalized: np.ndarray, cell: int = 32) -> bytes:
    """Render a normalized confusion matrix as a grayscale heat grid PNG."""
    from .imaging import Raster, encode_png, quantize_u8

    grid = np.kron(normalized, np.ones((cell, cell)))
    gray = quantize_u8(grid * 255.0)
    return encode_png(Raster(np.stack([gray, gray, gray], axis=-1)))
