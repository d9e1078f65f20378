"""Confusion-matrix metrics and one-vs-rest ROC curves.

Per-class precision, recall and F1 come straight from the confusion
matrix marginals; zero denominators produce NaN ("undefined") rather
than raising or silently reporting 0. ROC curves sweep the observed
score values only (plus a +inf sentinel), group tied scores into single
points, and integrate by the trapezoid rule, which makes the AUC equal
to the Mann-Whitney pairwise statistic with ties counted one half.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "ConfusionMatrix",
    "ClassReport",
    "RocCurve",
    "MacroReport",
    "confusion",
    "f1_score",
    "precision_recall_f1",
    "roc_auc",
    "macro_report",
    "report_csv",
    "roc_csv",
    "roc_svg",
]


@dataclass(frozen=True)
class ConfusionMatrix:
    """K x K counts, rows = true class, columns = predicted class."""

    k: int
    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class ClassReport:
    """Per-class one-vs-rest metrics; NaN marks an undefined value."""

    support: np.ndarray
    recall: np.ndarray
    precision: np.ndarray
    f1: np.ndarray


@dataclass(frozen=True)
class RocCurve:
    """Ordered ROC points from (0,0) to (1,1) and their trapezoidal area."""

    fpr: np.ndarray
    tpr: np.ndarray
    auc: float

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))


@dataclass(frozen=True)
class MacroReport:
    """Unweighted means over classes with defined values."""

    precision: float
    recall: float
    f1: float
    aucs: list[float]
    excluded: dict[str, int]  # metric -> number of undefined classes


def confusion(preds, labels, k: int) -> ConfusionMatrix:
    """Count (true, predicted) pairs into a K x K matrix."""
    preds = np.asarray(preds, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if preds.shape != labels.shape or preds.ndim != 1:
        raise ValueError(
            f"preds and labels must be equal-length vectors, got {preds.shape} vs {labels.shape}"
        )
    if preds.size:
        if preds.min() < 0 or preds.max() >= k:
            raise ValueError(f"prediction index out of range [0, {k})")
        if labels.min() < 0 or labels.max() >= k:
            raise ValueError(f"label index out of range [0, {k})")
    counts = np.zeros((k, k), dtype=np.int64)
    np.add.at(counts, (labels, preds), 1)
    return ConfusionMatrix(k=k, counts=counts)


def f1_score(precision: float, recall: float) -> float:
    """Harmonic mean of precision and recall; NaN when undefined."""
    if math.isnan(precision) or math.isnan(recall):
        return math.nan
    if precision + recall == 0:
        return math.nan
    return 2.0 * precision * recall / (precision + recall)


def precision_recall_f1(cm: ConfusionMatrix) -> ClassReport:
    """Per-class metrics from the matrix marginals.

    For class c: TP = counts[c][c], FP = column sum - TP, FN = row sum - TP;
    precision = TP/(TP+FP), recall = TP/(TP+FN), f1 = 2PR/(P+R). A zero
    denominator yields NaN for that entry.
    """
    counts = cm.counts
    tp = np.diag(counts).astype(np.float64)
    row = counts.sum(axis=1).astype(np.float64)  # actual positives per class
    col = counts.sum(axis=0).astype(np.float64)  # predicted positives per class
    with np.errstate(divide="ignore", invalid="ignore"):
        recall = np.where(row > 0, tp / row, np.nan)
        precision = np.where(col > 0, tp / col, np.nan)
    f1 = np.array(
        [f1_score(p, r) for p, r in zip(precision.tolist(), recall.tolist())]
    )
    return ClassReport(
        support=counts.sum(axis=1), recall=recall, precision=precision, f1=f1
    )


def roc_auc(scores, labels) -> RocCurve:
    """One-vs-rest ROC curve and AUC for binary labels.

    Thresholds sweep the distinct observed scores in descending order
    (prediction positive when score >= threshold), preceded by a +inf
    sentinel anchoring (0,0); tied scores collapse into one curve point.
    """
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel().astype(np.int64)
    if scores.shape != labels.shape:
        raise ValueError(
            f"scores and labels must align, got {scores.shape} vs {labels.shape}"
        )
    if np.any((labels != 0) & (labels != 1)):
        raise ValueError("labels must be binary 0/1")
    n_pos = int(labels.sum())
    n_neg = int(labels.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC undefined: need at least one positive and one negative")

    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_labels = labels[order]
    cum_tp = np.cumsum(sorted_labels)
    cum_fp = np.cumsum(1 - sorted_labels)
    # Last index of each tied group = one curve point per distinct score.
    last_of_group = np.nonzero(np.diff(sorted_scores, append=-np.inf) != 0)[0]
    tpr = np.concatenate([[0.0], cum_tp[last_of_group] / n_pos])
    fpr = np.concatenate([[0.0], cum_fp[last_of_group] / n_neg])
    auc = float(np.trapezoid(tpr, fpr))
    return RocCurve(fpr=fpr, tpr=tpr, auc=auc)


def macro_report(report: ClassReport, curves: list[RocCurve | None]) -> MacroReport:
    """Average the per-class metrics, skipping (and counting) undefined ones."""

    def mean_defined(values: np.ndarray) -> tuple[float, int]:
        mask = ~np.isnan(values)
        if not mask.any():
            return math.nan, int(values.size)
        return float(values[mask].mean()), int((~mask).sum())

    precision, ex_p = mean_defined(report.precision)
    recall, ex_r = mean_defined(report.recall)
    f1, ex_f = mean_defined(report.f1)
    aucs = [c.auc if c is not None else math.nan for c in curves]
    return MacroReport(
        precision=precision,
        recall=recall,
        f1=f1,
        aucs=aucs,
        excluded={"precision": ex_p, "recall": ex_r, "f1": ex_f,
                  "auc": sum(1 for c in curves if c is None)},
    )


def _fmt(value: float) -> str:
    return "" if math.isnan(value) else f"{value:.6f}"


def report_csv(
    class_names: list[str],
    report: ClassReport,
    curves: list[RocCurve | None],
    path: Path | str | None = None,
) -> str:
    """Render (and optionally write) the per-class metric table.

    Columns: ``class,support,recall,precision,f1,auc``; undefined values
    are left empty.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["class", "support", "recall", "precision", "f1", "auc"])
    for i, name in enumerate(class_names):
        auc = curves[i].auc if curves[i] is not None else math.nan
        writer.writerow(
            [
                name,
                int(report.support[i]),
                _fmt(report.recall[i]),
                _fmt(report.precision[i]),
                _fmt(report.f1[i]),
                _fmt(auc),
            ]
        )
    text = buf.getvalue()
    if path is not None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)
    return text


def roc_csv(curve: RocCurve, class_name: str, path: Path | str | None = None) -> str:
    """Render (and optionally write) one curve as ``class,fpr,tpr`` rows."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["class", "fpr", "tpr"])
    for f, t in zip(curve.fpr, curve.tpr):
        writer.writerow([class_name, repr(float(f)), repr(float(t))])
    text = buf.getvalue()
    if path is not None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)
    return text


def roc_svg(curve: RocCurve, class_name: str, path: Path | str | None = None) -> str:
    """Self-contained SVG line plot of one ROC curve (no external assets)."""
    width, height = 440, 360
    left, right, top, bottom = 64, 16, 34, 48
    plot_w = width - left - right
    plot_h = height - top - bottom

    def px(f: float) -> float:
        return left + f * plot_w

    def py(t: float) -> float:
        return top + (1.0 - t) * plot_h

    pts = " ".join(f"{px(f):.2f},{py(t):.2f}" for f, t in zip(curve.fpr, curve.tpr))
    ticks = [0.0, 0.25, 0.5, 0.75, 1.0]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.0f}" y="20" text-anchor="middle" font-family="sans-serif" '
        f'font-size="14">ROC: {class_name} (AUC = {curve.auc:.4f})</text>',
        f'<rect x="{left}" y="{top}" width="{plot_w}" height="{plot_h}" '
        f'fill="none" stroke="black"/>',
        f'<line x1="{px(0):.2f}" y1="{py(0):.2f}" x2="{px(1):.2f}" y2="{py(1):.2f}" '
        f'stroke="gray" stroke-dasharray="4 3"/>',
    ]
    for t in ticks:
        parts.append(
            f'<line x1="{px(t):.2f}" y1="{top + plot_h}" x2="{px(t):.2f}" '
            f'y2="{top + plot_h + 4}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{px(t):.2f}" y="{top + plot_h + 18}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{t:g}</text>'
        )
        parts.append(
            f'<line x1="{left - 4}" y1="{py(t):.2f}" x2="{left}" y2="{py(t):.2f}" '
            f'stroke="black"/>'
        )
        parts.append(
            f'<text x="{left - 8}" y="{py(t) + 4:.2f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{t:g}</text>'
        )
    parts.append(
        f'<text x="{left + plot_w / 2:.0f}" y="{height - 10}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">False positive rate</text>'
    )
    parts.append(
        f'<text x="16" y="{top + plot_h / 2:.0f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 16 {top + plot_h / 2:.0f})">True positive rate</text>'
    )
    parts.append(f'<polyline points="{pts}" fill="none" stroke="#1f6fb2" stroke-width="1.5"/>')
    parts.append("</svg>")
    text = "\n".join(parts) + "\n"
    if path is not None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)
    return text
