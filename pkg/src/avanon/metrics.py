"""Verification evaluation: precision-recall, ROC, and AUC.

Curves are computed from labelled scores with one point per distinct
threshold, predictions positive at score >= threshold. The ROC curve
keeps its raw true/false-positive counts so the area can be computed in
exact rational arithmetic; the trapezoidal AUC then equals the pairwise
concordance statistic (ties credited 0.5) not just approximately but as
the identical rational number, which the test oracle exploits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence


@dataclass(frozen=True)
class LabeledScore:
    """One evaluation unit (track or detection): its score and truth label."""

    unit_id: str
    score: float
    label: bool  # True = positive (belongs to the query identity)

    def __post_init__(self):
        if not math.isfinite(self.score):
            raise ValueError(f"score must be finite, got {self.score}")

    def to_dict(self) -> dict:
        return {
            "id": self.unit_id,
            "score": self.score,
            "label": "positive" if self.label else "negative",
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "LabeledScore":
        label = raw["label"]
        if label not in ("positive", "negative"):
            raise ValueError(f"label must be 'positive' or 'negative', got {label!r}")
        return cls(unit_id=str(raw["id"]), score=float(raw["score"]),
                   label=label == "positive")


@dataclass(frozen=True)
class RocCurve:
    """ROC points plus the integer counts they were computed from."""

    points: tuple[tuple[float, float, float], ...]  # (threshold, fpr, tpr)
    tp_counts: tuple[int, ...]
    fp_counts: tuple[int, ...]
    positives: int
    negatives: int


def _cumulative_counts(items: Sequence[LabeledScore]):
    """Distinct thresholds descending with cumulative TP/FP at each."""
    pos_at: dict[float, int] = {}
    neg_at: dict[float, int] = {}
    for it in items:
        if it.label:
            pos_at[it.score] = pos_at.get(it.score, 0) + 1
        else:
            neg_at[it.score] = neg_at.get(it.score, 0) + 1
    thresholds = sorted(set(pos_at) | set(neg_at), reverse=True)
    tp = fp = 0
    out = []
    for t in thresholds:
        tp += pos_at.get(t, 0)
        fp += neg_at.get(t, 0)
        out.append((t, tp, fp))
    return out


def pr_curve(items: Sequence[LabeledScore]) -> list[tuple[float, float, float]]:
    """(threshold, precision, recall) per distinct threshold, descending."""
    positives = sum(1 for it in items if it.label)
    if positives == 0:
        raise ValueError("precision-recall needs at least one positive item")
    curve = []
    for t, tp, fp in _cumulative_counts(items):
        curve.append((t, tp / (tp + fp), tp / positives))
    return curve


def roc_curve(items: Sequence[LabeledScore]) -> RocCurve:
    """ROC from (0,0) at an unreachable threshold down to (1,1)."""
    positives = sum(1 for it in items if it.label)
    negatives = len(items) - positives
    if positives == 0 or negatives == 0:
        raise ValueError("ROC needs at least one positive and one negative item")
    points = [(math.inf, 0.0, 0.0)]
    tps = [0]
    fps = [0]
    for t, tp, fp in _cumulative_counts(items):
        points.append((t, fp / negatives, tp / positives))
        tps.append(tp)
        fps.append(fp)
    return RocCurve(points=tuple(points), tp_counts=tuple(tps),
                    fp_counts=tuple(fps), positives=positives, negatives=negatives)


def auc(curve: RocCurve) -> float:
    """Trapezoidal area under the ROC, computed exactly then rounded once.

    area = sum over steps of (fp_i - fp_{i-1}) * (tp_i + tp_{i-1}) / (2*P*N),
    kept as a single rational so the float result is correctly rounded and
    matches the Wilcoxon pairwise statistic bit for bit.
    """
    num = 0
    for i in range(1, len(curve.fp_counts)):
        dfp = curve.fp_counts[i] - curve.fp_counts[i - 1]
        num += dfp * (curve.tp_counts[i] + curve.tp_counts[i - 1])
    return float(Fraction(num, 2 * curve.positives * curve.negatives))


def auc_scores(items: Sequence[LabeledScore]) -> float:
    return auc(roc_curve(items))


def confusion_at(items: Sequence[LabeledScore], threshold: float
                 ) -> tuple[int, int, int, int]:
    """(tp, fp, fn, tn) with predictions positive at score >= threshold."""
    tp = fp = fn = tn = 0
    for it in items:
        predicted = it.score >= threshold
        if it.label:
            tp += predicted
            fn += not predicted
        else:
            fp += predicted
            tn += not predicted
    return tp, fp, fn, tn


def precision_recall_at(items: Sequence[LabeledScore], threshold: float
                        ) -> tuple[float, float]:
    """Operating-point precision/recall for the live threshold preview."""
    tp, fp, fn, _ = confusion_at(items, threshold)
    precision = tp / (tp + fp) if tp + fp else 1.0
    recall = tp / (tp + fn) if tp + fn else 1.0
    return precision, recall


def polyline_svg(points: Sequence[tuple[float, float]], title: str,
                 x_label: str, y_label: str, size: int = 400) -> str:
    """Minimal standalone vector plot of one curve over the unit square."""
    pad = 50
    span = size - 2 * pad

    def sx(x: float) -> float:
        return pad + x * span

    def sy(y: float) -> float:
        return size - pad - y * span

    path = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in points)
    ticks = []
    for v in (0.0, 0.25, 0.5, 0.75, 1.0):
        ticks.append(
            f'<text x="{sx(v):.0f}" y="{size - pad + 18}" font-size="11" '
            f'text-anchor="middle">{v:g}</text>'
        )
        ticks.append(
            f'<text x="{pad - 8}" y="{sy(v) + 4:.0f}" font-size="11" '
            f'text-anchor="end">{v:g}</text>'
        )
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">'
        f'<rect width="{size}" height="{size}" fill="white"/>'
        f'<text x="{size / 2:.0f}" y="24" text-anchor="middle" font-size="14">{title}</text>'
        f'<rect x="{pad}" y="{pad}" width="{span}" height="{span}" fill="none" '
        f'stroke="#888"/>'
        + "".join(ticks)
        + f'<text x="{size / 2:.0f}" y="{size - 12}" text-anchor="middle" '
        f'font-size="12">{x_label}</text>'
        f'<text x="14" y="{size / 2:.0f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 14 {size / 2:.0f})">{y_label}</text>'
        f'<polyline points="{path}" fill="none" stroke="#1f6feb" stroke-width="1.5"/>'
        "</svg>"
    )
