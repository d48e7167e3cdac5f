"""Window-level scoring of verdicts against ground-truth labels."""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import rankdata
from sklearn.metrics import auc as sk_auc
from sklearn.metrics import confusion_matrix, roc_curve

from spoofguard.errors import DataValidationError
from spoofguard.ingest import window_count
from spoofguard.models import WINDOW_SIZE, AttackClass, Verdict

logger = logging.getLogger(__name__)

METRIC_NAMES = ("accuracy", "sensitivity", "specificity", "auc")

# Attack classes a window inherits from its own samples, in precedence order
_SAMPLE_CLASSES = (AttackClass.STOP, AttackClass.OVERSHOOT, AttackClass.SMALL_BIASED)


@dataclass(frozen=True)
class ConfusionCounts:
    """Window counts with attacked windows as the positive class."""

    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def accuracy(self) -> float:
        return _ratio(self.tp + self.tn, self.total)

    @property
    def sensitivity(self) -> float:
        return _ratio(self.tp, self.tp + self.fn)

    @property
    def specificity(self) -> float:
        return _ratio(self.tn, self.tn + self.fp)

    def __add__(self, other: ConfusionCounts) -> ConfusionCounts:
        return ConfusionCounts(
            self.tp + other.tp, self.fp + other.fp, self.tn + other.tn, self.fn + other.fn
        )


def _ratio(num: int, den: int) -> float:
    return num / den if den else math.nan


@dataclass(frozen=True)
class MetricsSummary:
    """Metrics of one attack instance; nan where a denominator is empty."""

    accuracy: float
    sensitivity: float
    specificity: float
    auc: float
    counts: ConfusionCounts = ConfusionCounts()

    def value(self, name: str) -> float:
        return float(getattr(self, name))


@dataclass(frozen=True)
class MetricStat:
    mean: float
    std: float
    n: int


def window_truth(labels: np.ndarray | Sequence[str]) -> list[AttackClass | None]:
    """
    Ground-truth class of every window of a labeled trajectory.

    Stop, overshoot and small biased windows take the class of their own
    samples. A turn-by-turn offset is constant, so only windows where it
    starts or ends are turn_by_turn: those whose eleven fixes (own ten
    plus the closing fix) are partly turn_by_turn. Windows entirely inside
    the offset are None and excluded from scoring.
    """
    labels = np.asarray(labels)
    truth: list[AttackClass | None] = []
    for k in range(window_count(len(labels))):
        start = k * WINDOW_SIZE
        own = labels[start : start + WINDOW_SIZE]
        fixes = labels[start : start + WINDOW_SIZE + 1]
        sample_class = next((c for c in _SAMPLE_CLASSES if np.any(own == c.value)), None)
        if sample_class is not None:
            truth.append(sample_class)
            continue
        in_offset = fixes == AttackClass.TURN_BY_TURN.value
        if np.all(in_offset):
            truth.append(None)
        elif np.any(in_offset):
            truth.append(AttackClass.TURN_BY_TURN)
        else:
            truth.append(AttackClass.CLEAN)
    return truth


def _scored(
    verdicts: Sequence[Verdict],
    truth: Sequence[AttackClass | None],
    positive: AttackClass | None,
) -> tuple[list[Verdict], np.ndarray]:
    if len(verdicts) != len(truth):
        raise DataValidationError(f"{len(verdicts)} verdicts but {len(truth)} labeled windows")
    kept: list[Verdict] = []
    y: list[int] = []
    for v, t in zip(verdicts, truth):
        if t is None:
            continue
        if positive is not None and t not in (positive, AttackClass.CLEAN):
            continue
        kept.append(v)
        y.append(int(t is not AttackClass.CLEAN))
    return kept, np.array(y, dtype=np.int64)


def score(
    verdicts: Sequence[Verdict],
    truth: Sequence[AttackClass | None],
    positive: AttackClass | None = None,
) -> ConfusionCounts:
    """
    Confusion counts of flagged vs attacked windows.

    With positive set, windows of other attack classes are left out.

    Raises:
        DataValidationError: If verdicts and truth differ in length.
    """
    kept, y_true = _scored(verdicts, truth, positive)
    if not kept:
        return ConfusionCounts()
    y_pred = np.array([int(v.flagged) for v in kept], dtype=np.int64)
    tn, fp, fn, tp = confusion_matrix(y_true, y_pred, labels=[0, 1]).ravel()
    return ConfusionCounts(tp=int(tp), fp=int(fp), tn=int(tn), fn=int(fn))


def anomaly_scores(verdicts: Sequence[Verdict]) -> np.ndarray:
    """disp_error / epsilon per window; an epsilon of zero maps to the largest float."""
    scores = np.array([v.score for v in verdicts], dtype=np.float64)
    return np.nan_to_num(scores, nan=0.0, posinf=np.finfo(np.float64).max)


def _check_binary(scores: np.ndarray, labels: np.ndarray) -> None:
    if scores.shape != labels.shape:
        raise DataValidationError(f"{scores.size} scores but {labels.size} labels")
    positives = int(np.sum(labels))
    if positives == 0 or positives == labels.size:
        raise DataValidationError("AUC needs both attacked and clean windows")


def auc(scores: Sequence[float] | np.ndarray, labels: Sequence[int] | np.ndarray) -> float:
    """
    Probability that a random attacked window outscores a random clean one.

    Computed from average ranks, so ties count one half.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels).astype(bool)
    _check_binary(s, y)
    ranks = rankdata(s)
    n_pos = int(np.sum(y))
    n_neg = y.size - n_pos
    return float((np.sum(ranks[y]) - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def roc_points(
    scores: Sequence[float] | np.ndarray, labels: Sequence[int] | np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(fpr, tpr, thresholds) at every distinct score."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels).astype(np.int64)
    _check_binary(s, y.astype(bool))
    fpr, tpr, thresholds = roc_curve(y, s, drop_intermediate=False)
    return fpr, tpr, thresholds


def trapezoid_auc(scores: Sequence[float] | np.ndarray, labels: Sequence[int] | np.ndarray) -> float:
    """Area under the ROC curve by trapezoidal integration."""
    fpr, tpr, _ = roc_points(scores, labels)
    return float(sk_auc(fpr, tpr))


def summarize(
    verdicts: Sequence[Verdict],
    truth: Sequence[AttackClass | None],
    positive: AttackClass | None = None,
) -> MetricsSummary:
    """Counts plus AUC of one instance; AUC is nan when only one class is present."""
    counts = score(verdicts, truth, positive)
    kept, y = _scored(verdicts, truth, positive)
    try:
        area = auc(anomaly_scores(kept), y)
    except DataValidationError:
        area = math.nan
    return MetricsSummary(
        accuracy=counts.accuracy,
        sensitivity=counts.sensitivity,
        specificity=counts.specificity,
        auc=area,
        counts=counts,
    )


def aggregate(per_instance: Sequence[MetricsSummary]) -> dict[str, MetricStat]:
    """
    Mean and sample standard deviation (divisor n - 1) of each metric.

    nan entries are ignored per metric.

    Raises:
        DataValidationError: With fewer than two instances.
    """
    if len(per_instance) < 2:
        raise DataValidationError(f"aggregation needs at least 2 instances, got {len(per_instance)}")
    result: dict[str, MetricStat] = {}
    for name in METRIC_NAMES:
        values = np.array([m.value(name) for m in per_instance])
        finite = values[np.isfinite(values)]
        if finite.size == 0:
            result[name] = MetricStat(math.nan, math.nan, 0)
            continue
        std = float(np.std(finite, ddof=1)) if finite.size > 1 else math.nan
        result[name] = MetricStat(float(np.mean(finite)), std, int(finite.size))
    return result


def class_confusion(
    verdicts: Sequence[Verdict], truth: Sequence[AttackClass | None]
) -> Counter[tuple[str, str]]:
    """Counts of (true class, predicted class) over scored windows."""
    if len(verdicts) != len(truth):
        raise DataValidationError(f"{len(verdicts)} verdicts but {len(truth)} labeled windows")
    return Counter((t.value, v.attack_class.value) for v, t in zip(verdicts, truth) if t is not None)


@dataclass(frozen=True)
class InstanceResult:
    instance_id: str
    kind: AttackClass
    summary: MetricsSummary


@dataclass
class Evaluation:
    """Per-instance metrics, per-kind aggregates and pooled ROC data."""

    instances: list[InstanceResult]
    rows: dict[AttackClass, dict[str, MetricStat]]
    roc: dict[AttackClass, tuple[np.ndarray, np.ndarray, np.ndarray]]
    class_counts: Counter[tuple[str, str]]


def evaluate(
    runs: Sequence[tuple[str, AttackClass, Sequence[Verdict], Sequence[AttackClass | None]]],
) -> Evaluation:
    """
    Score attack instances and aggregate them per kind.

    Each run is (instance id, attack kind, verdicts, window truth). Kinds
    with fewer than two instances get no aggregate row.
    """
    instances: list[InstanceResult] = []
    class_counts: Counter[tuple[str, str]] = Counter()
    pooled: dict[AttackClass, tuple[list[np.ndarray], list[np.ndarray]]] = {}

    for instance_id, kind, verdicts, truth in runs:
        summary = summarize(verdicts, truth, positive=kind)
        instances.append(InstanceResult(instance_id, kind, summary))
        class_counts.update(class_confusion(verdicts, truth))
        kept, y = _scored(verdicts, truth, kind)
        scores, labels = pooled.setdefault(kind, ([], []))
        scores.append(anomaly_scores(kept))
        labels.append(y)

    rows: dict[AttackClass, dict[str, MetricStat]] = {}
    roc: dict[AttackClass, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
    for kind in AttackClass.attacks():
        summaries = [r.summary for r in instances if r.kind is kind]
        if len(summaries) >= 2:
            rows[kind] = aggregate(summaries)
        elif summaries:
            logger.warning("Only one %s instance; no aggregate row", kind.value)
        if kind in pooled:
            s = np.concatenate(pooled[kind][0])
            y = np.concatenate(pooled[kind][1])
            if 0 < int(np.sum(y)) < y.size:
                roc[kind] = roc_points(s, y)
    return Evaluation(instances=instances, rows=rows, roc=roc, class_counts=class_counts)
