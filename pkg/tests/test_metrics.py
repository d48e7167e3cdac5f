"""Tests for window scoring, AUC and aggregation."""

import math

import numpy as np
import pytest

from spoofguard.errors import DataValidationError
from spoofguard.metrics import (
    ConfusionCounts,
    MetricsSummary,
    aggregate,
    anomaly_scores,
    auc,
    class_confusion,
    evaluate,
    roc_points,
    score,
    summarize,
    trapezoid_auc,
    window_truth,
)
from spoofguard.models import AttackClass, Verdict
from tests.helpers import verdict

CLEAN = AttackClass.CLEAN
STOP = AttackClass.STOP
TBT = AttackClass.TURN_BY_TURN


def labels_with(spans: list[tuple[int, int, str]], n: int = 41) -> np.ndarray:
    labels = np.full(n, "clean", dtype="U16")
    for start, end, kind in spans:
        labels[start:end] = kind
    return labels


def summary(accuracy: float, auc_value: float = 1.0) -> MetricsSummary:
    return MetricsSummary(accuracy=accuracy, sensitivity=1.0, specificity=1.0, auc=auc_value)


class TestWindowTruth:
    """Test per-window ground truth."""

    def test_all_clean(self) -> None:
        assert window_truth(labels_with([])) == [CLEAN] * 4

    def test_turn_by_turn_edges_only(self) -> None:
        truth = window_truth(labels_with([(10, 31, "turn_by_turn")]))
        assert truth == [TBT, None, None, TBT]

    def test_short_turn_by_turn(self) -> None:
        truth = window_truth(labels_with([(15, 25, "turn_by_turn")]))
        assert truth == [CLEAN, TBT, TBT, CLEAN]

    def test_sample_classes_follow_own_samples(self) -> None:
        truth = window_truth(labels_with([(12, 14, "stop"), (29, 30, "overshoot")]))
        assert truth == [CLEAN, STOP, AttackClass.OVERSHOOT, CLEAN]

    def test_closing_fix_alone_does_not_mark_sample_classes(self) -> None:
        truth = window_truth(labels_with([(10, 20, "small_biased")]))
        assert truth == [CLEAN, AttackClass.SMALL_BIASED, CLEAN, CLEAN]

    def test_precedence(self) -> None:
        truth = window_truth(labels_with([(10, 15, "small_biased"), (15, 20, "stop")]))
        assert truth[1] is STOP


class TestScore:
    """Test confusion counts."""

    TRUTH = [CLEAN, STOP, TBT, CLEAN, None]
    VERDICTS = [verdict(0), verdict(1, True), verdict(2, True), verdict(3, True), verdict(4, True)]

    def test_all_attacks_positive(self) -> None:
        assert score(self.VERDICTS, self.TRUTH) == ConfusionCounts(tp=2, fp=1, tn=1, fn=0)

    def test_positive_class_filter(self) -> None:
        assert score(self.VERDICTS, self.TRUTH, positive=STOP) == ConfusionCounts(tp=1, fp=1, tn=1, fn=0)
        assert score(self.VERDICTS, self.TRUTH, positive=TBT) == ConfusionCounts(tp=1, fp=1, tn=1, fn=0)

    def test_missed_attack(self) -> None:
        assert score([verdict(0), verdict(1)], [STOP, CLEAN]) == ConfusionCounts(tp=0, fp=0, tn=1, fn=1)

    def test_length_mismatch(self) -> None:
        with pytest.raises(DataValidationError):
            score(self.VERDICTS, self.TRUTH[:3])

    def test_nothing_scored(self) -> None:
        assert score([verdict(0)], [None]) == ConfusionCounts()

    def test_rates(self) -> None:
        c = ConfusionCounts(tp=8, fp=1, tn=9, fn=2)
        assert c.total == 20
        assert c.accuracy == pytest.approx(0.85)
        assert c.sensitivity == pytest.approx(0.8)
        assert c.specificity == pytest.approx(0.9)
        assert c + c == ConfusionCounts(16, 2, 18, 4)
        assert math.isnan(ConfusionCounts(tn=3).sensitivity)


class TestAuc:
    """Test rank AUC and the ROC curve."""

    def test_perfect(self) -> None:
        assert auc([0.1, 0.2, 0.9, 0.8], [0, 0, 1, 1]) == 1.0

    def test_reversed(self) -> None:
        assert auc([0.9, 0.8, 0.1, 0.2], [0, 0, 1, 1]) == 0.0

    def test_ties_count_half(self) -> None:
        assert auc([0.5, 0.5, 0.5, 0.5], [0, 1, 0, 1]) == 0.5
        assert auc([0.1, 0.5, 0.5, 0.9], [0, 0, 1, 1]) == pytest.approx(0.875)

    def test_matches_trapezoid_area(self) -> None:
        rng = np.random.default_rng(0)
        labels = rng.integers(0, 2, 300)
        scores = rng.normal(size=300) + labels
        assert auc(scores, labels) == pytest.approx(trapezoid_auc(scores, labels), rel=1e-12)

    def test_single_class(self) -> None:
        with pytest.raises(DataValidationError, match="both"):
            auc([0.1, 0.2], [1, 1])

    def test_shape_mismatch(self) -> None:
        with pytest.raises(DataValidationError):
            auc([0.1, 0.2, 0.3], [0, 1])

    def test_roc_points_span_the_unit_square(self) -> None:
        fpr, tpr, thresholds = roc_points([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1])
        assert (fpr[0], tpr[0]) == (0.0, 0.0)
        assert (fpr[-1], tpr[-1]) == (1.0, 1.0)
        assert len(thresholds) == len(fpr)

    def test_anomaly_scores(self) -> None:
        scores = anomaly_scores([verdict(0, disp=0.1, epsilon=0.5), verdict(1, disp=0.3, epsilon=0.0)])
        assert scores[0] == pytest.approx(0.2)
        assert scores[1] == np.finfo(np.float64).max


class TestSummarize:
    """Test per-instance summaries."""

    def test_single_class_gives_nan_auc(self) -> None:
        s = summarize([verdict(0), verdict(1)], [CLEAN, CLEAN])
        assert s.accuracy == 1.0
        assert s.specificity == 1.0
        assert math.isnan(s.sensitivity)
        assert math.isnan(s.auc)

    def test_scores_drive_auc(self) -> None:
        verdicts = [verdict(0, disp=0.1), verdict(1, True, disp=5.0), verdict(2, disp=0.2), verdict(3, disp=0.05)]
        s = summarize(verdicts, [CLEAN, STOP, STOP, CLEAN], positive=STOP)
        assert s.counts == ConfusionCounts(tp=1, fp=0, tn=2, fn=1)
        assert s.sensitivity == 0.5
        assert s.auc == 1.0


class TestAggregate:
    """Test mean and sample standard deviation across instances."""

    def test_sample_standard_deviation(self) -> None:
        rows = aggregate([summary(0.9), summary(1.0), summary(0.8)])
        assert rows["accuracy"].mean == pytest.approx(0.9)
        assert rows["accuracy"].std == pytest.approx(0.1)
        assert rows["accuracy"].n == 3

    def test_nan_entries_ignored(self) -> None:
        rows = aggregate([summary(1.0, math.nan), summary(1.0, 0.5), summary(1.0, 0.7)])
        assert rows["auc"].n == 2
        assert rows["auc"].mean == pytest.approx(0.6)
        assert rows["auc"].std == pytest.approx(math.sqrt(0.02))

    def test_all_nan(self) -> None:
        rows = aggregate([summary(1.0, math.nan), summary(1.0, math.nan)])
        assert rows["auc"].n == 0
        assert math.isnan(rows["auc"].mean)

    def test_needs_two_instances(self) -> None:
        with pytest.raises(DataValidationError, match="at least 2"):
            aggregate([summary(1.0)])


def perfect_run(instance_id: str, kind: AttackClass) -> tuple[str, AttackClass, list[Verdict], list[AttackClass | None]]:
    truth: list[AttackClass | None] = [CLEAN, kind, kind, CLEAN]
    verdicts = [
        verdict(0, disp=0.1),
        verdict(1, True, disp=5.0, attack_class=kind),
        verdict(2, True, disp=4.0, attack_class=kind),
        verdict(3, disp=0.2),
    ]
    return instance_id, kind, verdicts, truth


class TestEvaluate:
    """Test campaign-level evaluation."""

    def test_perfect_detection(self) -> None:
        result = evaluate([perfect_run("stop-00-0", STOP), perfect_run("stop-00-1", STOP)])
        row = result.rows[STOP]
        for name in ("accuracy", "sensitivity", "specificity", "auc"):
            assert row[name].mean == 1.0
            assert row[name].std == 0.0
            assert row[name].n == 2
        assert STOP in result.roc
        assert result.class_counts[("stop", "stop")] == 4
        assert result.class_counts[("clean", "clean")] == 4

    def test_single_instance_kind_has_no_row(self) -> None:
        result = evaluate(
            [perfect_run("stop-00-0", STOP), perfect_run("stop-00-1", STOP), perfect_run("tbt-00-0", TBT)]
        )
        assert set(result.rows) == {STOP}
        assert [r.instance_id for r in result.instances] == ["stop-00-0", "stop-00-1", "tbt-00-0"]
        assert TBT in result.roc

    def test_class_confusion_skips_excluded_windows(self) -> None:
        counts = class_confusion([verdict(0), verdict(1, True)], [CLEAN, None])
        assert counts == {("clean", "clean"): 1}
