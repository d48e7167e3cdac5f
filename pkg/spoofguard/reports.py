"""Text renderers for every file spoofguard writes."""

from __future__ import annotations

import csv
import io
import json
import math
from collections import Counter
from typing import Any, Sequence

from spoofguard.errors import DataValidationError
from spoofguard.metrics import METRIC_NAMES, Evaluation, MetricStat
from spoofguard.models import AnomalySource, AttackClass, StaticThresholds, Verdict
from spoofguard.predictor import LossHistory

VERDICT_COLUMNS = ("window_index", "anomaly_source", "attack_class", "disp_error_m", "speed_error_mps", "epsilon_m")

_KIND_TITLES = {
    AttackClass.TURN_BY_TURN: "Turn-by-turn",
    AttackClass.STOP: "Stop",
    AttackClass.OVERSHOOT: "Overshoot",
    AttackClass.SMALL_BIASED: "Multiple small biased",
}


def _finite(value: float) -> float | None:
    """JSON has no nan/inf."""
    return value if math.isfinite(value) else None


def _csv(rows: Sequence[Sequence[Any]], header: Sequence[str]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def _dumps(data: Any) -> str:
    return json.dumps(data, indent=2, sort_keys=False) + "\n"


def render_verdicts_csv(verdicts: Sequence[Verdict]) -> str:
    return _csv(
        [
            (
                v.window_index,
                v.anomaly_source.value,
                v.attack_class.value,
                repr(v.disp_error),
                repr(v.speed_error),
                repr(v.epsilon_used),
            )
            for v in verdicts
        ],
        VERDICT_COLUMNS,
    )


def parse_verdicts_csv(text: str, name: str = "<verdicts>") -> list[Verdict]:
    """Read verdicts written by render_verdicts_csv."""
    reader = csv.DictReader(io.StringIO(text))
    missing = [c for c in VERDICT_COLUMNS if c not in (reader.fieldnames or [])]
    if missing:
        raise DataValidationError(f"{name}: missing column", field=missing[0])
    verdicts = []
    for row_number, row in enumerate(reader, start=1):
        try:
            verdicts.append(
                Verdict(
                    window_index=int(row["window_index"]),
                    anomaly_source=AnomalySource(row["anomaly_source"]),
                    attack_class=AttackClass(row["attack_class"]),
                    disp_error=float(row["disp_error_m"]),
                    speed_error=float(row["speed_error_mps"]),
                    epsilon_used=float(row["epsilon_m"]),
                )
            )
        except (KeyError, TypeError, ValueError) as e:
            raise DataValidationError(f"{name}: bad verdict row: {e}", row=row_number) from e
    return verdicts


def render_detection_json(
    verdicts: Sequence[Verdict],
    source: str,
    thresholds: StaticThresholds,
    meta: dict[str, Any],
) -> str:
    """Verdict report with run metadata (config hash, seeds, thresholds)."""
    by_source = Counter(v.anomaly_source.value for v in verdicts)
    by_class = Counter(v.attack_class.value for v in verdicts)
    report = {
        "source": source,
        **meta,
        "thresholds": {"disp_thresh_m": thresholds.disp_thresh, "speed_thresh_mps": thresholds.speed_thresh},
        "windows": len(verdicts),
        "flagged": sum(v.flagged for v in verdicts),
        "by_source": {s.value: by_source.get(s.value, 0) for s in AnomalySource},
        "by_class": {c.value: by_class.get(c.value, 0) for c in AttackClass},
        "verdicts": [
            {
                "window_index": v.window_index,
                "anomaly_source": v.anomaly_source.value,
                "attack_class": v.attack_class.value,
                "disp_error_m": v.disp_error,
                "speed_error_mps": v.speed_error,
                "epsilon_m": v.epsilon_used,
                **({"note": v.note} if v.note else {}),
            }
            for v in verdicts
        ],
    }
    return _dumps(report)


def render_loss_csv(history: LossHistory) -> str:
    return _csv([(e, repr(tr), repr(te)) for e, tr, te in history.rows()], ("epoch", "train_mae", "test_mae"))


def render_confusion_csv(evaluation: Evaluation) -> str:
    """Raw per-instance counts; the aggregate table can be recomputed from this file alone."""
    rows = []
    for r in evaluation.instances:
        c = r.summary.counts
        rows.append((r.instance_id, r.kind.value, c.tp, c.fp, c.tn, c.fn, repr(r.summary.auc)))
    return _csv(rows, ("instance", "kind", "tp", "fp", "tn", "fn", "auc"))


def render_roc_csv(evaluation: Evaluation) -> str:
    rows = []
    for kind, (fpr, tpr, thresholds) in evaluation.roc.items():
        for f, t, th in zip(fpr, tpr, thresholds):
            rows.append((kind.value, repr(float(f)), repr(float(t)), repr(float(th))))
    return _csv(rows, ("kind", "fpr", "tpr", "threshold"))


def _stat(stat: MetricStat) -> dict[str, Any]:
    return {"mean": _finite(stat.mean), "std": _finite(stat.std), "n": stat.n}


def render_metrics_json(evaluation: Evaluation, meta: dict[str, Any]) -> str:
    """Machine-readable evaluation; contains no timestamps so reruns are byte-identical."""
    report = {
        **meta,
        "summary": {
            kind.value: {name: _stat(row[name]) for name in METRIC_NAMES}
            for kind, row in evaluation.rows.items()
        },
        "instances": [
            {
                "id": r.instance_id,
                "kind": r.kind.value,
                "tp": r.summary.counts.tp,
                "fp": r.summary.counts.fp,
                "tn": r.summary.counts.tn,
                "fn": r.summary.counts.fn,
                **{name: _finite(r.summary.value(name)) for name in METRIC_NAMES},
            }
            for r in evaluation.instances
        ],
        "class_confusion": [
            {"true": t, "predicted": p, "windows": n} for (t, p), n in sorted(evaluation.class_counts.items())
        ],
    }
    return _dumps(report)


def _percent(stat: MetricStat) -> str:
    if not math.isfinite(stat.mean):
        return "n/a"
    std = f"{100 * stat.std:.2f}" if math.isfinite(stat.std) else "n/a"
    return f"{100 * stat.mean:.2f} ± {std}"


def render_table2(evaluation: Evaluation, title: str | None = None) -> str:
    """Markdown summary table: one row per attack type, mean ± STD in percent."""
    lines: list[str] = []
    if title:
        lines.append(f"# {title}")
        lines.append("")
    lines.append("| Attack type | Instances | Accuracy (%) | Sensitivity (%) | Specificity (%) | AUC (%) |")
    lines.append("|---|---|---|---|---|---|")
    for kind in AttackClass.attacks():
        row = evaluation.rows.get(kind)
        if row is None:
            continue
        n = max(stat.n for stat in row.values())
        cells = " | ".join(_percent(row[name]) for name in METRIC_NAMES)
        lines.append(f"| {_KIND_TITLES[kind]} | {n} | {cells} |")
    return "\n".join(lines) + "\n"
