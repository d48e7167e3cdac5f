"""Window-level spoofing detection: static thresholds, classification, adaptive escalation."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from spoofguard.adaptive_dbscan import AdaptiveDBSCAN, stats_from_dict, stats_to_dict, warm_start
from spoofguard.errors import ConfigError, DataValidationError, ModelFormatError
from spoofguard.ingest import window_arrays
from spoofguard.models import (
    AnomalySource,
    AttackClass,
    RecursiveStats,
    SigmaUpdate,
    StaticThresholds,
    Trajectory,
    Verdict,
)
from spoofguard.predictor import Predictor

logger = logging.getLogger(__name__)

MIN_CALIBRATION_WINDOWS = 100
BOTH_SPEEDS_ZERO = "both_speeds_zero"
CALIBRATION_FORMAT = "spoofguard-calibration"


class MonitorMode(Enum):
    """Signal fed to the adaptive detector."""

    MAGNITUDE = "magnitude"  # |GPS disp - predicted disp|
    PER_AXIS = "per_axis"  # x and y residuals, one detector each


@dataclass(frozen=True)
class DetectorConfig:
    speed_zero_tol: float = 0.1
    freeze_on_static: bool = True
    adaptive_enabled: bool = True
    monitor: MonitorMode = MonitorMode.MAGNITUDE

    def __post_init__(self) -> None:
        if not self.speed_zero_tol >= 0:
            raise ConfigError(f"speed_zero_tol must be >= 0, got {self.speed_zero_tol}")


@dataclass(frozen=True, eq=False)
class WindowErrors:
    """Per-window residuals between GPS and the predictor."""

    residual: np.ndarray  # (N, 2) GPS displacement minus prediction
    disp_error: np.ndarray
    speed_error: np.ndarray
    gps_speed: np.ndarray
    sensor_speed: np.ndarray

    def __len__(self) -> int:
        return len(self.disp_error)


def window_errors(traj: Trajectory, predictor: Predictor) -> WindowErrors:
    ws = window_arrays(traj)
    residual = ws.targets - predictor.predict(ws)
    return WindowErrors(
        residual=residual,
        disp_error=np.hypot(residual[:, 0], residual[:, 1]),
        speed_error=ws.speed_error,
        gps_speed=ws.gps_speed_mean,
        sensor_speed=ws.sensor_speed_mean,
    )


def _as_list(clean: Trajectory | Sequence[Trajectory]) -> list[Trajectory]:
    return [clean] if isinstance(clean, Trajectory) else list(clean)


def _clean_window_errors(clean: Trajectory | Sequence[Trajectory], predictor: Predictor) -> list[WindowErrors]:
    trajectories = _as_list(clean)
    if not trajectories:
        raise DataValidationError("calibration needs at least one clean trajectory")
    for traj in trajectories:
        if np.any(traj.labels != AttackClass.CLEAN.value):
            raise DataValidationError(f"calibration data {traj.source} contains attack labels", field="label")
    errors = [window_errors(traj, predictor) for traj in trajectories]
    total = sum(len(e) for e in errors)
    if total < MIN_CALIBRATION_WINDOWS:
        raise DataValidationError(
            f"insufficient calibration data: {total} windows, need at least {MIN_CALIBRATION_WINDOWS}"
        )
    return errors


def calibrate(clean: Trajectory | Sequence[Trajectory], predictor: Predictor) -> StaticThresholds:
    """
    Static thresholds as the largest errors observed on clean data.

    disp_thresh is the maximum window displacement error; speed_thresh is
    the maximum per-sample |gps_speed - speed|.
    """
    errors = _clean_window_errors(clean, predictor)
    disp = max(float(np.max(e.disp_error)) for e in errors)
    speed = max(float(np.max(np.abs(t.gps_speed - t.speed))) for t in _as_list(clean))
    logger.info("Calibrated thresholds: displacement %.4f m, speed %.4f m/s", disp, speed)
    return StaticThresholds(disp_thresh=disp, speed_thresh=speed)


def clean_errors(
    clean: Trajectory | Sequence[Trajectory],
    predictor: Predictor,
    monitor: MonitorMode = MonitorMode.MAGNITUDE,
) -> np.ndarray:
    """Monitored clean signal for the warm start: (N,) magnitudes or (N, 2) residuals."""
    errors = _clean_window_errors(clean, predictor)
    if monitor is MonitorMode.PER_AXIS:
        return np.concatenate([e.residual for e in errors])
    return np.concatenate([e.disp_error for e in errors])


@dataclass(frozen=True)
class Calibration:
    """Everything detect needs from clean data: thresholds and warm-started state."""

    thresholds: StaticThresholds
    stats: RecursiveStats
    axis_stats: tuple[RecursiveStats, RecursiveStats]
    windows: int
    predictor: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "format": CALIBRATION_FORMAT,
            "predictor": self.predictor,
            "windows": self.windows,
            "thresholds": {
                "disp_thresh_m": self.thresholds.disp_thresh,
                "speed_thresh_mps": self.thresholds.speed_thresh,
            },
            "stats": stats_to_dict(self.stats),
            "axis_stats": [stats_to_dict(s) for s in self.axis_stats],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Calibration:
        if data.get("format") != CALIBRATION_FORMAT:
            raise ModelFormatError("not a calibration file", field="format")
        try:
            th = data["thresholds"]
            axis = data["axis_stats"]
            return cls(
                thresholds=StaticThresholds(float(th["disp_thresh_m"]), float(th["speed_thresh_mps"])),
                stats=stats_from_dict(data["stats"]),
                axis_stats=(stats_from_dict(axis[0]), stats_from_dict(axis[1])),
                windows=int(data["windows"]),
                predictor=str(data["predictor"]),
            )
        except (KeyError, IndexError, TypeError, ValueError) as e:
            if isinstance(e, ModelFormatError):
                raise
            raise ModelFormatError(f"corrupt calibration file: {e}") from e


def calibrate_detector(
    clean: Trajectory | Sequence[Trajectory],
    predictor: Predictor,
    k: float = 5.0,
    epsilon_floor: float = 0.01,
    sigma_update: SigmaUpdate = SigmaUpdate.WELFORD,
) -> Calibration:
    """Calibrate thresholds and warm-start both adaptive monitors from the same clean data."""
    thresholds = calibrate(clean, predictor)
    magnitudes = clean_errors(clean, predictor)
    residuals = clean_errors(clean, predictor, MonitorMode.PER_AXIS)
    return Calibration(
        thresholds=thresholds,
        stats=warm_start(magnitudes, k, epsilon_floor, sigma_update),
        axis_stats=(
            warm_start(residuals[:, 0], k, epsilon_floor, sigma_update),
            warm_start(residuals[:, 1], k, epsilon_floor, sigma_update),
        ),
        windows=len(magnitudes),
        predictor=getattr(predictor, "name", type(predictor).__name__),
    )


def save_calibration(cal: Calibration, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(cal.to_dict(), indent=2) + "\n", encoding="utf-8")
    return path


def load_calibration(path: str | Path) -> Calibration:
    path = Path(path)
    if not path.exists():
        raise DataValidationError(
            f"calibration file not found: {path} (run 'spoofguard calibrate' first)"
        )
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ModelFormatError(f"corrupt calibration file {path.name}: {e}") from e
    if not isinstance(data, dict):
        raise ModelFormatError(f"corrupt calibration file {path.name}")
    return Calibration.from_dict(data)


def classify_window(
    disp_err: float,
    gps_speed: float,
    sensor_speed: float,
    th: StaticThresholds,
    speed_zero_tol: float = 0.1,
) -> AttackClass:
    """
    Attack class of a window already flagged by the static thresholds.

    GPS still while the speedometer moves is overshoot; the reverse is a
    stop attack. Any other case, including both sources still, is
    turn-by-turn.
    """
    gps_moving = gps_speed > speed_zero_tol
    sensor_moving = sensor_speed > speed_zero_tol
    if sensor_moving and not gps_moving:
        return AttackClass.OVERSHOOT
    if gps_moving and not sensor_moving:
        return AttackClass.STOP
    return AttackClass.TURN_BY_TURN


class _AxisMonitor:
    """Two adaptive detectors on the x and y residuals that freeze together."""

    def __init__(self, stats: tuple[RecursiveStats, RecursiveStats]) -> None:
        self.x = AdaptiveDBSCAN(stats[0])
        self.y = AdaptiveDBSCAN(stats[1])

    @property
    def epsilon(self) -> float:
        return max(self.x.epsilon, self.y.epsilon)

    def step(self, residual: np.ndarray) -> tuple[bool, float]:
        rx, ry = self.x.peek(float(residual[0])), self.y.peek(float(residual[1]))
        eps = self.x.epsilon if rx >= ry else self.y.epsilon
        if max(rx, ry) > 1.0:
            return True, eps
        self.x.step(float(residual[0]))
        self.y.step(float(residual[1]))
        return False, eps


def detect(
    traj: Trajectory,
    predictor: Predictor,
    th: StaticThresholds,
    s0: RecursiveStats,
    config: DetectorConfig | None = None,
    axis_stats: tuple[RecursiveStats, RecursiveStats] | None = None,
) -> list[Verdict]:
    """
    One verdict per window, in stream order.

    A window over either static threshold is a static anomaly classified by
    the speed cross-check; adaptive state is then frozen unless
    freeze_on_static is off. Otherwise the adaptive detector sees the
    window and, if it rejects it, the window is a small biased attack.
    """
    cfg = config or DetectorConfig()
    errs = window_errors(traj, predictor)

    monitor = AdaptiveDBSCAN(s0)
    axes: _AxisMonitor | None = None
    if cfg.monitor is MonitorMode.PER_AXIS:
        if axis_stats is None:
            raise ConfigError("per-axis monitoring needs warm-started x/y statistics")
        axes = _AxisMonitor(axis_stats)

    def adaptive_step(k: int) -> tuple[bool, float]:
        if axes is not None:
            return axes.step(errs.residual[k])
        result = monitor.step(float(errs.disp_error[k]))
        return result.anomaly, result.epsilon

    def current_epsilon() -> float:
        return axes.epsilon if axes is not None else monitor.epsilon

    verdicts: list[Verdict] = []
    for k in range(len(errs)):
        disp = float(errs.disp_error[k])
        speed = float(errs.speed_error[k])

        if th.exceeded(disp, speed):
            gps_speed = float(errs.gps_speed[k])
            sensor_speed = float(errs.sensor_speed[k])
            epsilon = current_epsilon()
            if cfg.adaptive_enabled and not cfg.freeze_on_static:
                adaptive_step(k)
            both_still = gps_speed <= cfg.speed_zero_tol and sensor_speed <= cfg.speed_zero_tol
            verdicts.append(
                Verdict(
                    window_index=k,
                    anomaly_source=AnomalySource.STATIC,
                    attack_class=classify_window(disp, gps_speed, sensor_speed, th, cfg.speed_zero_tol),
                    disp_error=disp,
                    speed_error=speed,
                    epsilon_used=epsilon,
                    note=BOTH_SPEEDS_ZERO if both_still else None,
                )
            )
            continue

        if cfg.adaptive_enabled:
            anomaly, epsilon = adaptive_step(k)
        else:
            anomaly, epsilon = False, current_epsilon()
        verdicts.append(
            Verdict(
                window_index=k,
                anomaly_source=AnomalySource.ADAPTIVE if anomaly else AnomalySource.NONE,
                attack_class=AttackClass.SMALL_BIASED if anomaly else AttackClass.CLEAN,
                disp_error=disp,
                speed_error=speed,
                epsilon_used=epsilon,
            )
        )

    flagged = sum(v.flagged for v in verdicts)
    logger.info("%s: %d of %d windows flagged", traj.source, flagged, len(verdicts))
    return verdicts


def detect_calibrated(
    traj: Trajectory,
    predictor: Predictor,
    cal: Calibration,
    config: DetectorConfig | None = None,
) -> list[Verdict]:
    """detect with thresholds and warm-started state taken from a calibration."""
    return detect(traj, predictor, cal.thresholds, cal.stats, config, cal.axis_stats)


def flag_fraction(verdicts: Sequence[Verdict], source: AnomalySource | None = None) -> float:
    """Fraction of windows flagged, optionally by one source only."""
    if not verdicts:
        return math.nan
    if source is None:
        return sum(v.flagged for v in verdicts) / len(verdicts)
    return sum(v.anomaly_source is source for v in verdicts) / len(verdicts)
