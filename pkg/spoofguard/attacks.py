"""Inject labeled GPS spoofing attacks into clean trajectories."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Sequence

import numpy as np

from spoofguard.errors import ConfigError, InjectionError
from spoofguard.geo import offset_arrays
from spoofguard.models import (
    DEFAULT_THRESHOLDS,
    WINDOW_SIZE,
    AttackClass,
    AttackSpec,
    StaticThresholds,
    Trajectory,
)

logger = logging.getLogger(__name__)

# Stop/overshoot GPS speed ramps last this long
RAMP_S = 1.0
DEFAULT_SPEED_ZERO_TOL = 0.1


def _span(traj: Trajectory, spec: AttackSpec) -> tuple[int, int]:
    start = spec.start_index
    end = start + spec.span_length
    if end > len(traj):
        raise InjectionError(
            f"{spec.kind.value} span [{start}, {end}) exceeds trajectory length {len(traj)}",
            field="start_index",
        )
    return start, end


def _labels(traj: Trajectory, start: int, end: int, kind: AttackClass) -> np.ndarray:
    labels = traj.labels.copy()
    labels[start:end] = kind.value
    return labels


def _require(mask: np.ndarray, start: int, message: str) -> None:
    bad = np.flatnonzero(~mask)
    if bad.size:
        raise InjectionError(message, row=start + int(bad[0]))


def _sample_dts(traj: Trajectory) -> np.ndarray:
    """Spacing to the next sample; the last sample reuses the previous spacing."""
    if len(traj) < 2:
        return np.full(len(traj), 0.01)
    dts = np.diff(traj.t)
    return np.append(dts, dts[-1])


def _ramp_samples(traj: Trajectory) -> int:
    rate = traj.sample_rate_hz
    return max(1, int(round(RAMP_S * rate))) if math.isfinite(rate) else 1


def _span_ramp(length: int, ramp: int) -> int:
    """Ramp length for a span; spans shorter than two ramps split evenly."""
    return max(1, min(ramp, length // 2))


def _trapezoid(length: int, ramp: int) -> np.ndarray:
    """Unit profile rising over the first ramp samples and falling to zero at the last sample."""
    ramp = _span_ramp(length, ramp)
    j = np.arange(length)
    return np.clip(np.minimum(j, length - 1 - j) / ramp, 0.0, 1.0)


def inject_turn_by_turn(
    traj: Trajectory, spec: AttackSpec, speed_zero_tol: float = DEFAULT_SPEED_ZERO_TOL
) -> Trajectory:
    """Shift every fix in the span by magnitude meters along direction; GPS speed is untouched."""
    start, end = _span(traj, spec)
    _require(traj.speed[start:end] > speed_zero_tol, start, "turn-by-turn span includes stationary samples")
    lat = traj.lat.copy()
    lon = traj.lon.copy()
    if spec.magnitude > 0 and end > start:
        dx = spec.magnitude * math.cos(spec.direction)
        dy = spec.magnitude * math.sin(spec.direction)
        lat[start:end], lon[start:end] = offset_arrays(traj.lat[start:end], traj.lon[start:end], dx, dy)
    return traj.with_gps(lat, lon, traj.gps_speed, _labels(traj, start, end, AttackClass.TURN_BY_TURN))


def inject_stop(traj: Trajectory, spec: AttackSpec, speed_zero_tol: float = DEFAULT_SPEED_ZERO_TOL) -> Trajectory:
    """
    Make a stationary vehicle appear to drive.

    The fabricated speed ramps from zero up to magnitude / span duration
    over the first second and back down to zero over the last one, and the
    fixes advance along direction by the integrated fabricated speed.
    Receiver noise of the clean fixes is kept.
    """
    start, end = _span(traj, spec)
    _require(traj.speed[start:end] <= speed_zero_tol, start, "stop span includes moving samples")
    if end == start:
        return traj

    dts = _sample_dts(traj)[start:end]
    cruise = spec.magnitude / float(np.sum(dts))
    speed = cruise * _trapezoid(end - start, _ramp_samples(traj))
    travelled = np.concatenate([[0.0], np.cumsum(speed * dts)[:-1]])

    lat = traj.lat.copy()
    lon = traj.lon.copy()
    gps_speed = traj.gps_speed.copy()
    lat[start:end], lon[start:end] = offset_arrays(
        traj.lat[start:end],
        traj.lon[start:end],
        travelled * math.cos(spec.direction),
        travelled * math.sin(spec.direction),
    )
    gps_speed[start:end] = speed
    return traj.with_gps(lat, lon, gps_speed, _labels(traj, start, end, AttackClass.STOP))


def inject_overshoot(
    traj: Trajectory, spec: AttackSpec, speed_zero_tol: float = DEFAULT_SPEED_ZERO_TOL
) -> Trajectory:
    """
    Freeze the fixes at the span start while GPS speed reports a halt.

    GPS speed ramps from its value at the span start down to zero over the
    first second and back up to the clean value after the span over the
    last one.
    """
    start, end = _span(traj, spec)
    _require(traj.speed[start:end] > speed_zero_tol, start, "overshoot span includes stationary samples")
    if end == start:
        return traj

    lat = traj.lat.copy()
    lon = traj.lon.copy()
    gps_speed = traj.gps_speed.copy()
    lat[start:end] = traj.lat[start]
    lon[start:end] = traj.lon[start]
    length = end - start
    ramp = _span_ramp(length, _ramp_samples(traj))
    j = np.arange(length)
    resume = traj.gps_speed[end] if end < len(traj) else traj.gps_speed[end - 1]
    down = np.clip(1.0 - j / ramp, 0.0, 1.0)
    up = np.minimum(np.clip(1.0 - (length - 1 - j) / ramp, 0.0, 1.0), 1.0 - down)
    gps_speed[start:end] = traj.gps_speed[start] * down + resume * up
    return traj.with_gps(lat, lon, gps_speed, _labels(traj, start, end, AttackClass.OVERSHOOT))


def small_biased_offsets(n_samples: int, spec: AttackSpec) -> tuple[np.ndarray, np.ndarray]:
    """
    Per-sample (dx, dy) offsets of a small biased attack.

    The offset grows by one step at every tenth sample after the start,
    reaching steps increments at the closing fix of the last attacked
    window, and stays there.
    """
    i = np.arange(n_samples)
    count = np.clip(np.floor_divide(i - spec.start_index, WINDOW_SIZE), 0, spec.steps).astype(np.float64)
    c, s = math.cos(spec.direction), math.sin(spec.direction)
    step_dx = spec.magnitude * (c - s)
    step_dy = spec.magnitude * (s + c)
    return count * step_dx, count * step_dy


def inject_small_biased(traj: Trajectory, spec: AttackSpec) -> Trajectory:
    """Shift fixes by (magnitude, magnitude) per window, rotated by direction, over steps windows."""
    start, end = _span(traj, spec)
    dx, dy = small_biased_offsets(len(traj), spec)
    lat, lon = offset_arrays(traj.lat, traj.lon, dx, dy)
    return traj.with_gps(lat, lon, traj.gps_speed, _labels(traj, start, end, AttackClass.SMALL_BIASED))


def inject(traj: Trajectory, spec: AttackSpec, speed_zero_tol: float = DEFAULT_SPEED_ZERO_TOL) -> Trajectory:
    """Apply spec to traj according to its kind."""
    if spec.kind is AttackClass.TURN_BY_TURN:
        return inject_turn_by_turn(traj, spec, speed_zero_tol)
    if spec.kind is AttackClass.STOP:
        return inject_stop(traj, spec, speed_zero_tol)
    if spec.kind is AttackClass.OVERSHOOT:
        return inject_overshoot(traj, spec, speed_zero_tol)
    return inject_small_biased(traj, spec)


def spec_to_dict(spec: AttackSpec) -> dict[str, Any]:
    return {
        "kind": spec.kind.value,
        "start_index": spec.start_index,
        "duration": spec.duration,
        "magnitude": spec.magnitude,
        "steps": spec.steps,
        "direction": spec.direction,
        "seed": spec.seed,
    }


def spec_from_dict(data: dict[str, Any]) -> AttackSpec:
    try:
        return AttackSpec(
            kind=AttackClass(data["kind"]),
            start_index=int(data["start_index"]),
            duration=int(data["duration"]),
            magnitude=float(data["magnitude"]),
            steps=int(data.get("steps", 1)),
            direction=float(data.get("direction", 0.0)),
            seed=int(data.get("seed", 0)),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise InjectionError(f"invalid attack spec: {e}") from e


@dataclass(frozen=True)
class CampaignConfig:
    """
    Randomization ranges of the evaluation campaign.

    Turn-by-turn magnitudes are multiples of the calibrated displacement
    threshold. Stop magnitudes follow from a fabricated cruise speed and
    the span duration. Overshoot has no magnitude of its own.
    """

    kinds: tuple[AttackClass, ...] = field(default_factory=AttackClass.attacks)
    instances_per_trajectory: int = 5
    magnitude_range: tuple[float, float] = (2.0, 10.0)
    stop_speed_range_mps: tuple[float, float] = (10.0, 20.0)
    duration_range_s: tuple[float, float] = (1.0, 10.0)
    min_moving_speed_mps: float = 5.0
    small_biased_steps: int = 101
    small_biased_step_m: float = 1.0
    speed_zero_tol: float = DEFAULT_SPEED_ZERO_TOL
    max_attempts: int = 20
    seed: int = 0

    def __post_init__(self) -> None:
        if AttackClass.CLEAN in self.kinds:
            raise ConfigError("campaign kinds cannot include 'clean'")
        if self.instances_per_trajectory < 1:
            raise ConfigError("instances_per_trajectory must be >= 1")
        for name in ("magnitude_range", "stop_speed_range_mps", "duration_range_s"):
            lo, hi = getattr(self, name)
            if not 0 < lo <= hi:
                raise ConfigError(f"{name} must satisfy 0 < low <= high, got {(lo, hi)}")
        if self.small_biased_steps < 1:
            raise ConfigError("small_biased_steps must be >= 1")
        if self.small_biased_step_m <= 0:
            raise ConfigError("small_biased_step_m must be > 0")

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["kinds"] = [k.value for k in self.kinds]
        for name in ("magnitude_range", "stop_speed_range_mps", "duration_range_s"):
            data[name] = list(data[name])
        return data


@dataclass(frozen=True, eq=False)
class CampaignInstance:
    """One attacked copy of a clean trajectory, or the reason it could not be built."""

    instance_id: str
    kind: AttackClass
    trajectory_index: int
    rep: int
    source: str
    spec: AttackSpec | None = None
    trajectory: Trajectory | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.trajectory is not None


@dataclass
class Campaign:
    config: CampaignConfig
    thresholds: StaticThresholds
    instances: list[CampaignInstance] = field(default_factory=list)

    def successful(self, kind: AttackClass | None = None) -> list[CampaignInstance]:
        return [i for i in self.instances if i.ok and (kind is None or i.kind is kind)]

    def counts(self) -> dict[str, int]:
        return {kind.value: len(self.successful(kind)) for kind in self.config.kinds}

    def manifest(self, files: dict[str, str] | None = None) -> dict[str, Any]:
        """Reproducible description of every instance; files maps instance id to output path."""
        files = files or {}
        return {
            "seed": self.config.seed,
            "config": self.config.to_dict(),
            "thresholds": {
                "disp_thresh_m": self.thresholds.disp_thresh,
                "speed_thresh_mps": self.thresholds.speed_thresh,
            },
            "counts": self.counts(),
            "instances": [
                {
                    "id": inst.instance_id,
                    "kind": inst.kind.value,
                    "trajectory_index": inst.trajectory_index,
                    "rep": inst.rep,
                    "source": inst.source,
                    "spec": spec_to_dict(inst.spec) if inst.spec is not None else None,
                    "file": files.get(inst.instance_id),
                    "error": inst.error,
                }
                for inst in self.instances
            ],
        }


def _eligible(traj: Trajectory, kind: AttackClass, cfg: CampaignConfig) -> np.ndarray:
    if kind is AttackClass.STOP:
        return traj.speed <= cfg.speed_zero_tol
    if kind in (AttackClass.TURN_BY_TURN, AttackClass.OVERSHOOT):
        return traj.speed > cfg.min_moving_speed_mps
    return np.ones(len(traj), dtype=bool)


def _valid_starts(mask: np.ndarray, span: int) -> np.ndarray:
    """Window-aligned starts with one clean window of margin on each side."""
    n = len(mask)
    starts = np.arange(WINDOW_SIZE, n - span - WINDOW_SIZE, WINDOW_SIZE)
    if starts.size == 0:
        return starts
    bad = np.concatenate([[0], np.cumsum(~mask)])
    return starts[bad[starts + span] - bad[starts] == 0]


def _draw_spec(
    traj: Trajectory,
    kind: AttackClass,
    thresholds: StaticThresholds,
    cfg: CampaignConfig,
    rng: np.random.Generator,
) -> AttackSpec:
    rate = traj.sample_rate_hz
    mask = _eligible(traj, kind, cfg)
    lo_w = max(1, math.ceil(cfg.duration_range_s[0] * rate / WINDOW_SIZE))
    hi_w = max(lo_w, math.floor(cfg.duration_range_s[1] * rate / WINDOW_SIZE))
    if kind is AttackClass.SMALL_BIASED:
        step = cfg.small_biased_step_m * math.sqrt(2)
        if step >= thresholds.disp_thresh:
            raise InjectionError(
                f"small biased step of {step:.2f} m is not below disp_thresh {thresholds.disp_thresh:.2f} m",
                field="small_biased_step_m",
            )

    for _ in range(cfg.max_attempts):
        if kind is AttackClass.SMALL_BIASED:
            duration = cfg.small_biased_steps * WINDOW_SIZE
        else:
            duration = int(rng.integers(lo_w, hi_w + 1)) * WINDOW_SIZE
        starts = _valid_starts(mask, duration)
        if starts.size == 0:
            continue
        start = int(rng.choice(starts))
        direction = float(rng.uniform(0.0, 2 * math.pi))

        if kind is AttackClass.TURN_BY_TURN:
            magnitude = float(rng.uniform(*cfg.magnitude_range)) * thresholds.disp_thresh
        elif kind is AttackClass.STOP:
            magnitude = float(rng.uniform(*cfg.stop_speed_range_mps)) * duration / rate
        elif kind is AttackClass.SMALL_BIASED:
            magnitude = cfg.small_biased_step_m
        else:
            magnitude = 0.0

        return AttackSpec(
            kind=kind,
            start_index=start,
            duration=duration,
            magnitude=magnitude,
            steps=cfg.small_biased_steps if kind is AttackClass.SMALL_BIASED else 1,
            direction=direction,
            seed=cfg.seed,
        )
    raise InjectionError(f"no eligible {kind.value} span in {traj.source}")


def build_campaign(
    clean_sets: Sequence[Trajectory],
    kinds: Sequence[AttackClass] | None = None,
    seed: int | None = None,
    thresholds: StaticThresholds = DEFAULT_THRESHOLDS,
    config: CampaignConfig | None = None,
) -> Campaign:
    """
    Attack every clean trajectory instances_per_trajectory times per kind.

    Each instance draws from its own generator seeded by (seed, kind,
    trajectory, repetition), so instances do not depend on each other.
    Instances whose preconditions cannot be met are recorded with an error.
    """
    cfg = config or CampaignConfig()
    if kinds is not None:
        cfg = replace(cfg, kinds=tuple(kinds))
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    if not clean_sets:
        raise InjectionError("campaign needs at least one clean trajectory")

    campaign = Campaign(config=cfg, thresholds=thresholds)
    all_kinds = AttackClass.attacks()
    for kind in cfg.kinds:
        kind_idx = all_kinds.index(kind)
        for traj_idx, traj in enumerate(clean_sets):
            for rep in range(cfg.instances_per_trajectory):
                instance_id = f"{kind.value}-{traj_idx:02d}-{rep}"
                rng = np.random.default_rng([cfg.seed, kind_idx, traj_idx, rep])
                try:
                    spec = _draw_spec(traj, kind, thresholds, cfg, rng)
                    attacked = inject(traj, spec, cfg.speed_zero_tol)
                except InjectionError as e:
                    logger.warning("Instance %s skipped: %s", instance_id, e)
                    campaign.instances.append(
                        CampaignInstance(instance_id, kind, traj_idx, rep, traj.source, error=str(e))
                    )
                    continue
                campaign.instances.append(
                    CampaignInstance(
                        instance_id,
                        kind,
                        traj_idx,
                        rep,
                        traj.source,
                        spec=spec,
                        trajectory=replace(attacked, source=instance_id),
                    )
                )

    logger.info("Campaign built: %s", ", ".join(f"{k}={v}" for k, v in campaign.counts().items()))
    return campaign
