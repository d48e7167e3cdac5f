"""Data models for trajectories, detector state and verdicts."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Iterator

import numpy as np

from spoofguard.errors import DataValidationError

# Samples per predictor window; GPS targets are taken every tenth sample
WINDOW_SIZE = 10


class AttackClass(Enum):
    """Ground-truth label of a sample, and the class assigned to a verdict."""

    CLEAN = "clean"
    TURN_BY_TURN = "turn_by_turn"
    STOP = "stop"
    OVERSHOOT = "overshoot"
    SMALL_BIASED = "small_biased"

    @classmethod
    def attacks(cls) -> tuple[AttackClass, ...]:
        """All classes except clean, in reporting order."""
        return (cls.TURN_BY_TURN, cls.STOP, cls.OVERSHOOT, cls.SMALL_BIASED)


class AnomalySource(Enum):
    """Which detector raised a window."""

    NONE = "none"
    STATIC = "static"
    ADAPTIVE = "adaptive"


class SigmaUpdate(Enum):
    """Variance recursion used by the adaptive detector."""

    WELFORD = "welford"  # (x - mu_old) * (x - mu_new)
    LITERAL = "literal"  # (x - mu_new) ** 2


@dataclass(frozen=True)
class GeoPoint:
    """A GPS fix in radians."""

    lat: float
    lon: float

    def __post_init__(self) -> None:
        if not (-math.pi / 2 <= self.lat <= math.pi / 2):
            raise DataValidationError(f"latitude {self.lat} rad out of range", field="lat")
        if not (-math.pi <= self.lon <= math.pi):
            raise DataValidationError(f"longitude {self.lon} rad out of range", field="lon")

    @classmethod
    def from_degrees(cls, lat_deg: float, lon_deg: float) -> GeoPoint:
        return cls(math.radians(lat_deg), math.radians(lon_deg))


@dataclass(frozen=True)
class LocalDisplacement:
    """East/north displacement in meters."""

    dx: float
    dy: float

    @property
    def magnitude(self) -> float:
        return math.hypot(self.dx, self.dy)

    def __repr__(self) -> str:
        return f"LocalDisplacement(dx={self.dx:.4f} m, dy={self.dy:.4f} m)"


@dataclass(frozen=True)
class SensorSample:
    """One record of the 100 Hz log."""

    t: float
    speed: float
    yaw: float
    gps: GeoPoint
    gps_speed: float
    label: AttackClass = AttackClass.CLEAN


_VALID_LABELS = frozenset(c.value for c in AttackClass)
_NUMERIC_FIELDS = ("t", "speed", "yaw", "lat", "lon", "gps_speed")


@dataclass(frozen=True, eq=False)
class Trajectory:
    """
    Column-oriented, immutable sensor log.

    Angles are radians; labels hold AttackClass values as strings.
    """

    t: np.ndarray
    speed: np.ndarray
    yaw: np.ndarray
    lat: np.ndarray
    lon: np.ndarray
    gps_speed: np.ndarray
    labels: np.ndarray = field(default_factory=lambda: np.array([], dtype="U16"))
    source: str = "<memory>"

    def __post_init__(self) -> None:
        n = len(self.t)
        if n == 0:
            raise DataValidationError("trajectory has no samples")

        for name in _NUMERIC_FIELDS:
            arr = np.array(getattr(self, name), dtype=np.float64)
            if arr.shape != (n,):
                raise DataValidationError(f"expected {n} values, got shape {arr.shape}", field=name)
            if not np.all(np.isfinite(arr)):
                raise DataValidationError("non-finite value", field=name)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

        labels = np.array(self.labels, dtype="U16") if len(self.labels) else np.full(n, "clean", dtype="U16")
        if labels.shape != (n,):
            raise DataValidationError(f"expected {n} labels, got shape {labels.shape}", field="label")
        unknown = set(np.unique(labels)) - _VALID_LABELS
        if unknown:
            raise DataValidationError(f"unknown labels {sorted(unknown)}", field="label")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

        _check_column(self.speed < 0, "speed", "negative speed")
        _check_column(self.gps_speed < 0, "gps_speed", "negative GPS speed")
        _check_column(np.abs(self.lat) > math.pi / 2, "lat", "latitude out of range")
        _check_column(np.abs(self.lon) > math.pi, "lon", "longitude out of range")
        if n > 1:
            bad = np.flatnonzero(np.diff(self.t) <= 0)
            if bad.size:
                raise DataValidationError("timestamps not strictly increasing", row=int(bad[0]) + 1, field="t")

    @classmethod
    def from_samples(cls, samples: Iterable[SensorSample], source: str = "<memory>") -> Trajectory:
        """Build a trajectory from row records."""
        rows = list(samples)
        return cls(
            t=np.array([s.t for s in rows]),
            speed=np.array([s.speed for s in rows]),
            yaw=np.array([s.yaw for s in rows]),
            lat=np.array([s.gps.lat for s in rows]),
            lon=np.array([s.gps.lon for s in rows]),
            gps_speed=np.array([s.gps_speed for s in rows]),
            labels=np.array([s.label.value for s in rows], dtype="U16"),
            source=source,
        )

    @property
    def sample_rate_hz(self) -> float:
        """Nominal sample rate from the median sample spacing."""
        if len(self) < 2:
            return float("nan")
        return float(1.0 / np.median(np.diff(self.t)))

    def sample(self, i: int) -> SensorSample:
        """Return sample i as a row record."""
        return SensorSample(
            t=float(self.t[i]),
            speed=float(self.speed[i]),
            yaw=float(self.yaw[i]),
            gps=GeoPoint(float(self.lat[i]), float(self.lon[i])),
            gps_speed=float(self.gps_speed[i]),
            label=AttackClass(str(self.labels[i])),
        )

    def with_gps(
        self,
        lat: np.ndarray,
        lon: np.ndarray,
        gps_speed: np.ndarray,
        labels: np.ndarray,
        source: str | None = None,
    ) -> Trajectory:
        """Copy with replaced GPS columns and labels; sensor columns are kept."""
        return replace(
            self,
            lat=lat,
            lon=lon,
            gps_speed=gps_speed,
            labels=labels,
            source=self.source if source is None else source,
        )

    def __len__(self) -> int:
        return len(self.t)

    def __iter__(self) -> Iterator[SensorSample]:
        for i in range(len(self)):
            yield self.sample(i)

    def __repr__(self) -> str:
        return f"Trajectory({self.source}, {len(self)} samples)"


def _check_column(mask: np.ndarray, name: str, message: str) -> None:
    bad = np.flatnonzero(mask)
    if bad.size:
        raise DataValidationError(message, row=int(bad[0]), field=name)


@dataclass(frozen=True, eq=False)
class PredictorWindow:
    """Ten consecutive samples reshaped into the 40-value predictor input."""

    speeds: np.ndarray
    cos_yaw: np.ndarray
    sin_yaw: np.ndarray
    dts: np.ndarray
    target: LocalDisplacement
    index: int = 0

    def __post_init__(self) -> None:
        for name in ("speeds", "cos_yaw", "sin_yaw", "dts"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.shape != (WINDOW_SIZE,):
                raise DataValidationError(f"expected {WINDOW_SIZE} values, got {arr.shape}", field=name)
            object.__setattr__(self, name, arr)
        if np.any(self.dts <= 0):
            raise DataValidationError("time steps must be positive", field="dts")
        if np.any(np.abs(self.cos_yaw**2 + self.sin_yaw**2 - 1.0) > 1e-12):
            raise DataValidationError("cos/sin yaw pair not on the unit circle", field="cos_yaw")

    @property
    def features(self) -> np.ndarray:
        """Inputs in the fixed order [speeds | cos_yaw | sin_yaw | dts]."""
        return np.concatenate([self.speeds, self.cos_yaw, self.sin_yaw, self.dts])


@dataclass(frozen=True)
class StaticThresholds:
    """Displacement and speed error limits extracted from clean data."""

    disp_thresh: float
    speed_thresh: float

    def __post_init__(self) -> None:
        # Noise-free calibration legitimately yields 0
        for name in ("disp_thresh", "speed_thresh"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise DataValidationError(f"threshold must be finite and non-negative, got {value}", field=name)

    def exceeded(self, disp_error: float, speed_error: float) -> bool:
        return disp_error > self.disp_thresh or speed_error > self.speed_thresh


# Published defaults calibrated on clean real-world drives
DEFAULT_THRESHOLDS = StaticThresholds(disp_thresh=1.79, speed_thresh=2.91)


@dataclass(frozen=True)
class RecursiveStats:
    """Recursive mean/standard deviation state of the adaptive detector."""

    n: int
    mu: float
    sigma: float
    k: float = 5.0
    epsilon_floor: float = 0.01
    sigma_update: SigmaUpdate = SigmaUpdate.WELFORD

    def __post_init__(self) -> None:
        if self.n < 1:
            raise DataValidationError(f"sample count must be >= 1, got {self.n}", field="n")
        if not math.isfinite(self.mu):
            raise DataValidationError("mean must be finite", field="mu")
        if not math.isfinite(self.sigma) or self.sigma < 0:
            raise DataValidationError(f"sigma must be finite and >= 0, got {self.sigma}", field="sigma")
        if not self.k > 0:
            raise DataValidationError(f"k must be > 0, got {self.k}", field="k")
        if not self.epsilon_floor >= 0:
            raise DataValidationError("epsilon floor must be >= 0", field="epsilon_floor")

    @property
    def epsilon(self) -> float:
        """Dynamic neighbourhood radius max(k * sigma, floor)."""
        return max(self.k * self.sigma, self.epsilon_floor)


@dataclass(frozen=True)
class StepResult:
    """Outcome of one adaptive-detector step."""

    anomaly: bool
    epsilon: float
    deviation: float
    stats_after: RecursiveStats


@dataclass(frozen=True)
class Verdict:
    """Detection outcome for one window."""

    window_index: int
    anomaly_source: AnomalySource
    attack_class: AttackClass
    disp_error: float
    speed_error: float
    epsilon_used: float
    note: str | None = None

    @property
    def flagged(self) -> bool:
        return self.anomaly_source is not AnomalySource.NONE

    @property
    def score(self) -> float:
        """Continuous anomaly score disp_error / epsilon."""
        return self.disp_error / self.epsilon_used if self.epsilon_used > 0 else math.inf


@dataclass(frozen=True)
class AttackSpec:
    """Declarative description of one injected attack."""

    kind: AttackClass
    start_index: int
    duration: int
    magnitude: float
    steps: int = 1
    direction: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind is AttackClass.CLEAN:
            raise DataValidationError("attack kind cannot be clean", field="kind")
        if self.start_index < 0:
            raise DataValidationError("start index must be >= 0", field="start_index")
        if self.duration < 0:
            raise DataValidationError("duration must be >= 0", field="duration")
        if not (math.isfinite(self.magnitude) and self.magnitude >= 0):
            raise DataValidationError("magnitude must be finite and >= 0", field="magnitude")
        if self.steps < 1:
            raise DataValidationError("steps must be >= 1", field="steps")

    @property
    def span_length(self) -> int:
        """Number of labeled samples; small-biased spans are whole windows."""
        if self.kind is AttackClass.SMALL_BIASED:
            return self.steps * WINDOW_SIZE
        return self.duration
