"""Synthetic clean drives standing in for recorded vehicle logs."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np
from scipy.signal import lfilter

from spoofguard.errors import DataValidationError
from spoofguard.geo import EARTH_RADIUS_M, wrap_angles
from spoofguard.models import Trajectory

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SpeedSegment:
    """Hold a target speed for a stretch of the drive cycle."""

    duration_s: float
    speed_mps: float


@dataclass(frozen=True)
class Turn:
    """Heading change spread linearly over duration_s, starting at_s into the cycle."""

    at_s: float
    duration_s: float
    delta_rad: float


# Urban stop-and-go cycle: 80 s with one stop, three cruise speeds and two turns
DEFAULT_PATTERN = (
    SpeedSegment(15.0, 0.0),
    SpeedSegment(25.0, 14.0),
    SpeedSegment(20.0, 9.0),
    SpeedSegment(20.0, 16.0),
)
DEFAULT_TURNS = (
    Turn(45.0, 6.0, math.pi / 2),
    Turn(65.0, 4.0, -math.pi / 3),
)


@dataclass(frozen=True)
class SynthSpec:
    """
    Parameters of a synthetic drive.

    The speed pattern repeats for the whole duration; the target speed is
    approached at most at accel_mps2. GPS noise is isotropic per axis with
    standard deviation sigma_gps_m; gps_noise_tau_s > 0 makes it a
    first-order Gauss-Markov process with the same stationary spread.
    """

    duration_s: float = 60.0
    rate_hz: float = 100.0
    sigma_gps_m: float = 0.5
    sigma_speed_mps: float = 0.1
    sigma_yaw_rad: float = 0.005
    gps_speed_noise_mps: float = 0.1
    gps_noise_tau_s: float = 0.0
    accel_mps2: float = 4.0
    origin_lat_deg: float = 37.39
    origin_lon_deg: float = -122.081
    heading0_rad: float = 0.0
    pattern: tuple[SpeedSegment, ...] = field(default=DEFAULT_PATTERN)
    turns: tuple[Turn, ...] = field(default=DEFAULT_TURNS)

    def __post_init__(self) -> None:
        if not self.duration_s > 0:
            raise DataValidationError(f"duration must be > 0, got {self.duration_s}", field="duration_s")
        if not self.rate_hz > 0:
            raise DataValidationError(f"sample rate must be > 0, got {self.rate_hz}", field="rate_hz")
        for name in ("sigma_gps_m", "sigma_speed_mps", "sigma_yaw_rad", "gps_speed_noise_mps", "gps_noise_tau_s"):
            if getattr(self, name) < 0:
                raise DataValidationError("noise parameters must be >= 0", field=name)
        if not self.accel_mps2 > 0:
            raise DataValidationError("acceleration limit must be > 0", field="accel_mps2")
        if not self.pattern or any(s.duration_s <= 0 or s.speed_mps < 0 for s in self.pattern):
            raise DataValidationError("speed pattern needs segments with positive duration", field="pattern")

    @property
    def cycle_s(self) -> float:
        return sum(s.duration_s for s in self.pattern)

    @property
    def n_samples(self) -> int:
        return int(round(self.duration_s * self.rate_hz))

    @classmethod
    def constant(cls, speed_mps: float, heading_rad: float = 0.0, **overrides: Any) -> SynthSpec:
        """A straight drive at one speed with no stops or turns."""
        return cls(pattern=(SpeedSegment(1.0, speed_mps),), turns=(), heading0_rad=heading_rad, **overrides)

    def noise_free(self) -> SynthSpec:
        return replace(
            self, sigma_gps_m=0.0, sigma_speed_mps=0.0, sigma_yaw_rad=0.0, gps_speed_noise_mps=0.0
        )


def _target_speed(spec: SynthSpec, t: np.ndarray) -> np.ndarray:
    phase = np.mod(t, spec.cycle_s)
    edges = np.cumsum([s.duration_s for s in spec.pattern])
    idx = np.minimum(np.searchsorted(edges, phase, side="right"), len(spec.pattern) - 1)
    return np.array([s.speed_mps for s in spec.pattern])[idx]


def _rate_limited(target: np.ndarray, dt: float, accel: float) -> np.ndarray:
    v = np.empty_like(target)
    v[0] = target[0]
    max_step = accel * dt
    current = target[0]
    for i in range(1, len(target)):
        current += min(max(target[i] - current, -max_step), max_step)
        v[i] = current
    return v


def _heading(spec: SynthSpec, t: np.ndarray) -> np.ndarray:
    cycles, phase = np.divmod(t, spec.cycle_s)
    heading = np.full_like(t, spec.heading0_rad)
    for turn in spec.turns:
        progress = np.clip((phase - turn.at_s) / turn.duration_s, 0.0, 1.0)
        heading += (cycles + progress) * turn.delta_rad
    return heading


def _gps_noise(spec: SynthSpec, rng: np.random.Generator, n: int) -> np.ndarray:
    """(n, 2) east/north position noise in meters."""
    white = rng.standard_normal((n, 2)) * spec.sigma_gps_m
    if spec.gps_noise_tau_s == 0 or n < 2:
        return white
    a = math.exp(-1.0 / (spec.gps_noise_tau_s * spec.rate_hz))
    b = math.sqrt(1.0 - a * a)
    noise = np.empty_like(white)
    noise[0] = white[0]
    for axis in range(2):
        noise[1:, axis], _ = lfilter([b], [1.0, -a], white[1:, axis], zi=[a * white[0, axis]])
    return noise


def generate_synthetic(spec: SynthSpec, seed: int) -> Trajectory:
    """
    Generate a clean, labeled trajectory.

    The true path is integrated with the left Riemann sum of speed and
    heading, the same sum the kinematic predictor uses. Speed sensors read
    exactly zero while the vehicle is stationary.
    """
    n = spec.n_samples
    if n < 2:
        raise DataValidationError(f"spec yields {n} samples, need at least 2")
    rng = np.random.default_rng(seed)

    dt = 1.0 / spec.rate_hz
    t = np.arange(n) * dt
    v_true = _rate_limited(_target_speed(spec, t), dt, spec.accel_mps2)
    heading = _heading(spec, t)

    step = v_true[:-1] * dt
    east = np.concatenate([[0.0], np.cumsum(step * np.cos(heading[:-1]))])
    north = np.concatenate([[0.0], np.cumsum(step * np.sin(heading[:-1]))])

    noise = _gps_noise(spec, rng, n)
    speed_noise = rng.standard_normal(n) * spec.sigma_speed_mps
    gps_speed_noise = rng.standard_normal(n) * spec.gps_speed_noise_mps
    yaw_noise = rng.standard_normal(n) * spec.sigma_yaw_rad

    moving = v_true > 0
    speed = np.where(moving, np.maximum(v_true + speed_noise, 0.0), 0.0)
    gps_speed = np.where(moving, np.maximum(v_true + gps_speed_noise, 0.0), 0.0)
    yaw = wrap_angles(heading + yaw_noise)

    lat0 = math.radians(spec.origin_lat_deg)
    lon0 = math.radians(spec.origin_lon_deg)
    lat = lat0 + (north + noise[:, 1]) / EARTH_RADIUS_M

    # Longitude increments use the midpoint latitude of each step
    east_noisy = east + noise[:, 0]
    mid_lat = 0.5 * (lat[:-1] + lat[1:])
    dlon = np.diff(east_noisy) / (EARTH_RADIUS_M * np.cos(mid_lat))
    lon = lon0 + np.concatenate([[0.0], np.cumsum(dlon)])
    lon = wrap_angles(lon)

    logger.debug("Generated %d samples (%.1f s) with seed %d", n, spec.duration_s, seed)
    return Trajectory(
        t=t,
        speed=speed,
        yaw=yaw,
        lat=lat,
        lon=lon,
        gps_speed=gps_speed,
        source=f"synthetic-{seed}",
    )
