"""Builders for synthetic trajectories and verdicts used across the tests."""

from __future__ import annotations

from spoofguard.models import AnomalySource, AttackClass, Trajectory, Verdict
from spoofguard.synthetic import SpeedSegment, SynthSpec, generate_synthetic


def straight(speed: float = 10.0, heading: float = 0.0, duration_s: float = 20.0) -> Trajectory:
    """Noise-free drive at constant speed and heading."""
    return generate_synthetic(SynthSpec.constant(speed, heading, duration_s=duration_s).noise_free(), seed=0)


def parked(duration_s: float = 10.0) -> Trajectory:
    return straight(0.0, duration_s=duration_s)


def park_then_drive(park_s: float = 10.0, speed: float = 10.0, duration_s: float = 20.0) -> Trajectory:
    """Noise-free: stationary for park_s, then straight east at speed."""
    spec = SynthSpec(
        duration_s=duration_s,
        pattern=(SpeedSegment(park_s, 0.0), SpeedSegment(duration_s, speed)),
        turns=(),
    ).noise_free()
    return generate_synthetic(spec, seed=0)


def drive(seed: int, duration_s: float = 60.0, sigma_gps_m: float = 0.05) -> Trajectory:
    """Default stop-and-go drive with sensor and GPS noise."""
    return generate_synthetic(SynthSpec(duration_s=duration_s, sigma_gps_m=sigma_gps_m), seed)


def verdict(
    k: int,
    flagged: bool = False,
    disp: float = 0.1,
    epsilon: float = 0.5,
    attack_class: AttackClass | None = None,
) -> Verdict:
    if attack_class is None:
        attack_class = AttackClass.TURN_BY_TURN if flagged else AttackClass.CLEAN
    return Verdict(
        window_index=k,
        anomaly_source=AnomalySource.STATIC if flagged else AnomalySource.NONE,
        attack_class=attack_class,
        disp_error=disp,
        speed_error=0.0,
        epsilon_used=epsilon,
    )
