"""
Streaming single-cluster DBSCAN with a recursively updated radius.

There is one cluster (the clean error distribution) and no min-points
parameter. A value joins the cluster when it lies within
epsilon = max(k * sigma, floor) of the running mean; only joining values
update the running mean and standard deviation.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import replace
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from spoofguard.errors import DataValidationError, ModelFormatError
from spoofguard.models import RecursiveStats, SigmaUpdate, StepResult

logger = logging.getLogger(__name__)

STATS_FORMAT = "spoofguard-stats"
STATS_FORMAT_VERSION = 1


def warm_start(
    clean_errors: Sequence[float] | np.ndarray,
    k: float = 5.0,
    epsilon_floor: float = 0.01,
    sigma_update: SigmaUpdate = SigmaUpdate.WELFORD,
) -> RecursiveStats:
    """
    Initial state from a batch of clean errors.

    sigma is the population standard deviation (divisor n), matching the
    divisor of the recursive update.

    Raises:
        DataValidationError: If the batch is empty or not finite.
    """
    values = np.asarray(clean_errors, dtype=np.float64).ravel()
    if values.size == 0:
        raise DataValidationError("warm start needs at least one clean error value")
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        raise DataValidationError("non-finite clean error value", row=int(bad[0]))
    stats = RecursiveStats(
        n=int(values.size),
        mu=float(values.mean()),
        sigma=float(values.std()),
        k=k,
        epsilon_floor=epsilon_floor,
        sigma_update=sigma_update,
    )
    logger.debug("Warm start: n=%d mu=%.6f sigma=%.6f epsilon=%.6f", stats.n, stats.mu, stats.sigma, stats.epsilon)
    return stats


def step(x: float, s: RecursiveStats) -> StepResult:
    """
    Classify one value against the cluster and update the state if it joins.

    An anomalous value leaves the state unchanged (the same object is returned).
    """
    if not math.isfinite(x):
        raise DataValidationError(f"error value must be finite, got {x}")
    deviation = abs(x - s.mu)
    epsilon = s.epsilon
    if deviation > epsilon:
        return StepResult(anomaly=True, epsilon=epsilon, deviation=deviation, stats_after=s)

    n = s.n + 1
    mu = s.mu + (x - s.mu) / n
    if s.sigma_update is SigmaUpdate.WELFORD:
        spread = (x - s.mu) * (x - mu)
    else:
        spread = (x - mu) ** 2
    var = ((n - 1) * s.sigma**2 + spread) / n
    sigma = math.sqrt(max(var, 0.0))
    after = replace(s, n=n, mu=mu, sigma=sigma)
    return StepResult(anomaly=False, epsilon=epsilon, deviation=deviation, stats_after=after)


def run_stream(errors: Iterable[float], s0: RecursiveStats) -> list[StepResult]:
    """Fold step over a stream; errors carry the index of the offending value."""
    results: list[StepResult] = []
    s = s0
    for i, x in enumerate(errors):
        try:
            result = step(float(x), s)
        except DataValidationError as e:
            raise DataValidationError(f"stream value rejected: {e}", row=i) from e
        results.append(result)
        s = result.stats_after
    return results


class AdaptiveDBSCAN:
    """Stateful wrapper over step for use inside a detection loop."""

    def __init__(self, stats: RecursiveStats) -> None:
        self._stats = stats
        self.accepted = 0
        self.rejected = 0

    @property
    def stats(self) -> RecursiveStats:
        return self._stats

    @property
    def epsilon(self) -> float:
        return self._stats.epsilon

    def peek(self, x: float) -> float:
        """Deviation ratio |x - mu| / epsilon without touching the state."""
        eps = self._stats.epsilon
        deviation = abs(x - self._stats.mu)
        return deviation / eps if eps > 0 else math.inf

    def step(self, x: float) -> StepResult:
        result = step(x, self._stats)
        self._stats = result.stats_after
        if result.anomaly:
            self.rejected += 1
        else:
            self.accepted += 1
        return result

    def __repr__(self) -> str:
        s = self._stats
        return f"AdaptiveDBSCAN(n={s.n}, mu={s.mu:.4f}, sigma={s.sigma:.4f}, epsilon={s.epsilon:.4f})"


def stats_to_dict(s: RecursiveStats) -> dict[str, Any]:
    return {
        "n": s.n,
        "mu": s.mu,
        "sigma": s.sigma,
        "k": s.k,
        "epsilon_floor": s.epsilon_floor,
        "sigma_update": s.sigma_update.value,
    }


def stats_from_dict(data: dict[str, Any]) -> RecursiveStats:
    try:
        return RecursiveStats(
            n=int(data["n"]),
            mu=float(data["mu"]),
            sigma=float(data["sigma"]),
            k=float(data.get("k", 5.0)),
            epsilon_floor=float(data.get("epsilon_floor", 0.01)),
            sigma_update=SigmaUpdate(data.get("sigma_update", SigmaUpdate.WELFORD.value)),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ModelFormatError(f"invalid stats snapshot: {e}") from e


def save_stats(s: RecursiveStats, path: str | Path) -> Path:
    """Write a snapshot that lets a stream resume exactly where it stopped."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {"format": STATS_FORMAT, "version": STATS_FORMAT_VERSION, **stats_to_dict(s)}
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return path


def load_stats(path: str | Path) -> RecursiveStats:
    path = Path(path)
    if not path.exists():
        raise ModelFormatError(f"stats snapshot not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ModelFormatError(f"corrupt stats snapshot {path.name}: {e}") from e
    if not isinstance(data, dict) or data.get("format") != STATS_FORMAT:
        raise ModelFormatError(f"{path.name} is not a stats snapshot")
    if data.get("version") != STATS_FORMAT_VERSION:
        raise ModelFormatError(f"unsupported stats snapshot version {data.get('version')!r}", field="version")
    return stats_from_dict(data)
