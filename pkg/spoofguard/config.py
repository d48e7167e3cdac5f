"""JSON run configuration shared by every CLI command."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, TypeVar

from spoofguard.attacks import CampaignConfig
from spoofguard.detector import DetectorConfig, MonitorMode
from spoofguard.errors import ConfigError, DataValidationError
from spoofguard.models import DEFAULT_THRESHOLDS, AttackClass, SigmaUpdate, StaticThresholds
from spoofguard.predictor import TrainConfig
from spoofguard.synthetic import SynthSpec

logger = logging.getLogger(__name__)

T = TypeVar("T")


@dataclass(frozen=True)
class PathsConfig:
    """Input locations; None means the default place inside the output directory."""

    data: str | None = None
    model: str | None = None
    calibration: str | None = None


@dataclass(frozen=True)
class SynthConfig:
    trajectories: int = 5
    duration_s: float = 120.0
    rate_hz: float = 100.0
    sigma_gps_m: float = 0.05
    sigma_speed_mps: float = 0.1
    sigma_yaw_rad: float = 0.005
    gps_speed_noise_mps: float = 0.1
    gps_noise_tau_s: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.trajectories < 1:
            raise ConfigError("synth.trajectories must be >= 1")

    def spec(self) -> SynthSpec:
        try:
            return SynthSpec(
                duration_s=self.duration_s,
                rate_hz=self.rate_hz,
                sigma_gps_m=self.sigma_gps_m,
                sigma_speed_mps=self.sigma_speed_mps,
                sigma_yaw_rad=self.sigma_yaw_rad,
                gps_speed_noise_mps=self.gps_speed_noise_mps,
                gps_noise_tau_s=self.gps_noise_tau_s,
            )
        except DataValidationError as e:
            raise ConfigError(f"invalid synth section: {e}") from e

    def seeds(self) -> list[int]:
        """One generator seed per trajectory."""
        return [self.seed * 1000 + i for i in range(self.trajectories)]


class PredictorKind(Enum):
    KINEMATIC = "kinematic"
    MLP = "mlp"


@dataclass(frozen=True)
class PredictorConfig:
    kind: PredictorKind = PredictorKind.KINEMATIC


class ThresholdMode(Enum):
    CALIBRATE = "calibrate"  # maxima of the clean set
    PUBLISHED = "published"  # 1.79 m, 2.91 m/s
    EXPLICIT = "explicit"  # values given below


@dataclass(frozen=True)
class ThresholdsConfig:
    mode: ThresholdMode = ThresholdMode.PUBLISHED
    disp_thresh_m: float = DEFAULT_THRESHOLDS.disp_thresh
    speed_thresh_mps: float = DEFAULT_THRESHOLDS.speed_thresh

    def fixed(self) -> StaticThresholds | None:
        """Thresholds that override calibration, or None to keep the calibrated ones."""
        if self.mode is ThresholdMode.PUBLISHED:
            return DEFAULT_THRESHOLDS
        if self.mode is ThresholdMode.EXPLICIT:
            return StaticThresholds(self.disp_thresh_m, self.speed_thresh_mps)
        return None


@dataclass(frozen=True)
class AdaptiveConfig:
    k: float = 5.0
    epsilon_floor: float = 0.01
    sigma_update: SigmaUpdate = SigmaUpdate.WELFORD

    def __post_init__(self) -> None:
        if not self.k > 0:
            raise ConfigError(f"adaptive.k must be > 0, got {self.k}")
        if self.epsilon_floor < 0:
            raise ConfigError("adaptive.epsilon_floor must be >= 0")


@dataclass(frozen=True)
class RunConfig:
    """Complete, serializable description of a run."""

    paths: PathsConfig = field(default_factory=PathsConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)
    predictor: PredictorConfig = field(default_factory=PredictorConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    thresholds: ThresholdsConfig = field(default_factory=ThresholdsConfig)
    adaptive: AdaptiveConfig = field(default_factory=AdaptiveConfig)
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    campaign: CampaignConfig = field(default_factory=CampaignConfig)


_SECTIONS: dict[str, type[Any]] = {
    "paths": PathsConfig,
    "synth": SynthConfig,
    "predictor": PredictorConfig,
    "train": TrainConfig,
    "thresholds": ThresholdsConfig,
    "adaptive": AdaptiveConfig,
    "detector": DetectorConfig,
    "campaign": CampaignConfig,
}

# Fields whose JSON form needs converting back to a Python type
_CONVERTERS: dict[str, Any] = {
    "kind": PredictorKind,
    "mode": ThresholdMode,
    "sigma_update": SigmaUpdate,
    "monitor": MonitorMode,
    "kinds": lambda v: tuple(AttackClass(k) for k in v),
    "magnitude_range": tuple,
    "stop_speed_range_mps": tuple,
    "duration_range_s": tuple,
}


def _build(cls: type[T], data: Any, section: str) -> T:
    if not isinstance(data, dict):
        raise ConfigError(f"config section '{section}' must be an object")
    known = {f.name for f in dataclasses.fields(cls)}  # type: ignore[arg-type]
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown key(s) in '{section}': {', '.join(unknown)}")
    values: dict[str, Any] = {}
    for key, value in data.items():
        convert = _CONVERTERS.get(key)
        try:
            values[key] = convert(value) if convert is not None and value is not None else value
        except (ValueError, TypeError) as e:
            raise ConfigError(f"invalid value for '{section}.{key}': {value!r}") from e
    try:
        return cls(**values)
    except ConfigError:
        raise
    except (DataValidationError, TypeError, ValueError) as e:
        raise ConfigError(f"invalid config section '{section}': {e}") from e


def config_from_dict(data: dict[str, Any]) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(data) - set(_SECTIONS))
    if unknown:
        raise ConfigError(f"unknown config section(s): {', '.join(unknown)}")
    sections = {name: _build(_SECTIONS[name], data[name], name) for name in data}
    return RunConfig(**sections)


def load_config(path: str | Path | None) -> RunConfig:
    """
    Load a run config; a missing path gives the defaults.

    Raises:
        ConfigError: If the file is missing, not JSON, or has unknown keys.
    """
    if path is None:
        return RunConfig()
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path.name} is not valid JSON: {e}") from e
    cfg = config_from_dict(data)
    logger.debug("Loaded config %s (hash %s)", path, config_hash(cfg))
    return cfg


def _plain(value: Any) -> Any:
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (tuple, list)):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    return value


def config_to_dict(cfg: RunConfig) -> dict[str, Any]:
    """JSON-ready form that config_from_dict reads back to an equal config."""
    result: dict[str, Any] = {}
    for name in _SECTIONS:
        section = getattr(cfg, name)
        result[name] = {f.name: _plain(getattr(section, f.name)) for f in dataclasses.fields(section)}
    return result


def config_hash(cfg: RunConfig) -> str:
    """First 16 hex digits of SHA-256 over the canonical JSON form."""
    canonical = json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def apply_seed(cfg: RunConfig, seed: int | None) -> RunConfig:
    """Override the synthetic, training and campaign seeds together."""
    if seed is None:
        return cfg
    return replace(
        cfg,
        synth=replace(cfg.synth, seed=seed),
        train=replace(cfg.train, seed=seed),
        campaign=replace(cfg.campaign, seed=seed),
    )
