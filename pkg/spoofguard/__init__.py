"""spoofguard - Detect GPS spoofing by cross-checking GPS against dead reckoning."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("spoofguard")
except PackageNotFoundError:
    __version__ = "0.1.0"

from spoofguard.adaptive_dbscan import AdaptiveDBSCAN, run_stream, step, warm_start
from spoofguard.attacks import CampaignConfig, build_campaign, inject
from spoofguard.detector import Calibration, DetectorConfig, calibrate, calibrate_detector, detect
from spoofguard.errors import (
    ConfigError,
    DataValidationError,
    DegenerateInputError,
    InjectionError,
    ModelFormatError,
    NumericalError,
    SpoofGuardError,
)
from spoofguard.geo import haversine_displacement, local_displacement, offset_point
from spoofguard.ingest import load_csv, make_windows, save_csv, window_arrays
from spoofguard.metrics import auc, evaluate, score, window_truth
from spoofguard.models import (
    DEFAULT_THRESHOLDS,
    AnomalySource,
    AttackClass,
    AttackSpec,
    GeoPoint,
    LocalDisplacement,
    PredictorWindow,
    RecursiveStats,
    SensorSample,
    StaticThresholds,
    Trajectory,
    Verdict,
)
from spoofguard.predictor import KinematicPredictor, MlpModel, kinematic_predict, mlp_forward, mlp_train
from spoofguard.synthetic import SynthSpec, generate_synthetic

__all__ = [
    # Models
    "GeoPoint",
    "LocalDisplacement",
    "SensorSample",
    "Trajectory",
    "PredictorWindow",
    "StaticThresholds",
    "DEFAULT_THRESHOLDS",
    "RecursiveStats",
    "Verdict",
    "AttackSpec",
    "AttackClass",
    "AnomalySource",
    # Geometry and data
    "haversine_displacement",
    "local_displacement",
    "offset_point",
    "load_csv",
    "save_csv",
    "make_windows",
    "window_arrays",
    "SynthSpec",
    "generate_synthetic",
    # Prediction
    "kinematic_predict",
    "KinematicPredictor",
    "MlpModel",
    "mlp_forward",
    "mlp_train",
    # Detection
    "warm_start",
    "step",
    "run_stream",
    "AdaptiveDBSCAN",
    "calibrate",
    "calibrate_detector",
    "Calibration",
    "DetectorConfig",
    "detect",
    # Attacks and evaluation
    "inject",
    "CampaignConfig",
    "build_campaign",
    "window_truth",
    "score",
    "auc",
    "evaluate",
    # Errors
    "SpoofGuardError",
    "ConfigError",
    "DataValidationError",
    "DegenerateInputError",
    "ModelFormatError",
    "InjectionError",
    "NumericalError",
]
