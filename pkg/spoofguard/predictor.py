"""Per-window displacement predictors: dead reckoning and a small MLP."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Protocol, Sequence, runtime_checkable

import numpy as np

from spoofguard.errors import ConfigError, DataValidationError, ModelFormatError, NumericalError
from spoofguard.ingest import WindowSet
from spoofguard.models import WINDOW_SIZE, LocalDisplacement, PredictorWindow

logger = logging.getLogger(__name__)

INPUT_ORDER = ("speeds", "cos_yaw", "sin_yaw", "dts")
LAYER_SIZES = (4 * WINDOW_SIZE, 40, 20, 2)
ACTIVATIONS = ("tanh", "tanh", "linear")
MODEL_FORMAT = "spoofguard-mlp"
MODEL_FORMAT_VERSION = 1

MIN_TRAINING_WINDOWS = 100


@runtime_checkable
class Predictor(Protocol):
    """Anything that maps a WindowSet to (N, 2) predicted displacements."""

    name: str

    def predict(self, windows: WindowSet) -> np.ndarray: ...


def kinematic_arrays(features: np.ndarray) -> np.ndarray:
    """Dead-reckoned (dx, dy) for every row of an (N, 40) feature matrix."""
    n = WINDOW_SIZE
    speeds = features[:, :n]
    dts = features[:, 3 * n :]
    step = speeds * dts
    dx = np.sum(step * features[:, n : 2 * n], axis=1)
    dy = np.sum(step * features[:, 2 * n : 3 * n], axis=1)
    return np.stack([dx, dy], axis=1)


def kinematic_predict(w: PredictorWindow) -> LocalDisplacement:
    """Sum of speed * dt along the measured heading over the window."""
    step = w.speeds * w.dts
    return LocalDisplacement(float(np.sum(step * w.cos_yaw)), float(np.sum(step * w.sin_yaw)))


class KinematicPredictor:
    """Closed-form dead-reckoning predictor; needs no training."""

    name = "kinematic"

    def predict(self, windows: WindowSet) -> np.ndarray:
        return kinematic_arrays(windows.features)


@dataclass(frozen=True, eq=False)
class MlpModel:
    """
    Fully connected 40-40-20-2 network with tanh hidden layers.

    Weights are stored (out, in). Inputs are standardized with the stored
    mean and scale before the first layer.
    """

    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    mean: np.ndarray = field(default_factory=lambda: np.zeros(LAYER_SIZES[0]))
    scale: np.ndarray = field(default_factory=lambda: np.ones(LAYER_SIZES[0]))

    name = "mlp"

    def __post_init__(self) -> None:
        if len(self.weights) != len(LAYER_SIZES) - 1 or len(self.biases) != len(self.weights):
            raise ModelFormatError(f"expected {len(LAYER_SIZES) - 1} layers, got {len(self.weights)}")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            expected = (LAYER_SIZES[i + 1], LAYER_SIZES[i])
            if w.shape != expected or b.shape != (LAYER_SIZES[i + 1],):
                raise ModelFormatError(
                    f"layer {i + 1}: weight {w.shape} / bias {b.shape}, expected {expected} / ({expected[0]},)"
                )
        for name in ("mean", "scale"):
            if np.shape(getattr(self, name)) != (LAYER_SIZES[0],):
                raise ModelFormatError(f"normalization {name} must have {LAYER_SIZES[0]} values", field=name)
        if not all(np.all(np.isfinite(p)) for p in self.parameters()):
            raise ModelFormatError("model parameters must be finite")
        if np.any(self.scale <= 0):
            raise ModelFormatError("normalization scale must be positive", field="scale")

    def parameters(self) -> list[np.ndarray]:
        """Parameters in layer order [W1, b1, W2, b2, W3, b3]."""
        params: list[np.ndarray] = []
        for w, b in zip(self.weights, self.biases):
            params.extend((w, b))
        return params

    def standardize(self, features: np.ndarray) -> np.ndarray:
        return (features - self.mean) / self.scale

    def forward(self, features: np.ndarray) -> np.ndarray:
        """Outputs for an (N, 40) batch, or a single 40-vector."""
        x = np.asarray(features, dtype=np.float64)
        single = x.ndim == 1
        if x.shape[-1] != LAYER_SIZES[0]:
            raise DataValidationError(f"expected {LAYER_SIZES[0]} input values, got {x.shape[-1]}")
        out = _activations(self.parameters(), self.standardize(np.atleast_2d(x)))[-1]
        return out[0] if single else out

    def predict(self, windows: WindowSet) -> np.ndarray:
        return self.forward(windows.features)


def _activations(params: list[np.ndarray], h0: np.ndarray) -> list[np.ndarray]:
    """[input, hidden1, hidden2, output] for standardized inputs."""
    w1, b1, w2, b2, w3, b3 = params
    a1 = np.tanh(h0 @ w1.T + b1)
    a2 = np.tanh(a1 @ w2.T + b2)
    return [h0, a1, a2, a2 @ w3.T + b3]


def mlp_forward(m: MlpModel, w: PredictorWindow) -> LocalDisplacement:
    """Predicted displacement for one window."""
    out = m.forward(w.features)
    return LocalDisplacement(float(out[0]), float(out[1]))


def init_model(
    rng: np.random.Generator,
    mean: np.ndarray | None = None,
    scale: np.ndarray | None = None,
    output_bias: np.ndarray | None = None,
) -> MlpModel:
    """Glorot-uniform weights; zero biases unless output_bias seeds the last layer."""
    weights = []
    biases = []
    for fan_in, fan_out in zip(LAYER_SIZES[:-1], LAYER_SIZES[1:]):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    if output_bias is not None:
        biases[-1] = np.asarray(output_bias, dtype=np.float64).copy()
    return MlpModel(
        weights=tuple(weights),
        biases=tuple(biases),
        mean=np.zeros(LAYER_SIZES[0]) if mean is None else mean,
        scale=np.ones(LAYER_SIZES[0]) if scale is None else scale,
    )


def mae_loss_and_grads(
    model: MlpModel, features: np.ndarray, targets: np.ndarray
) -> tuple[float, list[np.ndarray]]:
    """
    Mean absolute error over all outputs and its gradient.

    Gradients follow parameters() order. A residual of exactly zero
    contributes a zero subgradient.
    """
    params = model.parameters()
    h0, a1, a2, out = _activations(params, model.standardize(features))
    residual = out - targets
    loss = float(np.mean(np.abs(residual)))

    _, _, w2, _, w3, _ = params
    g_out = np.sign(residual) / residual.size
    g_z2 = (g_out @ w3) * (1.0 - a2**2)
    g_z1 = (g_z2 @ w2) * (1.0 - a1**2)
    grads = [
        g_z1.T @ h0,
        g_z1.sum(axis=0),
        g_z2.T @ a1,
        g_z2.sum(axis=0),
        g_out.T @ a2,
        g_out.sum(axis=0),
    ]
    return loss, grads


def mae(model: MlpModel, features: np.ndarray, targets: np.ndarray) -> float:
    return float(np.mean(np.abs(model.forward(features) - targets)))


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer and split settings for mlp_train."""

    epochs: int = 200
    batch_size: int = 32
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    train_fraction: float = 0.7
    seed: int = 0

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if not 0 < self.train_fraction < 1:
            raise ConfigError(f"train_fraction must be in (0, 1), got {self.train_fraction}")
        if not self.learning_rate > 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")


@dataclass
class LossHistory:
    """Per-epoch train and held-out MAE in meters."""

    train_mae: list[float] = field(default_factory=list)
    test_mae: list[float] = field(default_factory=list)

    def record(self, train: float, test: float) -> None:
        self.train_mae.append(train)
        self.test_mae.append(test)

    @property
    def epochs(self) -> int:
        return len(self.train_mae)

    def rows(self) -> list[tuple[int, float, float]]:
        return [(i + 1, tr, te) for i, (tr, te) in enumerate(zip(self.train_mae, self.test_mae))]


def _as_arrays(data: WindowSet | Sequence[PredictorWindow]) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(data, WindowSet):
        return np.asarray(data.features, dtype=np.float64), np.asarray(data.targets, dtype=np.float64)
    windows = list(data)
    if not windows:
        return np.empty((0, LAYER_SIZES[0])), np.empty((0, 2))
    ws = WindowSet.from_windows(windows)
    return ws.features, ws.targets


def mlp_train(
    data: WindowSet | Sequence[PredictorWindow], cfg: TrainConfig | None = None
) -> tuple[MlpModel, LossHistory]:
    """
    Train the MLP with Adam on mean absolute error.

    Windows are split train/test once with the seeded generator and the
    training split is reshuffled every epoch. Input standardization is
    computed on the training split only; constant columns standardize to
    exactly zero. The output bias starts at the median training target, so
    a constant-target set is fitted before the first update.

    Raises:
        DataValidationError: Fewer than 100 windows or non-finite values.
        NumericalError: A non-finite loss or parameter appears during training.
    """
    cfg = cfg or TrainConfig()
    features, targets = _as_arrays(data)
    n = len(features)
    if n < MIN_TRAINING_WINDOWS:
        raise DataValidationError(f"need at least {MIN_TRAINING_WINDOWS} windows to train, got {n}")
    if not (np.all(np.isfinite(features)) and np.all(np.isfinite(targets))):
        raise DataValidationError("training windows contain non-finite values")

    rng = np.random.default_rng(cfg.seed)
    order = rng.permutation(n)
    n_train = max(1, min(n - 1, int(round(cfg.train_fraction * n))))
    train_idx, test_idx = order[:n_train], order[n_train:]
    x_train, y_train = features[train_idx], targets[train_idx]
    x_test, y_test = features[test_idx], targets[test_idx]

    constant = np.all(x_train == x_train[0], axis=0)
    mean = np.where(constant, x_train[0], x_train.mean(axis=0))
    std = x_train.std(axis=0)
    scale = np.where(constant | (std == 0), 1.0, std)
    model = init_model(rng, mean=mean, scale=scale, output_bias=np.median(y_train, axis=0))
    params = model.parameters()

    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    step = 0
    history = LossHistory()
    logger.info(
        "Training MLP on %d windows (%d held out) for %d epochs", n_train, len(test_idx), cfg.epochs
    )

    for epoch in range(1, cfg.epochs + 1):
        perm = rng.permutation(n_train)
        for batch, start in enumerate(range(0, n_train, cfg.batch_size), start=1):
            idx = perm[start : start + cfg.batch_size]
            loss, grads = mae_loss_and_grads(model, x_train[idx], y_train[idx])
            if not math.isfinite(loss):
                raise NumericalError("non-finite training loss", epoch=epoch, batch=batch)

            step += 1
            correction1 = 1.0 - cfg.beta1**step
            correction2 = 1.0 - cfg.beta2**step
            for p, g, m_i, v_i in zip(params, grads, m, v):
                m_i *= cfg.beta1
                m_i += (1.0 - cfg.beta1) * g
                v_i *= cfg.beta2
                v_i += (1.0 - cfg.beta2) * g * g
                p -= cfg.learning_rate * (m_i / correction1) / (np.sqrt(v_i / correction2) + cfg.adam_eps)
            if not all(np.all(np.isfinite(p)) for p in params):
                raise NumericalError("non-finite parameter after update", epoch=epoch, batch=batch)

        history.record(mae(model, x_train, y_train), mae(model, x_test, y_test))
        if epoch == 1 or epoch % 50 == 0 or epoch == cfg.epochs:
            logger.debug(
                "epoch %d: train MAE %.4f m, test MAE %.4f m", epoch, history.train_mae[-1], history.test_mae[-1]
            )

    return model, history


def model_to_dict(m: MlpModel) -> dict[str, Any]:
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_FORMAT_VERSION,
        "layer_sizes": list(LAYER_SIZES),
        "activations": list(ACTIVATIONS),
        "input_order": list(INPUT_ORDER),
        "window_size": WINDOW_SIZE,
        "normalization": {"mean": m.mean.tolist(), "scale": m.scale.tolist()},
        "layers": [{"weight": w.tolist(), "bias": b.tolist()} for w, b in zip(m.weights, m.biases)],
    }


def model_from_dict(data: dict[str, Any]) -> MlpModel:
    """Rebuild a model, rejecting files written for another layout."""
    if data.get("format") != MODEL_FORMAT:
        raise ModelFormatError(f"not a spoofguard model file (format={data.get('format')!r})", field="format")
    if data.get("version") != MODEL_FORMAT_VERSION:
        raise ModelFormatError(
            f"unsupported model version {data.get('version')!r}, expected {MODEL_FORMAT_VERSION}", field="version"
        )
    for key, expected in (
        ("layer_sizes", list(LAYER_SIZES)),
        ("activations", list(ACTIVATIONS)),
        ("input_order", list(INPUT_ORDER)),
    ):
        if data.get(key) != expected:
            raise ModelFormatError(f"{key} {data.get(key)!r} does not match {expected}", field=key)
    try:
        layers = data["layers"]
        norm = data["normalization"]
        return MlpModel(
            weights=tuple(np.array(layer["weight"], dtype=np.float64) for layer in layers),
            biases=tuple(np.array(layer["bias"], dtype=np.float64) for layer in layers),
            mean=np.array(norm["mean"], dtype=np.float64),
            scale=np.array(norm["scale"], dtype=np.float64),
        )
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, ModelFormatError):
            raise
        raise ModelFormatError(f"corrupt model file: {e}") from e


def save_model(m: MlpModel, path: str | Path) -> Path:
    """Write the model as JSON; floats use shortest round-trip repr."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(model_to_dict(m), indent=1) + "\n", encoding="utf-8")
    return path


def load_model(path: str | Path) -> MlpModel:
    path = Path(path)
    if not path.exists():
        raise ModelFormatError(f"model file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ModelFormatError(f"corrupt model file {path.name}: {e}") from e
    if not isinstance(data, dict):
        raise ModelFormatError(f"corrupt model file {path.name}: expected an object")
    return model_from_dict(data)
