"""Minimal dense network with manual backpropagation.

2-D float64 numpy arrays play the role of matrices throughout (row-major,
rows = samples). Models are plain dataclasses; training mutates parameters
in place, single-threaded and fully deterministic given the seeds. A
trained model is safe for concurrent read-only inference.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigError, NumericalDivergenceError, ShapeError
from .rng import RngStream

ACTIVATIONS = ("tanh", "relu", "identity")
HEAD_KINDS = ("softmax-ce", "edl", "prior-net")
OPTIMIZERS = ("adam", "sgd")

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class Layer:
    """Affine layer: weight (in_dim, out_dim), bias (out_dim,), activation."""

    weight: np.ndarray
    bias: np.ndarray
    activation: str

    @property
    def in_dim(self) -> int:
        return self.weight.shape[0]

    @property
    def out_dim(self) -> int:
        return self.weight.shape[1]


@dataclass
class MLPModel:
    layers: list[Layer]
    dropout_rate: float
    head_kind: str
    num_classes: int

    def __post_init__(self):
        if not self.layers:
            raise ConfigError("model needs at least one layer")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if self.head_kind not in HEAD_KINDS:
            raise ConfigError(f"unknown head_kind {self.head_kind!r}")
        for i, layer in enumerate(self.layers):
            if layer.activation not in ACTIVATIONS:
                raise ConfigError(f"layer {i}: unknown activation {layer.activation!r}")
            if layer.weight.shape[1] != layer.bias.shape[0]:
                raise ShapeError(f"layer {i}: bias width does not match weight")
            if i > 0 and self.layers[i - 1].out_dim != layer.in_dim:
                raise ShapeError(f"layer {i - 1} -> {i}: widths do not chain")
        if self.layers[-1].out_dim != self.num_classes:
            raise ShapeError("final layer width must equal num_classes")

    @property
    def input_dim(self) -> int:
        return self.layers[0].in_dim


@dataclass
class TrainConfig:
    learning_rate: float = 1e-4
    epochs: int = 5
    batch_size: int = 32
    seed: int = 0
    class_weights: np.ndarray | None = None
    loss_kind: str = "weighted-ce"
    anneal_epochs: int = 10
    pn_concentration: float = 100.0
    optimizer: str = "adam"

    def __post_init__(self):
        # 0 is allowed so an evaluate-only step is expressible; pipelines
        # enforce a strictly positive rate at the experiment level.
        if self.learning_rate < 0:
            raise ConfigError("learning_rate must be >= 0")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.loss_kind not in ("weighted-ce", "edl", "pn"):
            raise ConfigError(f"unknown loss_kind {self.loss_kind!r}")
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(f"unknown optimizer {self.optimizer!r}")
        if self.class_weights is not None:
            self.class_weights = np.asarray(self.class_weights, dtype=float)
            if np.any(self.class_weights <= 0):
                raise ConfigError("class_weights must be positive")


def build_mlp(
    input_dim: int,
    hidden_sizes: list[int],
    num_classes: int,
    rng: RngStream,
    activation: str = "tanh",
    dropout_rate: float = 0.2,
    head_kind: str = "softmax-ce",
) -> MLPModel:
    """Glorot-uniform initialized MLP; output layer is identity (logits)."""
    dims = [input_dim] + list(hidden_sizes) + [num_classes]
    layers = []
    for i in range(len(dims) - 1):
        fan_in, fan_out = dims[i], dims[i + 1]
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weight = rng.uniform(-limit, limit, size=(fan_in, fan_out))
        bias = np.zeros(fan_out)
        act = activation if i < len(dims) - 2 else "identity"
        layers.append(Layer(weight=weight, bias=bias, activation=act))
    return MLPModel(
        layers=layers,
        dropout_rate=dropout_rate,
        head_kind=head_kind,
        num_classes=num_classes,
    )


def _apply_activation(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "tanh":
        return np.tanh(z)
    if kind == "relu":
        return np.maximum(z, 0.0)
    return z


def _activation_grad(z: np.ndarray, a: np.ndarray, kind: str) -> np.ndarray:
    if kind == "tanh":
        return 1.0 - a * a
    if kind == "relu":
        return (z > 0.0).astype(z.dtype)
    return np.ones_like(z)


@dataclass
class _ForwardCache:
    inputs: list[np.ndarray]      # input to each layer (after previous dropout)
    pre_acts: list[np.ndarray]    # z per layer
    acts: list[np.ndarray]        # activation output per layer
    masks: list[np.ndarray | None]  # dropout mask per hidden layer output


def _forward_cached(model: MLPModel, batch: np.ndarray, rng: RngStream | None) -> tuple[np.ndarray, _ForwardCache]:
    x = np.asarray(batch, dtype=float)
    if x.ndim != 2:
        raise ShapeError(f"batch must be 2-D, got shape {x.shape}")
    if x.shape[1] != model.input_dim:
        raise ShapeError(
            f"batch has {x.shape[1]} features, model expects {model.input_dim}"
        )
    cache = _ForwardCache(inputs=[], pre_acts=[], acts=[], masks=[])
    out = x
    last = len(model.layers) - 1
    for i, layer in enumerate(model.layers):
        cache.inputs.append(out)
        z = out @ layer.weight + layer.bias
        a = _apply_activation(z, layer.activation)
        cache.pre_acts.append(z)
        cache.acts.append(a)
        mask = None
        if i < last and rng is not None and model.dropout_rate > 0.0:
            # inverted dropout: zero with probability p, scale survivors
            keep = rng.random(a.shape) >= model.dropout_rate
            mask = keep / (1.0 - model.dropout_rate)
            a = a * mask
        cache.masks.append(mask)
        out = a
    return out, cache


def forward(model: MLPModel, batch: np.ndarray, rng: RngStream | None = None) -> np.ndarray:
    """Compute logits. ``rng=None`` disables dropout (deterministic);
    passing a stream samples one inverted-dropout mask per hidden layer."""
    logits, _ = _forward_cached(model, batch, rng)
    return logits


def backward(model: MLPModel, cache: _ForwardCache, dlogits: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
    """Gradients of each layer's (weight, bias) given dLoss/dlogits."""
    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(model.layers)  # type: ignore
    delta = np.asarray(dlogits, dtype=float)
    for i in range(len(model.layers) - 1, -1, -1):
        layer = model.layers[i]
        # delta currently holds dLoss/d(layer output after dropout)
        if cache.masks[i] is not None:
            delta = delta * cache.masks[i]
        delta = delta * _activation_grad(cache.pre_acts[i], cache.acts[i], layer.activation)
        grads[i] = (cache.inputs[i].T @ delta, delta.sum(axis=0))
        if i > 0:
            delta = delta @ layer.weight.T
    return grads


@dataclass
class OptimizerState:
    kind: str
    step: int = 0
    m: list[tuple[np.ndarray, np.ndarray]] = field(default_factory=list)
    v: list[tuple[np.ndarray, np.ndarray]] = field(default_factory=list)


def init_optimizer(model: MLPModel, kind: str = "adam") -> OptimizerState:
    if kind not in OPTIMIZERS:
        raise ConfigError(f"unknown optimizer {kind!r}")
    state = OptimizerState(kind=kind)
    if kind == "adam":
        for layer in model.layers:
            state.m.append((np.zeros_like(layer.weight), np.zeros_like(layer.bias)))
            state.v.append((np.zeros_like(layer.weight), np.zeros_like(layer.bias)))
    return state


def _check_finite_grads(model: MLPModel, loss: float, grads) -> None:
    # layer checks first so the error names where the problem sits
    for i, (dw, db) in enumerate(grads):
        if not np.all(np.isfinite(dw)):
            raise NumericalDivergenceError(f"non-finite gradient in layer {i} (weight)")
        if not np.all(np.isfinite(db)):
            raise NumericalDivergenceError(f"non-finite gradient in layer {i} (bias)")
    if not np.isfinite(loss):
        raise NumericalDivergenceError(f"non-finite loss {loss!r}")


def apply_update(model: MLPModel, grads, state: OptimizerState, learning_rate: float) -> None:
    """One optimizer step in place."""
    if state.kind == "sgd":
        for layer, (dw, db) in zip(model.layers, grads):
            layer.weight -= learning_rate * dw
            layer.bias -= learning_rate * db
        state.step += 1
        return
    state.step += 1
    t = state.step
    bc1 = 1.0 - ADAM_BETA1**t
    bc2 = 1.0 - ADAM_BETA2**t
    for i, (layer, (dw, db)) in enumerate(zip(model.layers, grads)):
        mw, mb = state.m[i]
        vw, vb = state.v[i]
        mw[:] = ADAM_BETA1 * mw + (1.0 - ADAM_BETA1) * dw
        mb[:] = ADAM_BETA1 * mb + (1.0 - ADAM_BETA1) * db
        vw[:] = ADAM_BETA2 * vw + (1.0 - ADAM_BETA2) * dw * dw
        vb[:] = ADAM_BETA2 * vb + (1.0 - ADAM_BETA2) * db * db
        layer.weight -= learning_rate * (mw / bc1) / (np.sqrt(vw / bc2) + ADAM_EPS)
        layer.bias -= learning_rate * (mb / bc1) / (np.sqrt(vb / bc2) + ADAM_EPS)


def train_step(
    model: MLPModel,
    batch: np.ndarray,
    targets,
    loss_fn,
    opt_state: OptimizerState,
    config: TrainConfig,
    rng: RngStream | None = None,
) -> float:
    """One optimizer step on a batch; returns the pre-step mean loss.

    ``loss_fn(logits, targets) -> (mean_loss, dmean_loss/dlogits)``. Dropout
    is active when ``rng`` is given and the model has a nonzero rate; the
    backward pass reuses the sampled masks. Raises
    NumericalDivergenceError naming the offending layer on non-finite values.
    """
    logits, cache = _forward_cached(model, batch, rng)
    loss, dlogits = loss_fn(logits, targets)
    grads = backward(model, cache, dlogits)
    _check_finite_grads(model, loss, grads)
    apply_update(model, grads, opt_state, config.learning_rate)
    return float(loss)


def clone_model(model: MLPModel) -> MLPModel:
    """Deep copy (used by tests and finite-difference checks)."""
    return MLPModel(
        layers=[
            Layer(weight=l.weight.copy(), bias=l.bias.copy(), activation=l.activation)
            for l in model.layers
        ],
        dropout_rate=model.dropout_rate,
        head_kind=model.head_kind,
        num_classes=model.num_classes,
    )
