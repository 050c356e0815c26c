"""Dense feed-forward regressor with hand-rolled backprop and Adam.

The forecaster maps a window of the last 3 normalized readings to the next
value through two ReLU hidden layers and a linear output.  Training minimizes
mean squared error; gradients come from reverse-mode accumulation.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..core import ContractError
from ..rng import derive_rng

SUPPORTED_WIDTHS = (64, 128, 256)
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


class TrainingError(RuntimeError):
    """Raised when a training step produces a non-finite loss."""


@dataclass(slots=True)
class DenseNetModel:
    """Weights/biases per layer plus the min/max the inputs were scaled with."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    hidden_width: int
    input_dim: int = 3
    output_dim: int = 1
    norm_min: float | None = None
    norm_max: float | None = None
    rng_seed: int = 0

    def copy_parameters(self) -> tuple[list[np.ndarray], list[np.ndarray]]:
        return [w.copy() for w in self.weights], [b.copy() for b in self.biases]

    def set_parameters(self, weights: list[np.ndarray], biases: list[np.ndarray]) -> None:
        self.weights = [w.copy() for w in weights]
        self.biases = [b.copy() for b in biases]

    def parameters(self) -> list[np.ndarray]:
        return [*self.weights, *self.biases]


def densenet_init(
    hidden_width: int = 64,
    rng_seed: int = 0,
    input_dim: int = 3,
    output_dim: int = 1,
) -> DenseNetModel:
    """Two hidden layers of ``hidden_width``; Glorot-uniform weights, zero biases."""
    if hidden_width not in SUPPORTED_WIDTHS:
        warnings.warn(
            f"hidden width {hidden_width} outside the usual grid {SUPPORTED_WIDTHS}",
            stacklevel=2,
        )
    rng = derive_rng(rng_seed, "densenet-init")
    dims = [input_dim, hidden_width, hidden_width, output_dim]
    weights = []
    biases = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return DenseNetModel(
        weights=weights,
        biases=biases,
        hidden_width=hidden_width,
        input_dim=input_dim,
        output_dim=output_dim,
        rng_seed=rng_seed,
    )


def _forward_full(model: DenseNetModel, x: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
    """Return per-layer post-activations (for backprop) and the output."""
    acts = [x]
    h = x
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = h @ w + b
        h = z if i == last else np.maximum(z, 0.0)
        acts.append(h)
    return acts, h


def densenet_forward(model: DenseNetModel, window: np.ndarray) -> np.ndarray:
    """Predict for one window (1-D input) or a batch (2-D input)."""
    x = np.asarray(window, dtype=float)
    single = x.ndim == 1
    if single:
        x = x.reshape(1, -1)
    if x.shape[1] != model.input_dim:
        raise ContractError(f"expected window length {model.input_dim}, got {x.shape[1]}")
    if not np.all(np.isfinite(x)):
        raise ContractError("window contains non-finite values")
    _, out = _forward_full(model, x)
    if single:
        return out[0, 0] if model.output_dim == 1 else out[0]
    return out[:, 0] if model.output_dim == 1 else out


@dataclass(slots=True)
class AdamState:
    """First/second moment accumulators, one pair per parameter array."""

    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)
    t: int = 0

    @classmethod
    def for_model(cls, model: DenseNetModel) -> "AdamState":
        params = model.parameters()
        return cls(m=[np.zeros_like(p) for p in params], v=[np.zeros_like(p) for p in params])


def _gradients(
    model: DenseNetModel, x: np.ndarray, y: np.ndarray
) -> tuple[list[np.ndarray], list[np.ndarray], float]:
    acts, pred = _forward_full(model, x)
    diff = pred - y
    loss = float(np.mean(diff**2))
    # dL/dpred for L = mean over all output elements of (pred - y)^2
    delta = 2.0 * diff / diff.size
    grad_w: list[np.ndarray] = [np.empty(0)] * len(model.weights)
    grad_b: list[np.ndarray] = [np.empty(0)] * len(model.biases)
    for i in range(len(model.weights) - 1, -1, -1):
        grad_w[i] = acts[i].T @ delta
        grad_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ model.weights[i].T) * (acts[i] > 0.0)
    return grad_w, grad_b, loss


def densenet_train_step(
    model: DenseNetModel,
    batch_windows: np.ndarray,
    batch_targets: np.ndarray,
    learning_rate: float,
    state: AdamState,
) -> float:
    """One Adam step on the MSE of a batch; updates model and state in place."""
    x = np.asarray(batch_windows, dtype=float)
    y = np.asarray(batch_targets, dtype=float)
    if x.ndim == 1:
        x = x.reshape(1, -1)
    if y.ndim == 1 and model.output_dim == 1:
        y = y.reshape(-1, 1)
    elif y.ndim == 1:
        y = y.reshape(1, -1)
    if x.shape[0] == 0:
        raise ContractError("batch must be non-empty")
    if learning_rate <= 0:
        raise ContractError("learning rate must be positive")
    grad_w, grad_b, loss = _gradients(model, x, y)
    if not math.isfinite(loss):
        raise TrainingError(f"non-finite training loss {loss}")
    grads = [*grad_w, *grad_b]
    params = model.parameters()
    state.t += 1
    bias1 = 1.0 - ADAM_BETA1**state.t
    bias2 = 1.0 - ADAM_BETA2**state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= ADAM_BETA1
        m += (1.0 - ADAM_BETA1) * g
        v *= ADAM_BETA2
        v += (1.0 - ADAM_BETA2) * g**2
        p -= learning_rate * (m / bias1) / (np.sqrt(v / bias2) + ADAM_EPS)
    return loss


def numeric_gradients(
    model: DenseNetModel, x: np.ndarray, y: np.ndarray, delta: float = 1e-5
) -> list[np.ndarray]:
    """Central finite-difference MSE gradients; the oracle for backprop tests."""

    def loss_at() -> float:
        _, pred = _forward_full(model, x)
        return float(np.mean((pred - y) ** 2))

    grads = []
    for p in model.parameters():
        g = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        while not it.finished:
            ix = it.multi_index
            orig = p[ix]
            p[ix] = orig + delta
            hi = loss_at()
            p[ix] = orig - delta
            lo = loss_at()
            p[ix] = orig
            g[ix] = (hi - lo) / (2.0 * delta)
            it.iternext()
        grads.append(g)
    return grads


def analytic_gradients(
    model: DenseNetModel, x: np.ndarray, y: np.ndarray
) -> list[np.ndarray]:
    grad_w, grad_b, _ = _gradients(model, np.asarray(x, float), np.asarray(y, float))
    return [*grad_w, *grad_b]
