"""
Dense feed-forward network in float64 numpy with hand-written backprop.

Hidden layers use ReLU; the output layer uses ReLU6/6 = clip(z, 0, 6)/6, so
every output component lies in [0, 1]. Weights are stored (fan_in, fan_out)
and applied as x @ W + b on row-batched inputs.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

import config
from src import storage
from src.errors import ShapeError
from src.models import TrainConfig


@dataclass
class MlpModel:
    weights: list[np.ndarray]       # per layer, (fan_in, fan_out)
    biases: list[np.ndarray]        # per layer, (fan_out,)

    def __post_init__(self) -> None:
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ShapeError("Model needs one bias vector per weight matrix and at least one layer")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ShapeError(f"Layer {i}: weight {w.shape} and bias {b.shape} do not match")
            if i and w.shape[0] != self.weights[i - 1].shape[1]:
                raise ShapeError(f"Layer {i} expects {w.shape[0]} inputs, previous layer gives "
                                 f"{self.weights[i - 1].shape[1]}")

    @property
    def layer_dims(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def checksum(self) -> str:
        """SHA-256 over every parameter, in layer order."""
        digest = hashlib.sha256()
        for w, b in zip(self.weights, self.biases):
            digest.update(np.ascontiguousarray(w, dtype="<f8").tobytes())
            digest.update(np.ascontiguousarray(b, dtype="<f8").tobytes())
        return digest.hexdigest()


def init_model(layer_dims: list[int], seed: int = config.TRAIN_SEED) -> MlpModel:
    """
    He-uniform weights (±sqrt(6/fan_in)) and zero hidden biases. The output
    bias starts at INIT_OUTPUT_BIAS so ReLU6/6 begins in its linear part.
    """
    if len(layer_dims) < 2 or any(d < 1 for d in layer_dims):
        raise ShapeError(f"Invalid layer dims {layer_dims}")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
        limit = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    biases[-1][:] = config.INIT_OUTPUT_BIAS
    return MlpModel(weights, biases)


# ---------------------------------------------------------------------------
# Forward / backward
# ---------------------------------------------------------------------------

def _as_batch(model: MlpModel, x: np.ndarray) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    batch = x[None, :] if single else x
    if batch.ndim != 2 or batch.shape[1] != model.layer_dims[0]:
        raise ShapeError(f"Model expects inputs of width {model.layer_dims[0]}, got shape {x.shape}")
    return batch, single


def forward_cache(model: MlpModel, batch: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Layer inputs and pre-activations, for backprop."""
    inputs, pre = [], []
    a = batch
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        inputs.append(a)
        z = a @ w + b
        pre.append(z)
        a = np.clip(z, 0.0, 6.0) / 6.0 if i == last else np.maximum(z, 0.0)
    inputs.append(a)
    return inputs, pre


def forward(model: MlpModel, x: np.ndarray) -> np.ndarray:
    batch, single = _as_batch(model, x)
    out = forward_cache(model, batch)[0][-1]
    return out[0] if single else out


def backprop(
    model: MlpModel,
    inputs: list[np.ndarray],
    pre: list[np.ndarray],
    d_out: np.ndarray,
    need_params: bool = True,
) -> tuple[list[np.ndarray], list[np.ndarray], np.ndarray]:
    """Pull dL/d(output) back to parameter grads and dL/d(input). Kinks get slope 0."""
    last = len(model.weights) - 1
    gw: list[np.ndarray] = [None] * len(model.weights)   # type: ignore[list-item]
    gb: list[np.ndarray] = [None] * len(model.weights)   # type: ignore[list-item]
    delta = d_out
    for i in range(last, -1, -1):
        z = pre[i]
        if i == last:
            dz = delta * (((z > 0.0) & (z < 6.0)) / 6.0)
        else:
            dz = delta * (z > 0.0)
        if need_params:
            gw[i] = inputs[i].T @ dz
            gb[i] = dz.sum(axis=0)
        delta = dz @ model.weights[i].T
    return gw, gb, delta


def mse(pred: np.ndarray, target: np.ndarray) -> float:
    """Mean over samples of the squared Euclidean norm."""
    diff = pred - target
    return float(np.sum(diff * diff) / len(diff))


def backward(model: MlpModel, x: np.ndarray, y: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray], float]:
    """Exact gradients of (1/n) Σ ‖model(x) − y‖² w.r.t. all weights and biases."""
    batch, _ = _as_batch(model, x)
    target = np.atleast_2d(np.asarray(y, dtype=np.float64))
    if len(batch) == 0:
        raise ShapeError("Empty batch")
    if target.shape != (len(batch), model.layer_dims[-1]):
        raise ShapeError(f"Targets of shape {target.shape} do not match outputs "
                         f"({len(batch)}, {model.layer_dims[-1]})")
    inputs, pre = forward_cache(model, batch)
    out = inputs[-1]
    d_out = 2.0 * (out - target) / len(batch)
    gw, gb, _ = backprop(model, inputs, pre, d_out)
    return gw, gb, mse(out, target)


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------

@dataclass
class AdamState:
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)
    t: int = 0

    @classmethod
    def for_model(cls, model: MlpModel) -> AdamState:
        params = model.weights + model.biases
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params])


def adam_update(
    model: MlpModel,
    grads_w: list[np.ndarray],
    grads_b: list[np.ndarray],
    state: AdamState,
    cfg: TrainConfig,
) -> None:
    """In-place Adam step with bias correction."""
    state.t += 1
    b1, b2 = cfg.adam_beta1, cfg.adam_beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    params = model.weights + model.biases
    grads = grads_w + grads_b
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= cfg.learning_rate * (m / c1) / (np.sqrt(v / c2) + cfg.adam_eps)


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------

def save_model(path: str | Path, model: MlpModel, sidecar: dict | None = None) -> Path:
    return storage.write_checkpoint(path, model.weights, model.biases, sidecar)


def load_model(path: str | Path) -> tuple[MlpModel, dict]:
    weights, biases, sidecar = storage.read_checkpoint(path)
    return MlpModel(weights, biases), sidecar
