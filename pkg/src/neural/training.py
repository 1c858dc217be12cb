"""
Training loops for the forward surrogate f: Θˢ → χˢ and the inverse network
g: χˢ → Θˢ trained through the frozen f, plus inference and evaluation.

Losses are mean squared Euclidean norms on scaled values. Per-epoch train loss
is recomputed on the full training set after the epoch's updates.
"""
from __future__ import annotations

import logging
import time
from typing import Callable

import numpy as np

import config
from src import encoding
from src.errors import EmptyInputError, IncompatibleArtifactError, ShapeError, SurrogateModifiedError
from src.models import ChiScaler, DesignParams, HistogramSpec, ThetaScaler, TrainConfig, TrainReport
from src.neural.mlp import (
    AdamState,
    MlpModel,
    backprop,
    forward_cache,
    adam_update,
    backward,
    forward,
    init_model,
    mse,
)

log = logging.getLogger(__name__)

EpochCallback = Callable[[int, float, float], None]


def _as_matrix(x: np.ndarray, name: str) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[0] == 0 or x.size == 0:
        raise EmptyInputError(f"{name} is empty")
    return x


def _batches(n: int, batch_size: int, rng: np.random.Generator, shuffle: bool):
    order = rng.permutation(n) if shuffle else np.arange(n)
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]


def _init_rngs(seed: int) -> tuple[int, np.random.Generator]:
    init_seq, shuffle_seq = np.random.SeedSequence(seed).spawn(2)
    return int(init_seq.generate_state(1)[0]), np.random.default_rng(shuffle_seq)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def evaluate_loss(model: MlpModel, x: np.ndarray, y: np.ndarray) -> float:
    return mse(forward(model, _as_matrix(x, "inputs")), _as_matrix(y, "targets"))


def evaluate_reconstruction(g: MlpModel, f: MlpModel, chi_s: np.ndarray) -> float:
    """(1/n) Σ ‖f(g(χˢ)) − χˢ‖²."""
    chi_s = _as_matrix(chi_s, "encodings")
    return mse(forward(f, forward(g, chi_s)), chi_s)


def r2_scores(true: np.ndarray, pred: np.ndarray) -> np.ndarray:
    """Coefficient of determination per column. Constant columns give NaN."""
    true = np.atleast_2d(np.asarray(true, dtype=np.float64))
    pred = np.atleast_2d(np.asarray(pred, dtype=np.float64))
    if true.shape != pred.shape:
        raise ShapeError(f"Cannot score predictions {pred.shape} against {true.shape}")
    ss_res = np.sum((true - pred) ** 2, axis=0)
    ss_tot = np.sum((true - true.mean(axis=0)) ** 2, axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(ss_tot > 0, 1.0 - ss_res / ss_tot, np.nan)


# ---------------------------------------------------------------------------
# Regression loop (shared by f-NN and the direct inverse baseline)
# ---------------------------------------------------------------------------

def _fit_regression(
    model: MlpModel,
    x: np.ndarray,
    y: np.ndarray,
    cfg: TrainConfig,
    shuffle_rng: np.random.Generator,
    test: tuple[np.ndarray, np.ndarray] | None,
    progress: EpochCallback | None,
) -> TrainReport:
    report = TrainReport()
    state = AdamState.for_model(model)
    started = time.perf_counter()
    for epoch in range(cfg.epochs):
        for idx in _batches(len(x), cfg.batch_size, shuffle_rng, cfg.shuffle):
            gw, gb, _ = backward(model, x[idx], y[idx])
            adam_update(model, gw, gb, state, cfg)
        train_loss = evaluate_loss(model, x, y)
        test_loss = evaluate_loss(model, *test) if test is not None else float("nan")
        report.train_loss.append(train_loss)
        report.test_loss.append(test_loss)
        if progress is not None:
            progress(epoch, train_loss, test_loss)
        log.debug("epoch %d train %.6g test %.6g", epoch, train_loss, test_loss)
    report.wall_time = time.perf_counter() - started
    report.checksum = model.checksum()
    return report


def train_forward(
    theta_s: np.ndarray,
    chi_s: np.ndarray,
    cfg: TrainConfig,
    hidden: list[int] | None = None,
    test: tuple[np.ndarray, np.ndarray] | None = None,
    progress: EpochCallback | None = None,
) -> tuple[MlpModel, TrainReport]:
    """Fit f minimizing (1/n) Σ ‖f(Θˢ) − χˢ‖² with Adam."""
    theta_s = _as_matrix(theta_s, "design parameters")
    chi_s = _as_matrix(chi_s, "encodings")
    if len(theta_s) != len(chi_s):
        raise ShapeError(f"{len(theta_s)} designs but {len(chi_s)} encodings")
    if hidden is None:
        hidden = config.preset("desk")["fnn_hidden"]

    init_seed, shuffle_rng = _init_rngs(cfg.seed)
    model = init_model([theta_s.shape[1], *hidden, chi_s.shape[1]], seed=init_seed)
    log.info("Training f-NN %s (%d parameters) on %d samples", model.layer_dims, model.n_params, len(theta_s))
    report = _fit_regression(model, theta_s, chi_s, cfg, shuffle_rng, test, progress)
    return model, report


def train_inverse_direct(
    chi_s: np.ndarray,
    theta_s: np.ndarray,
    cfg: TrainConfig,
    hidden: list[int] | None = None,
    test: tuple[np.ndarray, np.ndarray] | None = None,
    progress: EpochCallback | None = None,
) -> tuple[MlpModel, TrainReport]:
    """Baseline: regress Θˢ on χˢ directly, ignoring that several designs share a profile."""
    chi_s = _as_matrix(chi_s, "encodings")
    theta_s = _as_matrix(theta_s, "design parameters")
    if len(theta_s) != len(chi_s):
        raise ShapeError(f"{len(chi_s)} encodings but {len(theta_s)} designs")
    if hidden is None:
        hidden = config.preset("desk")["inn_hidden"]

    init_seed, shuffle_rng = _init_rngs(cfg.seed)
    model = init_model([chi_s.shape[1], *hidden, theta_s.shape[1]], seed=init_seed)
    report = _fit_regression(model, chi_s, theta_s, cfg, shuffle_rng, test, progress)
    return model, report


# ---------------------------------------------------------------------------
# Inverse network through the frozen surrogate
# ---------------------------------------------------------------------------

def _reconstruction_grads(g: MlpModel, f: MlpModel, batch: np.ndarray):
    g_inputs, g_pre = forward_cache(g, batch)
    f_inputs, f_pre = forward_cache(f, g_inputs[-1])
    d_out = 2.0 * (f_inputs[-1] - batch) / len(batch)
    _, _, d_theta = backprop(f, f_inputs, f_pre, d_out, need_params=False)
    gw, gb, _ = backprop(g, g_inputs, g_pre, d_theta)
    return gw, gb


def train_inverse(
    chi_s: np.ndarray,
    f: MlpModel,
    cfg: TrainConfig,
    hidden: list[int] | None = None,
    test: np.ndarray | None = None,
    progress: EpochCallback | None = None,
) -> tuple[MlpModel, TrainReport]:
    """
    Fit g minimizing (1/n) Σ ‖f(g(χˢ)) − χˢ‖². Gradients flow through f;
    f's parameters are never written.
    """
    chi_s = _as_matrix(chi_s, "encodings")
    k = f.layer_dims[-1]
    if chi_s.shape[1] != k:
        raise ShapeError(f"Surrogate outputs {k} values, encodings have {chi_s.shape[1]}")
    if hidden is None:
        hidden = config.preset("desk")["inn_hidden"]

    init_seed, shuffle_rng = _init_rngs(cfg.seed)
    g = init_model([k, *hidden, f.layer_dims[0]], seed=init_seed)
    frozen = f.checksum()
    log.info("Training i-NN %s through frozen f-NN %s", g.layer_dims, f.layer_dims)

    report = TrainReport()
    state = AdamState.for_model(g)
    started = time.perf_counter()
    for epoch in range(cfg.epochs):
        for idx in _batches(len(chi_s), cfg.batch_size, shuffle_rng, cfg.shuffle):
            gw, gb = _reconstruction_grads(g, f, chi_s[idx])
            adam_update(g, gw, gb, state, cfg)
        train_loss = evaluate_reconstruction(g, f, chi_s)
        test_loss = evaluate_reconstruction(g, f, test) if test is not None else float("nan")
        report.train_loss.append(train_loss)
        report.test_loss.append(test_loss)
        if progress is not None:
            progress(epoch, train_loss, test_loss)
    report.wall_time = time.perf_counter() - started
    report.checksum = g.checksum()

    if f.checksum() != frozen:
        raise SurrogateModifiedError("Surrogate parameters changed during inverse training")
    return g, report


# ---------------------------------------------------------------------------
# Inference
# ---------------------------------------------------------------------------

def invert(
    chi_target: np.ndarray,
    theta_scaler: ThetaScaler,
    chi_scaler: ChiScaler,
    g: MlpModel,
    f: MlpModel,
    target_spec: HistogramSpec | None = None,
    trained_spec: HistogramSpec | None = None,
) -> tuple[DesignParams, np.ndarray]:
    """
    Θ = unscale_theta(g(scale_chi(χ))), χ* = unscale_chi(f(g(scale_chi(χ)))).
    """
    chi_target = np.asarray(chi_target, dtype=np.float64).ravel()
    if target_spec is not None and trained_spec is not None and target_spec != trained_spec:
        raise IncompatibleArtifactError(
            f"Target encoding uses {target_spec}, networks were trained on {trained_spec}"
        )
    if len(chi_target) != g.layer_dims[0]:
        raise IncompatibleArtifactError(
            f"Target encoding has {len(chi_target)} values, inverse network expects {g.layer_dims[0]}"
        )
    theta_s = forward(g, encoding.scale_chi(chi_target, chi_scaler))
    theta = encoding.unscale_theta(theta_s, theta_scaler)
    chi_star = encoding.unscale_chi(forward(f, theta_s), chi_scaler)
    return DesignParams.from_array(theta), chi_star
