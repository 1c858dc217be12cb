"""
Spinodoid topologies: a Gaussian random field built from Q standing waves
whose directions are restricted to axis-aligned cones, thresholded at the
level that gives solid volume fraction ρ.

    φ(x) = sqrt(2/Q) · Σ_q cos(β v_q·x + γ_q)

Fields are evaluated on the unit box [0, 1)³ and rescaled to the design
domain afterwards (see benchmarks.rescale).
"""
from __future__ import annotations

import logging
import math

import numpy as np
from scipy import special

import config
from src.errors import EmptySupportError, InvalidParameterError
from src.models import PhaseField, SpinodoidParams

log = logging.getLogger(__name__)

_MAX_DRAWS = 10_000_000


def in_cones(v: np.ndarray, cones: tuple[float, float, float], mode: str = config.SPINODOID_CONE_MODE) -> np.ndarray:
    """|v·ê_i| > cos θ_i, combined over the axes with θ_i > 0 by OR (union) or XOR."""
    hits = [np.abs(v[:, i]) > math.cos(t) for i, t in enumerate(cones) if t > 0.0]
    if not hits:
        return np.zeros(len(v), dtype=bool)
    if mode == "or":
        return np.logical_or.reduce(hits)
    if mode == "xor":
        return np.logical_xor.reduce(hits)
    raise InvalidParameterError(f"Unknown cone mode {mode!r}; expected 'or' or 'xor'")


def sample_directions(
    p: SpinodoidParams,
    rng: np.random.Generator,
    mode: str = config.SPINODOID_CONE_MODE,
) -> np.ndarray:
    """Q unit vectors, uniform on the sphere restricted to the cones (rejection sampling)."""
    if all(t <= 0.0 for t in p.cones):
        raise EmptySupportError("All cone angles are zero; no wave direction is admissible")

    accepted: list[np.ndarray] = []
    count = drawn = 0
    while count < p.Q:
        if drawn > _MAX_DRAWS:
            raise EmptySupportError(f"Cone support too small: {count} of {p.Q} directions after {drawn} draws")
        batch = max(4 * (p.Q - count), 256)
        v = rng.standard_normal((batch, 3))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        v = v[in_cones(v, p.cones, mode)]
        accepted.append(v)
        count += len(v)
        drawn += batch
    return np.concatenate(accepted)[:p.Q]


def spinodoid_field(
    p: SpinodoidParams,
    n: int = config.BENCHMARK_GRID,
    mode: str = config.SPINODOID_CONE_MODE,
) -> PhaseField:
    """φ on an n³ grid over the unit box. Values are O(1), not a phase field yet."""
    rng = np.random.default_rng(p.seed)
    v = sample_directions(p, rng, mode)
    gamma = rng.uniform(0.0, 2.0 * np.pi, size=p.Q)

    x = np.arange(n) / n
    # Each wave is an outer product of three 1-D exponentials.
    ex = np.exp(1j * p.beta * np.outer(v[:, 0], x))          # (Q, n)
    ey = np.exp(1j * p.beta * np.outer(v[:, 1], x))
    ez = np.exp(1j * p.beta * np.outer(v[:, 2], x))
    a = np.exp(1j * gamma)[:, None, None] * ex[:, :, None] * ey[:, None, :]   # (Q, n, n)
    total = np.tensordot(a, ez, axes=([0], [0]))                               # (n, n, n)
    phi = math.sqrt(2.0 / p.Q) * total.real
    return PhaseField(phi, length=1.0, periodic=False)


def _erfinv(t: float) -> float:
    """Newton iteration on erf, safeguarded by a shrinking bracket."""
    lo, hi = -6.0, 6.0
    y = 0.0
    for _ in range(200):
        err = float(special.erf(y)) - t
        if abs(err) <= config.ERFINV_TOL:
            return y
        if err > 0:
            hi = y
        else:
            lo = y
        step = err / (2.0 / math.sqrt(math.pi) * math.exp(-y * y))
        y_new = y - step
        if not lo < y_new < hi:
            y_new = 0.5 * (lo + hi)
        if y_new == y:
            return y
        y = y_new
    return y


def spinodoid_level(rho: float) -> float:
    """Level l with P(φ ≤ l) = ρ for a unit Gaussian: sqrt(2)·erfinv(2ρ − 1)."""
    if not 0.0 < rho < 1.0:
        raise InvalidParameterError(f"rho must lie in (0, 1), got {rho}")
    return math.sqrt(2.0) * _erfinv(2.0 * rho - 1.0)


def spinodoid_phase(phi: PhaseField, rho: float) -> PhaseField:
    """u = level − φ: positive on the solid (the ρ fraction), zero on the interface."""
    return PhaseField(spinodoid_level(rho) - phi.values, length=phi.length, periodic=phi.periodic)
