"""
Design space of the curvature-polynomial energy density.

f(k1, k2) = a20·k1² + a11·k1·k2 + a02·k2² + a10·k1 + a01·k2 + a00

The same density written as a quadric in the (k1, k2, f) space:
    f = g · (κ̃ᵀ M κ̃ − c),  κ̃ = R(θ)(κ − κc),  M = diag(1, α)
to_standard / to_geometric convert between the two; classify names the quadric.
"""
from __future__ import annotations

import math

import numpy as np

import config
from src.errors import DegenerateFormError, InvalidParameterError, NoCenterError
from src.models import DesignParams, GeometricParams, QuadricClass


# ---------------------------------------------------------------------------
# Energy density
# ---------------------------------------------------------------------------

def energy_density(theta: DesignParams, k1, k2):
    """Evaluate f(k1, k2). Works elementwise on scalars or numpy arrays."""
    return (
        theta.a20 * k1 * k1
        + theta.a11 * k1 * k2
        + theta.a02 * k2 * k2
        + theta.a10 * k1
        + theta.a01 * k2
        + theta.a00
    )


def quadric_form(geo: GeometricParams, k1, k2):
    """g(κ̃ᵀMκ̃ − c) evaluated directly from the geometric parameters."""
    d1 = k1 - geo.kappa1_c
    d2 = k2 - geo.kappa2_c
    ct, st = math.cos(geo.theta), math.sin(geo.theta)
    t1 = ct * d1 + st * d2
    t2 = -st * d1 + ct * d2
    return geo.g * (t1 * t1 + geo.alpha * t2 * t2 - geo.c)


# ---------------------------------------------------------------------------
# Geometric ↔ standard coefficients
# ---------------------------------------------------------------------------

def to_standard(geo: GeometricParams) -> DesignParams:
    g, a = geo.g, geo.alpha
    k1c, k2c = geo.kappa1_c, geo.kappa2_c
    c2 = math.cos(2 * geo.theta)
    s2 = math.sin(2 * geo.theta)

    a20 = g * (1 + a - a * c2 + c2) / 2
    a11 = g * (1 - a) * s2
    a02 = g * (1 + a + a * c2 - c2) / 2
    a10 = -g * ((1 + a) * k1c + (1 - a) * k1c * c2 + (1 - a) * k2c * s2)
    a01 = -g * ((1 + a) * k2c + (a - 1) * k2c * c2 + (1 - a) * k1c * s2)
    a00 = g * (
        (1 + a) * (k1c ** 2 + k2c ** 2)
        + (1 - a) * (k1c ** 2 - k2c ** 2) * c2
        + 2 * k1c * k2c * (1 - a) * s2
        - 2 * geo.c
    ) / 2
    return DesignParams(a20, a11, a02, a10, a01, a00, geo.m0)


def _quadratic_matrix(theta: DesignParams) -> np.ndarray:
    return np.array([
        [theta.a20, theta.a11 / 2.0],
        [theta.a11 / 2.0, theta.a02],
    ])


def _wrap_half_turn(angle: float) -> float:
    """Map an angle into [−π/2, π/2)."""
    wrapped = (angle + math.pi / 2) % math.pi - math.pi / 2
    return wrapped if wrapped < math.pi / 2 else -math.pi / 2


def to_geometric(theta: DesignParams) -> GeometricParams:
    """
    Inverse of to_standard. The gauge is fixed by the eigen-decomposition of
    the quadratic-form matrix: g is its larger eigenvalue, α the eigenvalue
    ratio, θ the angle of the g-eigenvector. Isotropic forms get θ = 0.
    """
    q = _quadratic_matrix(theta)
    w, v = np.linalg.eigh(q)            # ascending
    scale = float(np.abs(w).sum())
    if scale == 0.0:
        raise DegenerateFormError("Quadratic part of the energy density is identically zero")

    lam_min, lam_max = float(w[0]), float(w[1])
    tol = config.PARABOLIC_RTOL * scale
    if lam_max <= tol:
        raise DegenerateFormError(
            f"Quadratic form has no positive principal direction (eigenvalues {lam_min}, {lam_max})"
        )

    g = lam_max
    alpha = 0.0 if abs(lam_min) <= tol else lam_min / lam_max

    if abs(lam_max - lam_min) <= tol:
        alpha, angle = 1.0, 0.0
    else:
        angle = _wrap_half_turn(math.atan2(v[1, 1], v[0, 1]))

    # Centre: l = −2 Q κc, solved on the range of Q.
    lin = np.array([theta.a10, theta.a01])
    inv = np.zeros((2, 2))
    for lam, vec in zip(w, v.T):
        if abs(lam) > tol:
            inv += np.outer(vec, vec) / lam
    center = -0.5 * inv @ lin
    residual = lin + 2.0 * q @ center
    if np.linalg.norm(residual) > 1e-9 * max(1.0, float(np.linalg.norm(lin))):
        raise NoCenterError(
            "Linear terms have a component along the flat direction of the quadratic form; "
            "the density has no centre"
        )

    c = (float(center @ q @ center) - theta.a00) / g
    return GeometricParams(
        kappa1_c=float(center[0]),
        kappa2_c=float(center[1]),
        theta=angle,
        alpha=alpha,
        c=c,
        g=g,
        m0=theta.m0,
    )


# ---------------------------------------------------------------------------
# Quadric classification
# ---------------------------------------------------------------------------

def classify(theta: DesignParams) -> QuadricClass:
    q = _quadratic_matrix(theta)
    trace_norm = float(np.abs(np.linalg.eigvalsh(q)).sum())
    if trace_norm == 0.0:
        raise DegenerateFormError("Quadratic part of the energy density is identically zero")

    det = theta.a20 * theta.a02 - theta.a11 ** 2 / 4.0
    # det is quadratic in the coefficients, so the tolerance is too.
    tol = config.PARABOLIC_RTOL * trace_norm ** 2
    if det > tol:
        return QuadricClass.ELLIPTIC
    if det < -tol:
        return QuadricClass.HYPERBOLIC
    return QuadricClass.PARABOLIC


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

def _check_bounds(bounds: dict[str, tuple[float, float]], columns) -> None:
    for col in columns:
        if col not in bounds:
            raise InvalidParameterError(f"Missing sampling bound for {col!r}")
        lo, hi = bounds[col]
        if lo > hi:
            raise InvalidParameterError(f"Bound for {col!r} is not ordered: [{lo}, {hi}]")


def sample_design(
    rng: np.random.Generator,
    bounds: dict[str, tuple[float, float]] | None = None,
) -> DesignParams:
    """One Θ with every component uniform on its interval, drawn in column order."""
    if bounds is None:
        bounds = config.SAMPLING_BOUNDS
    _check_bounds(bounds, config.DESIGN_COLUMNS)
    values = [rng.uniform(*bounds[col]) for col in config.DESIGN_COLUMNS]
    return DesignParams.from_array(values)


def sample_geometric(
    rng: np.random.Generator,
    bounds: dict[str, tuple[float, float]] | None = None,
) -> DesignParams:
    """Draw interpretable parameters uniformly and convert them to Θ."""
    if bounds is None:
        bounds = config.GEOMETRIC_BOUNDS
    fields = ("kappa1_c", "kappa2_c", "theta", "alpha", "c", "g", "m0")
    _check_bounds(bounds, fields)
    values = {f: rng.uniform(*bounds[f]) for f in fields}
    values["theta"] = _wrap_half_turn(values["theta"])
    return to_standard(GeometricParams(**values))


# ---------------------------------------------------------------------------
# Record helpers (fixed 7-column order)
# ---------------------------------------------------------------------------

def design_to_row(theta: DesignParams) -> dict[str, float]:
    return {col: float(getattr(theta, col)) for col in config.DESIGN_COLUMNS}


def design_from_row(row) -> DesignParams:
    return DesignParams.from_array([row[col] for col in config.DESIGN_COLUMNS])
