"""
Curvature-profile encoding χ and the two dataset scalings.

χ is the area-weighted probability of (k1, k2) on a B×B grid of bins. Since
k1 ≥ k2, only the lower triangle (k1-bin ≥ k2-bin) is populated; it is
serialized row by row, giving k = B(B+1)/2 values.

Θ is min-max scaled per component. χ is scaled per component with
h(x) = ln(x − a)/b + c, pinned so that h(0) = 0, h(1) = 1 and h(m) = 0.5
where m is the median over components of the dataset-wide maxima.
"""
from __future__ import annotations

import logging
import math

import numpy as np

from src.errors import (
    DegenerateComponentError,
    DegenerateDatasetError,
    EmptyInputError,
    IncompatibleArtifactError,
    InvalidParameterError,
)
from src.geometry import phase_field, surface
from src.models import (
    ChiScaler,
    CurvatureEncoding,
    CurvatureSamples,
    HistogramSpec,
    PhaseField,
    SolverConfig,
    ThetaScaler,
)

log = logging.getLogger(__name__)

_RANGE_TOL = 1e-12


# ---------------------------------------------------------------------------
# Histogram
# ---------------------------------------------------------------------------

def _bin_index(kappa: np.ndarray, spec: HistogramSpec) -> np.ndarray:
    """Clamp-to-edge bin index."""
    idx = np.floor((kappa - spec.kappa_min) / spec.width).astype(np.int64)
    return np.clip(idx, 0, spec.bins - 1)


def histogram(samples: CurvatureSamples, spec: HistogramSpec) -> CurvatureEncoding:
    area = np.asarray(samples.area, dtype=np.float64)
    total = float(area.sum())
    if len(area) == 0 or not total > 0:
        raise EmptyInputError("Curvature samples have zero total area")

    k1 = np.asarray(samples.k1, dtype=np.float64)
    k2 = np.asarray(samples.k2, dtype=np.float64)
    # Canonical order so the floating-point sums do not depend on input order.
    order = np.lexsort((area, k2, k1))
    i = _bin_index(k1[order], spec)
    j = _bin_index(k2[order], spec)
    # k1 ≥ k2 implies i ≥ j; fold anything else onto the lower triangle.
    i, j = np.maximum(i, j), np.minimum(i, j)

    flat = i * (i + 1) // 2 + j
    weights = np.bincount(flat, weights=area[order], minlength=spec.k)
    return CurvatureEncoding(values=weights / weights.sum(), spec=spec)


def to_matrix(encoding: CurvatureEncoding) -> np.ndarray:
    """Lower-triangular B×B matrix, rows indexed by the k1 bin."""
    spec = encoding.spec
    if len(encoding.values) != spec.k:
        raise IncompatibleArtifactError(f"Encoding has {len(encoding.values)} values, expected {spec.k}")
    matrix = np.zeros((spec.bins, spec.bins))
    matrix[np.tril_indices(spec.bins)] = encoding.values
    return matrix


def from_matrix(matrix: np.ndarray, spec: HistogramSpec) -> CurvatureEncoding:
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.shape != (spec.bins, spec.bins):
        raise InvalidParameterError(f"Expected a {spec.bins}×{spec.bins} matrix, got {matrix.shape}")
    return CurvatureEncoding(values=matrix[np.tril_indices(spec.bins)].copy(), spec=spec)


def histogram_mode(encoding: CurvatureEncoding) -> tuple[float, float]:
    """(k1, k2) bin centres of the most probable bin."""
    rows, cols = np.tril_indices(encoding.spec.bins)
    best = int(np.argmax(encoding.values))
    centers = encoding.spec.centers()
    return float(centers[rows[best]]), float(centers[cols[best]])


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise IncompatibleArtifactError(f"Cannot compare encodings of shape {p.shape} and {q.shape}")
    return 0.5 * float(np.abs(p - q).sum())


def encode_field(u: PhaseField, cfg: SolverConfig, spec: HistogramSpec) -> CurvatureEncoding:
    """Curvatures → zero-level mesh → per-element samples → χ."""
    fields = phase_field.level_set_curvatures(u, cfg)
    mesh = surface.marching_cubes(u)
    return histogram(surface.element_curvatures(mesh, fields), spec)


# ---------------------------------------------------------------------------
# Θ scaler (min-max)
# ---------------------------------------------------------------------------

def fit_theta_scaler(thetas: np.ndarray) -> ThetaScaler:
    thetas = np.atleast_2d(np.asarray(thetas, dtype=np.float64))
    if thetas.size == 0:
        raise EmptyInputError("Cannot fit a design scaler on an empty dataset")
    return ThetaScaler(mins=thetas.min(axis=0), maxs=thetas.max(axis=0))


def _theta_span(scaler: ThetaScaler) -> np.ndarray:
    span = scaler.maxs - scaler.mins
    flat = np.flatnonzero(span <= 0)
    if len(flat):
        raise DegenerateComponentError(f"Design components {flat.tolist()} have max == min")
    return span


def scale_theta(thetas: np.ndarray, scaler: ThetaScaler) -> np.ndarray:
    return (np.asarray(thetas, dtype=np.float64) - scaler.mins) / _theta_span(scaler)


def unscale_theta(scaled: np.ndarray, scaler: ThetaScaler) -> np.ndarray:
    return np.asarray(scaled, dtype=np.float64) * _theta_span(scaler) + scaler.mins


# ---------------------------------------------------------------------------
# χ scaler (pinned logarithm)
# ---------------------------------------------------------------------------

def chi_scaler_from_median(m: float) -> ChiScaler:
    """Closed form: a = −m²/(1 − 2m), b = ln((1 − a)/(−a)), c = −ln(−a)/b."""
    if m <= 0:
        raise DegenerateDatasetError(f"Median of component maxima must be positive, got {m}")
    if m >= 0.5:
        log.warning("Median of component maxima is %.4f ≥ 0.5; falling back to identity χ scaling", m)
        return ChiScaler(a=0.0, b=1.0, c=0.0, m=m, identity=True)
    a = -m * m / (1.0 - 2.0 * m)
    b = math.log((1.0 - a) / (-a))
    c = -math.log(-a) / b
    return ChiScaler(a=a, b=b, c=c, m=m)


def fit_chi_scaler(encodings: np.ndarray) -> ChiScaler:
    encodings = np.atleast_2d(np.asarray(encodings, dtype=np.float64))
    if encodings.size == 0:
        raise EmptyInputError("Cannot fit an encoding scaler on an empty dataset")
    m = float(np.median(encodings.max(axis=0)))
    return chi_scaler_from_median(m)


def _check_unit_interval(x: np.ndarray) -> None:
    if x.size and (x.min() < -_RANGE_TOL or x.max() > 1.0 + _RANGE_TOL):
        raise InvalidParameterError(
            f"Encoding values must lie in [0, 1], got range [{x.min()}, {x.max()}]"
        )


def scale_chi(chi: np.ndarray, scaler: ChiScaler) -> np.ndarray:
    chi = np.asarray(chi, dtype=np.float64)
    _check_unit_interval(chi)
    if scaler.identity:
        return chi.copy()
    return np.log(chi - scaler.a) / scaler.b + scaler.c


def unscale_chi(scaled: np.ndarray, scaler: ChiScaler) -> np.ndarray:
    scaled = np.asarray(scaled, dtype=np.float64)
    if scaler.identity:
        return scaled.copy()
    return np.exp((scaled - scaler.c) * scaler.b) + scaler.a


# ---------------------------------------------------------------------------
# Scaler (de)serialization
# ---------------------------------------------------------------------------

def theta_scaler_to_dict(scaler: ThetaScaler) -> dict:
    return {"mins": scaler.mins.tolist(), "maxs": scaler.maxs.tolist()}


def theta_scaler_from_dict(d: dict) -> ThetaScaler:
    return ThetaScaler(mins=np.asarray(d["mins"], dtype=np.float64),
                       maxs=np.asarray(d["maxs"], dtype=np.float64))


def chi_scaler_to_dict(scaler: ChiScaler) -> dict:
    return {"a": scaler.a, "b": scaler.b, "c": scaler.c, "m": scaler.m, "identity": scaler.identity}


def chi_scaler_from_dict(d: dict) -> ChiScaler:
    return ChiScaler(a=float(d["a"]), b=float(d["b"]), c=float(d["c"]),
                     m=float(d["m"]), identity=bool(d.get("identity", False)))
