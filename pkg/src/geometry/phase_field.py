"""
Periodic phase field evolved by the mass-conserving H⁻¹ gradient flow of the
curvature energy.

Discretization
--------------
Curvatures are taken from ψ = atanh(u) (u clipped at ±LEVEL_CLIP), which has
the level sets of u but is linear across a tanh interface, so the stencils see
a signed distance instead of a saturating profile. Gradient g and Hessian H of
ψ come from central differences on the grid (np.roll, so periodic by
construction). On the interface band |u| < band, |g| ≥ grad_clamp the
level-set curvatures are

    S = −div(g/|g|) = −(|g|²·tr H − gᵀHg) / |g|³      (outward normal of u > 0)
    K = gᵀ adj(H) g / |g|⁴
    k1, k2 = (S ± sqrt(max(S² − 4K, 0))) / 2

and the discrete energy is

    F = Σ_band f(k1, k2) · γ(u) · h³
    γ = 3/(2√2) · (ε·(1 − u²)²·|g|²/2 + W(u)/ε),  W = (1 − u²)²/4

where (1 − u²)²·|g|² is |∇u|² written through ψ. energy_gradient is the exact
derivative of that sum, pulled back through the stencils and the atanh by hand
(reverse mode). The band mask is held fixed.
"""
from __future__ import annotations

import logging
import math
from typing import Callable

import numpy as np
import scipy.fft

import config
from src.errors import DivergenceError, InvalidParameterError
from src.geometry.design_space import energy_density
from src.models import CurvatureFields, DesignParams, Diagnostics, PhaseField, SolverConfig

log = logging.getLogger(__name__)

MM_NORM = config.MM_NORM

_OFF_DIAGONAL = ((0, 1), (0, 2), (1, 2))


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------

def init_field(
    n: int,
    m0: float,
    noise_amp: float | None = None,
    rng: np.random.Generator | None = None,
    length: float = config.DOMAIN_LENGTH,
) -> PhaseField:
    """m0 plus uniform noise, shifted so the discrete mean is exactly m0."""
    if noise_amp is None:
        noise_amp = config.NOISE_AMP
    if rng is None:
        rng = np.random.default_rng()
    if noise_amp < 0 or abs(m0) + noise_amp >= 1.0:
        raise InvalidParameterError(
            f"Need |m0| + noise_amp < 1, got m0={m0}, noise_amp={noise_amp}"
        )
    noise = rng.uniform(-noise_amp, noise_amp, size=(n, n, n))
    noise -= noise.mean()
    return PhaseField(m0 + noise, length=length)


def _grid_coords(n: int, length: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    x = np.arange(n) * (length / n)
    return np.meshgrid(x, x, x, indexing="ij")


def sphere_field(
    n: int,
    radius: float,
    epsilon: float,
    center: tuple[float, float, float] | None = None,
    length: float = config.DOMAIN_LENGTH,
) -> PhaseField:
    """Solid ball (u > 0 inside) with a tanh profile, minimum-image distance."""
    if center is None:
        center = (length / 2,) * 3
    xs = _grid_coords(n, length)
    r2 = np.zeros((n, n, n))
    for x, c in zip(xs, center):
        d = x - c
        d -= length * np.round(d / length)
        r2 += d * d
    return PhaseField(np.tanh((radius - np.sqrt(r2)) / (math.sqrt(2.0) * epsilon)), length=length)


def slab_field(
    n: int,
    position: float,
    epsilon: float,
    thickness: float | None = None,
    axis: int = 2,
    length: float = config.DOMAIN_LENGTH,
) -> PhaseField:
    """
    Planar interfaces normal to `axis`. Without thickness: a single interface
    at `position` with solid above it (the wrap-around jump sits at |u| ≈ 1,
    outside any band). With thickness: a periodic solid slab of that width
    centred at `position`, i.e. two sheets.
    """
    z = _grid_coords(n, length)[axis]
    w = math.sqrt(2.0) * epsilon
    if thickness is None:
        return PhaseField(np.tanh((z - position) / w), length=length)
    d = z - position
    d -= length * np.round(d / length)
    return PhaseField(np.tanh((thickness / 2 - np.abs(d)) / w), length=length)


# ---------------------------------------------------------------------------
# Stencils
# ---------------------------------------------------------------------------

def _d(v: np.ndarray, axis: int, h: float) -> np.ndarray:
    return (np.roll(v, -1, axis) - np.roll(v, 1, axis)) / (2.0 * h)


def _d_adjoint(v: np.ndarray, axis: int, h: float) -> np.ndarray:
    return (np.roll(v, 1, axis) - np.roll(v, -1, axis)) / (2.0 * h)


def _d2(v: np.ndarray, axis: int, h: float) -> np.ndarray:
    return (np.roll(v, -1, axis) - 2.0 * v + np.roll(v, 1, axis)) / (h * h)


def _derivatives(u: np.ndarray, h: float) -> tuple[list[np.ndarray], dict[tuple[int, int], np.ndarray]]:
    g = [_d(u, a, h) for a in range(3)]
    hess = {(a, a): _d2(u, a, h) for a in range(3)}
    for a, b in _OFF_DIAGONAL:
        hess[(a, b)] = _d(g[b], a, h)
    return g, hess


def _adjugate(hs: dict[tuple[int, int], np.ndarray]) -> dict[tuple[int, int], np.ndarray]:
    h00, h11, h22 = hs[(0, 0)], hs[(1, 1)], hs[(2, 2)]
    h01, h02, h12 = hs[(0, 1)], hs[(0, 2)], hs[(1, 2)]
    return {
        (0, 0): h11 * h22 - h12 * h12,
        (1, 1): h00 * h22 - h02 * h02,
        (2, 2): h00 * h11 - h01 * h01,
        (0, 1): h02 * h12 - h01 * h22,
        (0, 2): h01 * h12 - h02 * h11,
        (1, 2): h01 * h02 - h00 * h12,
    }


def _sym(m: dict[tuple[int, int], np.ndarray], a: int, b: int) -> np.ndarray:
    return m[(a, b)] if a <= b else m[(b, a)]


def _band_mask(field: PhaseField, s: np.ndarray, cfg: SolverConfig) -> np.ndarray:
    u = field.values
    mask = (np.abs(u) < cfg.band) & (s >= cfg.grad_clamp ** 2)
    if not field.periodic:
        # Wrapped stencils are meaningless on an open box.
        edge = np.ones_like(mask)
        edge[1:-1, 1:-1, 1:-1] = False
        mask &= ~edge
    return mask


def _level_function(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """ψ = atanh(u) with u clipped at ±LEVEL_CLIP, and dψ/du (zero where clipped)."""
    clip = config.LEVEL_CLIP
    free = np.abs(u) < clip
    dpsi = np.zeros_like(u)
    dpsi[free] = 1.0 / (1.0 - u[free] ** 2)
    return np.arctanh(np.clip(u, -clip, clip)), dpsi


def _geometry(field: PhaseField, cfg: SolverConfig) -> dict:
    """Every per-cell quantity the energy and its gradient need. Zero off the band."""
    u = field.values
    h = field.spacing
    psi, dpsi = _level_function(u)
    g, hs = _derivatives(psi, h)
    s = g[0] ** 2 + g[1] ** 2 + g[2] ** 2
    mask = _band_mask(field, s, cfg)

    s_safe = np.where(mask, s, 1.0)
    trace = hs[(0, 0)] + hs[(1, 1)] + hs[(2, 2)]
    hg = [sum(_sym(hs, a, b) * g[b] for b in range(3)) for a in range(3)]
    ghg = g[0] * hg[0] + g[1] * hg[1] + g[2] * hg[2]
    adj = _adjugate(hs)
    adj_g = [sum(_sym(adj, a, b) * g[b] for b in range(3)) for a in range(3)]
    gadjg = g[0] * adj_g[0] + g[1] * adj_g[1] + g[2] * adj_g[2]

    A = np.where(mask, s * trace - ghg, 0.0)
    B = np.where(mask, gadjg, 0.0)
    S = -A / s_safe ** 1.5
    K = B / s_safe ** 2
    D = S * S - 4.0 * K
    q = np.sqrt(np.maximum(D, 0.0))
    return {
        "u": u, "dpsi": dpsi, "h": h, "g": g, "hess": hs, "s": s_safe, "mask": mask,
        "trace": trace, "hg": hg, "adj_g": adj_g,
        "A": A, "B": B, "S": S, "K": K, "D": D, "q": q,
        "k1": 0.5 * (S + q), "k2": 0.5 * (S - q),
    }


# ---------------------------------------------------------------------------
# Curvatures and energy
# ---------------------------------------------------------------------------

def level_set_curvatures(u: PhaseField, cfg: SolverConfig) -> CurvatureFields:
    geo = _geometry(u, cfg)
    return CurvatureFields(
        k1=geo["k1"], k2=geo["k2"], mask=geo["mask"], spacing=u.spacing, periodic=u.periodic,
    )


def _surface_density(u: np.ndarray, s: np.ndarray, eps: float) -> np.ndarray:
    """γ from u and s = |∇ψ|²."""
    p = (1.0 - u * u) ** 2
    return MM_NORM * (0.5 * eps * p * s + 0.25 * p / eps)


def discrete_energy(u: PhaseField, theta: DesignParams, cfg: SolverConfig) -> float:
    geo = _geometry(u, cfg)
    return _energy_from_geometry(geo, theta, cfg)


def _energy_from_geometry(geo: dict, theta: DesignParams, cfg: SolverConfig) -> float:
    mask = geo["mask"]
    f = energy_density(theta, geo["k1"][mask], geo["k2"][mask])
    gamma = _surface_density(geo["u"][mask], geo["s"][mask], cfg.epsilon)
    return float(np.sum(f * gamma) * geo["h"] ** 3)


def _energy_and_gradient(u: PhaseField, theta: DesignParams, cfg: SolverConfig) -> tuple[float, np.ndarray]:
    geo = _geometry(u, cfg)
    energy = _energy_from_geometry(geo, theta, cfg)

    mask = geo["mask"]
    uv, h, eps = geo["u"], geo["h"], cfg.epsilon
    g, hs, s = geo["g"], geo["hess"], geo["s"]
    k1, k2, S, K, A, q, D = (geo[k] for k in ("k1", "k2", "S", "K", "A", "q", "D"))
    vol = h ** 3

    f = np.where(mask, energy_density(theta, k1, k2), 0.0)
    gamma = np.where(mask, _surface_density(uv, s, eps), 0.0)
    f_bar = gamma * vol
    gamma_bar = f * vol

    k1_bar = f_bar * (2.0 * theta.a20 * k1 + theta.a11 * k2 + theta.a10)
    k2_bar = f_bar * (theta.a11 * k1 + 2.0 * theta.a02 * k2 + theta.a01)
    S_bar = 0.5 * (k1_bar + k2_bar)
    q_bar = 0.5 * (k1_bar - k2_bar)

    # sqrt has no derivative at D = 0; take the zero subgradient there.
    live = mask & (D > 0.0)
    D_bar = np.where(live, q_bar / (2.0 * np.where(live, q, 1.0)), 0.0)
    S_bar = S_bar + 2.0 * S * D_bar
    K_bar = -4.0 * D_bar

    one_minus = 1.0 - uv * uv
    p = one_minus ** 2
    B_bar = K_bar / s ** 2
    A_bar = -S_bar / s ** 1.5
    s_bar = (
        -2.0 * K_bar * K / s
        + 1.5 * S_bar * A / s ** 2.5
        + A_bar * geo["trace"]
        + gamma_bar * MM_NORM * 0.5 * eps * p
    )
    # γ also depends on u pointwise through (1 − u²)²
    u_bar = gamma_bar * MM_NORM * (-4.0 * uv * one_minus) * (0.5 * eps * s + 0.25 / eps)

    g_bar = [
        2.0 * g[a] * s_bar - 2.0 * A_bar * geo["hg"][a] + 2.0 * B_bar * geo["adj_g"][a]
        for a in range(3)
    ]

    h00, h11, h22 = hs[(0, 0)], hs[(1, 1)], hs[(2, 2)]
    h01, h02, h12 = hs[(0, 1)], hs[(0, 2)], hs[(1, 2)]
    g0, g1, g2 = g
    h_bar = {
        (0, 0): A_bar * (s - g0 * g0) + B_bar * (g1 * g1 * h22 + g2 * g2 * h11 - 2.0 * g1 * g2 * h12),
        (1, 1): A_bar * (s - g1 * g1) + B_bar * (g0 * g0 * h22 + g2 * g2 * h00 - 2.0 * g0 * g2 * h02),
        (2, 2): A_bar * (s - g2 * g2) + B_bar * (g0 * g0 * h11 + g1 * g1 * h00 - 2.0 * g0 * g1 * h01),
        (0, 1): -2.0 * A_bar * g0 * g1 + 2.0 * B_bar * (
            -g2 * g2 * h01 - g0 * g1 * h22 + g0 * g2 * h12 + g1 * g2 * h02
        ),
        (0, 2): -2.0 * A_bar * g0 * g2 + 2.0 * B_bar * (
            -g1 * g1 * h02 + g0 * g1 * h12 - g0 * g2 * h11 + g1 * g2 * h01
        ),
        (1, 2): -2.0 * A_bar * g1 * g2 + 2.0 * B_bar * (
            -g0 * g0 * h12 + g0 * g1 * h02 + g0 * g2 * h01 - g1 * g2 * h00
        ),
    }

    # Pull back through the stencils onto ψ, then through the atanh onto u.
    psi_bar = np.zeros_like(uv)
    for a in range(3):
        psi_bar = psi_bar + _d_adjoint(g_bar[a], a, h) + _d2(h_bar[(a, a)], a, h)
    for a, b in _OFF_DIAGONAL:
        # H_ab = D_a(D_b ψ)  →  adjoint D_bᵀ D_aᵀ = D_a D_b
        psi_bar = psi_bar + _d(_d(h_bar[(a, b)], a, h), b, h)
    return energy, u_bar + psi_bar * geo["dpsi"]


def energy_gradient(u: PhaseField, theta: DesignParams, cfg: SolverConfig) -> np.ndarray:
    """∂F/∂u_i for every nodal value (same shape as u.values)."""
    return _energy_and_gradient(u, theta, cfg)[1]


def variational_derivative(u: PhaseField, theta: DesignParams, cfg: SolverConfig) -> np.ndarray:
    """energy_gradient per unit cell volume, i.e. the grid-independent δF/δu."""
    return energy_gradient(u, theta, cfg) / u.spacing ** 3


# ---------------------------------------------------------------------------
# Flow
# ---------------------------------------------------------------------------

def _wavenumbers(n: int, h: float) -> tuple[np.ndarray, np.ndarray]:
    """|k|² and |k|⁴ on the rfftn half-grid."""
    k_full = 2.0 * np.pi * np.fft.fftfreq(n, d=h)
    k_half = 2.0 * np.pi * np.fft.rfftfreq(n, d=h)
    kx, ky, kz = np.meshgrid(k_full, k_full, k_half, indexing="ij")
    k2 = kx * kx + ky * ky + kz * kz
    return k2, k2 * k2


def _spectral_update(u: PhaseField, dfdu: np.ndarray, sigma: float, dt: float) -> np.ndarray:
    """
    û⁺ = û − dt·|k|²·ĝ / (1 + dt·σ·|k|⁴),  ĝ = FFT(δF/δu)

    This is the stabilized scheme with σ|k|⁴û added on both sides, so a zero
    gradient leaves every mode where it is. The k = 0 mode is copied through.
    """
    k2, k4 = _wavenumbers(u.n, u.spacing)
    u_hat = scipy.fft.rfftn(u.values, workers=config.THREADS)
    g_hat = scipy.fft.rfftn(dfdu, workers=config.THREADS)
    new_hat = u_hat - dt * k2 * g_hat / (1.0 + dt * sigma * k4)
    new_hat[0, 0, 0] = u_hat[0, 0, 0]
    return scipy.fft.irfftn(new_hat, s=u.values.shape, workers=config.THREADS)


def step(u: PhaseField, theta: DesignParams, cfg: SolverConfig, index: int = 0) -> PhaseField:
    """
    One semi-implicit spectral step at the fixed cfg.dt. A field with zero
    gradient (e.g. constant) is returned unchanged.
    """
    if not np.all(np.isfinite(u.values)):
        raise DivergenceError(index)
    dfdu = variational_derivative(u, theta, cfg)
    if not np.any(dfdu):
        return PhaseField(u.values.copy(), u.length, u.periodic)
    values = _spectral_update(u, dfdu, cfg.sigma_for(theta, u.spacing), cfg.dt)
    if not np.all(np.isfinite(values)):
        raise DivergenceError(index)
    return PhaseField(values, u.length, u.periodic)


def has_crossing(u: PhaseField, iso: float = 0.0) -> bool:
    """True when some pair of grid neighbours straddles iso (mesh would be non-empty)."""
    above = u.values > iso
    for a in range(3):
        if u.periodic:
            if np.any(above != np.roll(above, -1, a)):
                return True
        elif np.any(np.diff(above, axis=a)):
            return True
    return False


def assess_feasibility(u: PhaseField, converged: bool) -> tuple[bool, str]:
    """Converged, phase separated (std > threshold), both signs, non-empty zero level set."""
    if not converged:
        return False, "not converged"
    values = u.values
    std = float(values.std())
    if std <= config.FEASIBLE_MIN_STD:
        return False, f"no phase separation (std {std:.3f})"
    if not (np.any(values > 0) and np.any(values < 0)):
        return False, "single phase"
    if not has_crossing(u):
        return False, "empty zero level set"
    return True, ""


def _acceptable(values: np.ndarray, bound: float) -> bool:
    return bool(np.all(np.isfinite(values))) and float(np.abs(values).max()) <= bound


def evolve(
    u0: PhaseField,
    theta: DesignParams,
    cfg: SolverConfig,
    progress: Callable[[int, float], None] | None = None,
) -> tuple[PhaseField, Diagnostics]:
    """
    Step until the relative energy change over cfg.window steps drops below
    cfg.energy_tol, or cfg.max_steps is reached.

    The time step starts at cfg.dt. A candidate that leaves |u| ≤ 1 + FIELD_SLACK,
    goes non-finite or raises the energy by more than ENERGY_RISE_TOL is
    rejected and dt halved; accepted steps grow dt by DT_GROWTH up to DT_MAX.
    Falling below DT_MIN raises DivergenceError.
    """
    diag = Diagnostics()
    energy, grad = _energy_and_gradient(u0, theta, cfg)
    if cfg.max_steps == 0:
        diag.energies.append(energy)
        diag.mean_u.append(u0.mean())
        diag.reason = "no steps taken"
        return u0, diag
    if not np.isfinite(energy):
        raise DivergenceError(0, "Initial phase field has non-finite energy")

    u = u0
    sigma = cfg.sigma_for(theta, u0.spacing)
    bound = max(1.0 + config.FIELD_SLACK, float(np.abs(u0.values).max()))
    dt = cfg.dt
    for it in range(cfg.max_steps):
        diag.energies.append(energy)
        diag.mean_u.append(u.mean())
        if progress is not None:
            progress(it, energy)

        if it >= cfg.window:
            ref = diag.energies[it - cfg.window]
            rel = abs(energy - ref) / max(abs(ref), 1e-300)
            if rel < cfg.energy_tol:
                diag.converged = True
                break
        if not np.any(grad):
            diag.converged = True
            break

        allowed = energy + config.ENERGY_RISE_TOL * max(abs(energy), 1.0)
        while True:
            values = _spectral_update(u, grad / u.spacing ** 3, sigma, dt)
            if _acceptable(values, bound):
                candidate = PhaseField(values, u.length, u.periodic)
                new_energy, new_grad = _energy_and_gradient(candidate, theta, cfg)
                if new_energy <= allowed:
                    break
            dt *= 0.5
            if dt < config.DT_MIN:
                raise DivergenceError(
                    it + 1, f"Time step fell below {config.DT_MIN:g} at step {it + 1} (field or energy unbounded)",
                )
            log.debug("Step %d rejected, dt → %.3g", it + 1, dt)

        u, energy, grad = candidate, new_energy, new_grad
        diag.steps = it + 1
        dt = min(dt * config.DT_GROWTH, config.DT_MAX)
    else:
        diag.energies.append(energy)
        diag.mean_u.append(u.mean())

    diag.feasible, diag.reason = assess_feasibility(u, diag.converged)
    log.info(
        "Flow finished after %d steps at dt %.3g (converged=%s, feasible=%s %s)",
        diag.steps, dt, diag.converged, diag.feasible, diag.reason,
    )
    return u, diag
