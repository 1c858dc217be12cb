"""
Inverse design on a target curvature profile: resolve the target to χ, query
the inverse network, and optionally regenerate the predicted topology to
compare its profile with the target.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

import config
from src import benchmarks, encoding, storage
from src.errors import IncompatibleArtifactError, InvalidParameterError
from src.models import (
    ChiScaler,
    DesignParams,
    Diagnostics,
    HistogramSpec,
    PhaseField,
    SolverConfig,
    ThetaScaler,
)
from src.neural import mlp, training
from src.pipeline import dataset

log = logging.getLogger(__name__)


@dataclass
class Networks:
    f: mlp.MlpModel
    g: mlp.MlpModel
    spec: HistogramSpec
    theta_scaler: ThetaScaler
    chi_scaler: ChiScaler
    grid: int = config.GRID


@dataclass
class InverseDesignResult:
    theta: DesignParams
    chi_target: np.ndarray
    chi_star: np.ndarray                            # f(g(χ)) mapped back to raw χ
    reconstruction_tv: float
    chi_verify: np.ndarray | None = None            # profile of the regenerated topology
    verify_tv: float | None = None
    verify_diagnostics: Diagnostics | None = None
    artifacts: dict[str, str] = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------

def network_sidecar(
    spec: HistogramSpec,
    theta_scaler: ThetaScaler,
    chi_scaler: ChiScaler,
    grid: int,
    **extra,
) -> dict:
    """Everything inference needs to reproduce the training-time encoding."""
    return {
        "hist_spec": spec.to_dict(),
        "theta_scaler": encoding.theta_scaler_to_dict(theta_scaler),
        "chi_scaler": encoding.chi_scaler_to_dict(chi_scaler),
        "grid": grid,
        **extra,
    }


def _spec_from_sidecar(sidecar: dict, path: Path) -> HistogramSpec:
    if "hist_spec" not in sidecar:
        raise IncompatibleArtifactError(f"{path}: checkpoint sidecar has no histogram spec")
    return HistogramSpec(**sidecar["hist_spec"])


def load_networks(fnn_path: str | Path, inn_path: str | Path) -> Networks:
    f, f_side = mlp.load_model(fnn_path)
    g, g_side = mlp.load_model(inn_path)
    f_spec = _spec_from_sidecar(f_side, Path(fnn_path))
    g_spec = _spec_from_sidecar(g_side, Path(inn_path))
    if f_spec != g_spec:
        raise IncompatibleArtifactError(f"Surrogate trained on {f_spec}, inverse network on {g_spec}")
    if g.layer_dims[0] != f.layer_dims[-1] or g.layer_dims[-1] != f.layer_dims[0]:
        raise IncompatibleArtifactError(
            f"Inverse network {g.layer_dims} does not match surrogate {f.layer_dims}"
        )
    return Networks(
        f=f,
        g=g,
        spec=f_spec,
        theta_scaler=encoding.theta_scaler_from_dict(f_side["theta_scaler"]),
        chi_scaler=encoding.chi_scaler_from_dict(f_side["chi_scaler"]),
        grid=int(f_side.get("grid", config.GRID)),
    )


# ---------------------------------------------------------------------------
# Targets
# ---------------------------------------------------------------------------

def encode_phase_field(u: PhaseField, spec: HistogramSpec, epsilon: float | None = None) -> np.ndarray:
    """χ of a field; epsilon defaults to the solver value for its grid."""
    overrides = {"epsilon": float(epsilon)} if epsilon is not None else {}
    cfg = SolverConfig.for_grid(u.n, u.length, **overrides)
    return encoding.encode_field(u, cfg, spec).values


def target_encoding(
    source: str | Path,
    spec: HistogramSpec,
    row: int = 0,
    grid: int = config.BENCHMARK_GRID,
    seed: int = 0,
) -> np.ndarray:
    """
    χ for a target given as a benchmark name, a CHI1 file (row `row`), a
    samples file, an OBJ mesh with its companion samples file, or a field
    snapshot with its JSON sidecar.
    """
    if str(source) in benchmarks.NAMES:
        return encode_phase_field(benchmarks.benchmark_field(str(source), n=grid, seed=seed), spec)

    path = Path(source)
    if not path.exists():
        raise IncompatibleArtifactError(f"Target not found: {path}")
    with open(path, "rb") as f:
        magic = f.read(4)

    if magic == storage.CHI_MAGIC:
        rows, _ = storage.read_encodings(path, spec, renormalize=True)
        if not 0 <= row < len(rows):
            raise InvalidParameterError(f"{path} has {len(rows)} encodings, row {row} requested")
        return rows[row]
    if path.suffix == ".obj":
        return encoding.histogram(storage.read_samples(storage.companion_samples_path(path)), spec).values
    if path.suffix == ".samples":
        return encoding.histogram(storage.read_samples(path), spec).values
    if storage.sidecar_path(path).exists():
        u, meta = storage.read_field(path)
        return encode_phase_field(u, spec, meta.get("epsilon"))
    raise IncompatibleArtifactError(f"{path}: not an encoding, samples, OBJ or field file")


# ---------------------------------------------------------------------------
# Inversion
# ---------------------------------------------------------------------------

def verify_design(
    theta: DesignParams,
    spec: HistogramSpec,
    grid: int,
    seed: int = 0,
    cfg: SolverConfig | None = None,
) -> tuple[np.ndarray | None, Diagnostics, PhaseField]:
    """Evolve Θ from a seeded random start and encode the result (None if infeasible)."""
    if cfg is None:
        cfg = SolverConfig.for_grid(grid)
    res = dataset.run_attempt(0, seed, grid, cfg, spec, config.SAMPLING_BOUNDS, theta)
    if not res.feasible:
        log.warning("Predicted design is infeasible: %s", res.reason)
    return res.chi, res.diagnostics, res.u


def run_inverse_design(
    source: str | Path,
    fnn_path: str | Path,
    inn_path: str | Path,
    out_dir: str | Path | None = None,
    row: int = 0,
    verify: bool = False,
    seed: int = 0,
    benchmark_grid: int = config.BENCHMARK_GRID,
) -> InverseDesignResult:
    nets = load_networks(fnn_path, inn_path)
    chi_target = target_encoding(source, nets.spec, row=row, grid=benchmark_grid, seed=seed)
    theta, chi_star = training.invert(chi_target, nets.theta_scaler, nets.chi_scaler, nets.g, nets.f)
    result = InverseDesignResult(
        theta=theta,
        chi_target=chi_target,
        chi_star=chi_star,
        reconstruction_tv=encoding.total_variation(chi_target, chi_star),
    )
    log.info("Predicted design %s (reconstruction TV %.4f)", theta.as_array(), result.reconstruction_tv)

    u_verify = None
    if verify:
        result.chi_verify, result.verify_diagnostics, u_verify = verify_design(theta, nets.spec, nets.grid, seed)
        if result.chi_verify is not None:
            result.verify_tv = encoding.total_variation(chi_target, result.chi_verify)

    if out_dir is not None:
        result.artifacts = _write_result(Path(out_dir), result, nets.spec, u_verify, source, seed)
    return result


def _write_result(
    out_dir: Path,
    result: InverseDesignResult,
    spec: HistogramSpec,
    u_verify: PhaseField | None,
    source: str | Path,
    seed: int,
) -> dict[str, str]:
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = [result.chi_target, np.clip(result.chi_star, 0.0, None)]
    if result.chi_verify is not None:
        rows.append(result.chi_verify)
    artifacts = {
        "comparison": str(storage.write_encodings(out_dir / "comparison.bin", np.array(rows), spec)),
        "theta": str(storage.write_theta_table(out_dir / "theta.csv", result.theta.as_array())),
    }
    if u_verify is not None:
        artifacts["field"] = str(storage.write_field(
            out_dir / "verify_field.f32", u_verify,
            {"seed": seed, "theta": result.theta.as_array().tolist(),
             "epsilon": config.EPSILON_FACTOR * u_verify.spacing},
        ))
    storage.write_json(out_dir / "result.json", {
        "source": str(source),
        "seed": seed,
        "theta": dict(zip(config.DESIGN_COLUMNS, result.theta.as_array().tolist())),
        "reconstruction_tv": result.reconstruction_tv,
        "verify_tv": result.verify_tv,
        "verify_feasible": None if result.verify_diagnostics is None else result.verify_diagnostics.feasible,
        "rows": ["target", "reconstructed"] + (["verification"] if result.chi_verify is not None else []),
    })
    return artifacts
