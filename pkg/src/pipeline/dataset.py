"""
Dataset generation: sample Θ → evolve → mesh → element curvatures → χ,
keeping only feasible designs.

Layout of a dataset directory
-----------------------------
samples.db     attempt ledger (resume + per-sample status)
chi.bin        CHI1 encoding file, one row per feasible design
theta.csv      Θ table in the same row order
manifest.json  DatasetManifest

Attempt i always uses SeedSequence(seed, spawn_key=(i,)), and results are
committed strictly in attempt order, so the files do not depend on the number
of workers or on where a previous run was interrupted.
"""
from __future__ import annotations

import logging
from collections import Counter, deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

import config
from src import database, encoding, storage
from src.errors import (
    DivergenceError,
    EmptySupportError,
    EmptySurfaceError,
    FeasibilityAbortError,
    IncompatibleArtifactError,
    InvalidParameterError,
)
from src.geometry import design_space, phase_field, surface
from src.models import DatasetManifest, DesignParams, Diagnostics, HistogramSpec, PhaseField, SolverConfig

log = logging.getLogger(__name__)

CHI_FILE = "chi.bin"
THETA_FILE = "theta.csv"
MANIFEST_FILE = "manifest.json"


@dataclass
class AttemptResult:
    index: int
    theta: DesignParams
    feasible: bool
    reason: str = ""
    steps: int = 0
    final_energy: float | None = None
    chi: np.ndarray | None = None
    u: PhaseField | None = None                 # final field, kept for verification
    diagnostics: Diagnostics | None = None


def attempt_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def run_attempt(
    index: int,
    seed: int,
    grid: int,
    cfg: SolverConfig,
    spec: HistogramSpec,
    bounds: dict[str, tuple[float, float]],
    theta: DesignParams | None = None,
    length: float = config.DOMAIN_LENGTH,
) -> AttemptResult:
    """One design from sampling to encoding. Never raises for an infeasible design."""
    rng = attempt_rng(seed, index)
    if theta is None:
        theta = design_space.sample_design(rng, bounds)
    u0 = phase_field.init_field(grid, theta.m0, cfg.noise_amp, rng, length)
    try:
        u, diag = phase_field.evolve(u0, theta, cfg)
    except DivergenceError as exc:
        reason = f"diverged at step {exc.step}"
        return AttemptResult(index, theta, False, reason, exc.step,
                             diagnostics=Diagnostics(steps=exc.step, reason=reason))

    final = diag.energies[-1] if diag.energies else None
    if not diag.feasible:
        return AttemptResult(index, theta, False, diag.reason, diag.steps, final, u=u, diagnostics=diag)
    try:
        fields = phase_field.level_set_curvatures(u, cfg)
        samples = surface.element_curvatures(surface.marching_cubes(u), fields)
        chi = encoding.histogram(samples, spec).values
    except (EmptySurfaceError, EmptySupportError) as exc:
        diag.feasible, diag.reason = False, str(exc)
        return AttemptResult(index, theta, False, str(exc), diag.steps, final, u=u, diagnostics=diag)
    return AttemptResult(index, theta, True, "", diag.steps, final, chi, u, diag)


# ---------------------------------------------------------------------------
# Manifest / resume
# ---------------------------------------------------------------------------

def _manifest_statuses(attempts: list[dict]) -> list[dict]:
    return [
        {"index": a["idx"], "status": a["status"], "reason": a["reason"] or "", "offset": a["record"]}
        for a in attempts
    ]


def _check_resume(out_dir: Path, manifest: DatasetManifest) -> None:
    path = out_dir / MANIFEST_FILE
    if not path.exists():
        return
    previous = DatasetManifest.from_dict(storage.read_json(path))
    for key in ("hist_spec", "solver", "bounds", "seed"):
        if getattr(previous, key) != getattr(manifest, key):
            raise IncompatibleArtifactError(
                f"{out_dir} holds a dataset with a different {key}; use a fresh directory"
            )


def _sync_encodings(out_dir: Path, spec: HistogramSpec, committed: int) -> None:
    """Drop rows written after the last ledger commit (interrupted run)."""
    chi_path = out_dir / CHI_FILE
    if not chi_path.exists():
        storage.write_encodings(chi_path, np.zeros((0, spec.k)), spec)
        return
    rows, _ = storage.read_encodings(chi_path, spec)
    if len(rows) != committed:
        log.warning("Encoding file has %d rows, ledger has %d feasible; truncating", len(rows), committed)
        storage.write_encodings(chi_path, rows[:committed], spec)


def _write_outputs(out_dir: Path, manifest: DatasetManifest, db: Path) -> None:
    attempts = database.get_attempts(db)
    manifest.attempts = len(attempts)
    manifest.statuses = _manifest_statuses(attempts)
    manifest.count = sum(1 for a in attempts if a["status"] == "feasible")
    storage.write_theta_table(out_dir / THETA_FILE,
                              np.array(database.get_feasible_thetas(db)).reshape(-1, len(config.DESIGN_COLUMNS)))
    storage.write_json(out_dir / MANIFEST_FILE, manifest.to_dict())


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------

def generate_dataset(
    out_dir: str | Path,
    n_target: int,
    grid: int = config.GRID,
    cfg: SolverConfig | None = None,
    spec: HistogramSpec | None = None,
    bounds: dict[str, tuple[float, float]] | None = None,
    seed: int = 0,
    workers: int = 1,
    injected: list[DesignParams] | None = None,
    progress: Callable[[int, int], None] | None = None,
) -> DatasetManifest:
    """
    Attempt designs until n_target are feasible. `injected` designs replace the
    sampled Θ of the first attempts. Re-running on the same directory resumes.
    """
    if n_target < 1:
        raise InvalidParameterError(f"n_target must be ≥ 1, got {n_target}")
    if cfg is None:
        cfg = SolverConfig.for_grid(grid)
    if spec is None:
        spec = HistogramSpec()
    if bounds is None:
        bounds = config.SAMPLING_BOUNDS
    injected = list(injected or [])
    workers = max(1, workers)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = DatasetManifest(
        count=0,
        hist_spec=spec,
        solver={**cfg.to_dict(), "grid": grid},
        bounds={k: tuple(v) for k, v in bounds.items()},
        seed=seed,
        workers=workers,
    )
    _check_resume(out_dir, manifest)

    db = database.db_path(out_dir)
    database.init_db(db)
    attempts = database.get_attempts(db)
    count = sum(1 for a in attempts if a["status"] == "feasible")
    next_index = attempts[-1]["idx"] + 1 if attempts else 0
    window: deque[bool] = deque((a["status"] == "feasible" for a in attempts), maxlen=config.FEASIBILITY_WINDOW)
    _sync_encodings(out_dir, spec, count)
    if attempts:
        log.info("Resuming %s: %d feasible of %d attempts", out_dir, count, len(attempts))
    run_id = database.save_run(db, seed, workers, n_target, grid, next_index)

    def _job(index: int) -> AttemptResult:
        theta = injected[index] if index < len(injected) else None
        return run_attempt(index, seed, grid, cfg, spec, bounds, theta)

    chi_path = out_dir / CHI_FILE
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        while count < n_target:
            batch = range(next_index, next_index + (workers if pool else 1))
            results = list(pool.map(_job, batch)) if pool else [_job(i) for i in batch]
            for res in results:
                if count >= n_target:
                    break
                record = None
                if res.feasible:
                    storage.append_encodings(chi_path, res.chi[None, :], spec)
                    record = count
                    count += 1
                else:
                    log.info("Attempt %d rejected: %s", res.index, res.reason)
                database.record_attempt(
                    db, run_id, res.index, res.theta.as_array().tolist(),
                    "feasible" if res.feasible else "rejected",
                    res.reason, res.steps, res.final_energy, record,
                )
                next_index = res.index + 1
                window.append(res.feasible)
                if progress is not None:
                    progress(count, next_index)
                _check_feasibility(window, out_dir, manifest, db)
    finally:
        if pool is not None:
            pool.shutdown(wait=True)

    _write_outputs(out_dir, manifest, db)
    return manifest


def _check_feasibility(window: deque, out_dir: Path, manifest: DatasetManifest, db: Path) -> None:
    if len(window) < config.FEASIBILITY_WINDOW:
        return
    rate = sum(window) / len(window)
    if rate >= config.MIN_FEASIBLE_RATE:
        return
    _write_outputs(out_dir, manifest, db)
    reasons = Counter(s["reason"] for s in manifest.statuses[-len(window):] if s["status"] == "rejected")
    raise FeasibilityAbortError(
        f"Only {rate:.1%} of the last {len(window)} designs were feasible; "
        "check the sampling bounds and solver settings",
        diagnostics={"rate": rate, "window": len(window), "reasons": dict(reasons.most_common(5))},
    )


# ---------------------------------------------------------------------------
# Loading
# ---------------------------------------------------------------------------

def load_dataset(data_dir: str | Path) -> tuple[np.ndarray, np.ndarray, DatasetManifest]:
    """(Θ rows, χ rows, manifest) after checking the files agree."""
    data_dir = Path(data_dir)
    manifest = DatasetManifest.from_dict(storage.read_json(data_dir / MANIFEST_FILE))
    chi, _ = storage.read_encodings(data_dir / CHI_FILE, manifest.hist_spec, renormalize=True)
    thetas = storage.read_theta_table(data_dir / THETA_FILE)
    if not (len(chi) == len(thetas) == manifest.count):
        raise IncompatibleArtifactError(
            f"{data_dir}: manifest count {manifest.count}, {len(thetas)} designs, {len(chi)} encodings"
        )
    return thetas, chi, manifest


def split_dataset(
    thetas: np.ndarray,
    chi: np.ndarray,
    n_test: int,
    seed: int = 0,
) -> tuple[tuple[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]:
    """Seeded random hold-out of n_test pairs: ((Θ_train, χ_train), (Θ_test, χ_test))."""
    n = len(thetas)
    if not 0 <= n_test < n:
        raise InvalidParameterError(f"n_test must lie in [0, {n}), got {n_test}")
    order = np.random.default_rng(seed).permutation(n)
    test, train = order[:n_test], order[n_test:]
    return (thetas[train], chi[train]), (thetas[test], chi[test])
