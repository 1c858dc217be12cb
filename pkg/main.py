"""
curvdesign: curvature-profile inverse design
Entry point. Wires all modules together.

Usage (subcommands):
  python main.py simulate --theta '{"a20": 0.5, ...}' --grid 48 --out runs/sim
  python main.py gen-data --n 2000 --preset desk --workers 4 --out runs/data
  python main.py encode --in runs/sim/field.f32 --bins 40 --out runs/sim/chi.bin
  python main.py train-fnn --data runs/data --preset desk --out runs/fnn.mlp
  python main.py train-inn --data runs/data --fnn runs/fnn.mlp --out runs/inn.mlp
  python main.py invert --target pns --fnn runs/fnn.mlp --inn runs/inn.mlp --verify --out runs/inv
  python main.py benchmark spinodoid --grid 64 --out runs/spinodoid

  python main.py --show-config                    # print every default
"""
from __future__ import annotations

import dataclasses
import functools
import json
import math
import sys
from pathlib import Path

import click

# Ensure src is importable
import os
sys.path.insert(0, os.path.dirname(__file__))

# config sets the BLAS thread variables; it must load before numpy.
import config

import numpy as np

from src import benchmarks, display, encoding, plotting, storage
from src.errors import CurvDesignError, IncompatibleArtifactError
from src.geometry import design_space, phase_field, surface
from src.models import (
    CurvatureEncoding,
    DesignParams,
    HistogramSpec,
    JobSpec,
    SolverConfig,
    SpinodoidParams,
    TrainConfig,
)
from src.neural import mlp, training
from src.pipeline import dataset, inverse_design


# ---------------------------------------------------------------------------
# Option parsers
# ---------------------------------------------------------------------------

def parse_theta(text: str) -> DesignParams:
    """
    Accept a JSON object keyed by column name, a JSON list in column order,
    or a path to a JSON file holding either.
    """
    if not text.lstrip().startswith(("{", "[")):
        if not Path(text).is_file():
            raise click.BadParameter(f"Not JSON or a JSON file: {text[:60]}")
        text = Path(text).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError:
        raise click.BadParameter(f"Not JSON or a JSON file: {text[:60]}")
    try:
        if isinstance(raw, dict):
            return design_space.design_from_row(raw)
        return DesignParams.from_array(raw)
    except KeyError as e:
        raise click.BadParameter(f"Missing design component {e}; need {', '.join(config.DESIGN_COLUMNS)}")
    except (TypeError, ValueError) as e:
        raise click.BadParameter(str(e))


def parse_range(ctx, param, value: str | None) -> tuple[float, float] | None:
    if value is None:
        return None
    try:
        lo, hi = (float(v) for v in value.split(","))
    except ValueError:
        raise click.BadParameter(f"Expected 'min,max', got {value!r}")
    if not lo < hi:
        raise click.BadParameter(f"Range must be increasing, got {value!r}")
    return lo, hi


def parse_cones(ctx, param, value: str | None) -> tuple[float, float, float] | None:
    if value is None:
        return None
    try:
        cones = tuple(float(v) for v in value.split(","))
    except ValueError:
        raise click.BadParameter(f"Expected three angles in degrees, got {value!r}")
    if len(cones) != 3:
        raise click.BadParameter(f"Expected three angles in degrees, got {value!r}")
    return cones


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------

def handle_errors(fn):
    """Print CurvDesignError through the display layer and exit with its code."""
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except CurvDesignError as e:
            display.print_error(e)
            sys.exit(e.exit_code)
    return wrapper


def _record_job(out_dir: Path, command: str, inputs: dict, overrides: dict, seed: int = 0, workers: int = 1) -> None:
    job = JobSpec(
        command=command,
        inputs={k: str(v) for k, v in inputs.items() if v is not None},
        output=str(out_dir),
        overrides={k: v for k, v in overrides.items() if v is not None},
        seed=seed,
        workers=workers,
    )
    storage.write_json(out_dir / "job.json", dataclasses.asdict(job))


def _spec(bins: int | None, kappa_range: tuple[float, float] | None) -> HistogramSpec:
    lo, hi = kappa_range or config.KAPPA_RANGE
    return HistogramSpec(bins=bins or config.HIST_BINS, kappa_min=lo, kappa_max=hi)


def _default_n_test(n: int, preset: str) -> int:
    return max(0, min(config.preset(preset)["n_test"], n // 10))


def _epoch_callback(progress, task, epochs: int):
    def callback(epoch: int, train_loss: float, test_loss: float) -> None:
        progress.update(
            task,
            advance=1,
            description=f"[{epoch + 1}/{epochs}] loss {train_loss:.3g}"
            + ("" if np.isnan(test_loss) else f" · test {test_loss:.3g}"),
        )
    return callback


# ---------------------------------------------------------------------------
# CLI group
# ---------------------------------------------------------------------------

@click.group(invoke_without_command=True)
@click.pass_context
@click.option("--show-config", is_flag=True, default=False, help="Print every default setting and exit.")
@click.option("--verbose", "-v", is_flag=True, default=False, help="Log progress at INFO level.")
def cli(ctx: click.Context, show_config: bool, verbose: bool) -> None:
    """curvdesign: curvature-profile inverse design.

    \b
    Subcommands:
      simulate    Evolve one design and encode its interface
      gen-data    Build a dataset of feasible (Θ, χ) pairs
      encode      Encode a field, mesh or samples file
      train-fnn   Train the forward surrogate Θ → χ
      train-inn   Train the inverse network through the surrogate
      invert      Predict Θ for a target curvature profile
      benchmark   Generate and encode a benchmark topology
    """
    display.setup_logging("INFO" if verbose else config.LOG_LEVEL)
    if show_config:
        display.print_config(config.as_dict())
        ctx.exit(0)
    if ctx.invoked_subcommand is None:
        click.echo(ctx.get_help())


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

@cli.command("simulate")
@click.option("--theta", "theta_text", required=True, help="Design as JSON (object or 7-list) or a JSON file.")
@click.option("--grid", type=int, default=config.GRID, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--steps", type=int, default=None, help=f"Step cap (default {config.MAX_STEPS}).")
@click.option("--bins", type=int, default=None, help=f"Histogram bins (default {config.HIST_BINS}).")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
@click.option("--plot", is_flag=True, default=False, help="Write figures next to the outputs.")
@handle_errors
def simulate_cmd(theta_text: str, grid: int, seed: int, steps: int | None, bins: int | None, out_dir: str, plot: bool) -> None:
    """Evolve one design from a seeded random start and encode the result."""
    theta = parse_theta(theta_text)
    out = Path(out_dir)
    spec = _spec(bins, None)
    overrides = {"max_steps": steps} if steps is not None else {}
    cfg = SolverConfig.for_grid(grid, **overrides)

    display.print_header(f"simulate · {grid}³ · seed {seed}")
    display.print_design(theta)

    u0 = phase_field.init_field(grid, theta.m0, cfg.noise_amp, dataset.attempt_rng(seed, 0))
    with display.make_progress() as progress:
        task = progress.add_task("Evolving phase field...", total=cfg.max_steps)
        u, diag = phase_field.evolve(
            u0, theta, cfg,
            progress=lambda it, e: progress.update(task, completed=it + 1, description=f"Step {it + 1} · E = {e:.5g}"),
        )
        progress.update(task, completed=cfg.max_steps, description=f"Flow finished after {diag.steps} steps ✓")
    display.print_diagnostics(diag)

    saved = {
        "field": storage.write_field(out / "field.f32", u, {
            "seed": seed, "theta": design_space.design_to_row(theta),
            "epsilon": cfg.epsilon, "solver": cfg.to_dict(),
        }),
        "energy": storage.write_energy_trace(out / "energy.csv", diag),
    }
    if diag.feasible:
        fields = phase_field.level_set_curvatures(u, cfg)
        mesh = surface.marching_cubes(u)
        samples = surface.element_curvatures(mesh, fields)
        enc = encoding.histogram(samples, spec)
        saved["mesh"] = surface.export_obj(mesh, out / "surface.obj", samples)
        saved["encoding"] = storage.write_encodings(out / "chi.bin", enc.values[None, :], spec)
        display.print_encoding(enc)
        if plot:
            saved["profile"] = plotting.profile_image(enc, out / "profile.png", "simulated")
    if plot:
        saved["energy plot"] = plotting.energy_contours(theta, spec, out / "energy_density.png")

    _record_job(out, "simulate", {}, {"grid": grid, "max_steps": steps, "bins": bins,
                                      "theta": design_space.design_to_row(theta)}, seed)
    display.print_saved({k: str(v) for k, v in saved.items()})


# ---------------------------------------------------------------------------
# gen-data
# ---------------------------------------------------------------------------

@cli.command("gen-data")
@click.option("--n", "n_target", type=int, default=None, help="Feasible designs to collect (default from preset).")
@click.option("--preset", type=click.Choice(config.PRESET_NAMES), default="desk", show_default=True)
@click.option("--grid", type=int, default=None, help="Grid points per axis (default from preset).")
@click.option("--bins", type=int, default=None, help="Histogram bins (default from preset).")
@click.option("--range", "kappa_range", callback=parse_range, default=None, help="Curvature range 'min,max'.")
@click.option("--steps", type=int, default=None, help=f"Step cap per design (default {config.MAX_STEPS}).")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--workers", type=int, default=config.THREADS, show_default=True)
@click.option("--inject", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Θ table whose rows replace the first sampled designs.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
@handle_errors
def gen_data_cmd(
    n_target: int | None,
    preset: str,
    grid: int | None,
    bins: int | None,
    kappa_range: tuple[float, float] | None,
    steps: int | None,
    seed: int,
    workers: int,
    inject: str | None,
    out_dir: str,
) -> None:
    """Sample designs until N are feasible. Re-running on the same --out resumes."""
    p = config.preset(preset)
    n_target = n_target or p["n_samples"]
    grid = grid or p["grid"]
    spec = _spec(bins or p["bins"], kappa_range)
    cfg = SolverConfig.for_grid(grid, **({"max_steps": steps} if steps is not None else {}))
    injected = [DesignParams.from_array(r) for r in storage.read_theta_table(inject)] if inject else None
    out = Path(out_dir)

    display.print_header(f"gen-data · {n_target} designs · {grid}³ · B = {spec.bins} · {workers} worker(s)")
    with display.make_progress() as progress:
        task = progress.add_task("Generating designs...", total=n_target)

        def on_commit(count: int, attempts: int) -> None:
            progress.update(task, completed=count, description=f"{count} feasible / {attempts} attempts")

        manifest = dataset.generate_dataset(
            out, n_target, grid, cfg, spec, seed=seed, workers=workers, injected=injected, progress=on_commit,
        )
        progress.update(task, description=f"Dataset complete ({manifest.count} designs) ✓")

    display.print_manifest(manifest)
    _record_job(out, "gen-data", {"inject": inject},
                {"n": n_target, "preset": preset, "grid": grid, "bins": spec.bins, "max_steps": steps,
                 "range": [spec.kappa_min, spec.kappa_max]}, seed, workers)
    display.print_saved({
        "encodings": str(out / dataset.CHI_FILE),
        "designs": str(out / dataset.THETA_FILE),
        "manifest": str(out / dataset.MANIFEST_FILE),
    })


# ---------------------------------------------------------------------------
# encode
# ---------------------------------------------------------------------------

@cli.command("encode")
@click.option("--in", "source", type=click.Path(exists=True, dir_okay=False), required=True,
              help="Field snapshot (with sidecar), OBJ (with samples file) or samples file.")
@click.option("--bins", type=int, default=None, help=f"Histogram bins (default {config.HIST_BINS}).")
@click.option("--range", "kappa_range", callback=parse_range, default=None, help="Curvature range 'min,max'.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@click.option("--plot", is_flag=True, default=False)
@handle_errors
def encode_cmd(source: str, bins: int | None, kappa_range, out_path: str, plot: bool) -> None:
    """Encode a surface into a one-row encoding file."""
    spec = _spec(bins, kappa_range)
    with open(source, "rb") as f:
        if f.read(4) == storage.CHI_MAGIC:
            raise IncompatibleArtifactError(f"{source} is already an encoding file")
    values = inverse_design.target_encoding(source, spec)
    enc = CurvatureEncoding(values, spec)
    saved = {"encoding": storage.write_encodings(out_path, values[None, :], spec)}
    display.print_encoding(enc, title=Path(source).name)
    if plot:
        saved["profile"] = plotting.profile_image(enc, Path(out_path).with_suffix(".png"), Path(source).name)
    display.print_saved({k: str(v) for k, v in saved.items()})


# ---------------------------------------------------------------------------
# train-fnn
# ---------------------------------------------------------------------------

@cli.command("train-fnn")
@click.option("--data", "data_dir", type=click.Path(exists=True, file_okay=False), required=True)
@click.option("--preset", type=click.Choice(config.PRESET_NAMES), default="desk", show_default=True)
@click.option("--epochs", type=int, default=config.EPOCHS_FNN, show_default=True)
@click.option("--lr", type=float, default=config.LEARNING_RATE, show_default=True)
@click.option("--batch-size", type=int, default=config.BATCH_SIZE, show_default=True)
@click.option("--n-test", type=int, default=None, help="Held-out designs (default: preset, at most 10 %).")
@click.option("--seed", type=int, default=config.TRAIN_SEED, show_default=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@click.option("--plot", is_flag=True, default=False)
@handle_errors
def train_fnn_cmd(
    data_dir: str, preset: str, epochs: int, lr: float, batch_size: int,
    n_test: int | None, seed: int, out_path: str, plot: bool,
) -> None:
    """Train the forward surrogate f: Θˢ → χˢ and fit both scalers."""
    thetas, chi, manifest = dataset.load_dataset(data_dir)
    if n_test is None:
        n_test = _default_n_test(len(thetas), preset)
    (th_tr, chi_tr), (th_te, chi_te) = dataset.split_dataset(thetas, chi, n_test, seed)
    theta_scaler = encoding.fit_theta_scaler(th_tr)
    chi_scaler = encoding.fit_chi_scaler(chi_tr)
    theta_s = encoding.scale_theta(th_tr, theta_scaler)
    chi_s = encoding.scale_chi(chi_tr, chi_scaler)
    test = (encoding.scale_theta(th_te, theta_scaler), encoding.scale_chi(chi_te, chi_scaler)) if n_test else None

    cfg = TrainConfig(learning_rate=lr, batch_size=batch_size, epochs=epochs, seed=seed)
    display.print_header(f"train-fnn · {len(th_tr)} train / {n_test} test · preset {preset}")
    with display.make_progress() as progress:
        task = progress.add_task("Training f-NN...", total=epochs)
        model, report = training.train_forward(
            theta_s, chi_s, cfg, config.preset(preset)["fnn_hidden"], test,
            _epoch_callback(progress, task, epochs),
        )
    display.print_train_report(report, f"f-NN {model.layer_dims}")

    sidecar = inverse_design.network_sidecar(
        manifest.hist_spec, theta_scaler, chi_scaler, int(manifest.solver["grid"]),
        data=str(data_dir), n_test=n_test, split_seed=seed, preset=preset, epochs=epochs,
    )
    out = Path(out_path)
    saved = {
        "checkpoint": mlp.save_model(out, model, sidecar),
        "losses": storage.write_train_report(out.with_suffix(".loss.csv"), report),
    }
    if plot:
        saved["loss plot"] = plotting.loss_curves(report, out.with_suffix(".loss.png"), "f-NN")
    display.print_saved({k: str(v) for k, v in saved.items()})


# ---------------------------------------------------------------------------
# train-inn
# ---------------------------------------------------------------------------

@cli.command("train-inn")
@click.option("--data", "data_dir", type=click.Path(exists=True, file_okay=False), required=True)
@click.option("--fnn", "fnn_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--preset", type=click.Choice(config.PRESET_NAMES), default="desk", show_default=True)
@click.option("--epochs", type=int, default=config.EPOCHS_INN, show_default=True)
@click.option("--lr", type=float, default=config.LEARNING_RATE, show_default=True)
@click.option("--batch-size", type=int, default=config.BATCH_SIZE, show_default=True)
@click.option("--direct", is_flag=True, default=False,
              help="Regress Θ on χ directly instead of training through the surrogate.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@click.option("--plot", is_flag=True, default=False)
@handle_errors
def train_inn_cmd(
    data_dir: str, fnn_path: str, preset: str, epochs: int, lr: float, batch_size: int,
    direct: bool, out_path: str, plot: bool,
) -> None:
    """Train the inverse network g: χˢ → Θˢ by minimizing ‖f(g(χˢ)) − χˢ‖² with f frozen."""
    f, f_side = mlp.load_model(fnn_path)
    if "hist_spec" not in f_side:
        raise IncompatibleArtifactError(f"{fnn_path}: checkpoint sidecar has no histogram spec")
    thetas, chi, manifest = dataset.load_dataset(data_dir)
    if HistogramSpec(**f_side["hist_spec"]) != manifest.hist_spec:
        raise IncompatibleArtifactError(f"{data_dir} was encoded with {manifest.hist_spec}, surrogate with {f_side['hist_spec']}")

    # Same hold-out as the surrogate so test designs stay unseen.
    n_test = int(f_side.get("n_test", 0))
    split_seed = int(f_side.get("split_seed", config.TRAIN_SEED))
    (th_tr, chi_tr), (th_te, chi_te) = dataset.split_dataset(thetas, chi, n_test, split_seed)
    theta_scaler = encoding.theta_scaler_from_dict(f_side["theta_scaler"])
    chi_scaler = encoding.chi_scaler_from_dict(f_side["chi_scaler"])
    chi_s = encoding.scale_chi(chi_tr, chi_scaler)
    chi_te_s = encoding.scale_chi(chi_te, chi_scaler) if n_test else None

    cfg = TrainConfig(learning_rate=lr, batch_size=batch_size, epochs=epochs, seed=split_seed)
    hidden = config.preset(preset)["inn_hidden"]
    mode = "direct" if direct else "tandem"
    display.print_header(f"train-inn ({mode}) · {len(th_tr)} train / {n_test} test")
    with display.make_progress() as progress:
        task = progress.add_task("Training i-NN...", total=epochs)
        callback = _epoch_callback(progress, task, epochs)
        if direct:
            test = (chi_te_s, encoding.scale_theta(th_te, theta_scaler)) if n_test else None
            g, report = training.train_inverse_direct(
                chi_s, encoding.scale_theta(th_tr, theta_scaler), cfg, hidden, test, callback,
            )
        else:
            g, report = training.train_inverse(chi_s, f, cfg, hidden, chi_te_s, callback)
    display.print_train_report(report, f"i-NN {g.layer_dims} ({mode})")

    saved = {}
    if n_test:
        pred = encoding.unscale_theta(mlp.forward(g, chi_te_s), theta_scaler)
        r2 = training.r2_scores(th_te, pred)
        display.print_r2(config.DESIGN_COLUMNS, r2)
        display.console.print(
            f"[dim]reconstruction loss on held-out encodings "
            f"{training.evaluate_reconstruction(g, f, chi_te_s):.6g}[/dim]"
        )
        if plot:
            saved["parity"] = plotting.parity_plots(th_te, pred, config.DESIGN_COLUMNS, r2,
                                                     Path(out_path).with_suffix(".parity.png"))

    sidecar = {**f_side, "fnn": str(fnn_path), "mode": mode, "epochs": epochs, "surrogate_checksum": f.checksum()}
    out = Path(out_path)
    saved["checkpoint"] = mlp.save_model(out, g, sidecar)
    saved["losses"] = storage.write_train_report(out.with_suffix(".loss.csv"), report)
    if plot:
        saved["loss plot"] = plotting.loss_curves(report, out.with_suffix(".loss.png"), f"i-NN ({mode})")
    display.print_saved({k: str(v) for k, v in saved.items()})


# ---------------------------------------------------------------------------
# invert
# ---------------------------------------------------------------------------

@cli.command("invert")
@click.option("--target", required=True,
              help=f"Benchmark name ({', '.join(benchmarks.NAMES)}) or an encoding, samples, OBJ or field file.")
@click.option("--fnn", "fnn_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--inn", "inn_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--row", type=int, default=0, show_default=True, help="Row of a multi-row encoding file.")
@click.option("--verify", is_flag=True, default=False, help="Evolve the predicted design and compare profiles.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--grid", type=int, default=config.BENCHMARK_GRID, show_default=True, help="Grid for benchmark targets.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None)
@click.option("--plot", is_flag=True, default=False)
@handle_errors
def invert_cmd(
    target: str, fnn_path: str, inn_path: str, row: int, verify: bool,
    seed: int, grid: int, out_dir: str | None, plot: bool,
) -> None:
    """Predict the design whose topology reproduces a target curvature profile."""
    display.print_header(f"invert · {target}")
    result = inverse_design.run_inverse_design(
        target, fnn_path, inn_path, out_dir=out_dir, row=row, verify=verify, seed=seed, benchmark_grid=grid,
    )
    display.print_inverse_result(result)
    if result.verify_diagnostics is not None:
        display.print_diagnostics(result.verify_diagnostics)

    if out_dir is not None:
        out = Path(out_dir)
        saved = dict(result.artifacts)
        if plot:
            spec = inverse_design.load_networks(fnn_path, inn_path).spec
            rows, labels = [result.chi_target, result.chi_star], ["target", "reconstructed"]
            if result.chi_verify is not None:
                rows.append(result.chi_verify)
                labels.append("verification")
            saved["profiles"] = plotting.profile_comparison(rows, labels, spec, out / "profiles.png")
            saved["energy plot"] = plotting.energy_contours(result.theta, spec, out / "energy_density.png")
        _record_job(out, "invert", {"target": target, "fnn": fnn_path, "inn": inn_path},
                    {"row": row, "verify": verify, "grid": grid}, seed)
        display.print_saved({k: str(v) for k, v in saved.items()})


# ---------------------------------------------------------------------------
# benchmark
# ---------------------------------------------------------------------------

@cli.command("benchmark")
@click.argument("name", type=click.Choice(benchmarks.NAMES))
@click.option("--grid", type=int, default=config.BENCHMARK_GRID, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True, help="Spinodoid wave-vector seed.")
@click.option("--beta", type=float, default=config.SPINODOID_BETA, show_default=True,
              help="Spinodoid wavenumber on the unit box.")
@click.option("--waves", "Q", type=int, default=config.SPINODOID_Q, show_default=True, help="Spinodoid wave count.")
@click.option("--rho", type=float, default=config.SPINODOID_RHO, show_default=True, help="Spinodoid solid fraction.")
@click.option("--cones", callback=parse_cones, default=None,
              help=f"Spinodoid cone half-angles in degrees (default {','.join(map(str, config.SPINODOID_CONES_DEG))}).")
@click.option("--cone-mode", type=click.Choice(["or", "xor"]), default=config.SPINODOID_CONE_MODE, show_default=True)
@click.option("--voxels", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Raw voxel file with JSON sidecar (bone only; default is a synthetic sphere).")
@click.option("--bins", type=int, default=None, help=f"Histogram bins (default {config.HIST_BINS}).")
@click.option("--range", "kappa_range", callback=parse_range, default=None, help="Curvature range 'min,max'.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
@click.option("--plot", is_flag=True, default=False)
@handle_errors
def benchmark_cmd(
    name: str, grid: int, seed: int, beta: float, Q: int, rho: float, cones, cone_mode: str,
    voxels: str | None, bins: int | None, kappa_range, out_dir: str, plot: bool,
) -> None:
    """Generate a benchmark topology on the design domain and encode it."""
    spec = _spec(bins, kappa_range)
    out = Path(out_dir)
    display.print_header(f"benchmark · {name} · {grid}³")

    cones = cones or config.SPINODOID_CONES_DEG
    params = SpinodoidParams(beta=beta, Q=Q, rho=rho, seed=seed, theta1=math.radians(cones[0]),
                             theta2=math.radians(cones[1]), theta3=math.radians(cones[2]))
    u = benchmarks.benchmark_field(name, n=grid, seed=seed, voxel_path=voxels,
                                   spinodoid_params=params, cone_mode=cone_mode)
    cfg = SolverConfig.for_grid(u.n, u.length)
    fields = phase_field.level_set_curvatures(u, cfg)
    mesh = surface.marching_cubes(u)
    samples = surface.element_curvatures(mesh, fields)
    enc = encoding.histogram(samples, spec)
    display.print_encoding(enc, title=name)

    saved = {
        "field": storage.write_field(out / "field.f32", u, {"benchmark": name, "seed": seed}),
        "mesh": surface.export_obj(mesh, out / "surface.obj", samples),
        "encoding": storage.write_encodings(out / "chi.bin", enc.values[None, :], spec),
    }
    if plot:
        saved["profile"] = plotting.profile_image(enc, out / "profile.png", name)
    overrides = {"name": name, "grid": grid, "bins": spec.bins}
    if name == "spinodoid":
        overrides.update(spinodoid=dataclasses.asdict(params), cone_mode=cone_mode)
    _record_job(out, "benchmark", {"voxels": voxels}, overrides, seed)
    display.print_saved({k: str(v) for k, v in saved.items()})


if __name__ == "__main__":
    cli()
