import json
import os
from pathlib import Path

import numpy as np
import pytest

import config
from src import encoding, storage
from src.errors import DivergenceError, FeasibilityAbortError, IncompatibleArtifactError, InvalidParameterError
from src.geometry import design_space, phase_field
from src.models import ChiScaler, DesignParams, Diagnostics, HistogramSpec, SolverConfig
from src.neural import mlp
from src.pipeline import dataset, inverse_design


def _fake_attempt(index, seed, grid, cfg, spec, bounds, theta=None, length=config.DOMAIN_LENGTH):
    """Deterministic stand-in for the flow: every third attempt is rejected."""
    rng = dataset.attempt_rng(seed, index)
    if theta is None:
        theta = design_space.sample_design(rng, bounds)
    if index % 3 == 2:
        return dataset.AttemptResult(index, theta, False, "not converged", steps=5)
    chi = rng.dirichlet(np.ones(spec.k))
    return dataset.AttemptResult(index, theta, True, steps=5, final_energy=1.0, chi=chi)


@pytest.fixture
def fake_attempts(monkeypatch):
    monkeypatch.setattr(dataset, "run_attempt", _fake_attempt)


def _generate(out, n, small_spec, **kwargs):
    return dataset.generate_dataset(out, n, grid=8, spec=small_spec, seed=11, **kwargs)


# ---------------------------------------------------------------------------
# Single attempt
# ---------------------------------------------------------------------------

def test_run_attempt_encodes_a_feasible_field(monkeypatch, small_spec):
    grid = 24
    cfg = SolverConfig.for_grid(grid)

    def fake_evolve(u0, theta, cfg, progress=None):
        u = phase_field.sphere_field(grid, radius=30.0, epsilon=cfg.epsilon)
        return u, Diagnostics(energies=[2.0, 1.0], mean_u=[u.mean()] * 2, steps=1, converged=True, feasible=True)

    monkeypatch.setattr(phase_field, "evolve", fake_evolve)
    res = dataset.run_attempt(0, 3, grid, cfg, small_spec, config.SAMPLING_BOUNDS)
    assert res.feasible
    assert res.chi.shape == (small_spec.k,)
    assert res.chi.sum() == pytest.approx(1.0)
    assert res.final_energy == 1.0


def test_run_attempt_reports_divergence(monkeypatch, small_spec):
    def exploding(u0, theta, cfg, progress=None):
        raise DivergenceError(5)

    monkeypatch.setattr(phase_field, "evolve", exploding)
    res = dataset.run_attempt(0, 0, 8, SolverConfig.for_grid(8), small_spec, config.SAMPLING_BOUNDS)
    assert not res.feasible
    assert res.reason == "diverged at step 5"
    assert res.chi is None


def test_run_attempt_uses_given_design(monkeypatch, small_spec):
    seen = []

    def record(u0, theta, cfg, progress=None):
        seen.append(theta)
        return u0, Diagnostics(energies=[1.0], steps=0, reason="not converged")

    monkeypatch.setattr(phase_field, "evolve", record)
    theta = DesignParams(1, 0, 1, 0, 0, 0.1, m0=-0.4)
    res = dataset.run_attempt(4, 0, 8, SolverConfig.for_grid(8), small_spec, config.SAMPLING_BOUNDS, theta)
    assert seen == [theta]
    assert res.theta == theta
    assert not res.feasible


def test_attempt_rng_depends_only_on_seed_and_index():
    a = dataset.attempt_rng(5, 3).random(4)
    assert np.array_equal(a, dataset.attempt_rng(5, 3).random(4))
    assert not np.array_equal(a, dataset.attempt_rng(5, 4).random(4))


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------

def test_dataset_does_not_depend_on_worker_count(tmp_path, fake_attempts, small_spec):
    one = _generate(tmp_path / "one", 5, small_spec, workers=1)
    three = _generate(tmp_path / "three", 5, small_spec, workers=3)
    assert one.count == three.count == 5
    assert one.statuses == three.statuses

    chi1, _ = storage.read_encodings(tmp_path / "one" / dataset.CHI_FILE)
    chi3, _ = storage.read_encodings(tmp_path / "three" / dataset.CHI_FILE)
    np.testing.assert_array_equal(chi1, chi3)
    np.testing.assert_array_equal(
        storage.read_theta_table(tmp_path / "one" / dataset.THETA_FILE),
        storage.read_theta_table(tmp_path / "three" / dataset.THETA_FILE),
    )


def test_manifest_lists_every_attempt(tmp_path, fake_attempts, small_spec):
    manifest = _generate(tmp_path, 4, small_spec)
    # attempts 0, 1, 3, 4 feasible; 2 rejected
    assert manifest.attempts == 5
    assert [s["status"] for s in manifest.statuses] == ["feasible", "feasible", "rejected", "feasible", "feasible"]
    assert [s["offset"] for s in manifest.statuses] == [0, 1, None, 2, 3]
    assert manifest.statuses[2]["reason"] == "not converged"

    on_disk = json.loads((tmp_path / dataset.MANIFEST_FILE).read_text())
    assert on_disk["count"] == 4
    assert on_disk["hist_spec"] == small_spec.to_dict()


def test_resume_matches_uninterrupted_run(tmp_path, fake_attempts, small_spec):
    _generate(tmp_path / "resumed", 3, small_spec)
    _generate(tmp_path / "resumed", 6, small_spec)
    _generate(tmp_path / "fresh", 6, small_spec)

    thetas_r, chi_r, manifest_r = dataset.load_dataset(tmp_path / "resumed")
    thetas_f, chi_f, manifest_f = dataset.load_dataset(tmp_path / "fresh")
    np.testing.assert_array_equal(chi_r, chi_f)
    np.testing.assert_array_equal(thetas_r, thetas_f)
    assert manifest_r.statuses == manifest_f.statuses


def test_resume_drops_uncommitted_rows(tmp_path, fake_attempts, small_spec):
    _generate(tmp_path, 2, small_spec)
    storage.append_encodings(tmp_path / dataset.CHI_FILE, np.zeros((1, small_spec.k)), small_spec)
    _generate(tmp_path, 3, small_spec)
    thetas, chi, manifest = dataset.load_dataset(tmp_path)
    assert len(chi) == len(thetas) == manifest.count == 3
    assert chi[2].sum() == pytest.approx(1.0, abs=1e-6)


def test_resume_refuses_other_settings(tmp_path, fake_attempts, small_spec):
    _generate(tmp_path, 2, small_spec)
    with pytest.raises(IncompatibleArtifactError):
        dataset.generate_dataset(tmp_path, 3, grid=8, spec=small_spec, seed=12)


def test_injected_designs_come_first(tmp_path, fake_attempts, small_spec):
    injected = [DesignParams(0.5, 0, 0.5, 0, 0, 0.2, m0=-0.5)]
    _generate(tmp_path, 2, small_spec, injected=injected)
    thetas = storage.read_theta_table(tmp_path / dataset.THETA_FILE)
    np.testing.assert_array_equal(thetas[0], injected[0].as_array())


def test_generation_aborts_when_nothing_is_feasible(tmp_path, monkeypatch, small_spec):
    def never(index, seed, grid, cfg, spec, bounds, theta=None, length=config.DOMAIN_LENGTH):
        theta = theta or design_space.sample_design(dataset.attempt_rng(seed, index), bounds)
        return dataset.AttemptResult(index, theta, False, "no phase separation")

    monkeypatch.setattr(dataset, "run_attempt", never)
    monkeypatch.setattr(config, "FEASIBILITY_WINDOW", 10)
    with pytest.raises(FeasibilityAbortError) as info:
        _generate(tmp_path, 3, small_spec)
    assert info.value.diagnostics["rate"] == 0.0
    assert info.value.diagnostics["reasons"] == {"no phase separation": 10}
    # partial outputs are still written
    assert json.loads((tmp_path / dataset.MANIFEST_FILE).read_text())["attempts"] == 10


def test_generation_rejects_empty_target(tmp_path, small_spec):
    with pytest.raises(InvalidParameterError):
        _generate(tmp_path, 0, small_spec)


def test_split_is_seeded_and_disjoint():
    thetas = np.arange(20, dtype=float).reshape(10, 2)
    chi = thetas * 10
    (tr_t, tr_c), (te_t, te_c) = dataset.split_dataset(thetas, chi, n_test=3, seed=1)
    assert len(te_t) == 3 and len(tr_t) == 7
    np.testing.assert_array_equal(tr_c, tr_t * 10)
    assert not set(te_t[:, 0]) & set(tr_t[:, 0])
    (again, _), _ = dataset.split_dataset(thetas, chi, n_test=3, seed=1)
    np.testing.assert_array_equal(again, tr_t)
    with pytest.raises(InvalidParameterError):
        dataset.split_dataset(thetas, chi, n_test=10)


def test_load_dataset_checks_counts(tmp_path, fake_attempts, small_spec):
    _generate(tmp_path, 2, small_spec)
    storage.write_theta_table(tmp_path / dataset.THETA_FILE, np.zeros((1, 7)))
    with pytest.raises(IncompatibleArtifactError):
        dataset.load_dataset(tmp_path)


# ---------------------------------------------------------------------------
# Inverse design
# ---------------------------------------------------------------------------

def _save_networks(tmp_path, spec: HistogramSpec, k: int | None = None):
    k = k or spec.k
    f = mlp.init_model([7, 8, k], seed=1)
    g = mlp.init_model([k, 8, 7], seed=2)
    theta_scaler = encoding.fit_theta_scaler(np.array([[-1.0] * 6 + [-0.8], [1.0] * 6 + [-0.15]]))
    chi_scaler = ChiScaler(a=0.0, b=1.0, c=0.0, m=0.6, identity=True)
    side = inverse_design.network_sidecar(spec, theta_scaler, chi_scaler, grid=8)
    fnn = mlp.save_model(tmp_path / "f.mlp", f, side)
    inn = mlp.save_model(tmp_path / "g.mlp", g, side)
    return fnn, inn


def test_inverse_design_from_encoding_file(tmp_path, small_spec, rng):
    fnn, inn = _save_networks(tmp_path, small_spec)
    target = storage.write_encodings(tmp_path / "target.bin", rng.dirichlet(np.ones(small_spec.k), size=2), small_spec)

    result = inverse_design.run_inverse_design(target, fnn, inn, out_dir=tmp_path / "out", row=1)
    assert isinstance(result.theta, DesignParams)
    assert result.reconstruction_tv >= 0.0
    assert result.chi_verify is None

    rows, _ = storage.read_encodings(tmp_path / "out" / "comparison.bin", small_spec)
    assert rows.shape == (2, small_spec.k)
    summary = json.loads((tmp_path / "out" / "result.json").read_text())
    assert summary["rows"] == ["target", "reconstructed"]
    assert set(summary["theta"]) == set(config.DESIGN_COLUMNS)


def test_inverse_design_rejects_row_out_of_range(tmp_path, small_spec, rng):
    fnn, inn = _save_networks(tmp_path, small_spec)
    target = storage.write_encodings(tmp_path / "target.bin", rng.dirichlet(np.ones(small_spec.k), size=1), small_spec)
    with pytest.raises(InvalidParameterError):
        inverse_design.run_inverse_design(target, fnn, inn, row=3)


def test_networks_must_share_histogram_spec(tmp_path, small_spec):
    fnn, _ = _save_networks(tmp_path / "a", small_spec)
    other = HistogramSpec(bins=10, kappa_min=-1.0, kappa_max=1.0)
    _, inn = _save_networks(tmp_path / "b", other)
    with pytest.raises(IncompatibleArtifactError):
        inverse_design.load_networks(fnn, inn)


def test_target_from_samples_file(tmp_path, small_spec):
    from src.models import CurvatureSamples

    path = storage.write_samples(
        tmp_path / "t.samples",
        CurvatureSamples(np.array([0.05]), np.array([-0.25]), np.array([1.0])),
    )
    chi = inverse_design.target_encoding(path, small_spec)
    assert chi.sum() == pytest.approx(1.0)
    with pytest.raises(IncompatibleArtifactError):
        inverse_design.target_encoding(tmp_path / "missing.bin", small_spec)


# ---------------------------------------------------------------------------
# Trained desk checkpoints (fnn.mlp / inn.mlp in CURVDESIGN_DESK_CHECKPOINTS)
# ---------------------------------------------------------------------------

DESK_CHECKPOINTS = os.getenv("CURVDESIGN_DESK_CHECKPOINTS", "")


@pytest.mark.slow
@pytest.mark.skipif(not DESK_CHECKPOINTS, reason="CURVDESIGN_DESK_CHECKPOINTS not set")
@pytest.mark.parametrize("target", ["pns", "spinodoid"])
def test_verified_design_beats_random_designs(target):
    fnn, inn = Path(DESK_CHECKPOINTS) / "fnn.mlp", Path(DESK_CHECKPOINTS) / "inn.mlp"
    result = inverse_design.run_inverse_design(target, fnn, inn, verify=True)
    assert result.verify_tv is not None

    nets = inverse_design.load_networks(fnn, inn)
    cfg = SolverConfig.for_grid(nets.grid)
    random_tv = []
    index = 0
    while len(random_tv) < 10:
        res = dataset.run_attempt(index, 1, nets.grid, cfg, nets.spec, config.SAMPLING_BOUNDS)
        if res.feasible:
            random_tv.append(encoding.total_variation(result.chi_target, res.chi))
        index += 1
        assert index < 500, "random designs are almost never feasible"
    assert result.verify_tv < np.median(random_tv)
