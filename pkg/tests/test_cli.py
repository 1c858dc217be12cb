import json

import numpy as np
import pytest
from click.testing import CliRunner

import config
from main import cli, parse_theta
from src import storage
from src.geometry import design_space
from src.models import HistogramSpec
from src.neural import mlp
from src.pipeline import dataset

THETA = '{"a20": 1.0, "a11": 0.0, "a02": 1.0, "a10": -0.2, "a01": -0.2, "a00": 0.03, "m0": -0.6}'


@pytest.fixture
def runner():
    return CliRunner()


def _fake_attempt(index, seed, grid, cfg, spec, bounds, theta=None, length=config.DOMAIN_LENGTH):
    rng = dataset.attempt_rng(seed, index)
    theta = theta or design_space.sample_design(rng, bounds)
    return dataset.AttemptResult(index, theta, True, steps=3, final_energy=1.0, chi=rng.dirichlet(np.ones(spec.k)))


@pytest.fixture
def small_dataset(tmp_path, monkeypatch, small_spec):
    monkeypatch.setattr(dataset, "run_attempt", _fake_attempt)
    out = tmp_path / "data"
    dataset.generate_dataset(out, 12, grid=8, spec=small_spec, seed=2)
    return out


def test_parse_theta_accepts_object_list_and_file(tmp_path):
    theta = parse_theta(THETA)
    assert theta.a20 == 1.0 and theta.m0 == -0.6
    assert parse_theta("[1, 0, 1, -0.2, -0.2, 0.03, -0.6]") == theta
    path = tmp_path / "theta.json"
    path.write_text(THETA)
    assert parse_theta(str(path)) == theta


def test_show_config(runner):
    result = runner.invoke(cli, ["--show-config"])
    assert result.exit_code == 0
    assert "HIST_BINS" in result.output


def test_bad_theta_is_a_usage_error(runner, tmp_path):
    result = runner.invoke(cli, ["simulate", "--theta", '{"a20": 1.0}', "--out", str(tmp_path)])
    assert result.exit_code == 2
    result = runner.invoke(cli, ["simulate", "--theta", "[0, 0, 0, 0, 0, 0, 1.5]", "--out", str(tmp_path)])
    assert result.exit_code == 2


def test_simulate_without_steps_writes_field_only(runner, tmp_path):
    out = tmp_path / "sim"
    result = runner.invoke(cli, ["simulate", "--theta", THETA, "--grid", "8", "--steps", "0", "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert (out / "field.f32").exists()
    assert (out / "energy.csv").exists()
    assert not (out / "chi.bin").exists()
    job = json.loads((out / "job.json").read_text())
    assert job["command"] == "simulate"
    assert job["overrides"]["max_steps"] == 0

    _, meta = storage.read_field(out / "field.f32")
    assert meta["epsilon"] == pytest.approx(config.EPSILON_FACTOR * 100.0 / 8)
    assert meta["solver"]["max_steps"] == 0


def test_benchmark_then_encode(runner, tmp_path):
    out = tmp_path / "pns"
    result = runner.invoke(cli, ["benchmark", "pns", "--grid", "16", "--bins", "10", "--out", str(out)])
    assert result.exit_code == 0, result.output
    rows, spec = storage.read_encodings(out / "chi.bin")
    assert spec.bins == 10
    assert rows[0].sum() == pytest.approx(1.0, abs=1e-5)
    assert (out / "surface.samples").exists()

    # field snapshot and OBJ both reproduce the benchmark's own profile
    from_obj = tmp_path / "obj.bin"
    result = runner.invoke(cli, ["encode", "--in", str(out / "surface.obj"), "--bins", "10", "--out", str(from_obj)])
    assert result.exit_code == 0, result.output
    np.testing.assert_allclose(storage.read_encodings(from_obj)[0], rows, atol=1e-6)

    result = runner.invoke(cli, ["encode", "--in", str(out / "field.f32"), "--bins", "10", "--out", str(tmp_path / "f.bin")])
    assert result.exit_code == 0, result.output

    result = runner.invoke(cli, ["encode", "--in", str(out / "chi.bin"), "--out", str(tmp_path / "again.bin")])
    assert result.exit_code == config.EXIT_INCOMPATIBLE


def test_unknown_benchmark_is_rejected(runner, tmp_path):
    result = runner.invoke(cli, ["benchmark", "gyroid", "--out", str(tmp_path)])
    assert result.exit_code == 2


def test_bad_range_is_rejected(runner, tmp_path):
    result = runner.invoke(cli, ["benchmark", "pns", "--range", "0.5,-0.5", "--out", str(tmp_path)])
    assert result.exit_code == 2


def test_benchmark_takes_spinodoid_options(runner, tmp_path):
    out = tmp_path / "spin"
    result = runner.invoke(cli, [
        "benchmark", "spinodoid", "--grid", "16", "--bins", "10", "--waves", "40", "--rho", "0.4",
        "--cones", "60,60,10", "--cone-mode", "xor", "--seed", "3", "--out", str(out),
    ])
    assert result.exit_code == 0, result.output
    job = json.loads((out / "job.json").read_text())
    assert job["overrides"]["spinodoid"]["Q"] == 40
    assert job["overrides"]["spinodoid"]["rho"] == 0.4
    assert job["overrides"]["spinodoid"]["seed"] == 3
    assert job["overrides"]["cone_mode"] == "xor"

    u, _ = storage.read_field(out / "field.f32")
    assert np.mean(u.values > 0) == pytest.approx(0.4, abs=0.1)


def test_benchmark_rejects_bad_cones(runner, tmp_path):
    result = runner.invoke(cli, ["benchmark", "spinodoid", "--cones", "60,30", "--out", str(tmp_path)])
    assert result.exit_code == 2
    result = runner.invoke(cli, ["benchmark", "spinodoid", "--cones", "95,0,0", "--out", str(tmp_path)])
    assert result.exit_code == config.EXIT_INVALID_INPUT


def test_gen_data_accepts_the_full_scale_preset(runner, tmp_path, monkeypatch):
    monkeypatch.setattr(dataset, "run_attempt", _fake_attempt)
    out = tmp_path / "data"
    result = runner.invoke(cli, ["gen-data", "--preset", "paper", "--n", "3", "--grid", "8",
                                 "--workers", "1", "--out", str(out)])
    assert result.exit_code == 0, result.output
    _, chi, manifest = dataset.load_dataset(out)
    assert manifest.hist_spec.bins == config.PRESETS["paper"]["bins"]
    assert chi.shape == (3, manifest.hist_spec.k)
    assert config.preset("full") == config.preset("paper")

def test_train_and_invert_round(runner, tmp_path, small_dataset, small_spec):
    fnn = tmp_path / "f.mlp"
    inn = tmp_path / "g.mlp"
    result = runner.invoke(cli, [
        "train-fnn", "--data", str(small_dataset), "--epochs", "2", "--batch-size", "4",
        "--n-test", "2", "--out", str(fnn),
    ])
    assert result.exit_code == 0, result.output
    _, side = mlp.load_model(fnn)
    assert HistogramSpec(**side["hist_spec"]) == small_spec
    assert side["n_test"] == 2
    assert (tmp_path / "f.loss.csv").exists()

    result = runner.invoke(cli, [
        "train-inn", "--data", str(small_dataset), "--fnn", str(fnn), "--epochs", "2",
        "--batch-size", "4", "--out", str(inn),
    ])
    assert result.exit_code == 0, result.output
    g, g_side = mlp.load_model(inn)
    assert g.layer_dims[0] == small_spec.k and g.layer_dims[-1] == 7
    assert g_side["mode"] == "tandem"
    assert g_side["surrogate_checksum"] == mlp.load_model(fnn)[0].checksum()

    out = tmp_path / "inv"
    result = runner.invoke(cli, [
        "invert", "--target", str(small_dataset / dataset.CHI_FILE), "--row", "3",
        "--fnn", str(fnn), "--inn", str(inn), "--out", str(out),
    ])
    assert result.exit_code == 0, result.output
    summary = json.loads((out / "result.json").read_text())
    assert summary["verify_tv"] is None
    assert storage.read_theta_table(out / "theta.csv").shape == (1, 7)


def test_train_inn_rejects_other_encoding(runner, tmp_path, small_dataset):
    f = mlp.init_model([7, 4, 20100])
    fnn = mlp.save_model(tmp_path / "f.mlp", f, {"hist_spec": HistogramSpec().to_dict()})
    result = runner.invoke(cli, [
        "train-inn", "--data", str(small_dataset), "--fnn", str(fnn), "--epochs", "1", "--out", str(tmp_path / "g.mlp"),
    ])
    assert result.exit_code == config.EXIT_INCOMPATIBLE
