import numpy as np
import pandas as pd
import pytest

import config
from src import storage
from src.errors import IncompatibleArtifactError
from src.models import CurvatureSamples, Diagnostics, HistogramSpec, PhaseField, TrainReport


def test_field_snapshot_round_trip(tmp_path, rng):
    u = PhaseField(rng.uniform(-1, 1, size=(6, 6, 6)), length=30.0, periodic=False)
    path = storage.write_field(tmp_path / "field.f32", u, {"seed": 4})
    back, meta = storage.read_field(path)
    np.testing.assert_allclose(back.values, u.values, atol=1e-7)
    assert back.length == 30.0 and not back.periodic
    assert meta["seed"] == 4 and meta["n"] == 6
    # x varies fastest on disk
    raw = np.fromfile(path, dtype="<f4")
    assert raw[1] == np.float32(u.values[1, 0, 0])


def test_field_snapshot_size_is_checked(tmp_path):
    path = storage.write_field(tmp_path / "field.f32", PhaseField(np.zeros((4, 4, 4))))
    storage.write_json(storage.sidecar_path(path), {"n": 5})
    with pytest.raises(IncompatibleArtifactError):
        storage.read_field(path)


def test_encodings_append_updates_count(tmp_path, small_spec, rng):
    path = tmp_path / "chi.bin"
    first = rng.random((3, small_spec.k))
    second = rng.random((2, small_spec.k))
    assert storage.append_encodings(path, first, small_spec) == 3
    assert storage.append_encodings(path, second, small_spec) == 5

    rows, spec = storage.read_encodings(path, small_spec)
    assert spec == small_spec
    assert rows.shape == (5, small_spec.k)
    np.testing.assert_allclose(rows[3:], second, atol=1e-7)


def test_encodings_reject_other_spec_and_truncation(tmp_path, small_spec):
    path = storage.write_encodings(tmp_path / "chi.bin", np.zeros((2, small_spec.k)), small_spec)
    with pytest.raises(IncompatibleArtifactError):
        storage.read_encodings(path, HistogramSpec(bins=10, kappa_min=-0.6, kappa_max=0.6))
    with pytest.raises(IncompatibleArtifactError):
        storage.append_encodings(path, np.zeros((1, 55)), HistogramSpec(bins=10, kappa_min=-1.0, kappa_max=1.0))

    path.write_bytes(path.read_bytes()[:-4])
    with pytest.raises(IncompatibleArtifactError):
        storage.read_encodings(path)

    (tmp_path / "bad.bin").write_bytes(b"XXXX" + b"\x00" * 60)
    with pytest.raises(IncompatibleArtifactError):
        storage.read_encodings(tmp_path / "bad.bin")


def test_encodings_can_be_renormalized_on_read(tmp_path, rng):
    spec = HistogramSpec(bins=40)
    rows = rng.dirichlet(np.full(spec.k, 0.05), size=6)
    rows[2] = 0.0
    path = storage.write_encodings(tmp_path / "chi.bin", rows, spec)

    raw, _ = storage.read_encodings(path)
    fixed, _ = storage.read_encodings(path, renormalize=True)
    live = np.arange(6) != 2
    np.testing.assert_allclose(fixed[live].sum(axis=1), 1.0, atol=1e-12)
    np.testing.assert_array_equal(fixed[2], 0.0)
    np.testing.assert_allclose(fixed, raw, atol=1e-6)


def test_samples_round_trip_and_count_check(tmp_path):
    samples = CurvatureSamples(np.array([0.1, 0.2]), np.array([0.0, -0.1]), np.array([1.0, 2.0]))
    path = storage.write_samples(tmp_path / "a.samples", samples)
    back = storage.read_samples(path)
    np.testing.assert_array_equal(back.k2, samples.k2)

    path.write_bytes(path.read_bytes() + b"\x00" * 8)
    with pytest.raises(IncompatibleArtifactError):
        storage.read_samples(path)


def test_companion_and_sidecar_paths():
    assert storage.companion_samples_path("out/surface.obj").name == "surface.samples"
    assert storage.sidecar_path("out/f.mlp").name == "f.mlp.json"


def test_json_handles_numpy_and_rejects_garbage(tmp_path):
    path = storage.write_json(tmp_path / "a.json", {"x": np.float64(1.5), "v": np.arange(3)})
    assert storage.read_json(path) == {"x": 1.5, "v": [0, 1, 2]}
    path.write_text("{not json")
    with pytest.raises(IncompatibleArtifactError):
        storage.read_json(path)


def test_theta_table_round_trip(tmp_path, rng):
    thetas = rng.normal(size=(4, 7))
    path = storage.write_theta_table(tmp_path / "theta.csv", thetas)
    np.testing.assert_array_equal(storage.read_theta_table(path), thetas)
    assert list(pd.read_csv(path).columns) == list(config.DESIGN_COLUMNS)

    pd.DataFrame({"a20": [1.0]}).to_csv(path, index=False)
    with pytest.raises(IncompatibleArtifactError):
        storage.read_theta_table(path)


def test_csv_traces(tmp_path):
    diag = Diagnostics(energies=[3.0, 2.0, 1.5], mean_u=[0.1, 0.1, 0.1])
    df = pd.read_csv(storage.write_energy_trace(tmp_path / "energy.csv", diag))
    assert list(df["step"]) == [0, 1, 2]

    report = TrainReport(train_loss=[0.5, 0.2], test_loss=[0.6, 0.3])
    df = pd.read_csv(storage.write_train_report(tmp_path / "loss.csv", report))
    assert list(df["epoch"]) == [1, 2]
    assert df["test_loss"].iloc[-1] == pytest.approx(0.3)
