"""
On-disk artifacts: JSON sidecars, binary field snapshots, CHI1 encoding files,
curvature-sample files, MLP1 checkpoints, OBJ meshes and CSV tables.

Every reader checks the header it expects and raises IncompatibleArtifactError
on anything else. All binary data is little-endian.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

import config
from src.errors import IncompatibleArtifactError
from src.models import CurvatureSamples, Diagnostics, HistogramSpec, PhaseField, TrainReport

CHI_MAGIC = b"CHI1"
MLP_MAGIC = b"MLP1"

_CHI_HEADER = np.dtype([
    ("magic", "S4"),
    ("bins", "<u4"),
    ("k", "<u8"),
    ("kappa_min", "<f8"),
    ("kappa_max", "<f8"),
    ("count", "<u8"),
])


class _Encoder(json.JSONEncoder):
    """numpy scalars/arrays, Paths and dataclass-ish objects that stock json can't handle."""
    def default(self, obj: Any) -> Any:
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        if isinstance(obj, Path):
            return str(obj)
        if hasattr(obj, "isoformat"):
            return obj.isoformat()
        # numpy int/float scalars
        if hasattr(obj, "item"):
            return obj.item()
        return super().default(obj)


def _ensure_parent(path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)


def sidecar_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def companion_samples_path(path: str | Path) -> Path:
    return Path(path).with_suffix(".samples")


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------

def write_json(path: str | Path, data: Any) -> Path:
    path = Path(path)
    _ensure_parent(path)
    with open(path, "w") as f:
        json.dump(data, f, cls=_Encoder, indent=2)
    return path


def read_json(path: str | Path) -> Any:
    path = Path(path)
    if not path.exists():
        raise IncompatibleArtifactError(f"Missing file: {path}")
    try:
        with open(path) as f:
            return json.load(f)
    except json.JSONDecodeError as exc:
        raise IncompatibleArtifactError(f"Malformed JSON in {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# Field snapshot: raw float32, x fastest, plus sidecar {n, L, m0, epsilon, seed, theta}
# ---------------------------------------------------------------------------

def write_field(path: str | Path, u: PhaseField, meta: dict | None = None) -> Path:
    path = Path(path)
    _ensure_parent(path)
    u.values.astype("<f4").ravel(order="F").tofile(path)
    sidecar = {"n": u.n, "L": u.length, "periodic": u.periodic, "m0": u.mean()}
    sidecar.update(meta or {})
    write_json(sidecar_path(path), sidecar)
    return path


def read_field(path: str | Path) -> tuple[PhaseField, dict]:
    path = Path(path)
    meta = read_json(sidecar_path(path))
    if "n" not in meta:
        raise IncompatibleArtifactError(f"Field sidecar for {path} has no grid size")
    n = int(meta["n"])
    raw = np.fromfile(path, dtype="<f4")
    if raw.size != n ** 3:
        raise IncompatibleArtifactError(
            f"{path}: expected {n ** 3} values for n={n}, found {raw.size}"
        )
    values = raw.reshape((n, n, n), order="F").astype(np.float64)
    field = PhaseField(values, length=float(meta.get("L", config.DOMAIN_LENGTH)),
                       periodic=bool(meta.get("periodic", True)))
    return field, meta


# ---------------------------------------------------------------------------
# CHI1 encoding file
# ---------------------------------------------------------------------------

def _chi_header(spec: HistogramSpec, count: int) -> np.ndarray:
    header = np.zeros(1, dtype=_CHI_HEADER)
    header[0] = (CHI_MAGIC, spec.bins, spec.k, spec.kappa_min, spec.kappa_max, count)
    return header


def _read_chi_header(f, path: Path) -> tuple[HistogramSpec, int]:
    raw = f.read(_CHI_HEADER.itemsize)
    if len(raw) != _CHI_HEADER.itemsize:
        raise IncompatibleArtifactError(f"{path}: truncated encoding header")
    header = np.frombuffer(raw, dtype=_CHI_HEADER)[0]
    if bytes(header["magic"]) != CHI_MAGIC:
        raise IncompatibleArtifactError(f"{path}: not a CHI1 encoding file")
    spec = HistogramSpec(int(header["bins"]), float(header["kappa_min"]), float(header["kappa_max"]))
    if int(header["k"]) != spec.k:
        raise IncompatibleArtifactError(f"{path}: header k={int(header['k'])} does not match B={spec.bins}")
    return spec, int(header["count"])


def _check_spec(found: HistogramSpec, expected: HistogramSpec | None, path: Path) -> None:
    if expected is not None and found != expected:
        raise IncompatibleArtifactError(
            f"{path}: histogram spec {found} does not match expected {expected}"
        )


def write_encodings(path: str | Path, rows: np.ndarray, spec: HistogramSpec) -> Path:
    path = Path(path)
    _ensure_parent(path)
    rows = np.atleast_2d(np.asarray(rows, dtype="<f4")).reshape(-1, spec.k)
    with open(path, "wb") as f:
        f.write(_chi_header(spec, len(rows)).tobytes())
        f.write(rows.tobytes())
    return path


def append_encodings(path: str | Path, rows: np.ndarray, spec: HistogramSpec) -> int:
    """Append rows and rewrite the header count. Returns the new count."""
    path = Path(path)
    if not path.exists():
        write_encodings(path, rows, spec)
        return int(np.atleast_2d(rows).shape[0]) if np.size(rows) else 0
    rows = np.atleast_2d(np.asarray(rows, dtype="<f4")).reshape(-1, spec.k)
    with open(path, "r+b") as f:
        found, count = _read_chi_header(f, path)
        _check_spec(found, spec, path)
        f.seek(_CHI_HEADER.itemsize + count * spec.k * 4)
        f.write(rows.tobytes())
        f.truncate()
        count += len(rows)
        f.seek(0)
        f.write(_chi_header(spec, count).tobytes())
    return count


def read_encodings(
    path: str | Path,
    spec: HistogramSpec | None = None,
    renormalize: bool = False,
) -> tuple[np.ndarray, HistogramSpec]:
    """
    Rows as float64. Values are stored as float32, so row sums drift by up to
    ~1e-7; renormalize rescales every row with a positive sum back to 1.
    """
    path = Path(path)
    if not path.exists():
        raise IncompatibleArtifactError(f"Missing encoding file: {path}")
    with open(path, "rb") as f:
        found, count = _read_chi_header(f, path)
        _check_spec(found, spec, path)
        data = np.frombuffer(f.read(count * found.k * 4), dtype="<f4")
    if data.size != count * found.k:
        raise IncompatibleArtifactError(f"{path}: expected {count} rows, file is truncated")
    rows = data.reshape(count, found.k).astype(np.float64)
    if renormalize:
        sums = rows.sum(axis=1, keepdims=True)
        rows = np.divide(rows, sums, out=rows, where=sums > 0)
    return rows, found


# ---------------------------------------------------------------------------
# Curvature samples: uint64 count, then (k1, k2, area) float64 triples
# ---------------------------------------------------------------------------

def write_samples(path: str | Path, samples: CurvatureSamples) -> Path:
    path = Path(path)
    _ensure_parent(path)
    triples = np.column_stack([samples.k1, samples.k2, samples.area]).astype("<f8")
    with open(path, "wb") as f:
        f.write(np.array([len(triples)], dtype="<u8").tobytes())
        f.write(triples.tobytes())
    return path


def read_samples(path: str | Path) -> CurvatureSamples:
    path = Path(path)
    if not path.exists():
        raise IncompatibleArtifactError(f"Missing samples file: {path}")
    raw = path.read_bytes()
    if len(raw) < 8:
        raise IncompatibleArtifactError(f"{path}: truncated samples header")
    count = int(np.frombuffer(raw[:8], dtype="<u8")[0])
    body = np.frombuffer(raw[8:], dtype="<f8")
    if body.size != 3 * count:
        raise IncompatibleArtifactError(f"{path}: header says {count} samples, found {body.size / 3:g}")
    triples = body.reshape(count, 3)
    return CurvatureSamples(k1=triples[:, 0].copy(), k2=triples[:, 1].copy(), area=triples[:, 2].copy())


# ---------------------------------------------------------------------------
# MLP1 checkpoint
# ---------------------------------------------------------------------------

def write_checkpoint(
    path: str | Path,
    weights: list[np.ndarray],
    biases: list[np.ndarray],
    sidecar: dict | None = None,
) -> Path:
    path = Path(path)
    _ensure_parent(path)
    dims = [weights[0].shape[0]] + [w.shape[1] for w in weights]
    with open(path, "wb") as f:
        f.write(MLP_MAGIC)
        f.write(np.array([len(weights)], dtype="<u4").tobytes())
        f.write(np.array(dims, dtype="<u8").tobytes())
        for w, b in zip(weights, biases):
            f.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
            f.write(np.ascontiguousarray(b, dtype="<f8").tobytes())
    write_json(sidecar_path(path), {"layer_dims": dims, **(sidecar or {})})
    return path


def read_checkpoint(path: str | Path) -> tuple[list[np.ndarray], list[np.ndarray], dict]:
    path = Path(path)
    if not path.exists():
        raise IncompatibleArtifactError(f"Missing checkpoint: {path}")
    raw = path.read_bytes()
    if raw[:4] != MLP_MAGIC:
        raise IncompatibleArtifactError(f"{path}: not an MLP1 checkpoint")
    if len(raw) < 8:
        raise IncompatibleArtifactError(f"{path}: truncated header")
    layers = int(np.frombuffer(raw[4:8], dtype="<u4")[0])
    offset = 8
    if layers < 1 or len(raw) < offset + 8 * (layers + 1):
        raise IncompatibleArtifactError(f"{path}: truncated header")
    dims = np.frombuffer(raw[offset:offset + 8 * (layers + 1)], dtype="<u8").astype(int).tolist()
    offset += 8 * (layers + 1)

    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        n_w = fan_in * fan_out
        w = np.frombuffer(raw[offset:offset + 8 * n_w], dtype="<f8")
        offset += 8 * n_w
        b = np.frombuffer(raw[offset:offset + 8 * fan_out], dtype="<f8")
        offset += 8 * fan_out
        if w.size != n_w or b.size != fan_out:
            raise IncompatibleArtifactError(f"{path}: truncated checkpoint")
        weights.append(w.reshape(fan_in, fan_out).copy())
        biases.append(b.copy())
    if offset != len(raw):
        raise IncompatibleArtifactError(f"{path}: {len(raw) - offset} trailing bytes")

    sidecar_file = sidecar_path(path)
    sidecar = read_json(sidecar_file) if sidecar_file.exists() else {}
    return weights, biases, sidecar


# ---------------------------------------------------------------------------
# OBJ
# ---------------------------------------------------------------------------

def write_obj(path: str | Path, vertices: np.ndarray, triangles: np.ndarray) -> Path:
    path = Path(path)
    _ensure_parent(path)
    with open(path, "w") as f:
        f.write(f"# {len(vertices)} vertices, {len(triangles)} faces\n")
        np.savetxt(f, vertices, fmt="v %.8f %.8f %.8f")
        np.savetxt(f, triangles + 1, fmt="f %d %d %d")
    return path


# ---------------------------------------------------------------------------
# CSV tables
# ---------------------------------------------------------------------------

def write_energy_trace(path: str | Path, diag: Diagnostics) -> Path:
    path = Path(path)
    _ensure_parent(path)
    pd.DataFrame({
        "step": np.arange(len(diag.energies)),
        "energy": diag.energies,
        "mean_u": diag.mean_u,
    }).to_csv(path, index=False)
    return path


def write_train_report(path: str | Path, report: TrainReport) -> Path:
    path = Path(path)
    _ensure_parent(path)
    pd.DataFrame({
        "epoch": np.arange(1, len(report.train_loss) + 1),
        "train_loss": report.train_loss,
        "test_loss": report.test_loss,
    }).to_csv(path, index=False)
    return path


def write_theta_table(path: str | Path, thetas: np.ndarray) -> Path:
    path = Path(path)
    _ensure_parent(path)
    pd.DataFrame(np.atleast_2d(thetas), columns=list(config.DESIGN_COLUMNS)).to_csv(
        path, index=False, float_format="%.17g"
    )
    return path


def read_theta_table(path: str | Path) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise IncompatibleArtifactError(f"Missing design table: {path}")
    df = pd.read_csv(path)
    missing = [c for c in config.DESIGN_COLUMNS if c not in df.columns]
    if missing:
        raise IncompatibleArtifactError(f"{path}: missing columns {missing}")
    return df[list(config.DESIGN_COLUMNS)].to_numpy(dtype=np.float64)
