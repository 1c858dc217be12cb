"""
Micro-CT voxel data: loading and the fixed-weight smoothing that turns a
grayscale image into a phase field.

Smoothing = transposed convolution (all-ones 4³ kernel, stride 2, padding 1)
followed by convolution (all-ones 3³ kernel, stride 2, padding 1). Both kernels
are separable, so each is applied as three 1-D passes. For even sizes the pair
maps n → 2n → n; a constant interior is multiplied by (2·3)³ = 216.
"""
from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

import config
from src import storage
from src.errors import DegenerateImageError, IncompatibleArtifactError, InvalidParameterError
from src.models import PhaseField, VoxelImage

log = logging.getLogger(__name__)

KERNEL_GAIN = 216.0          # (transposed-conv overlap 2 · conv width 3) per axis, cubed

_DTYPES = {"uint8": "<u1", "uint16": "<u2"}


# ---------------------------------------------------------------------------
# Loading
# ---------------------------------------------------------------------------

def load_voxels(path: str | Path) -> VoxelImage:
    """Raw x-fastest voxel grid plus a JSON sidecar {dims, spacing, dtype}."""
    path = Path(path)
    meta = storage.read_json(storage.sidecar_path(path))
    dtype = meta.get("dtype", "uint8")
    if dtype not in _DTYPES:
        raise IncompatibleArtifactError(f"{path}: unsupported voxel dtype {dtype!r}")
    dims = tuple(int(d) for d in meta["dims"])
    raw = np.fromfile(path, dtype=_DTYPES[dtype])
    if raw.size != int(np.prod(dims)):
        raise IncompatibleArtifactError(f"{path}: expected {int(np.prod(dims))} voxels, found {raw.size}")
    spacing = tuple(float(s) for s in meta.get("spacing", (1.0, 1.0, 1.0)))
    return VoxelImage(raw.reshape(dims, order="F"), spacing=spacing)


def save_voxels(path: str | Path, img: VoxelImage, dtype: str = "uint8") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    img.data.astype(_DTYPES[dtype]).ravel(order="F").tofile(path)
    storage.write_json(storage.sidecar_path(path),
                       {"dims": list(img.data.shape), "spacing": list(img.spacing), "dtype": dtype})
    return path


def voxel_sphere(n: int = 32, radius: float = 10.0, level: int = 255) -> VoxelImage:
    """Binary voxelized ball centred in an n³ block."""
    c = (n - 1) / 2.0
    i = np.arange(n) - c
    X, Y, Z = np.meshgrid(i, i, i, indexing="ij")
    return VoxelImage(np.where(X * X + Y * Y + Z * Z <= radius * radius, float(level), 0.0))


# ---------------------------------------------------------------------------
# Smoothing
# ---------------------------------------------------------------------------

def _upsample_axis(a: np.ndarray, axis: int) -> np.ndarray:
    """1-D transposed conv, kernel ones(4), stride 2, padding 1: n → 2n."""
    a = np.moveaxis(a, axis, 0)
    n = a.shape[0]
    full = np.zeros((2 * (n - 1) + 4,) + a.shape[1:])
    for t in range(4):
        full[t:t + 2 * n:2] += a
    return np.moveaxis(full[1:1 + 2 * n], 0, axis)


def _downsample_axis(a: np.ndarray, axis: int) -> np.ndarray:
    """1-D conv, kernel ones(3), stride 2, padding 1: m → ceil(m/2)."""
    a = np.moveaxis(a, axis, 0)
    m = a.shape[0]
    padded = np.zeros((m + 2,) + a.shape[1:])
    padded[1:-1] = a
    out_len = (m + 2 - 3) // 2 + 1
    out = sum(padded[t:t + 2 * out_len:2] for t in range(3))
    return np.moveaxis(out, 0, axis)


def bone_smooth(img: VoxelImage, gain: float = config.BONE_TANH_GAIN) -> np.ndarray:
    """Min-max scale, up-then-down all-ones convolutions, recentre, tanh."""
    data = img.data
    lo, hi = float(data.min()), float(data.max())
    if not hi > lo:
        raise DegenerateImageError("Voxel image is constant; there is no interface to smooth")
    y = (data - lo) / (hi - lo)
    for axis in range(3):
        y = _upsample_axis(y, axis)
    for axis in range(3):
        y = _downsample_axis(y, axis)
    return np.tanh(gain * (y / KERNEL_GAIN - 0.5))


def bone_field(img: VoxelImage, smooth: bool = True) -> PhaseField:
    """
    Phase field over the largest centred cube of the image, in voxel-spacing
    units. Without smoothing the scaled image is only recentred.
    """
    if len(set(img.spacing)) != 1:
        raise InvalidParameterError(f"Voxel spacing must be isotropic, got {img.spacing}")
    if smooth:
        values = bone_smooth(img)
    else:
        lo, hi = float(img.data.min()), float(img.data.max())
        if not hi > lo:
            raise DegenerateImageError("Voxel image is constant")
        values = (img.data - lo) / (hi - lo) - 0.5

    side = min(values.shape)
    if len(set(values.shape)) != 1:
        log.warning("Cropping %s voxel block to a centred %d³ cube", values.shape, side)
        starts = [(s - side) // 2 for s in values.shape]
        values = values[tuple(slice(st, st + side) for st in starts)]
    return PhaseField(values, length=side * img.spacing[0], periodic=False)
