"""
Zero level set → triangle mesh → per-element (k1, k2, area).
"""
from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
from scipy import ndimage
from skimage import measure

from src import storage
from src.errors import EmptySupportError, EmptySurfaceError
from src.models import CurvatureFields, CurvatureSamples, PhaseField, TriMesh

log = logging.getLogger(__name__)

MIN_TRIANGLE_AREA = 1e-12


def _triangle_geometry(vertices: np.ndarray, triangles: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p0 = vertices[triangles[:, 0]]
    p1 = vertices[triangles[:, 1]]
    p2 = vertices[triangles[:, 2]]
    areas = 0.5 * np.linalg.norm(np.cross(p1 - p0, p2 - p0), axis=1)
    centroids = (p0 + p1 + p2) / 3.0
    return areas, centroids


def marching_cubes(u: PhaseField, iso: float = 0.0) -> TriMesh:
    """
    Classic 256-case table with linear edge interpolation. Periodic fields are
    padded with one wrapped layer so cells across the boundary are meshed too;
    vertices are in physical units on [0, length]³.
    """
    values = u.values
    if u.periodic:
        values = np.pad(values, ((0, 1),) * 3, mode="wrap")
    if not (values.min() < iso < values.max()):
        raise EmptySurfaceError(f"Field has no crossing of the level {iso}")

    h = u.spacing
    vertices, triangles, _, _ = measure.marching_cubes(
        values, level=iso, spacing=(h, h, h), method="lorensen", allow_degenerate=False,
    )
    triangles = triangles.astype(np.int64)
    areas, centroids = _triangle_geometry(vertices, triangles)

    keep = areas > MIN_TRIANGLE_AREA
    if not np.all(keep):
        log.debug("Dropping %d degenerate triangles", int((~keep).sum()))
    triangles, areas, centroids = triangles[keep], areas[keep], centroids[keep]
    if len(triangles) == 0:
        raise EmptySurfaceError("Marching cubes produced only degenerate triangles")

    return TriMesh(vertices=vertices, triangles=triangles, areas=areas, centroids=centroids)


def mesh_area(mesh: TriMesh) -> float:
    return mesh.total_area


def _interpolate(
    values: np.ndarray,
    mask: np.ndarray,
    points: np.ndarray,
    spacing: float,
    periodic: bool,
    nearest: tuple[np.ndarray, ...],
) -> np.ndarray:
    """Trilinear interpolation over the valid corners only, renormalized."""
    n = values.shape[0]
    x = points / spacing
    base = np.floor(x).astype(np.int64)
    frac = x - base

    acc = np.zeros(len(points))
    wsum = np.zeros(len(points))
    for corner in range(8):
        offs = np.array([(corner >> a) & 1 for a in range(3)])
        idx = base + offs
        idx = np.mod(idx, n) if periodic else np.clip(idx, 0, n - 1)
        w = np.prod(np.where(offs == 1, frac, 1.0 - frac), axis=1)
        i, j, k = idx[:, 0], idx[:, 1], idx[:, 2]
        valid = mask[i, j, k]
        acc += np.where(valid, w * values[i, j, k], 0.0)
        wsum += np.where(valid, w, 0.0)

    out = np.empty(len(points))
    ok = wsum > 1e-12
    out[ok] = acc[ok] / wsum[ok]
    if np.any(~ok):
        # No valid corner: fall back to the nearest valid node.
        node = np.rint(x[~ok]).astype(np.int64)
        node = np.mod(node, n) if periodic else np.clip(node, 0, n - 1)
        i, j, k = node[:, 0], node[:, 1], node[:, 2]
        ni, nj, nk = nearest[0][i, j, k], nearest[1][i, j, k], nearest[2][i, j, k]
        out[~ok] = values[ni, nj, nk]
    return out


def element_curvatures(mesh: TriMesh, fields: CurvatureFields) -> CurvatureSamples:
    """Interpolate the diffused level-set curvatures at every triangle centroid."""
    if len(mesh) == 0:
        raise EmptySurfaceError("Mesh has no triangles")
    if not np.any(fields.mask):
        raise EmptySupportError("Curvature fields have no valid cell")

    _, nearest = ndimage.distance_transform_edt(~fields.mask, return_indices=True)
    args = (fields.mask, mesh.centroids, fields.spacing, fields.periodic, tuple(nearest))
    k1 = _interpolate(fields.k1, *args)
    k2 = _interpolate(fields.k2, *args)

    # Interpolating each field separately can cross them; restore k1 ≥ k2.
    hi = np.maximum(k1, k2)
    lo = np.minimum(k1, k2)
    return CurvatureSamples(k1=hi, k2=lo, area=mesh.areas.copy())


def export_obj(mesh: TriMesh, path: str | Path, samples: CurvatureSamples | None = None) -> Path:
    """Write the mesh as OBJ; with samples, also write the companion samples file."""
    path = Path(path)
    storage.write_obj(path, mesh.vertices, mesh.triangles)
    if samples is not None:
        storage.write_samples(storage.companion_samples_path(path), samples)
    return path
