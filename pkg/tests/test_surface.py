import math

import numpy as np
import pytest
from scipy import ndimage

from src import storage
from src.errors import EmptySupportError, EmptySurfaceError
from src.geometry import phase_field, surface
from src.models import CurvatureFields, PhaseField

from conftest import EPS, N


@pytest.mark.parametrize("radius", [10.0, 20.0, 30.0])
def test_sphere_mesh_area_and_curvatures(radius, sphere_cfg):
    u = phase_field.sphere_field(N, radius=radius, epsilon=EPS)
    mesh = surface.marching_cubes(u)
    assert surface.mesh_area(mesh) == pytest.approx(4 * math.pi * radius ** 2, rel=0.02)

    samples = surface.element_curvatures(mesh, phase_field.level_set_curvatures(u, sphere_cfg))
    assert len(samples) == len(mesh)
    assert np.all(samples.k1 >= samples.k2)
    # every element, not just the area-weighted mean
    np.testing.assert_allclose(samples.k1, 1 / radius, rtol=0.05)
    np.testing.assert_allclose(samples.k2, 1 / radius, rtol=0.05)


def test_flipping_the_phases_mirrors_the_curvatures(sphere_cfg):
    u = phase_field.sphere_field(N, radius=20.0, epsilon=EPS)
    flipped = PhaseField(-u.values, u.length)
    a = phase_field.level_set_curvatures(u, sphere_cfg)
    b = phase_field.level_set_curvatures(flipped, sphere_cfg)
    np.testing.assert_array_equal(a.mask, b.mask)
    np.testing.assert_allclose(b.k1, -a.k2, atol=1e-12)
    np.testing.assert_allclose(b.k2, -a.k1, atol=1e-12)


def test_mesh_vertices_lie_in_the_domain(sphere30):
    mesh = surface.marching_cubes(sphere30)
    assert mesh.vertices.min() >= 0.0
    assert mesh.vertices.max() <= sphere30.length
    assert np.all(mesh.areas > surface.MIN_TRIANGLE_AREA)
    np.testing.assert_allclose(mesh.centroids.mean(axis=0), [50.0, 50.0, 50.0], atol=0.5)


def test_slab_crossing_the_boundary_is_closed(slab):
    # Periodic padding meshes the wrapped cells too, so each sheet spans the full face.
    mesh = surface.marching_cubes(slab)
    assert mesh.total_area == pytest.approx(2 * 100.0 ** 2, rel=0.01)


def test_constant_field_has_no_surface():
    with pytest.raises(EmptySurfaceError):
        surface.marching_cubes(PhaseField(np.full((8, 8, 8), -1.0)))


def test_curvatures_need_a_valid_cell(sphere30):
    mesh = surface.marching_cubes(sphere30)
    empty = CurvatureFields(
        k1=np.zeros(sphere30.values.shape),
        k2=np.zeros(sphere30.values.shape),
        mask=np.zeros(sphere30.values.shape, dtype=bool),
    )
    with pytest.raises(EmptySupportError):
        surface.element_curvatures(mesh, empty)


def test_interpolation_falls_back_to_nearest_valid_node():
    n = 8
    values = np.arange(n ** 3, dtype=np.float64).reshape(n, n, n)
    mask = np.zeros((n, n, n), dtype=bool)
    mask[1, 1, 1] = True
    _, nearest = ndimage.distance_transform_edt(~mask, return_indices=True)
    out = surface._interpolate(values, mask, np.array([[5.2, 5.2, 5.2], [1.5, 1.5, 1.5]]), 1.0, True, tuple(nearest))
    assert out[0] == values[1, 1, 1]
    assert out[1] == values[1, 1, 1]


def test_export_obj_writes_mesh_and_companion_samples(tmp_path, sphere30, sphere_cfg):
    mesh = surface.marching_cubes(sphere30)
    samples = surface.element_curvatures(mesh, phase_field.level_set_curvatures(sphere30, sphere_cfg))
    path = surface.export_obj(mesh, tmp_path / "sphere.obj", samples)

    lines = path.read_text().splitlines()
    faces = [ln for ln in lines if ln.startswith("f ")]
    verts = [ln for ln in lines if ln.startswith("v ")]
    assert len(verts) == len(mesh.vertices)
    assert len(faces) == len(mesh)
    indices = [int(i) for ln in faces for i in ln.split()[1:]]
    assert min(indices) >= 1 and max(indices) <= len(verts)

    back = storage.read_samples(storage.companion_samples_path(path))
    np.testing.assert_array_equal(back.k1, samples.k1)
    np.testing.assert_array_equal(back.area, samples.area)
