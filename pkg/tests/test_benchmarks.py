import math

import numpy as np
import pytest

from src import benchmarks
from src.benchmarks import bone, nodal_surface, spinodoid
from src.benchmarks.rescale import rescale_to_domain
from src.errors import (
    DegenerateImageError,
    EmptySupportError,
    IncompatibleArtifactError,
    InvalidParameterError,
)
from src.geometry import phase_field, surface
from src.models import CurvatureSamples, PhaseField, SolverConfig, SpinodoidParams, TriMesh, VoxelImage


# ---------------------------------------------------------------------------
# Spinodoid
# ---------------------------------------------------------------------------

def test_spinodoid_level_matches_gaussian_quantile():
    assert spinodoid.spinodoid_level(0.3) == pytest.approx(-0.5244, abs=1e-4)
    assert spinodoid.spinodoid_level(0.5) == pytest.approx(0.0, abs=1e-12)
    assert spinodoid.spinodoid_level(0.7) == pytest.approx(0.5244, abs=1e-4)
    with pytest.raises(InvalidParameterError):
        spinodoid.spinodoid_level(1.0)


def test_cone_membership():
    v = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]])
    cones = (math.radians(60), 0.0, math.radians(10))
    np.testing.assert_array_equal(spinodoid.in_cones(v, cones, "or"), [True, False, True])

    diag = np.array([[1.0, 1.0, 0.0]]) / math.sqrt(2)
    both = (math.radians(60), math.radians(60), 0.0)
    assert spinodoid.in_cones(diag, both, "or")[0]
    assert not spinodoid.in_cones(diag, both, "xor")[0]
    with pytest.raises(InvalidParameterError):
        spinodoid.in_cones(v, cones, "and")


def test_directions_stay_in_cones():
    p = SpinodoidParams(Q=200, seed=1)
    v = spinodoid.sample_directions(p, np.random.default_rng(1))
    assert v.shape == (200, 3)
    np.testing.assert_allclose(np.linalg.norm(v, axis=1), 1.0)
    assert np.all(spinodoid.in_cones(v, p.cones))


def test_closed_cones_have_no_directions():
    p = SpinodoidParams(theta1=0.0, theta2=0.0, theta3=0.0)
    with pytest.raises(EmptySupportError):
        spinodoid.sample_directions(p, np.random.default_rng(0))


def test_spinodoid_statistics_over_seeds():
    fractions, variances = [], []
    for seed in range(4):
        p = SpinodoidParams(seed=seed)
        phi = spinodoid.spinodoid_field(p, n=24)
        variances.append(float(np.mean(phi.values ** 2)))
        u = spinodoid.spinodoid_phase(phi, p.rho)
        fractions.append(float(np.mean(u.values > 0)))
    assert np.mean(variances) == pytest.approx(1.0, abs=0.15)
    assert np.mean(fractions) == pytest.approx(0.3, abs=0.05)


@pytest.mark.slow
def test_full_size_spinodoid_statistics():
    fractions, variances = [], []
    for seed in range(4):
        p = SpinodoidParams(Q=1000, seed=seed)
        phi = spinodoid.spinodoid_field(p, n=64)
        variances.append(float(np.mean(phi.values ** 2)))
        fractions.append(float(np.mean(spinodoid.spinodoid_phase(phi, p.rho).values > 0)))
    assert np.mean(variances) == pytest.approx(1.0, abs=0.05)
    assert np.mean(fractions) == pytest.approx(0.3, abs=0.02)


def test_spinodoid_is_seeded():
    a = spinodoid.spinodoid_field(SpinodoidParams(Q=50, seed=3), n=8)
    b = spinodoid.spinodoid_field(SpinodoidParams(Q=50, seed=3), n=8)
    np.testing.assert_array_equal(a.values, b.values)


# ---------------------------------------------------------------------------
# Nodal surface
# ---------------------------------------------------------------------------

def test_pns_values_and_period():
    assert nodal_surface.pns_value(0.0, 0.0, 0.0) == pytest.approx(-0.5)
    x, y, z = 0.3, 1.1, 2.7
    shifted = nodal_surface.pns_value(x + 10 * math.pi, y, z - 10 * math.pi)
    assert shifted == pytest.approx(nodal_surface.pns_value(x, y, z), abs=1e-12)

    u = nodal_surface.pns_field(16)
    assert u.values.shape == (16, 16, 16)
    assert u.periodic
    assert u.length == pytest.approx(10 * math.pi)


def test_pns_value_on_the_diagonal():
    # 3·sin(0.9π) − 0.5
    h = math.pi / 2
    assert nodal_surface.pns_value(h, h, h) == pytest.approx(0.42705, abs=1e-5)


# ---------------------------------------------------------------------------
# Bone
# ---------------------------------------------------------------------------

def _half_block(n=16) -> VoxelImage:
    data = np.zeros((n, n, n))
    data[: n // 2] = 255.0
    return VoxelImage(data)


def test_bone_smooth_keeps_even_size_and_saturates_interior():
    out = bone.bone_smooth(_half_block())
    assert out.shape == (16, 16, 16)
    assert out[3, 8, 8] == pytest.approx(math.tanh(2.0))
    assert out[12, 8, 8] == pytest.approx(math.tanh(-2.0))
    assert np.all(np.abs(out) < 1.0)


def test_bone_smooth_rejects_constant_image():
    with pytest.raises(DegenerateImageError):
        bone.bone_smooth(VoxelImage(np.full((8, 8, 8), 7.0)))


def test_bone_field_crops_to_centred_cube():
    img = VoxelImage(np.pad(_half_block(8).data, ((0, 4), (0, 0), (0, 0))), spacing=(0.5, 0.5, 0.5))
    u = bone.bone_field(img)
    assert u.values.shape == (8, 8, 8)
    assert u.length == pytest.approx(4.0)
    assert not u.periodic

    with pytest.raises(InvalidParameterError):
        bone.bone_field(VoxelImage(img.data, spacing=(1.0, 1.0, 2.0)))


def test_voxel_round_trip(tmp_path):
    img = bone.voxel_sphere(10, radius=3.0)
    path = bone.save_voxels(tmp_path / "ball.raw", img)
    back = bone.load_voxels(path)
    np.testing.assert_array_equal(back.data, img.data)

    (tmp_path / "ball.raw").write_bytes(b"\x00" * 10)
    with pytest.raises(IncompatibleArtifactError):
        bone.load_voxels(path)


def _mean_curvature_spread(u: PhaseField) -> float:
    cfg = SolverConfig.for_grid(u.n, u.length)
    fields = phase_field.level_set_curvatures(u, cfg)
    samples = surface.element_curvatures(surface.marching_cubes(u), fields)
    mean_k = 0.5 * (samples.k1 + samples.k2)
    centre = np.average(mean_k, weights=samples.area)
    return float(np.sqrt(np.average((mean_k - centre) ** 2, weights=samples.area)))


def test_smoothing_calms_the_curvatures_of_a_voxel_ball():
    img = bone.voxel_sphere(32, radius=10.0)
    raw = _mean_curvature_spread(bone.bone_field(img, smooth=False))
    smooth = _mean_curvature_spread(bone.bone_field(img, smooth=True))
    assert smooth < 0.5 * raw


# ---------------------------------------------------------------------------
# Rescaling
# ---------------------------------------------------------------------------

def test_rescale_phase_field_moves_only_the_length():
    u = PhaseField(np.linspace(-1, 1, 512).reshape(8, 8, 8), length=1.0, periodic=False)
    out = rescale_to_domain(u)
    assert out.length == 100.0
    assert not out.periodic
    np.testing.assert_array_equal(out.values, u.values)


def test_rescale_mesh_and_samples():
    mesh = TriMesh(
        vertices=np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0]]),
        triangles=np.array([[0, 1, 2]]),
        areas=np.array([0.5]),
        centroids=np.array([[1 / 3, 1 / 3, 0.0]]),
    )
    big = rescale_to_domain(mesh, target=10.0, source=1.0)
    assert big.areas[0] == pytest.approx(50.0)
    np.testing.assert_allclose(big.vertices[1], [10.0, 0, 0])

    samples = CurvatureSamples(np.array([2.0]), np.array([-1.0]), np.array([0.5]))
    scaled = rescale_to_domain(samples, target=10.0, source=1.0)
    assert scaled.k1[0] == pytest.approx(0.2)
    assert scaled.k2[0] == pytest.approx(-0.1)
    assert scaled.area[0] == pytest.approx(50.0)

    with pytest.raises(InvalidParameterError):
        rescale_to_domain(samples)
    with pytest.raises(InvalidParameterError):
        rescale_to_domain("not geometry")


def test_rescale_there_and_back():
    samples = CurvatureSamples(np.array([0.3, -0.1]), np.array([0.05, -0.4]), np.array([1.5, 2.0]))
    back = rescale_to_domain(rescale_to_domain(samples, target=100.0, source=2.5), target=2.5, source=100.0)
    np.testing.assert_allclose(back.k1, samples.k1)
    np.testing.assert_allclose(back.k2, samples.k2)
    np.testing.assert_allclose(back.area, samples.area)

    u = PhaseField(np.linspace(-1, 1, 64).reshape(4, 4, 4), length=2.5)
    again = rescale_to_domain(rescale_to_domain(u), target=2.5)
    assert again.length == pytest.approx(2.5)
    np.testing.assert_array_equal(again.values, u.values)


def test_benchmark_field_by_name():
    u = benchmarks.benchmark_field("pns", n=12)
    assert u.length == 100.0
    assert u.periodic
    with pytest.raises(InvalidParameterError):
        benchmarks.benchmark_field("gyroid")
