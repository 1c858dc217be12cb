"""
Generalization targets: spinodoid random fields, the periodic nodal surface
and smoothed micro-CT voxels, all delivered as PhaseFields on the design domain.
"""
from __future__ import annotations

import config
from src.benchmarks import bone, nodal_surface, spinodoid
from src.benchmarks.rescale import rescale_to_domain
from src.errors import InvalidParameterError
from src.models import PhaseField, SpinodoidParams

NAMES = ("spinodoid", "pns", "bone")


def benchmark_field(
    name: str,
    n: int = config.BENCHMARK_GRID,
    seed: int = 0,
    voxel_path: str | None = None,
    spinodoid_params: SpinodoidParams | None = None,
    cone_mode: str = config.SPINODOID_CONE_MODE,
) -> PhaseField:
    """
    Named benchmark as a phase field rescaled to the design domain.
    spinodoid_params overrides the default wave set (its own seed wins over `seed`).
    """
    if name == "spinodoid":
        p = spinodoid_params if spinodoid_params is not None else SpinodoidParams(seed=seed)
        u = spinodoid.spinodoid_phase(spinodoid.spinodoid_field(p, n, cone_mode), p.rho)
    elif name == "pns":
        u = nodal_surface.pns_field(n)
    elif name == "bone":
        img = bone.load_voxels(voxel_path) if voxel_path else bone.voxel_sphere(n, radius=n / 3)
        u = bone.bone_field(img)
    else:
        raise InvalidParameterError(f"Unknown benchmark {name!r}; choose from {NAMES}")
    return rescale_to_domain(u)
