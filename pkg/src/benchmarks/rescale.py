"""
Isotropic rescaling of benchmark geometry onto the design domain.
Lengths scale by L_target/L_source, areas by its square, curvatures by its inverse.
"""
from __future__ import annotations

from functools import singledispatch

import config
from src.errors import InvalidParameterError
from src.models import CurvatureSamples, PhaseField, TriMesh


def _factor(source: float | None, target: float) -> float:
    if source is None:
        raise InvalidParameterError("Source extent is required for meshes and curvature samples")
    if not source > 0 or not target > 0:
        raise InvalidParameterError(f"Extents must be positive, got source={source}, target={target}")
    return target / source


@singledispatch
def rescale_to_domain(obj, target: float = config.DOMAIN_LENGTH, source: float | None = None):
    raise InvalidParameterError(f"Cannot rescale objects of type {type(obj).__name__}")


@rescale_to_domain.register
def _(obj: PhaseField, target: float = config.DOMAIN_LENGTH, source: float | None = None) -> PhaseField:
    # Grid values are unchanged; only the physical edge length moves.
    _factor(obj.length if source is None else source, target)
    return PhaseField(obj.values.copy(), length=target, periodic=obj.periodic)


@rescale_to_domain.register
def _(obj: TriMesh, target: float = config.DOMAIN_LENGTH, source: float | None = None) -> TriMesh:
    s = _factor(source, target)
    return TriMesh(
        vertices=obj.vertices * s,
        triangles=obj.triangles.copy(),
        areas=obj.areas * s * s,
        centroids=obj.centroids * s,
    )


@rescale_to_domain.register
def _(obj: CurvatureSamples, target: float = config.DOMAIN_LENGTH, source: float | None = None) -> CurvatureSamples:
    s = _factor(source, target)
    return CurvatureSamples(k1=obj.k1 / s, k2=obj.k2 / s, area=obj.area * s * s)
