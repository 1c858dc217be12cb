"""
Periodic nodal surface: zero set of
    sin x·sin 1.8y + sin y·sin 1.8z + sin z·sin 1.8x − 0.5
Wavenumbers 1 and 1.8 = 9/5 share the period 10π, so the field is exactly
periodic on [0, 10π]³.
"""
from __future__ import annotations

import numpy as np

import config
from src.models import PhaseField


def pns_value(x, y, z, offset: float = config.PNS_OFFSET):
    return (
        np.sin(x) * np.sin(1.8 * y)
        + np.sin(y) * np.sin(1.8 * z)
        + np.sin(z) * np.sin(1.8 * x)
        - offset
    )


def pns_field(
    n: int = config.BENCHMARK_GRID,
    period: float = config.PNS_PERIOD,
    offset: float = config.PNS_OFFSET,
) -> PhaseField:
    """Samples on [0, period)³; the returned field is periodic with edge `period`."""
    x = np.arange(n) * (period / n)
    X, Y, Z = np.meshgrid(x, x, x, indexing="ij")
    return PhaseField(pns_value(X, Y, Z, offset), length=period, periodic=True)
