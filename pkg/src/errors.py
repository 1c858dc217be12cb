"""
Exception hierarchy. Every error carries the CLI exit code it maps to.
"""
from __future__ import annotations

import config


class CurvDesignError(Exception):
    exit_code: int = config.EXIT_INVALID_INPUT


# ---------------------------------------------------------------------------
# Invalid input (exit 2)
# ---------------------------------------------------------------------------

class InvalidParameterError(CurvDesignError, ValueError):
    pass


class DegenerateFormError(InvalidParameterError):
    """Quadratic part of the energy density is identically zero."""


class NoCenterError(InvalidParameterError):
    """Linear terms cannot be absorbed by a translation (singular quadratic form)."""


class EmptySurfaceError(InvalidParameterError):
    pass


class EmptyInputError(InvalidParameterError):
    pass


class DegenerateComponentError(InvalidParameterError):
    pass


class DegenerateDatasetError(InvalidParameterError):
    pass


class DegenerateImageError(InvalidParameterError):
    pass


class EmptySupportError(InvalidParameterError):
    pass


class ShapeError(InvalidParameterError):
    pass


# ---------------------------------------------------------------------------
# Numerical trouble (exit 3)
# ---------------------------------------------------------------------------

class DivergenceError(CurvDesignError, FloatingPointError):
    exit_code = config.EXIT_DIVERGENCE

    def __init__(self, step: int, message: str = "") -> None:
        self.step = step
        super().__init__(message or f"Phase field became non-finite at step {step}")


class FeasibilityAbortError(CurvDesignError):
    exit_code = config.EXIT_DIVERGENCE

    def __init__(self, message: str, diagnostics: dict | None = None) -> None:
        self.diagnostics = diagnostics or {}
        super().__init__(message)


# ---------------------------------------------------------------------------
# Artifacts (exit 4)
# ---------------------------------------------------------------------------

class IncompatibleArtifactError(CurvDesignError):
    exit_code = config.EXIT_INCOMPATIBLE


class SurrogateModifiedError(IncompatibleArtifactError):
    """The frozen surrogate's parameters changed while the inverse network trained."""
