"""Exception types shared across the package.

The CLI maps these onto process exit codes: ConfigError -> 1,
HypothesisViolationError -> 2, NumericalFailureError -> 3.  Everything
else (bad arguments, shape mismatches) derives from ParameterError,
which is a ValueError so that sloppy call sites still fail loudly.
"""

from __future__ import annotations


class FradeError(Exception):
    """Base class for package-specific failures."""


class ParameterError(FradeError, ValueError):
    """An argument is outside its documented domain."""


class GridError(ParameterError):
    """Grid shapes or extents are inconsistent."""


class GeometryError(ParameterError):
    """Unsupported domain/boundary geometry."""


class FamilyMismatchError(ParameterError):
    """A weight was used with parameters of the wrong family."""


class HypothesisViolationError(FradeError):
    """A theorem hypothesis checked at runtime does not hold."""


class NumericalFailureError(FradeError):
    """A linear solve or fit failed (singular, non-finite, ill-conditioned)."""


class ConfigError(FradeError):
    """Malformed or incomplete experiment configuration."""
