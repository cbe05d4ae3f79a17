"""
Exception hierarchy.

ValidationError covers bad inputs (CLI exit code 1); NumericalError covers
numerical failures (CLI exit code 2).
"""


class VeritasError(Exception):
    """Base class for all package errors."""


class ValidationError(VeritasError, ValueError):
    """Invalid input, schema or invariant."""


class GridMismatchError(ValidationError):
    """Volumes do not share the same grid."""


class VolumeFormatError(ValidationError):
    """Malformed volume header or payload."""


class LabelSpaceError(ValidationError):
    """Invalid label space or subset."""


class PartitionError(ValidationError):
    """Masks do not partition the grid."""


class EmptyMaskError(ValidationError):
    """An operation needs a non-empty mask."""


class EmptySelectionError(ValidationError):
    """A selection returned nothing."""


class ConfigError(ValidationError):
    """Invalid configuration file or value."""


class FallbackContradictionError(ConfigError):
    """The fallback map is completely contradictory with the contracts."""


class NumericalError(VeritasError, ArithmeticError):
    """Numerical failure."""


class ContradictionError(NumericalError):
    """Complete contradiction: the Dempster normalisation vanishes."""


class DegenerateDataError(NumericalError):
    """Data without the spread an estimator needs."""


class ConvergenceError(NumericalError):
    """Iterative solver did not converge."""


class DivergenceError(NumericalError):
    """Training produced a non-finite loss."""
