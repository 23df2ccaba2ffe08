"""Exception hierarchy shared by every module."""


class SparsehmError(Exception):
    """Base class for all package errors."""


class DomainError(SparsehmError, ValueError):
    """Input outside the mathematical domain (non-positive, empty, non-finite)."""


class ParameterError(SparsehmError, ValueError):
    """Invalid parameter combination."""


class SingularIdentityError(SparsehmError, ArithmeticError):
    """The SNE/SI identity is singular because ln(SI) == 0."""


class DegenerateEnvelopeError(SparsehmError, ValueError):
    """Squared envelope is identically zero (or has zero mean)."""


class DegenerateBaselineError(SparsehmError, ValueError):
    """Baseline samples have zero variance."""


class EvaluationError(SparsehmError, ArithmeticError):
    """Index evaluation hit a degenerate denominator."""


class FormatError(SparsehmError, ValueError):
    """Dataset file does not follow the expected layout."""


class EmptyRunError(SparsehmError, ValueError):
    """Dataset directory contains no usable files."""


class ConfigError(SparsehmError, ValueError):
    """Configuration file or command-line usage problem."""


class InvariantError(SparsehmError, AssertionError):
    """An internal invariant was breached."""
