"""
Exception hierarchy for conformal-flow.

All errors raised by the package derive from ConformalFlowError, so callers
can catch every library failure with a single except clause while still
distinguishing configuration, domain, solver and tracing failures.
"""

from typing import Optional, Sequence


class ConformalFlowError(Exception):
    """
    Base exception for all conformal-flow errors.

    Example:
        >>> try:
        ...     raise ConformalFlowError("Something went wrong")
        ... except ConformalFlowError as e:
        ...     print(f"conformal-flow error: {e}")
        conformal-flow error: Something went wrong
    """

    pass


class ConfigurationError(ConformalFlowError):
    """
    Raised when settings, domain specs or requested sizes are invalid.

    Example:
        >>> raise ConfigurationError("need at least 16 boundary nodes, got 4")
        Traceback (most recent call last):
        ...
        ConfigurationError: need at least 16 boundary nodes, got 4
    """

    pass


class SpecFormatError(ConfigurationError):
    """
    Raised when a JSON domain, config or field file cannot be parsed.

    Attributes:
        line: 1-based line of the parse failure, when known
        column: 1-based column of the parse failure, when known
    """

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


class DomainError(ConformalFlowError):
    """
    Raised when a point lies outside the domain or inside the boundary collar.

    Example:
        >>> raise DomainError("pole (2, 0) is not interior to the domain")
        Traceback (most recent call last):
        ...
        DomainError: pole (2, 0) is not interior to the domain
    """

    pass


class SingularityError(DomainError):
    """Raised when a Green's function is evaluated inside the pole collar."""

    pass


class ParametrizationError(ConformalFlowError):
    """Raised when a boundary parametrization has zero speed."""

    pass


class ConvergenceError(ConformalFlowError):
    """
    Raised when the Green's function solver misses its boundary tolerance.

    Attributes:
        residual: max |G| observed on fresh boundary test points
    """

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class TraceError(ConformalFlowError):
    """Base exception for failures while integrating a flow trajectory."""

    pass


class CriticalPointError(TraceError):
    """
    Raised when the Green's function gradient vanishes along a trace.

    Attributes:
        location: coordinates where the gradient collapsed
        gradient_norm: |grad G| at that location
    """

    def __init__(self, message: str, location: Sequence[float], gradient_norm: float):
        super().__init__(message)
        self.location = tuple(float(v) for v in location)
        self.gradient_norm = gradient_norm


class StiffnessError(TraceError):
    """
    Raised when the adaptive step size underflows.

    Attributes:
        location: state where the integrator gave up
        t: flow parameter at that point
    """

    def __init__(self, message: str, location: Sequence[float], t: float):
        super().__init__(message)
        self.location = tuple(float(v) for v in location)
        self.t = t


class FiniteLengthError(TraceError):
    """Raised when a weighted-length integral does not converge."""

    pass


class LevelRangeError(TraceError):
    """Raised when a requested flow level lies outside the admissible range."""

    pass


class ArgumentError(ConformalFlowError):
    """Raised for malformed matrix arguments, e.g. a non-symmetric metric."""

    pass


class DegeneracyError(ConformalFlowError):
    """Raised when a metric tensor is singular where it must be definite."""

    pass
