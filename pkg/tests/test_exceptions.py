"""
Tests for exception hierarchy.
"""

import pytest
from conformal_flow import (
    ArgumentError,
    ConfigurationError,
    ConformalFlowError,
    ConvergenceError,
    CriticalPointError,
    DegeneracyError,
    DomainError,
    FiniteLengthError,
    LevelRangeError,
    ParametrizationError,
    SingularityError,
    SpecFormatError,
    StiffnessError,
    TraceError,
)


class TestExceptionHierarchy:
    """Test exception inheritance and behavior."""

    def test_base_error(self):
        """ConformalFlowError is the base exception."""
        error = ConformalFlowError("Test error")
        assert isinstance(error, Exception)
        assert str(error) == "Test error"

    @pytest.mark.parametrize(
        "cls",
        [
            ConfigurationError,
            DomainError,
            ParametrizationError,
            TraceError,
            ArgumentError,
            DegeneracyError,
        ],
    )
    def test_direct_subclasses(self, cls):
        """Every failure family derives from ConformalFlowError."""
        error = cls("failed")
        assert isinstance(error, ConformalFlowError)
        assert str(error) == "failed"

    def test_spec_format_is_configuration(self):
        """Parse failures are configuration errors."""
        assert issubclass(SpecFormatError, ConfigurationError)

    def test_singularity_is_domain(self):
        """Pole collar hits are domain errors."""
        assert issubclass(SingularityError, DomainError)

    @pytest.mark.parametrize(
        "cls", [CriticalPointError, StiffnessError, FiniteLengthError, LevelRangeError]
    )
    def test_trace_family(self, cls):
        """Integration failures share TraceError."""
        assert issubclass(cls, TraceError)

    def test_catch_base(self):
        """The base class catches every package error."""
        with pytest.raises(ConformalFlowError):
            raise LevelRangeError("t out of range")


class TestExceptionAttributes:
    """Test the context carried by exceptions."""

    def test_spec_format_location(self):
        """Parse errors carry line and column."""
        error = SpecFormatError("malformed JSON", line=3, column=7)

        assert error.line == 3
        assert error.column == 7
        assert "line 3, column 7" in str(error)

    def test_spec_format_without_location(self):
        """The location is optional."""
        error = SpecFormatError("malformed JSON")

        assert error.line is None
        assert str(error) == "malformed JSON"

    def test_convergence_residual(self):
        """Solver failures carry the residual."""
        assert ConvergenceError("no fit", 1e-3).residual == 1e-3

    def test_critical_point_location(self):
        """Critical points carry their location as floats."""
        error = CriticalPointError("flat", [1, 2], 0.0)

        assert error.location == (1.0, 2.0)
        assert error.gradient_norm == 0.0

    def test_stiffness_state(self):
        """Stiffness errors carry the state and parameter."""
        error = StiffnessError("underflow", [0.5, 0.5], 0.25)

        assert error.location == (0.5, 0.5)
        assert error.t == 0.25
