"""
Tests for abstract base classes (interfaces).
"""

import math

import numpy as np
import pytest
from conformal_flow import BaseField, trace_to_pole


class RadialField(BaseField):
    """ln(1/|x|) / 2pi on the unit disk."""

    dim = 2
    pole = np.zeros(2)
    diameter = 2.0

    def value(self, x):
        return -math.log(np.linalg.norm(x)) / (2 * math.pi)

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        return -x / (2 * math.pi * float(x @ x))

    def contains(self, x):
        return bool(np.linalg.norm(x) < 1.0)

    def regular_part_at_pole(self):
        return 0.0


class TestBaseField:
    """Test BaseField abstract interface."""

    def test_cannot_instantiate_base_field(self):
        """BaseField cannot be instantiated directly."""
        with pytest.raises(TypeError):
            BaseField()

    def test_incomplete_implementation_fails(self):
        """Incomplete implementation cannot be instantiated."""

        class ValueOnly(BaseField):
            def value(self, x):
                return 0.0

        with pytest.raises(TypeError):
            ValueOnly()

    def test_concrete_field(self):
        """A concrete field provides values and gradient norms."""
        field = RadialField()

        assert field.value([0.5, 0.0]) == pytest.approx(math.log(2) / (2 * math.pi))
        assert field.gradient_norm([0.5, 0.0]) == pytest.approx(1 / math.pi)

    def test_concrete_field_traces(self):
        """Any BaseField can be traced back to its pole."""
        trace = trace_to_pole(RadialField(), [0.0, -0.4])

        np.testing.assert_allclose(trace.direction, [0.0, -1.0], atol=1e-9)
