"""
Tests for data models (result records and to_builtin).
"""

import math

import numpy as np
import pytest
from conformal_flow import (
    FlowTrace,
    InjectivityReport,
    MapResult,
    MapClass,
    ScanReport,
    SuiteReport,
)
from conformal_flow.models import TraceStats, to_builtin


class TestToBuiltin:
    """Test conversion to JSON-ready values."""

    def test_arrays_and_scalars(self):
        """numpy values become plain Python values."""
        data = to_builtin({"a": np.arange(3), "b": np.float64(0.5), "c": (1, np.int64(2))})

        assert data == {"a": [0, 1, 2], "b": 0.5, "c": [1, 2]}
        assert type(data["b"]) is float

    def test_enum(self):
        """Enums become their values."""
        assert to_builtin(MapClass.CONFORMAL) == "conformal"


class TestRecordAccess:
    """Test the dict-style access shared by records."""

    def test_attribute_and_item(self):
        """Records support attribute and dict access."""
        report = ScanReport(min_grad=0.5, argmin=np.zeros(2), grid_size=10)

        assert report.min_grad == 0.5
        assert report["grid_size"] == 10
        assert report.get("missing", "default") == "default"
        assert "argmin" in report
        assert list(report.keys()) == ["min_grad", "argmin", "grid_size"]

    def test_missing_key(self):
        """Unknown keys raise KeyError."""
        with pytest.raises(KeyError):
            ScanReport(min_grad=0.5, argmin=np.zeros(2), grid_size=1)["nonexistent"]

    def test_to_dict_nested(self):
        """Nested records and arrays are converted."""
        result = MapResult(source=np.array([0.1, 0.2]), image=np.array([0.3, 0.4]), local_scale=1.5)

        assert result.to_dict() == {
            "source": [0.1, 0.2],
            "image": [0.3, 0.4],
            "local_scale": 1.5,
            "stats": {"steps": 0, "invariant_residual": 0.0, "truncated": False},
            "error": None,
        }


class TestFlowTrace:
    """Test FlowTrace accessors."""

    def test_endpoints(self):
        """start and end are the first and last samples."""
        trace = FlowTrace(
            dim=2,
            t=np.array([0.1, 0.5]),
            x=np.array([[0.1, 0.0], [0.5, 0.0]]),
            level_residual=np.array([0.0, 2e-12]),
        )

        np.testing.assert_allclose(trace.start, [0.1, 0.0])
        np.testing.assert_allclose(trace.end, [0.5, 0.0])
        assert trace.max_level_residual == 2e-12
        assert len(trace.samples) == 2

    def test_empty_residuals(self):
        """A trace without residuals reports zero drift."""
        trace = FlowTrace(dim=2, t=np.array([0.5]), x=np.array([[0.5, 0.0]]))

        assert trace.max_level_residual == 0.0


class TestStatusFlags:
    """Test derived pass / ok flags."""

    def test_map_result_ok(self):
        """Results with an error are not ok."""
        good = MapResult(source=np.zeros(2), image=np.zeros(2), local_scale=1.0)
        bad = MapResult(
            source=np.zeros(2),
            image=np.full(2, np.nan),
            local_scale=math.nan,
            error="TraceError: failed",
        )

        assert good.ok
        assert not bad.ok

    def test_injectivity_passed(self):
        """Any flag fails the audit."""
        assert InjectivityReport(min_ratio=1.0).passed
        assert not InjectivityReport(min_ratio=0.0, flags=[(0, 1)]).passed

    def test_suite_passed(self):
        """Any failure fails the suite."""
        report = SuiteReport(name="lemma1-equivalence", trials=10)
        assert report.passed

        report.failures += 1
        assert not report.passed

    def test_trace_stats_defaults(self):
        """Fresh stats are zero and untruncated."""
        assert TraceStats() == TraceStats(steps=0, invariant_residual=0.0, truncated=False)
