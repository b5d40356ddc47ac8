"""
Tests for constants (DomainKind, Backend, MapClass, ExitCode enums).
"""

from conformal_flow import Backend, DomainKind, ExitCode, MapClass


class TestDomainKind:
    """Test DomainKind enum."""

    def test_enum_values(self):
        """All domain kinds have their JSON names."""
        assert DomainKind.CIRCLE.value == "circle"
        assert DomainKind.ELLIPSE.value == "ellipse"
        assert DomainKind.FOURIER_CURVE.value == "fourier-curve"
        assert DomainKind.SPHERE.value == "sphere"
        assert DomainKind.ELLIPSOID.value == "ellipsoid"
        assert DomainKind.SPHERICAL_HARMONIC_SURFACE.value == "spherical-harmonic-surface"

    def test_enum_count(self):
        """Three planar and three spatial kinds."""
        assert len(list(DomainKind)) == 6

    def test_dimensions(self):
        """Each kind knows its dimension."""
        planar = [k for k in DomainKind if k.dim == 2]
        spatial = [k for k in DomainKind if k.dim == 3]

        assert planar == [DomainKind.CIRCLE, DomainKind.ELLIPSE, DomainKind.FOURIER_CURVE]
        assert len(spatial) == 3

    def test_string_comparison(self):
        """Enum values compare equal to strings."""
        assert DomainKind.CIRCLE == "circle"
        assert DomainKind("spherical-harmonic-surface") == DomainKind.SPHERICAL_HARMONIC_SURFACE


class TestBackend:
    """Test Backend enum."""

    def test_enum_values(self):
        """Backends have their JSON names."""
        assert [b.value for b in Backend] == ["analytic-disk", "analytic-ball", "mfs"]


class TestMapClass:
    """Test MapClass enum."""

    def test_enum_values(self):
        """Map classes have their report names."""
        assert MapClass.CONFORMAL == "conformal"
        assert MapClass.WEAK_CONFORMAL == "weak-conformal"
        assert MapClass.QUASI_CONFORMAL == "quasi-conformal"
        assert MapClass.GENERAL == "general"

    def test_enum_access_by_name(self):
        """Access enum by name."""
        assert MapClass["WEAK_CONFORMAL"] == MapClass.WEAK_CONFORMAL


class TestExitCode:
    """Test ExitCode enum."""

    def test_codes(self):
        """Exit codes are 0 to 4."""
        assert [int(c) for c in ExitCode] == [0, 1, 2, 3, 4]

    def test_int_comparison(self):
        """Exit codes compare equal to integers."""
        assert ExitCode.CHECK_FAILURE == 4
        assert ExitCode.OK == 0
