"""
Shared constants for conformal-flow.

This module defines the enumerations used across the package and the named
numerical defaults (collars, tolerances, integration settings) that the
solver, the flow tracer and the diagnostics agree on.
"""

from enum import Enum


class DomainKind(str, Enum):
    """
    Supported domain shapes.

    Every kind is a star-shaped radial graph over the circle (2D) or the
    sphere (3D) around its center.

    Attributes:
        CIRCLE: Disk of given radius
        ELLIPSE: Axis-aligned ellipse with two semi-axes
        FOURIER_CURVE: Radius r(theta) given by a truncated Fourier series
        SPHERE: Ball of given radius
        ELLIPSOID: Axis-aligned ellipsoid with three semi-axes
        SPHERICAL_HARMONIC_SURFACE: Radius r(theta, phi) given by real spherical harmonics

    Example:
        >>> DomainKind("fourier-curve")
        <DomainKind.FOURIER_CURVE: 'fourier-curve'>
        >>> DomainKind.SPHERE.dim
        3
    """

    CIRCLE = "circle"
    ELLIPSE = "ellipse"
    FOURIER_CURVE = "fourier-curve"
    SPHERE = "sphere"
    ELLIPSOID = "ellipsoid"
    SPHERICAL_HARMONIC_SURFACE = "spherical-harmonic-surface"

    @property
    def dim(self) -> int:
        """Spatial dimension of domains of this kind."""
        if self in (DomainKind.CIRCLE, DomainKind.ELLIPSE, DomainKind.FOURIER_CURVE):
            return 2
        return 3


class Backend(str, Enum):
    """
    Green's function representations.

    Attributes:
        ANALYTIC_DISK: Closed form for a disk with arbitrary interior pole
        ANALYTIC_BALL: Kelvin-image closed form for a ball
        MFS: Method of fundamental solutions fit of the regular part
    """

    ANALYTIC_DISK = "analytic-disk"
    ANALYTIC_BALL = "analytic-ball"
    MFS = "mfs"


class MapClass(str, Enum):
    """
    Pointwise classification of a map by its metric tensor.

    Example:
        >>> MapClass.WEAK_CONFORMAL.value
        'weak-conformal'
    """

    CONFORMAL = "conformal"
    WEAK_CONFORMAL = "weak-conformal"
    QUASI_CONFORMAL = "quasi-conformal"
    GENERAL = "general"


class ExitCode(int, Enum):
    """Process exit codes of the command line front-end."""

    OK = 0
    PARSE_ERROR = 1
    SOLVER_FAILURE = 2
    MAP_FAILURE = 3
    CHECK_FAILURE = 4


# Geometry
BOUNDARY_COLLAR = 1e-12
MIN_NODES_2D = 16
MIN_NODES_3D = 64

# Green's function solver
POLE_COLLAR_FACTOR = 1e-9
DEFAULT_SOURCE_DILATION = 1.5
DEFAULT_SVD_CUTOFF = 1e-12
DEFAULT_SOLVER_TOLERANCE = 1e-8
DEFAULT_COLLOCATION_2D = 256
DEFAULT_COLLOCATION_3D = 1152

# Flow integration
DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12
DEFAULT_EPS_BDRY = 1e-6
DEFAULT_EPS_TRUNC = 1e-6
DEFAULT_T_CUT_FACTOR = 1e-4
DEFAULT_MAX_STEPS = 20000
CRITICAL_GRADIENT = 1e-14
LEVEL_TOLERANCE_2D = 1e-9
LEVEL_TOLERANCE_3D = 1e-8

# Diagnostics
RESIDUAL_FLOOR = 1e-300
EIGEN_CLAMP = 1e-12
SYMMETRY_TOLERANCE = 1e-10
JACOBIAN_RELATIVE_STEP = 1e-5
JACOBIAN_ABSOLUTE_STEP = 1e-8

DEFAULT_SEED = 20240601
