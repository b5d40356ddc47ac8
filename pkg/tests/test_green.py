"""
Tests for Green's function construction and evaluation.
"""

import math

import numpy as np
import pytest
from conformal_flow import (
    Backend,
    ConfigurationError,
    ConvergenceError,
    DomainError,
    DomainSpec,
    GreenField,
    SingularityError,
    SolverSettings,
    solve,
)
from conformal_flow.green import choose_backend, fibonacci_directions, fundamental


def offset_disk_green(x, y):
    """(1/2pi) ln(|1 - conj(y) x| / |x - y|) on the unit disk."""
    z, w = complex(*x), complex(*y)
    return math.log(abs(1 - w.conjugate() * z) / abs(z - w)) / (2 * math.pi)


@pytest.fixture(scope="module")
def mfs_disk():
    return solve(
        DomainSpec.circle(),
        [0.3, 0.0],
        SolverSettings(collocation=256, backend=Backend.MFS),
    )


@pytest.fixture(scope="module")
def blob():
    return solve(DomainSpec.fourier_curve(1.0, cos_coeffs=[0.0, 0.1]), [0.1, 0.05])


@pytest.fixture(scope="module")
def harmonic_blob():
    return solve(DomainSpec.spherical_harmonic_surface(1.0, [(2, 0, 0.05)]), [0.0, 0.0, 0.1])


class TestKernels:
    """Test the fundamental solutions."""

    def test_fundamental_2d(self):
        """Phi(d) = ln(1/|d|) / 2pi."""
        assert fundamental(2, np.array([0.5, 0.0])) == pytest.approx(math.log(2) / (2 * math.pi))

    def test_fundamental_3d(self):
        """Phi(d) = 1 / (4 pi |d|)."""
        assert fundamental(3, np.array([0.0, 0.0, 2.0])) == pytest.approx(1 / (8 * math.pi))

    def test_fibonacci_directions_unit(self):
        """Fibonacci directions are unit vectors with zero mean."""
        u = fibonacci_directions(500)

        np.testing.assert_allclose(np.linalg.norm(u, axis=1), 1.0)
        assert np.linalg.norm(u.mean(axis=0)) < 1e-2


class TestBackendChoice:
    """Test backend selection."""

    def test_circle_is_analytic(self):
        """Circles use the closed form."""
        assert choose_backend(DomainSpec.circle(), SolverSettings()) == Backend.ANALYTIC_DISK

    def test_sphere_is_analytic(self):
        """Spheres use the Kelvin image."""
        assert choose_backend(DomainSpec.sphere(), SolverSettings()) == Backend.ANALYTIC_BALL

    def test_ellipse_is_mfs(self):
        """Everything else is fitted."""
        assert choose_backend(DomainSpec.ellipse(2, 1), SolverSettings()) == Backend.MFS

    def test_forced_backend_must_fit(self):
        """A closed form cannot be forced on the wrong shape."""
        with pytest.raises(ConfigurationError):
            choose_backend(DomainSpec.ellipse(2, 1), SolverSettings(backend="analytic-disk"))


class TestAnalyticDisk:
    """Test the analytic disk Green's function."""

    def test_value_centered(self):
        """G = ln(1/|x|) / 2pi for a centered pole."""
        field = solve(DomainSpec.circle(), [0.0, 0.0])

        assert field.backend == Backend.ANALYTIC_DISK
        assert field.value([0.5, 0.0]) == pytest.approx(0.1103178, abs=1e-7)

    def test_gradient_centered(self):
        """grad G = -x / (2 pi |x|^2)."""
        field = solve(DomainSpec.circle(), [0.0, 0.0])

        np.testing.assert_allclose(field.gradient([0.5, 0.0]), [-0.3183099, 0.0], atol=1e-7)

    def test_boundary_zero(self):
        """G vanishes on the boundary."""
        field = solve(DomainSpec.circle(), [0.2, -0.4])

        assert field.boundary_residual_at(128) < 1e-14

    def test_regular_part_offset(self):
        """h(y, y) = ln(1 - |y|^2) / 2pi."""
        field = solve(DomainSpec.circle(), [0.3, 0.0])

        expected = math.log(1 - 0.09) / (2 * math.pi)
        assert field.regular_part_at_pole() == pytest.approx(expected, abs=1e-12)

    def test_regular_part_centered(self):
        """h vanishes identically for the centered unit disk."""
        field = solve(DomainSpec.circle(), [0.0, 0.0])

        assert field.regular_part_at_pole() == pytest.approx(0.0, abs=1e-15)
        assert field.regular_part([0.3, 0.2]) == pytest.approx(0.0, abs=1e-15)

    def test_scaled_disk(self):
        """A disk of radius 2 has G = ln(2/|x - c|) / 2pi for a pole at its center."""
        field = solve(DomainSpec.circle(2.0, center=(1.0, 1.0)), [1.0, 1.0])

        assert field.value([2.0, 1.0]) == pytest.approx(math.log(2) / (2 * math.pi))

    def test_flux(self):
        """Total boundary flux is -1."""
        field = solve(DomainSpec.circle(), [0.0, 0.0])

        assert field.boundary_flux_total() == pytest.approx(-1.0, abs=1e-10)

    def test_gradient_matches_finite_difference(self):
        """The analytic gradient of an off-center pole matches central differences."""
        field = solve(DomainSpec.circle(), [0.3, -0.2])
        x = np.array([-0.4, 0.35])
        h = 1e-6
        fd = [
            (field.value(x + h * e) - field.value(x - h * e)) / (2 * h) for e in np.eye(2)
        ]

        np.testing.assert_allclose(field.gradient(x), fd, atol=1e-8)


class TestAnalyticBall:
    """Test the analytic ball Green's function."""

    def test_value_centered(self):
        """G = (1/|x| - 1) / 4pi."""
        field = solve(DomainSpec.sphere(), [0.0, 0.0, 0.0])

        assert field.value([0.0, 0.0, 0.5]) == pytest.approx(0.0795775, abs=1e-7)

    def test_gradient_centered(self):
        """grad G = -x / (4 pi |x|^3)."""
        field = solve(DomainSpec.sphere(), [0.0, 0.0, 0.0])

        np.testing.assert_allclose(
            field.gradient([0.0, 0.0, 0.5]), [0.0, 0.0, -0.3183099], atol=1e-7
        )

    def test_regular_part_at_pole(self):
        """h(0, 0) = -1 / 4pi."""
        field = solve(DomainSpec.sphere(), [0.0, 0.0, 0.0])

        assert field.regular_part_at_pole() == pytest.approx(-0.0795775, abs=1e-7)

    def test_offset_pole_boundary_zero(self):
        """The Kelvin image vanishes on the sphere for an offset pole."""
        field = solve(DomainSpec.sphere(), [0.2, 0.1, -0.3])

        assert field.boundary_residual_at(512) < 1e-14

    def test_flux(self):
        """Total boundary flux is -1."""
        field = solve(DomainSpec.sphere(), [0.0, 0.0, 0.0])

        assert field.boundary_flux_total() == pytest.approx(-1.0, abs=1e-8)


class TestMFS:
    """Test the method of fundamental solutions backend."""

    def test_matches_offset_disk(self, mfs_disk):
        """MFS agrees with the offset-pole closed form on the disk."""
        rng = np.random.default_rng(7)
        worst = 0.0
        for _ in range(50):
            rho, theta = math.sqrt(rng.uniform(0.0, 0.95**2)), rng.uniform(0, 2 * math.pi)
            x = [rho * math.cos(theta), rho * math.sin(theta)]
            if math.dist(x, [0.3, 0.0]) < 1e-3:
                continue
            worst = max(worst, abs(mfs_disk.value(x) - offset_disk_green(x, [0.3, 0.0])))

        assert worst < 1e-8

    def test_gradient_matches_analytic(self, mfs_disk):
        """MFS gradients agree with the closed form."""
        exact = solve(DomainSpec.circle(), [0.3, 0.0])
        rng = np.random.default_rng(11)
        for _ in range(50):
            x = rng.uniform(-0.6, 0.6, size=2)
            if np.linalg.norm(x - [0.3, 0.0]) < 1e-2:
                continue
            np.testing.assert_allclose(mfs_disk.gradient(x), exact.gradient(x), atol=1e-7)

    def test_regular_part_at_pole(self, mfs_disk):
        """h(y, y) is recovered by kernel summation."""
        expected = math.log(1 - 0.09) / (2 * math.pi)
        assert mfs_disk.regular_part_at_pole() == pytest.approx(expected, abs=1e-7)

    def test_blob_flux(self, blob):
        """A Fourier blob has total boundary flux -1."""
        assert blob.backend == Backend.MFS
        assert blob.boundary_flux_total() == pytest.approx(-1.0, abs=1e-6)

    def test_blob_positive_inside(self, blob):
        """G is positive in the interior."""
        for x in ([0.5, 0.0], [-0.8, 0.1], [0.0, -0.7]):
            assert blob.value(x) > 0

    def test_blob_residual(self, blob):
        """The fit meets the solver tolerance on fresh points."""
        assert blob.boundary_residual <= 1e-8

    def test_singularity_split_bounded(self, blob):
        """G minus the fundamental solution stays bounded near the pole."""
        pole = np.asarray(blob.pole)
        direction = np.array([0.6, 0.8])
        for r in (1e-2, 1e-4, 1e-6):
            x = pole + r * direction
            split = blob.value(x) - fundamental(2, x - pole)
            assert split == pytest.approx(blob.regular_part_at_pole(), abs=r)

    @pytest.mark.parametrize("x", [[0.1, 0.05], [0.5, 0.0], [-0.3, 0.4], [0.0, -0.6]])
    def test_regular_part_harmonic(self, blob, x):
        """The five-point Laplacian of h(., y) vanishes, at the pole too."""
        h = 1e-3
        x = np.array(x)
        shifts = [np.array([h, 0.0]), np.array([-h, 0.0]), np.array([0.0, h]), np.array([0.0, -h])]
        total = sum(blob.regular_part(x + s) for s in shifts)
        laplacian = (total - 4 * blob.regular_part(x)) / h**2

        assert abs(laplacian) < 1e-5

    def test_regular_part_harmonic_3d(self, harmonic_blob):
        """The seven-point Laplacian of h(., y) vanishes in 3D."""
        h = 1e-3
        for x in ([0.0, 0.0, 0.1], [0.3, -0.2, 0.1], [-0.1, 0.4, -0.3]):
            x = np.array(x)
            shifts = np.vstack([h * np.eye(3), -h * np.eye(3)])
            total = sum(harmonic_blob.regular_part(x + s) for s in shifts)
            laplacian = (total - 6 * harmonic_blob.regular_part(x)) / h**2

            assert abs(laplacian) < 1e-4

    def test_harmonic_blob_flux(self, harmonic_blob):
        """A spherical-harmonic blob has total boundary flux -1."""
        assert harmonic_blob.boundary_flux_total() == pytest.approx(-1.0, abs=1e-6)

    def test_convergence_failure(self):
        """An unreachable tolerance reports the residual."""
        settings = SolverSettings(collocation=16, max_collocation=32, tolerance=1e-15)
        spec = DomainSpec.fourier_curve(1.0, cos_coeffs=[0.0, 0.3])

        with pytest.raises(ConvergenceError) as excinfo:
            solve(spec, [0.2, 0.0], settings)
        assert excinfo.value.residual > 1e-15


class TestEvaluationErrors:
    """Test checked evaluation."""

    def test_pole_outside(self):
        """Poles must be interior."""
        with pytest.raises(DomainError):
            solve(DomainSpec.circle(), [2.0, 0.0])

    def test_value_at_pole(self):
        """Evaluation at the pole is a singularity error."""
        field = solve(DomainSpec.circle(), [0.0, 0.0])

        with pytest.raises(SingularityError):
            field.value([0.0, 0.0])

    def test_exterior_point(self):
        """Evaluation outside is a domain error."""
        field = solve(DomainSpec.circle(), [0.0, 0.0])

        with pytest.raises(DomainError):
            field.value([1.5, 0.0])

    def test_sublevel_membership(self):
        """Omega_t = {G > t} shrinks toward the pole."""
        field = solve(DomainSpec.circle(), [0.0, 0.0])
        level = math.log(2) / (2 * math.pi)

        assert field.in_sublevel([0.4, 0.0], level)
        assert not field.in_sublevel([0.6, 0.0], level)
        assert field.in_sublevel([0.0, 0.0], level)
        assert not field.in_sublevel([1.2, 0.0], level)


class TestPersistence:
    """Test the field dictionary codec."""

    def test_mfs_round_trip(self, mfs_disk):
        """A rebuilt MFS field evaluates identically."""
        again = GreenField.from_dict(mfs_disk.to_dict())

        assert again.backend == Backend.MFS
        assert again.value([0.1, 0.4]) == mfs_disk.value([0.1, 0.4])

    def test_inconsistent_mfs_data(self, mfs_disk):
        """Sources and charges must agree in size."""
        data = mfs_disk.to_dict()
        data["charges"] = data["charges"][:-1]

        with pytest.raises(ConfigurationError):
            GreenField.from_dict(data)

    def test_missing_keys(self):
        """Incomplete data is a configuration error."""
        with pytest.raises(ConfigurationError):
            GreenField.from_dict({"backend": "mfs"})
