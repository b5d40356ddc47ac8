"""
Tests for the constructed maps onto the unit disk and ball.
"""

import math

import numpy as np
import pytest
from conformal_flow import (
    ArgumentError,
    DomainError,
    DomainSpec,
    FlowSettings,
    GridSettings,
    MapResult,
    injectivity_audit,
    inverse_map,
    map_grid,
    map_point,
    solve,
)
from conformal_flow.analysis import metric_report, numeric_jacobian
from conformal_flow.mapping import (
    box_grid,
    filter_grid,
    grid_for,
    local_scale_at_pole,
    map_point_2d,
    map_point_3d,
    polar_grid,
    spherical_grid,
)


@pytest.fixture(scope="module")
def disk():
    return solve(DomainSpec.circle(), [0.0, 0.0])


@pytest.fixture(scope="module")
def ball():
    return solve(DomainSpec.sphere(), [0.0, 0.0, 0.0])


@pytest.fixture(scope="module")
def mfs_offset_disk():
    from conformal_flow import Backend, SolverSettings

    return solve(DomainSpec.circle(), [0.3, 0.0], SolverSettings(backend=Backend.MFS))


def mobius_modulus(x, y=0.3):
    z = complex(*x)
    return abs(z - y) / abs(1 - y * z)


@pytest.fixture(scope="module")
def blob():
    return solve(DomainSpec.fourier_curve(1.0, cos_coeffs=[0.0, 0.1]), [0.1, 0.05])


@pytest.fixture(scope="module")
def harmonic_blob():
    return solve(DomainSpec.spherical_harmonic_surface(1.0, [(2, 0, 0.05)]), [0.0, 0.0, 0.1])


def image_map(field):
    return lambda p: map_point(field, p).image


class TestMapPoint2D:
    """Test the planar map."""

    def test_disk_identity(self, disk):
        """The centered disk map is the identity with unit scale."""
        result = map_point_2d(disk, [0.5, 0.0])

        np.testing.assert_allclose(result.image, [0.5, 0.0], atol=1e-9)
        assert result.local_scale == pytest.approx(1.0, abs=1e-9)
        assert result.ok

    def test_pole_maps_to_origin(self, disk):
        """The pole goes to the origin."""
        result = map_point(disk, [0.0, 0.0])

        np.testing.assert_allclose(result.image, [0.0, 0.0])
        assert result.local_scale == pytest.approx(1.0, abs=1e-6)

    def test_mobius_modulus(self, mfs_offset_disk):
        """With an offset pole the modulus is |x - y| / |1 - y x|."""
        rng = np.random.default_rng(3)
        for _ in range(20):
            rho, theta = 0.95 * math.sqrt(rng.uniform()), rng.uniform(0, 2 * math.pi)
            x = [rho * math.cos(theta), rho * math.sin(theta)]
            if math.dist(x, [0.3, 0.0]) < 1e-3:
                continue
            image = map_point(mfs_offset_disk, x).image

            assert np.linalg.norm(image) == pytest.approx(mobius_modulus(x), abs=1e-4)

    def test_angles_preserved(self, mfs_offset_disk):
        """Image angles between points of a circle match the Mobius map."""
        theta = np.linspace(0.0, 2 * np.pi, 6, endpoint=False)
        points = 0.6 * np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        images = [complex(*map_point(mfs_offset_disk, p).image) for p in points]
        exact = [(complex(*p) - 0.3) / (1 - 0.3 * complex(*p)) for p in points]
        for i in range(1, len(points)):
            got = np.angle(images[i] / images[0])
            want = np.angle(exact[i] / exact[0])
            assert got == pytest.approx(want, abs=1e-3)

    def test_wrong_dimension(self, ball):
        """The planar map needs a planar field."""
        with pytest.raises(ArgumentError):
            map_point_2d(ball, [0.1, 0.1, 0.1])

    def test_exterior_point(self, disk):
        """Exterior points are domain errors."""
        with pytest.raises(DomainError):
            map_point(disk, [1.5, 0.0])


class TestMapPoint3D:
    """Test the spatial map."""

    def test_ball_identity_on_axis(self, ball):
        """The centered ball map is the identity."""
        result = map_point_3d(ball, [0.0, 0.0, 0.5])

        np.testing.assert_allclose(result.image, [0.0, 0.0, 0.5], atol=1e-5)
        assert result.local_scale == pytest.approx(1.0, abs=1e-5)
        assert result.stats.truncated

    def test_ball_identity_off_axis(self, ball):
        """Identity holds in every direction."""
        result = map_point(ball, [0.3, 0.4, 0.0])

        np.testing.assert_allclose(result.image, [0.3, 0.4, 0.0], atol=1e-5)

    def test_pole(self, ball):
        """The pole goes to the origin."""
        np.testing.assert_allclose(map_point(ball, [0.0, 0.0, 0.0]).image, np.zeros(3))

    def test_wrong_dimension(self, disk):
        """The spatial map needs a spatial field."""
        with pytest.raises(ArgumentError):
            map_point_3d(disk, [0.1, 0.1])


class TestMapGrid:
    """Test batch mapping."""

    def test_empty(self, disk):
        """No points, no results."""
        assert map_grid(disk, []) == []

    def test_disk_polar_grid(self, disk):
        """A 16 x 16 polar grid maps inside the unit disk, onto itself."""
        points = polar_grid(disk.spec, 16, 16)
        results = map_grid(disk, points)

        assert len(results) == 256
        assert all(np.linalg.norm(r.image) < 1 for r in results)
        worst = max(np.linalg.norm(r.image - r.source) for r in results)
        assert worst <= 1e-6

    def test_failures_recorded(self, disk):
        """Points that cannot be mapped are recorded with an error."""
        results = map_grid(disk, [[0.5, 0.0], [2.0, 0.0]])

        assert results[0].ok
        assert not results[1].ok
        assert results[1].error.startswith("DomainError")
        assert np.all(np.isnan(results[1].image))

    def test_duplicates_identical(self, disk):
        """Mapping is deterministic."""
        results = map_grid(disk, [[0.2, 0.7], [0.2, 0.7]])

        np.testing.assert_allclose(results[0].image, results[1].image, atol=1e-10)

    def test_worker_pool_keeps_order(self, disk):
        """Parallel mapping returns results in input order."""
        points = polar_grid(disk.spec, 3, 4)
        serial = map_grid(disk, points)
        parallel = map_grid(disk, points, jobs=2)

        for a, b in zip(serial, parallel):
            np.testing.assert_allclose(a.source, b.source)
            np.testing.assert_allclose(a.image, b.image, atol=1e-12)

    def test_ball_spherical_grid(self, ball):
        """A small spherical grid of the ball maps onto itself."""
        points = spherical_grid(ball.spec, 2, 2, 4)
        results = map_grid(ball, points)

        assert len(results) == 16
        worst = max(np.linalg.norm(r.image - r.source) for r in results)
        assert worst <= 1e-4

    def test_boundary_limit(self, disk):
        """Moduli increase toward 1 along a ray."""
        points = [[r, 0.0] for r in (0.5, 0.9, 0.99, 0.999)]
        moduli = [np.linalg.norm(r.image) for r in map_grid(disk, points)]

        assert all(a < b < 1 for a, b in zip(moduli, moduli[1:]))


class TestInjectivityAudit:
    """Test the pairwise separation audit."""

    def test_identity_grid(self, disk):
        """The identity map has no flags."""
        report = injectivity_audit(map_grid(disk, polar_grid(disk.spec, 4, 8)))

        assert report.passed
        assert report.min_ratio == pytest.approx(1.0, abs=1e-6)
        assert report.pairs_checked == 32 * 31 // 2

    def test_duplicate_image(self):
        """Two distinct sources with one image are flagged."""
        results = [
            MapResult(source=np.array([0.1, 0.0]), image=np.array([0.5, 0.5]), local_scale=1.0),
            MapResult(source=np.array([0.2, 0.0]), image=np.array([0.5, 0.5]), local_scale=1.0),
            MapResult(source=np.array([0.3, 0.0]), image=np.array([0.3, 0.0]), local_scale=1.0),
        ]
        report = injectivity_audit(results)

        assert report.flags == [(0, 1)]
        assert not report.passed

    def test_single_point(self):
        """A single point passes vacuously."""
        report = injectivity_audit(
            [MapResult(source=np.zeros(2), image=np.zeros(2), local_scale=1.0)]
        )

        assert report.passed
        assert report.min_ratio == math.inf


class TestLocalScaleAtPole:
    """Test the numeric derivative modulus at the pole."""

    def test_disk(self, disk):
        """The identity has unit scale."""
        assert local_scale_at_pole(disk) == pytest.approx(1.0, abs=1e-9)

    def test_offset_disk(self, mfs_offset_disk):
        """An offset pole has scale exp(-2 pi h(y, y)) = 1 / (1 - |y|^2)."""
        assert local_scale_at_pole(mfs_offset_disk) == pytest.approx(1 / 0.91, rel=1e-4)

    def test_ball(self, ball):
        """The ball identity has unit scale."""
        assert local_scale_at_pole(ball, settings=FlowSettings()) == pytest.approx(1.0, abs=1e-3)


class TestInverseMap:
    """Test the inverse map utility."""

    def test_disk(self, disk):
        """The inverse of the identity is the identity."""
        np.testing.assert_allclose(inverse_map(disk, [0.3, -0.4]), [0.3, -0.4], atol=1e-9)

    def test_origin(self, disk):
        """The origin goes back to the pole."""
        np.testing.assert_allclose(inverse_map(disk, [0.0, 0.0]), [0.0, 0.0])

    def test_offset_round_trip(self, mfs_offset_disk):
        """inverse_map undoes map_point."""
        x = np.array([-0.3, 0.5])
        w = map_point(mfs_offset_disk, x).image

        np.testing.assert_allclose(inverse_map(mfs_offset_disk, w), x, atol=1e-5)

    def test_ball(self, ball):
        """The inverse of the ball identity is the identity."""
        np.testing.assert_allclose(inverse_map(ball, [0.0, 0.5, 0.0]), [0.0, 0.5, 0.0], atol=1e-5)

    def test_outside(self, disk):
        """Points outside the unit disk have no preimage."""
        with pytest.raises(DomainError):
            inverse_map(disk, [0.8, 0.8])


class TestGrids:
    """Test grid builders."""

    def test_polar_grid_shape(self):
        """radial x angular points."""
        assert polar_grid(DomainSpec.circle(), 16, 16).shape == (256, 2)

    def test_polar_grid_radius(self):
        """The outer ring sits at the radius fraction."""
        points = polar_grid(DomainSpec.circle(), 4, 8, fraction=0.99)

        assert np.linalg.norm(points, axis=1).max() == pytest.approx(0.99)

    def test_spherical_grid_shape(self):
        """radial x polar x angular points."""
        assert spherical_grid(DomainSpec.sphere(), 8, 8, 8).shape == (512, 3)

    def test_empty_grid(self):
        """Zero radii give an empty grid."""
        points = grid_for(DomainSpec.circle(), GridSettings(radial=0))

        assert points.shape == (0, 2)

    def test_box_grid_inside(self):
        """Box grids keep interior lattice points only."""
        spec = DomainSpec.circle()
        points = box_grid(spec, 11)

        assert all(spec.contains(p) for p in points)
        assert len(points) > 0

    def test_filter_grid(self):
        """Filtering drops points near the pole and the boundary."""
        spec = DomainSpec.circle()
        points = np.array([[0.0, 0.01], [0.5, 0.0], [0.97, 0.0], [1.5, 0.0]])
        kept = filter_grid(spec, points, [0.0, 0.0], pole_exclusion=0.05, boundary_clearance=0.05)

        np.testing.assert_allclose(kept, [[0.5, 0.0]])


class TestConformality:
    """Test the metric of the constructed maps on non-trivial domains."""

    def test_planar_blob_conformal(self, blob):
        """The planar map of a Fourier blob is conformal on a grid."""
        spec = blob.spec
        points = filter_grid(
            spec,
            polar_grid(spec, 4, 8, fraction=0.9),
            blob.pole,
            pole_exclusion=0.05,
            boundary_clearance=0.05,
        )
        residuals = [metric_report(image_map(blob), x).conformal_residual for x in points]

        assert len(points) >= 20
        assert np.mean(np.array(residuals) <= 1e-3) >= 0.95

    def test_harmonic_blob_weak_conformal(self, harmonic_blob):
        """The spatial map of a harmonic blob is weak-conformal on a grid."""
        spec = harmonic_blob.spec
        points = filter_grid(
            spec,
            spherical_grid(spec, 1, 3, 4, fraction=0.5),
            harmonic_blob.pole,
            pole_exclusion=0.05,
            boundary_clearance=0.05,
        )
        residuals = [
            metric_report(image_map(harmonic_blob), x).weak_conformal_residual for x in points
        ]

        assert len(points) == 12
        assert np.mean(np.array(residuals) <= 1e-2) >= 0.9

    @pytest.mark.parametrize("x", [[0.4, 0.2], [-0.3, -0.5], [0.1, 0.7]])
    def test_local_scale_planar(self, blob, x):
        """local_scale agrees with sqrt|det J| of the numeric Jacobian."""
        jac = numeric_jacobian(image_map(blob), x)

        assert map_point(blob, x).local_scale == pytest.approx(
            math.sqrt(abs(np.linalg.det(jac))), rel=0.05
        )

    def test_local_scale_spatial(self, ball):
        """local_scale agrees with |det J|^(1/3) in 3D."""
        x = [0.2, -0.3, 0.4]
        jac = numeric_jacobian(image_map(ball), x)

        assert map_point(ball, x).local_scale == pytest.approx(
            abs(np.linalg.det(jac)) ** (1 / 3), rel=0.05
        )


class TestRotationEquivariance:
    """Test that rotating the domain and pole rotates the map."""

    def test_quarter_turn(self, blob):
        """phi_B(R x) = R phi_A(x) for B the quarter turn of A."""
        rotate = np.array([[0.0, -1.0], [1.0, 0.0]])
        turned = solve(DomainSpec.fourier_curve(1.0, cos_coeffs=[0.0, -0.1]), rotate @ blob.pole)

        for x in ([0.4, 0.2], [-0.3, -0.5], [0.1, 0.7], [-0.6, 0.1]):
            x = np.array(x)
            expected = rotate @ map_point(blob, x).image
            np.testing.assert_allclose(map_point(turned, rotate @ x).image, expected, atol=1e-8)
