import numpy as np
import pytest

import ridgeband as rb
from ridgeband.flow import FlowSettings, trace
from ridgeband.ridge import (
    a_of_t,
    close_polyline,
    estimate_filament,
    find_theta,
    hausdorff,
)


class LinearDensityStub(rb.DensityField):
    """Constant gradient and constant eigenvector: a(t) never crosses zero."""

    def f(self, x):
        return 1.0

    def grad(self, x):
        return np.array([0.3, 0.1])

    def d2(self, x):
        return np.array([-2.0, 0.0, -1.0])

    def grad_d2(self, x):
        return np.zeros((3, 2))


class TestAOfT:
    def test_gaussian_axis_zero(self, gauss21):
        fs = FlowSettings(step=1e-2, t_max=0.1, bounds=(-6, 6, -6, 6))
        traj = trace(gauss21, np.array([0.7, 0.0]), fs)
        vals = a_of_t(gauss21, traj)
        zero_row = vals[np.argmin(np.abs(vals[:, 0]))]
        assert abs(zero_row[1]) < 1e-15

    def test_ring_ridge_zero(self, ring):
        fs = FlowSettings(step=1e-3, t_max=0.01, bounds=(-2, 2, -2, 2), normalize_v=True)
        traj = trace(ring, np.array([1.0, 0.0]), fs)
        vals = a_of_t(ring, traj)
        assert abs(vals[np.argmin(np.abs(vals[:, 0]))][1]) < 1e-12

    def test_constant_stub(self):
        stub = LinearDensityStub()
        fs = FlowSettings(step=0.1, t_max=1.0, bounds=(-9, 9, -9, 9))
        traj = trace(stub, np.zeros(2), fs)
        vals = a_of_t(stub, traj)
        expected = float(stub.grad(0) @ rb.g_map(-2.0, 0.0, -1.0))
        np.testing.assert_allclose(vals[:, 1], expected, rtol=1e-12)

    def test_empty_trajectory_rejected(self, gauss21):
        from ridgeband.flow import Trajectory

        with pytest.raises(ValueError):
            a_of_t(gauss21, Trajectory(times=np.array([]), points=np.empty((0, 2))))


class TestFindTheta:
    def test_start_on_ring_ridge(self, ring):
        fs = FlowSettings(step=1e-3, t_max=0.1, bounds=(-2, 2, -2, 2), normalize_v=True)
        hit = find_theta(ring, np.array([1.0, 0.0]), fs)
        assert hit.found and hit.theta == 0.0
        assert hit.lambda2 < 0 and hit.a_prime != 0

    def test_gaussian_hit_on_axis(self, gauss21):
        fs = FlowSettings(step=1e-3, t_max=6.0, bounds=(-6, 6, -6, 6))
        hit = find_theta(gauss21, np.array([0.3, 0.4]), fs)
        assert hit.found
        assert abs(hit.point[1]) < 1e-6
        assert abs(hit.point[0]) < 2.0
        assert hit.lambda2 < 0

    def test_no_ridge_stub_returns_fallback(self):
        fs = FlowSettings(step=0.1, t_max=1.0, bounds=(-9, 9, -9, 9))
        hit = find_theta(LinearDensityStub(), np.zeros(2), fs)
        assert not hit.found
        assert hit.theta == 0.0
        np.testing.assert_allclose(hit.point, np.zeros(2))

    def test_a_star_truncates_search(self, gauss21):
        fs = FlowSettings(step=1e-3, t_max=6.0, bounds=(-6, 6, -6, 6))
        full = find_theta(gauss21, np.array([0.3, 0.4]), fs)
        capped = find_theta(gauss21, np.array([0.3, 0.4]), fs, a_star=abs(full.theta) / 2)
        assert not capped.found

    def test_a_star_beyond_horizon_rejected(self, gauss21):
        fs = FlowSettings(step=1e-3, t_max=1.0, bounds=(-6, 6, -6, 6))
        with pytest.raises(ValueError):
            find_theta(gauss21, np.array([0.3, 0.4]), fs, a_star=2.0)

    def test_argmin_selection_from_scan(self, gauss21):
        # no qualifying sign change at any sampled |t| below the hit
        fs = FlowSettings(step=1e-3, t_max=6.0, bounds=(-6, 6, -6, 6))
        x0 = np.array([0.3, 0.4])
        hit = find_theta(gauss21, x0, fs)
        traj = trace(gauss21, x0, fs)
        vals = a_of_t(gauss21, traj)
        inner = vals[np.abs(vals[:, 0]) < abs(hit.theta) - fs.step]
        order = np.argsort(np.abs(inner[:, 0]))
        signs = np.sign(inner[order, 1])
        assert np.all(signs == signs[0])

    def test_swap_surface_root_rejected(self, ring):
        # the outward branch crosses the eigen-swap circle where the
        # eigenvector collapses; a(t) vanishes there, but that root violates
        # the guard and must never be returned as a hit.  (Points past the
        # circle, where the eigenvector turns tangential, do satisfy the
        # ridge-point conditions for a radial density and are legitimate.)
        fs = FlowSettings(step=1e-3, t_max=0.045, bounds=(-2, 2, -2, 2), normalize_v=True)
        guard = rb.DegeneracyGuard()
        hit = find_theta(ring, np.array([1.06, 0.0]), fs, guard)
        if hit.found:
            assert guard.accepts_vec(ring.d2(hit.point))
            assert hit.lambda2 < 0 and hit.a_prime != 0


class TestEstimateFilament:
    def test_ring_loop(self, ring):
        starts = 1.03 * np.stack(
            [np.cos(2 * np.pi * np.arange(36) / 36), np.sin(2 * np.pi * np.arange(36) / 36)],
            axis=-1,
        )
        fs = FlowSettings(step=1e-3, t_max=0.3, bounds=(-2, 2, -2, 2), normalize_v=True)
        est = estimate_filament(ring, starts, fs)
        assert len(est.failures) == 0
        radii = np.hypot(est.polyline[:, 0], est.polyline[:, 1])
        assert np.all(np.abs(radii - 1.0) < 1e-4)
        assert len(est.polyline) == 36
        from scipy.spatial.distance import pdist

        assert pdist(est.polyline).min() >= 1e-3
        seg = np.linalg.norm(np.diff(est.polyline, axis=0), axis=1)
        closing = np.linalg.norm(est.polyline[0] - est.polyline[-1])
        assert closing < 1.5 * seg.max()

    def test_same_curve_starts_merge(self, gauss21):
        fs = FlowSettings(step=1e-3, t_max=6.0, bounds=(-6, 6, -6, 6))
        x0 = np.array([0.3, 0.4])
        traj = trace(gauss21, x0, fs)
        x1 = traj.points[traj.zero_index + 150]
        est = estimate_filament(gauss21, np.array([x0, x1]), fs)
        h0, h1 = est.hits
        assert np.linalg.norm(h0.point - h1.point) < 1e-6
        assert len(est.polyline) == 1

    def test_all_fail_is_not_fatal(self):
        stub = LinearDensityStub()
        fs = FlowSettings(step=0.1, t_max=1.0, bounds=(-9, 9, -9, 9))
        est = estimate_filament(stub, np.array([[0.0, 0.0], [1.0, 1.0]]), fs)
        assert len(est.polyline) == 0
        assert all(h is not None and not h.found for h in est.hits)

    def test_start_errors_recorded(self, gauss21):
        fs = FlowSettings(step=1e-3, t_max=6.0, bounds=(-1, 1, -1, 1))
        est = estimate_filament(gauss21, np.array([[0.3, 0.4], [5.0, 5.0]]), fs)
        assert len(est.failures) == 1
        assert est.failures[0][0] == 1
        assert est.hits[1] is None

    def test_empty_starts_rejected(self, gauss21):
        fs = FlowSettings(step=1e-3, t_max=1.0, bounds=(-6, 6, -6, 6))
        with pytest.raises(ValueError):
            estimate_filament(gauss21, np.empty((0, 2)), fs)


class TestHausdorff:
    def test_identical(self):
        poly = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 1.0]])
        assert hausdorff(poly, poly) == 0.0

    def test_parallel_shift(self):
        a = np.array([[0.0, 0.0], [1.0, 0.0]])
        b = a + np.array([0.0, 0.25])
        assert hausdorff(a, b) == pytest.approx(0.25, abs=1e-12)

    def test_concentric_circles(self):
        t = 2 * np.pi * np.arange(360) / 360
        c1 = np.stack([np.cos(t), np.sin(t)], axis=-1)
        c2 = 1.1 * c1
        d = hausdorff(close_polyline(c1), close_polyline(c2))
        assert d == pytest.approx(0.1, abs=2e-3)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            hausdorff(np.empty((0, 2)), np.array([[0.0, 0.0]]))

    def test_close_polyline(self):
        tri = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        closed = close_polyline(tri)
        assert len(closed) == 4
        np.testing.assert_array_equal(closed[0], closed[-1])
        assert len(close_polyline(closed)) == 4


class TestKdeRecovery:
    def test_hausdorff_error_shrinks_with_n(self, ring):
        # three sample sizes, a few replicates; the acceptance suite runs the
        # full 20-replicate version
        true_poly = close_polyline(ring.circle_polyline(720))
        starts = 1.03 * np.stack(
            [np.cos(2 * np.pi * np.arange(36) / 36), np.sin(2 * np.pi * np.arange(36) / 36)],
            axis=-1,
        )
        meds = []
        for n in (1000, 16000):
            errs = []
            for rep in range(5):
                cloud = rb.sample(ring, n, seed=7, stream=rep)
                h = rb.default_bandwidth(n, 1.0)
                kde = rb.build_kde(cloud, h)
                fs = FlowSettings(
                    step=h / 4, t_max=0.5, bounds=(-2, 2, -2, 2), normalize_v=True
                )
                est = estimate_filament(kde, starts, fs)
                errs.append(hausdorff(close_polyline(est.polyline), true_poly))
            meds.append(np.median(errs))
        assert meds[1] < meds[0]
