import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import ridgeband as rb
from ridgeband.eigenfield import (
    DegeneracyError,
    DegeneracyGuard,
    frame_at,
    g_map,
    grad_g,
    grad_v,
    j_map,
    lambda1_map,
)

finite = st.floats(min_value=-50, max_value=50, allow_nan=False)


class TestMaps:
    def test_diagonal_case(self):
        np.testing.assert_allclose(g_map(-2.0, 0.0, -1.0), [-4.0, 0.0])
        assert j_map(-2.0, 0.0, -1.0) == -2.0

    def test_pure_cross_case(self):
        np.testing.assert_allclose(g_map(0.0, 1.0, 0.0), [-2.0, 2.0])
        assert j_map(0.0, 1.0, 0.0) == -1.0

    def test_random_points_give_eigenpairs(self, rng):
        kept = 0
        guard = DegeneracyGuard(0.01)
        while kept < 500:
            u, v, w = rng.uniform(-3, 3, size=3)
            if not guard.accepts(u, v, w):
                continue
            kept += 1
            m = np.array([[u, v], [v, w]])
            vec = g_map(u, v, w)
            lam = j_map(u, v, w)
            assert np.linalg.norm(m @ vec - lam * vec) <= 1e-10 * np.linalg.norm(
                m, "fro"
            ) * np.linalg.norm(vec)

    @given(u=finite, v=finite, w=finite)
    @settings(max_examples=300, deadline=None)
    def test_j_map_is_smaller_root(self, u, v, w):
        lam2 = j_map(u, v, w)
        lam1 = lambda1_map(u, v, w)
        exact = np.linalg.eigvalsh(np.array([[u, v], [v, w]]))
        scale = max(1.0, abs(u), abs(v), abs(w))
        assert abs(lam2 - exact[0]) < 1e-12 * scale
        assert abs(lam1 - exact[1]) < 1e-12 * scale
        assert lam2 <= lam1

    def test_vectorized(self, rng):
        uvw = rng.uniform(-2, 2, size=(10, 3))
        stacked = g_map(uvw[:, 0], uvw[:, 1], uvw[:, 2])
        for k in range(10):
            np.testing.assert_allclose(stacked[k], g_map(*uvw[k]))


class TestGradG:
    def test_matches_finite_differences(self, rng):
        guard = DegeneracyGuard(0.05)
        step = 1e-6
        kept = 0
        while kept < 200:
            u, v, w = rng.uniform(-2, 2, size=3)
            if not guard.accepts(u, v, w):
                continue
            # keep clear margin so FD perturbations stay in the smooth region
            if abs(u - w) < 0.2 and abs(v) < 0.2:
                continue
            kept += 1
            jac = grad_g(u, v, w, guard)
            fd = np.empty((2, 3))
            for ax, (du, dv, dw) in enumerate(np.eye(3) * step):
                fd[:, ax] = (g_map(u + du, v + dv, w + dw) - g_map(u - du, v - dv, w - dw)) / (
                    2 * step
                )
            assert np.max(np.abs(jac - fd)) < 1e-6

    def test_degenerate_input_raises(self):
        with pytest.raises(DegeneracyError):
            grad_g(1.0, 0.0, 1.0, DegeneracyGuard(1e-8))
        with pytest.raises(DegeneracyError):
            grad_g(1.0, 1e-9, 1.0 + 1e-9, DegeneracyGuard(1e-8))

    def test_map_is_lipschitz_near_points(self, rng):
        # envelope for the square-root part: |du| + |dw| + 2|dv|
        guard = DegeneracyGuard(0.05)
        kept = 0
        while kept < 100:
            p = rng.uniform(-2, 2, size=3)
            if not guard.accepts(*p) or abs(p[0] - p[2]) > 3.0:
                continue
            kept += 1
            q = p + rng.uniform(-0.01, 0.01, size=3)
            dg = np.linalg.norm(g_map(*p) - g_map(*q), ord=np.inf)
            du, dv, dw = np.abs(p - q)
            # linear part of the map contributes at most (2du+2dv+2dw, du+4dv+dw)
            envelope = (2 * du + 2 * dv + 2 * dw) + 2 * (du + dw + 2 * dv)
            assert dg <= envelope + 1e-12


class TestFrame:
    def test_gaussian_minor_axis(self, gauss21):
        fr = frame_at(gauss21, np.array([0.5, 0.0]))
        v_unit = fr.v / np.linalg.norm(fr.v)
        np.testing.assert_allclose(np.abs(v_unit), [0.0, 1.0], atol=1e-14)
        assert fr.lambda2 == pytest.approx(-gauss21.f([0.5, 0.0]), rel=1e-12)
        assert fr.lambda2 <= fr.lambda1
        assert fr.v @ fr.v_perp == 0.0

    def test_ring_radial(self, ring):
        fr = frame_at(ring, np.array([1.0, 0.0]))
        v_unit = fr.v / np.linalg.norm(fr.v)
        np.testing.assert_allclose(np.abs(v_unit), [1.0, 0.0], atol=1e-12)
        # second eigenvalue is the radial profile curvature at the ridge
        assert fr.lambda2 == pytest.approx(-ring.c / ring.s**2, rel=1e-10)

    def test_isotropic_mode_is_degenerate(self):
        class Isotropic(rb.DensityField):
            def d2(self, x):
                return np.array([-1.0, 0.0, -1.0])

        with pytest.raises(DegeneracyError) as err:
            frame_at(Isotropic(), np.zeros(2))
        assert err.value.d2 is not None

    def test_eigen_residual_invariant(self, gauss21, ring, rng):
        guard = DegeneracyGuard(0.01)
        for field, box in ((gauss21, 3.0), (ring, 1.4)):
            pts = rng.uniform(-box, box, size=(40_000, 2))
            d2 = field.d2(pts)
            pts = pts[guard.accepts_vec(d2)][:10_000]
            assert len(pts) >= 1000
            for p in pts:
                fr = frame_at(field, p, guard)
                u, v, w = field.d2(p)
                hess_norm = np.sqrt(u * u + 2 * v * v + w * w)
                assert fr.eigen_residual <= 1e-9 * hess_norm * np.linalg.norm(fr.v)

    def test_norm_bounded_on_guarded_samples(self, gauss21, rng):
        guard = DegeneracyGuard(0.01)
        min_ratio = np.inf
        kept = 0
        while kept < 2000:
            p = rng.uniform(-3, 3, size=2)
            d2 = gauss21.d2(p)
            if not guard.accepts_vec(d2):
                continue
            kept += 1
            gap = np.sqrt((d2[2] - d2[0]) ** 2 + 4 * d2[1] ** 2)
            fr = frame_at(gauss21, p, guard)
            min_ratio = min(min_ratio, np.linalg.norm(fr.v) / gap)
        assert min_ratio > 0.0

    def test_sign_continuity_along_trajectory(self, gauss21):
        settings_ = rb.FlowSettings(step=1e-3, t_max=2.0, bounds=(-6, 6, -6, 6))
        traj = rb.trace(gauss21, np.array([0.5, 0.3]), settings_)
        vs = np.array([frame_at(gauss21, p).v for p in traj.points])
        dots = np.sum(vs[1:] * vs[:-1], axis=1)
        assert np.all(dots > 0.0)


class TestGradV:
    def test_matches_finite_differences(self, gauss21, ring, rng):
        guard = DegeneracyGuard(1e-8)
        step = 1e-5
        for field, box in ((gauss21, 2.0), (ring, 0.12)):
            kept = 0
            while kept < 25:
                p = rng.uniform(-box, box, size=2)
                if field is ring:
                    ang = rng.uniform(0, 2 * np.pi)
                    p = (1.0 + p[0]) * np.array([np.cos(ang), np.sin(ang)])
                if not guard.accepts_vec(field.d2(p)):
                    continue
                kept += 1
                jac = grad_v(field, p, guard)
                fd = np.empty((2, 2))
                for ax in range(2):
                    e = np.zeros(2)
                    e[ax] = step
                    fd[:, ax] = (frame_at(field, p + e).v - frame_at(field, p - e).v) / (
                        2 * step
                    )
                assert np.max(np.abs(jac - fd)) < 1e-4

    def test_linear_hessian_field(self):
        # d2 affine in x: the chain rule uses a constant inner Jacobian
        coeff = np.array([[0.3, -0.1], [0.05, 0.2], [-0.25, 0.15]])
        base = np.array([-2.0, 0.3, -1.0])

        class LinearHessian(rb.DensityField):
            def d2(self, x):
                return base + coeff @ np.asarray(x, dtype=float)

            def grad_d2(self, x):
                return coeff

        field = LinearHessian()
        x = np.array([0.4, -0.7])
        d2 = field.d2(x)
        expected = grad_g(d2[0], d2[1], d2[2]) @ coeff
        np.testing.assert_allclose(grad_v(field, x), expected, rtol=1e-12)

    def test_on_axis_term_is_finite(self, gauss21):
        x = np.array([0.8, 0.0])
        dv = grad_v(gauss21, x)
        grad = gauss21.grad(x)
        fr = frame_at(gauss21, x)
        val = grad @ dv @ fr.v
        assert np.isfinite(val)
