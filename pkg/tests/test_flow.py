import numpy as np
import pytest

import ridgeband as rb
from ridgeband.eigenfield import DegeneracyError
from ridgeband.flow import FlowSettings, trace


class ConstantField(rb.DensityField):
    """Synthetic field whose eigenvector map output is the fixed vector (-1, 0)."""

    def d2(self, x):
        return np.array([-0.25, 0.0, 0.0])  # g_map -> (-1, 0)

    def grad(self, x):
        return np.array([0.0, 0.0])

    def grad_d2(self, x):
        return np.zeros((3, 2))


def test_constant_field_is_exact():
    fs = FlowSettings(step=0.1, t_max=1.0, bounds=(-5, 5, -5, 5), direction="forward")
    traj = trace(ConstantField(), np.array([0.2, -0.3]), fs)
    assert traj.terminal_forward == "horizon"
    expected = np.array([0.2, -0.3]) + np.outer(traj.times, [-1.0, 0.0])
    np.testing.assert_allclose(traj.points, expected, atol=1e-14)


def test_time_grid_structure():
    fs = FlowSettings(step=0.1, t_max=0.55, bounds=(-5, 5, -5, 5))
    traj = trace(ConstantField(), np.zeros(2), fs)
    diffs = np.diff(traj.times)
    # uniform interior steps plus one partial step at each horizon end
    assert np.all(diffs > 0)
    np.testing.assert_allclose(diffs[1:-1], 0.1, atol=1e-12)
    assert diffs[0] == pytest.approx(0.05, abs=1e-12)
    assert diffs[-1] == pytest.approx(0.05, abs=1e-12)
    assert traj.times[-1] == pytest.approx(0.55, abs=1e-12)
    np.testing.assert_allclose(traj.point_at_zero(), np.zeros(2))


def test_backward_reverses_curve():
    fs = FlowSettings(step=0.1, t_max=1.0, bounds=(-5, 5, -5, 5), direction="backward")
    traj = trace(ConstantField(), np.zeros(2), fs)
    assert traj.times[0] == pytest.approx(-1.0)
    np.testing.assert_allclose(traj.points[0], [1.0, 0.0], atol=1e-14)


def test_left_bounds_termination():
    fs = FlowSettings(step=0.1, t_max=10.0, bounds=(-0.45, 0.5, -1, 1), direction="forward")
    traj = trace(ConstantField(), np.zeros(2), fs)
    assert traj.terminal_forward == "left_bounds"
    assert traj.terminal_reason == "left_bounds"
    # the final retained point is still inside the rectangle
    assert traj.points[-1][0] >= -0.45


def test_degenerate_termination(gauss21):
    # guard threshold set between the start's eigengap and the gap far up the
    # curve, where the density (hence the gap) has decayed
    x0 = np.array([0.5, 0.3])
    d2 = gauss21.d2(x0)
    gap0 = abs(d2[0] - d2[2])
    guard = rb.DegeneracyGuard(gap0 / 2)
    fs = FlowSettings(
        step=5e-3, t_max=30.0, bounds=(-20, 20, -20, 20), direction="both"
    )
    traj = trace(gauss21, x0, fs, guard)
    assert "degenerate" in {traj.terminal_forward, traj.terminal_backward}
    assert traj.terminal_reason == "degenerate"
    # the recorded final point is the one that failed the guard
    ends = [traj.points[0], traj.points[-1]]
    assert any(not guard.accepts_vec(gauss21.d2(p)) for p in ends)


def test_terminal_reason_degenerate_iff_final_point_fails_guard(ring):
    guard = rb.DegeneracyGuard(1e-8)
    fs = FlowSettings(
        step=1e-3, t_max=0.4, bounds=(-2, 2, -2, 2), direction="forward", normalize_v=True
    )
    # backward-from-ridge start: one branch runs into the eigen-swap circle
    for ang in (0.2, 1.1, 2.5):
        x0 = 1.06 * np.array([np.cos(ang), np.sin(ang)])
        traj = trace(ring, x0, fs, guard)
        fails = not guard.accepts_vec(ring.d2(traj.points[-1]))
        assert (traj.terminal_forward == "degenerate") == fails


def test_start_validation(gauss21):
    fs = FlowSettings(step=0.01, t_max=1.0, bounds=(-1, 1, -1, 1))
    with pytest.raises(ValueError):
        trace(gauss21, np.array([3.0, 0.0]), fs)
    iso = rb.ElongatedGaussian(1.0, 0.9999999999)
    with pytest.raises(DegeneracyError):
        trace(iso, np.zeros(2), fs, rb.DegeneracyGuard(1e-8))


def test_settings_validation():
    with pytest.raises(ValueError):
        FlowSettings(step=0.0, t_max=1.0, bounds=(-1, 1, -1, 1))
    with pytest.raises(ValueError):
        FlowSettings(step=0.1, t_max=0.05, bounds=(-1, 1, -1, 1))
    with pytest.raises(ValueError):
        FlowSettings(step=0.1, t_max=1.0, bounds=(1, -1, -1, 1))
    with pytest.raises(ValueError):
        FlowSettings(step=0.1, t_max=1.0, bounds=(-1, 1, -1, 1), direction="sideways")


class TestAccuracy:
    def test_step_halving_order_four(self, gauss21):
        x0 = np.array([0.5, 0.3])
        t_end = 1.0

        def endpoint(step):
            fs = FlowSettings(step=step, t_max=t_end, bounds=(-6, 6, -6, 6), direction="forward")
            return trace(gauss21, x0, fs).points[-1]

        ref = endpoint(1.25e-3)
        e1 = np.linalg.norm(endpoint(2e-2) - ref)
        e2 = np.linalg.norm(endpoint(1e-2) - ref)
        assert 8.0 <= e1 / e2 <= 32.0

    def test_forward_backward_reversal(self, gauss21, ring):
        cases = [
            (gauss21, np.array([0.5, 0.3]), 1.0, False),
            (ring, np.array([1.03, 0.0]), 0.02, True),
        ]
        for field, x0, t_end, norm in cases:
            fs_f = FlowSettings(
                step=1e-3, t_max=t_end, bounds=(-6, 6, -6, 6), direction="forward",
                normalize_v=norm,
            )
            end = trace(field, x0, fs_f).points[-1]
            fs_b = FlowSettings(
                step=1e-3, t_max=t_end, bounds=(-6, 6, -6, 6), direction="backward",
                normalize_v=norm,
            )
            back = trace(field, end, fs_b).points[0]
            assert np.linalg.norm(back - x0) < 1e-8

    def test_same_curve_trajectories_overlap(self, gauss21):
        # a start taken from a traced curve retraces the same point set
        fs = FlowSettings(step=1e-3, t_max=1.0, bounds=(-6, 6, -6, 6), direction="forward")
        t1 = trace(gauss21, np.array([0.5, 0.3]), fs)
        mid_idx = len(t1.points) // 2
        x1 = t1.points[mid_idx]
        fs2 = FlowSettings(
            step=1e-3,
            t_max=1.0 - float(t1.times[mid_idx]),
            bounds=(-6, 6, -6, 6),
            direction="forward",
        )
        t2 = trace(gauss21, x1, fs2)
        shared = min(len(t1.points) - mid_idx, len(t2.points))
        d = rb.hausdorff(t1.points[mid_idx : mid_idx + shared], t2.points[:shared])
        assert d < 1e-6
