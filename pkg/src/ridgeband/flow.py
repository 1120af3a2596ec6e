"""Integral curves of the second-eigenvector field, traced with fixed-step RK4.

The curve solves dX/dt = V(X) with V the unnormalized eigenvector field; the
backward branch integrates -V, which traverses the same curve with reversed
clock.  A trace stops at the horizon, on leaving the working rectangle, or
when the Hessian eigengap at a newly accepted point falls below the guard.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .density import DensityField
from .eigenfield import DegeneracyError, DegeneracyGuard, g_map

__all__ = ["FlowSettings", "Trajectory", "trace", "rk4_step"]

_NORM_FLOOR = 1e-300


@dataclass(frozen=True)
class FlowSettings:
    """Trace controls: step size, horizon, direction, working rectangle.

    bounds is (xmin, xmax, ymin, ymax).  With normalize_v the velocity is
    V/|V|, which changes the time parametrization but not the curve; leave it
    off wherever the time variable itself matters.
    """

    step: float
    t_max: float
    bounds: tuple[float, float, float, float]
    direction: str = "both"
    normalize_v: bool = False

    def __post_init__(self):
        if self.step <= 0:
            raise ValueError("step must be positive")
        if self.t_max < self.step:
            raise ValueError("t_max must be at least step")
        xmin, xmax, ymin, ymax = self.bounds
        if not (xmax > xmin and ymax > ymin):
            raise ValueError("bounds rectangle is empty")
        if self.direction not in ("forward", "backward", "both"):
            raise ValueError(f"unknown direction {self.direction!r}")


@dataclass
class Trajectory:
    """Sampled integral curve; times increase and may span negative to positive."""

    times: np.ndarray
    points: np.ndarray
    terminal_forward: str | None = None
    terminal_backward: str | None = None
    zero_index: int = 0

    @property
    def terminal_reason(self) -> str:
        reasons = [r for r in (self.terminal_forward, self.terminal_backward) if r]
        if "degenerate" in reasons:
            return "degenerate"
        if "left_bounds" in reasons:
            return "left_bounds"
        return "horizon"

    def point_at_zero(self) -> np.ndarray:
        return self.points[self.zero_index]


def _in_bounds(x, bounds) -> bool:
    xmin, xmax, ymin, ymax = bounds
    return xmin <= x[0] <= xmax and ymin <= x[1] <= ymax


def _velocity(field: DensityField, x, sign: float, normalize: bool) -> np.ndarray:
    d2 = field.d2(x)
    v = g_map(d2[0], d2[1], d2[2])
    if normalize:
        v = v / max(float(np.linalg.norm(v)), _NORM_FLOOR)
    return sign * v


def rk4_step(field: DensityField, x, dt: float, sign: float = 1.0, normalize: bool = False):
    """One classical RK4 step of size dt along sign * V."""
    x = np.asarray(x, dtype=float)
    k1 = _velocity(field, x, sign, normalize)
    k2 = _velocity(field, x + 0.5 * dt * k1, sign, normalize)
    k3 = _velocity(field, x + 0.5 * dt * k2, sign, normalize)
    k4 = _velocity(field, x + dt * k3, sign, normalize)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _trace_branch(field, x0, settings, guard, sign):
    """March from x0 in one time direction; returns (times>0 list, points, reason)."""
    times, points = [], []
    n_full = int(np.floor(settings.t_max / settings.step + 1e-12))
    remainder = settings.t_max - n_full * settings.step
    x = np.asarray(x0, dtype=float)
    t = 0.0
    reason = "horizon"
    steps = [settings.step] * n_full
    if remainder > 1e-12 * settings.step:
        steps.append(remainder)
    for dt in steps:
        x_new = rk4_step(field, x, dt, sign, settings.normalize_v)
        if not _in_bounds(x_new, settings.bounds):
            reason = "left_bounds"
            break
        t += dt
        times.append(t)
        points.append(x_new)
        if not guard.accepts_vec(field.d2(x_new)):
            reason = "degenerate"
            break
        x = x_new
    return times, points, reason


def trace(
    field: DensityField,
    x0,
    settings: FlowSettings,
    guard: DegeneracyGuard | None = None,
) -> Trajectory:
    """Trace the integral curve through x0 per the settings.

    The starting point must lie inside the bounds with a resolvable eigengap;
    termination mid-trace is recorded, not raised.
    """
    guard = guard or DegeneracyGuard()
    x0 = np.asarray(x0, dtype=float)
    if not _in_bounds(x0, settings.bounds):
        raise ValueError(f"start {x0.tolist()} outside bounds {settings.bounds}")
    d2 = field.d2(x0)
    if not guard.accepts_vec(d2):
        raise DegeneracyError("degenerate Hessian at trace start", x=x0, d2=d2)

    fwd_t, fwd_p, fwd_r = ([], [], None)
    bwd_t, bwd_p, bwd_r = ([], [], None)
    if settings.direction in ("forward", "both"):
        fwd_t, fwd_p, fwd_r = _trace_branch(field, x0, settings, guard, +1.0)
    if settings.direction in ("backward", "both"):
        bwd_t, bwd_p, bwd_r = _trace_branch(field, x0, settings, guard, -1.0)

    times = [-t for t in reversed(bwd_t)] + [0.0] + fwd_t
    points = list(reversed(bwd_p)) + [x0] + fwd_p
    return Trajectory(
        times=np.array(times),
        points=np.array(points),
        terminal_forward=fwd_r,
        terminal_backward=bwd_r,
        zero_index=len(bwd_t),
    )
