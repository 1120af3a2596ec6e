"""Linearization diagnostics for the ridge estimator.

These quantities tie the crossing-time error to centered derivative noise of
the density estimate, decompose the filament deviation into components along
and across the ridge, and expose the smoothing-bias vector; the Monte Carlo
harness and the tests consume them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bands import a_tilde_prime
from .density import DensityField, KdeField, expected_d2, expected_grad
from .eigenfield import DegeneracyGuard, frame_at, grad_g
from .flow import FlowSettings, trace
from .kernel import Kernel
from .ridge import FilamentHit, find_theta

__all__ = [
    "DeviationReport",
    "phi1",
    "phi2",
    "gamma_matrix",
    "bias_vector",
    "decompose",
]


@dataclass(frozen=True)
class DeviationReport:
    """Filament-point deviation split along the eigenframe at the true hit."""

    full_dev: np.ndarray
    normal_comp: float
    tangential_comp: float
    theta_diff: float
    linearization_residual: float


def phi1(
    model: DensityField,
    kde: KdeField,
    kernel: Kernel,
    x,
    guard: DegeneracyGuard | None = None,
) -> float:
    """Leading linear term of the crossing-time error at x.

    Population gradient, eigenvector Jacobian and crossing derivative come
    from the analytic model; only the second-derivative vector is estimated,
    centered at its exact smoothing mean (computed by quadrature).
    """
    guard = guard or DegeneracyGuard()
    x = np.asarray(x, dtype=float)
    d2 = model.d2(x)
    guard.check(d2, x=x)
    grad = model.grad(x)
    gj = grad_g(d2[0], d2[1], d2[2], guard)
    a_vec = gj.T @ grad
    if not np.any(a_vec):
        return 0.0
    centered = kde.d2(x) - expected_d2(model, kernel, x, kde.h)
    atp = a_tilde_prime(model, x, guard)
    return float(a_vec @ centered / atp)


def phi2(
    model: DensityField,
    kde: DensityField,
    kernel: Kernel,
    x0,
    flow: FlowSettings,
    guard: DegeneracyGuard | None = None,
) -> float:
    """Second-order crossing-time approximation for flat-gradient ridge points.

    The estimated curve is traced with the plug-in field out to the true
    crossing time; the smoothing-mean gradient term is evaluated by
    quadrature at that estimated point.  The plug-in field must expose a
    bandwidth attribute h.
    """
    guard = guard or DegeneracyGuard()
    h = getattr(kde, "h", None)
    if h is None:
        raise ValueError("plug-in field must expose a bandwidth attribute h")
    true_hit = find_theta(model, x0, flow, guard)
    if not true_hit.found:
        raise ValueError(f"no ridge crossing from start {np.asarray(x0).tolist()}")
    x = true_hit.point
    theta = true_hit.theta
    if theta == 0.0:
        x_hat = np.asarray(x0, dtype=float)
    else:
        direction = "forward" if theta > 0 else "backward"
        settings = FlowSettings(
            step=min(flow.step, abs(theta)),
            t_max=abs(theta),
            bounds=flow.bounds,
            direction=direction,
            normalize_v=flow.normalize_v,
        )
        traj = trace(kde, x0, settings, guard)
        idx = -1 if theta > 0 else 0
        x_hat = traj.points[idx]
    d2 = model.d2(x)
    hess = np.array([[d2[0], d2[1]], [d2[1], d2[2]]])
    frame = frame_at(model, x, guard)
    term1 = float(frame.v @ hess @ (x_hat - x))
    mean_grad_err = expected_grad(model, kernel, x_hat, h) - model.grad(x_hat)
    term2 = float(mean_grad_err @ frame.v)
    return (term1 + term2) / a_tilde_prime(model, x, guard)


def gamma_matrix(field: DensityField, x, guard: DegeneracyGuard | None = None) -> np.ndarray:
    """Deviation-propagation matrix (atp^-1 V V^T Hessian - I) at x."""
    guard = guard or DegeneracyGuard()
    x = np.asarray(x, dtype=float)
    atp = a_tilde_prime(field, x, guard)
    if atp == 0.0:
        raise ValueError(f"crossing derivative vanishes at {x.tolist()}")
    d2 = field.d2(x)
    hess = np.array([[d2[0], d2[1]], [d2[1], d2[2]]])
    frame = frame_at(field, x, guard)
    return np.outer(frame.v, frame.v) @ hess / atp - np.eye(2)


def bias_vector(field: DensityField, x, mu2: float) -> np.ndarray:
    """Leading smoothing-bias direction, half mu2 times summed third partials."""
    gd2 = field.grad_d2(np.asarray(x, dtype=float))
    f30, f21 = gd2[0, 0], gd2[0, 1]
    f12, f03 = gd2[2, 0], gd2[2, 1]
    return 0.5 * mu2 * np.array([f30 + f12, f21 + f03])


def decompose(
    model: DensityField,
    true_hit: FilamentHit,
    est_hit: FilamentHit,
    guard: DegeneracyGuard | None = None,
) -> DeviationReport:
    """Split the estimated-vs-true hit deviation in the frame at the true hit.

    Components project on the unit second eigenvector (across the ridge) and
    its rotation (along the ridge); the residual measures how far the
    deviation is from the one-dimensional model V * (theta difference), with
    the unnormalized eigenvector.
    """
    if not (true_hit.found and est_hit.found):
        raise ValueError("both hits must be found to decompose")
    guard = guard or DegeneracyGuard()
    frame = frame_at(model, true_hit.point, guard)
    dev = est_hit.point - true_hit.point
    v_unit = frame.v / np.linalg.norm(frame.v)
    vp_unit = frame.v_perp / np.linalg.norm(frame.v_perp)
    theta_diff = est_hit.theta - true_hit.theta
    residual = float(np.linalg.norm(dev - frame.v * theta_diff))
    return DeviationReport(
        full_dev=dev,
        normal_comp=float(dev @ v_unit),
        tangential_comp=float(dev @ vp_unit),
        theta_diff=float(theta_diff),
        linearization_residual=residual,
    )
