"""Second-eigenvector field of the density Hessian.

The Hessian at a point is encoded as (u, v, w) = (f20, f11, f02).  g_map
returns a specific smooth unnormalized eigenvector for the smaller
eigenvalue, j_map that eigenvalue; both are global closed forms, smooth
wherever the two eigenvalues stay separated.  The degeneracy guard brackets
the region where the eigengap is resolvable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .density import DensityField

__all__ = [
    "DegeneracyError",
    "DegeneracyGuard",
    "EigenFrame",
    "g_map",
    "j_map",
    "lambda1_map",
    "grad_g",
    "frame_at",
    "grad_v",
]


class DegeneracyError(ValueError):
    """Raised when the Hessian eigengap is below the guard threshold."""

    def __init__(self, message, x=None, d2=None):
        super().__init__(message)
        self.x = None if x is None else np.asarray(x, dtype=float)
        self.d2 = None if d2 is None else np.asarray(d2, dtype=float)


@dataclass(frozen=True)
class DegeneracyGuard:
    """Accepts (u, v, w) iff |u - w| > delta or |v| > delta."""

    delta: float = 1e-8

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("delta must be positive")

    def accepts(self, u, v, w) -> bool:
        return bool(np.abs(u - w) > self.delta) or bool(np.abs(v) > self.delta)

    def accepts_vec(self, d2: np.ndarray) -> np.ndarray:
        d2 = np.asarray(d2, dtype=float)
        return (np.abs(d2[..., 0] - d2[..., 2]) > self.delta) | (np.abs(d2[..., 1]) > self.delta)

    def check(self, d2, x=None) -> None:
        d2 = np.asarray(d2, dtype=float)
        if not self.accepts(d2[0], d2[1], d2[2]):
            raise DegeneracyError(
                f"Hessian eigengap below guard delta={self.delta:g} at d2={d2.tolist()}",
                x=x,
                d2=d2,
            )


def g_map(u, v, w):
    """Unnormalized second eigenvector of [[u, v], [v, w]]; total function.

    Vectorized over broadcastable inputs; trailing axis of the result holds
    the two components.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    s = np.sqrt((w - u) ** 2 + 4.0 * v * v)
    return np.stack([2 * u - 2 * w + 2 * v - 2 * s, w - u + 4 * v - s], axis=-1)


def j_map(u, v, w):
    """Smaller eigenvalue of [[u, v], [v, w]]."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    out = 0.5 * (u + w - np.sqrt((u - w) ** 2 + 4.0 * v * v))
    return float(out) if out.ndim == 0 else out


def lambda1_map(u, v, w):
    """Larger eigenvalue of [[u, v], [v, w]]."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    out = 0.5 * (u + w + np.sqrt((u - w) ** 2 + 4.0 * v * v))
    return float(out) if out.ndim == 0 else out


def grad_g(u, v, w, guard: DegeneracyGuard | None = None) -> np.ndarray:
    """Jacobian of g_map with respect to (u, v, w), shape (2, 3).

    Requires a resolvable eigengap; the square root in g_map is not
    differentiable where it vanishes.
    """
    guard = guard or DegeneracyGuard()
    guard.check(np.array([u, v, w], dtype=float))
    s = np.sqrt((w - u) ** 2 + 4.0 * v * v)
    p = (u - w) / s
    q = 4.0 * v / s
    return np.array(
        [
            [2.0 - 2.0 * p, 2.0 - 2.0 * q, -2.0 + 2.0 * p],
            [-1.0 - p, 4.0 - q, 1.0 + p],
        ]
    )


@dataclass(frozen=True)
class EigenFrame:
    """Eigenvalues and the (unnormalized) second eigenvector at a point.

    v_perp is v rotated by +90 degrees; eigen_residual is the norm of
    (Hessian @ v - lambda2 * v), stored for diagnostics.
    """

    lambda1: float
    lambda2: float
    v: np.ndarray
    v_perp: np.ndarray
    eigen_residual: float


def frame_at(field: DensityField, x, guard: DegeneracyGuard | None = None) -> EigenFrame:
    guard = guard or DegeneracyGuard()
    x = np.asarray(x, dtype=float)
    d2 = field.d2(x)
    guard.check(d2, x=x)
    u, v, w = float(d2[0]), float(d2[1]), float(d2[2])
    vec = g_map(u, v, w)
    lam2 = j_map(u, v, w)
    lam1 = lambda1_map(u, v, w)
    hess = np.array([[u, v], [v, w]])
    residual = float(np.linalg.norm(hess @ vec - lam2 * vec))
    return EigenFrame(
        lambda1=lam1,
        lambda2=lam2,
        v=vec,
        v_perp=np.array([-vec[1], vec[0]]),
        eigen_residual=residual,
    )


def grad_v(field: DensityField, x, guard: DegeneracyGuard | None = None) -> np.ndarray:
    """Spatial Jacobian of the second-eigenvector field, chain rule through d2."""
    guard = guard or DegeneracyGuard()
    x = np.asarray(x, dtype=float)
    d2 = field.d2(x)
    guard.check(d2, x=x)
    gj = grad_g(float(d2[0]), float(d2[1]), float(d2[2]), guard)
    return gj @ field.grad_d2(x)
