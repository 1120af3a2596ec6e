"""Compactly supported quintic smoothing kernel and its derived constants.

The kernel is K(z) = (6/pi) (1 - |z|^2)^5 on the open unit disk and zero
outside.  It is a symmetric probability density with bounded partials up to
order four, and its second-derivative components restricted to any small disk
inside the support are linearly independent.  All partial derivatives through
order three are implemented as closed-form polynomials times powers of
(1 - |z|^2); their correctness is pinned by finite-difference tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Kernel",
    "KernelConstants",
    "compute_constants",
    "unit_disk_quadrature",
]

_INV_PI = 1.0 / np.pi


def unit_disk_quadrature(n_radial: int = 64, n_angular: int = 64):
    """Quadrature nodes and weights for integrals over the unit disk.

    Gauss-Legendre in the radius paired with a uniform (midpoint) angular
    grid.  Every integrand built from products of kernel partials is a
    polynomial in (z1, z2), hence a polynomial in r times a trigonometric
    polynomial in the angle, and the rule integrates those exactly once the
    node counts exceed the degree.

    Returns
    -------
    points : (m, 2) ndarray
    weights : (m,) ndarray
    """
    if n_radial < 4 or n_angular < 4:
        raise ValueError("need at least 4 nodes per direction")
    xr, wr = np.polynomial.legendre.leggauss(n_radial)
    r = 0.5 * (xr + 1.0)
    wr = 0.5 * wr * r
    t = 2.0 * np.pi * (np.arange(n_angular) + 0.5) / n_angular
    wt = np.full(n_angular, 2.0 * np.pi / n_angular)
    rr, tt = np.meshgrid(r, t, indexing="ij")
    points = np.stack([rr * np.cos(tt), rr * np.sin(tt)], axis=-1).reshape(-1, 2)
    weights = np.outer(wr, wt).reshape(-1)
    return points, weights


class Kernel:
    """The quintic disk kernel with analytic partials through order three."""

    support_radius = 1.0
    max_order = 3

    def __call__(self, z):
        return self.eval_k(z)

    @staticmethod
    def eval_k(z):
        z = np.asarray(z, dtype=float)
        z1, z2 = z[..., 0], z[..., 1]
        r2 = z1 * z1 + z2 * z2
        u = 1.0 - r2
        out = 6.0 * _INV_PI * u**5
        return np.where(r2 < 1.0, out, 0.0)

    @staticmethod
    def eval_partial(z, order):
        """Partial derivative K^(i,j) at z, for i + j <= 3.

        Zero outside the open unit disk; every implemented partial carries at
        least two powers of (1 - |z|^2), so the extension by zero is
        continuous across the support boundary.
        """
        i, j = order
        if i < 0 or j < 0 or i + j > Kernel.max_order:
            raise ValueError(f"unsupported derivative order {order!r}")
        z = np.asarray(z, dtype=float)
        z1, z2 = z[..., 0], z[..., 1]
        r2 = z1 * z1 + z2 * z2
        u = 1.0 - r2
        c = _INV_PI
        if (i, j) == (0, 0):
            v = 6.0 * c * u**5
        elif (i, j) == (1, 0):
            v = -60.0 * c * z1 * u**4
        elif (i, j) == (0, 1):
            v = -60.0 * c * z2 * u**4
        elif (i, j) == (2, 0):
            v = 60.0 * c * u**3 * (9.0 * z1 * z1 + z2 * z2 - 1.0)
        elif (i, j) == (1, 1):
            v = 480.0 * c * z1 * z2 * u**3
        elif (i, j) == (0, 2):
            v = 60.0 * c * u**3 * (z1 * z1 + 9.0 * z2 * z2 - 1.0)
        elif (i, j) == (3, 0):
            v = 1440.0 * c * u**2 * z1 * (1.0 - 3.0 * z1 * z1 - z2 * z2)
        elif (i, j) == (2, 1):
            v = 480.0 * c * u**2 * z2 * (1.0 - 7.0 * z1 * z1 - z2 * z2)
        elif (i, j) == (1, 2):
            v = 480.0 * c * u**2 * z1 * (1.0 - z1 * z1 - 7.0 * z2 * z2)
        elif (i, j) == (0, 3):
            v = 1440.0 * c * u**2 * z2 * (1.0 - 3.0 * z2 * z2 - z1 * z1)
        else:  # pragma: no cover
            raise ValueError(order)
        return np.where(r2 < 1.0, v, 0.0)

    @staticmethod
    def d2(z):
        """Second-derivative vector (K^(2,0), K^(1,1), K^(0,2)), shape (..., 3)."""
        z = np.asarray(z, dtype=float)
        z1, z2 = z[..., 0], z[..., 1]
        r2 = z1 * z1 + z2 * z2
        u3 = np.where(r2 < 1.0, (1.0 - r2) ** 3, 0.0)
        c = 60.0 * _INV_PI * u3
        return np.stack(
            [
                c * (9.0 * z1 * z1 + z2 * z2 - 1.0),
                c * 8.0 * z1 * z2,
                c * (z1 * z1 + 9.0 * z2 * z2 - 1.0),
            ],
            axis=-1,
        )

    @staticmethod
    def all_partials(z):
        """All partials through order three in one pass over z, shape (..., 10).

        Order of components: K, K^(1,0), K^(0,1), K^(2,0), K^(1,1), K^(0,2),
        K^(3,0), K^(2,1), K^(1,2), K^(0,3).
        """
        z = np.asarray(z, dtype=float)
        z1, z2 = z[..., 0], z[..., 1]
        r2 = z1 * z1 + z2 * z2
        inside = r2 < 1.0
        u = np.where(inside, 1.0 - r2, 0.0)
        u2 = u * u
        u3 = u2 * u
        u4 = u2 * u2
        c = _INV_PI
        z1s, z2s = z1 * z1, z2 * z2
        return np.stack(
            [
                6.0 * c * u4 * u,
                -60.0 * c * z1 * u4,
                -60.0 * c * z2 * u4,
                60.0 * c * u3 * (9.0 * z1s + z2s - 1.0),
                480.0 * c * z1 * z2 * u3,
                60.0 * c * u3 * (z1s + 9.0 * z2s - 1.0),
                1440.0 * c * u2 * z1 * (1.0 - 3.0 * z1s - z2s),
                480.0 * c * u2 * z2 * (1.0 - 7.0 * z1s - z2s),
                480.0 * c * u2 * z1 * (1.0 - z1s - 7.0 * z2s),
                1440.0 * c * u2 * z2 * (1.0 - 3.0 * z2s - z1s),
            ],
            axis=-1,
        )


@dataclass(frozen=True)
class KernelConstants:
    """Kernel-derived scalars and the 3x3 Gram matrix of second partials.

    mu2 is the second moment of the kernel, r_matrix the integral of the
    outer product of (K^(2,0), K^(1,1), K^(0,2)) with itself, b1 the ratio of
    the squared-integral of K^(3,0) to that of K^(1,2), and b2 half the
    squared-integral of K^(1,2).
    """

    mu2: float
    r_matrix: np.ndarray
    b1: float
    b2: float
    integral_of_k: float


_CONSTANTS_CACHE: dict[int, KernelConstants] = {}


def compute_constants(quadrature_nodes: int = 64, refresh: bool = False) -> KernelConstants:
    """Compute all kernel constants by quadrature over the unit disk.

    Results are cached per node count; pass refresh=True to force
    recomputation.
    """
    if quadrature_nodes < 16:
        raise ValueError("quadrature_nodes must be at least 16")
    if not refresh and quadrature_nodes in _CONSTANTS_CACHE:
        return _CONSTANTS_CACHE[quadrature_nodes]
    pts, w = unit_disk_quadrature(quadrature_nodes, quadrature_nodes)
    k = Kernel.eval_k(pts)
    integral_of_k = float(np.sum(k * w))
    mu2 = float(np.sum(k * pts[:, 0] ** 2 * w))
    d2 = Kernel.d2(pts)
    r = np.einsum("mi,mj,m->ij", d2, d2, w)
    r = 0.5 * (r + r.T)
    i30 = float(np.sum(Kernel.eval_partial(pts, (3, 0)) ** 2 * w))
    i12 = float(np.sum(Kernel.eval_partial(pts, (1, 2)) ** 2 * w))
    out = KernelConstants(
        mu2=mu2,
        r_matrix=r,
        b1=i30 / i12,
        b2=0.5 * i12,
        integral_of_k=integral_of_k,
    )
    _CONSTANTS_CACHE[quadrature_nodes] = out
    return out
