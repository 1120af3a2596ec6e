"""Confidence-band ingredients for the scaled sup-deviation of the filament.

Everything needed to turn the extreme-value limit of the standardized
deviation into per-vertex band radii: the Hessian-sensitivity vector of the
ridge function, the crossing derivative, the standardization g, the local
covariance shape Omega, the curve constant c, and the threshold b_h(z).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .density import DensityField
from .eigenfield import DegeneracyGuard, g_map, grad_g, j_map
from .kernel import KernelConstants

__all__ = [
    "FlatFilamentError",
    "BandIngredients",
    "BandResult",
    "a_tilde_prime",
    "ingredients_at",
    "omega_at",
    "constant_c",
    "b_h_of",
    "z_from_level",
    "band_radii",
    "pointwise_sd",
]


class FlatFilamentError(ValueError):
    """The gradient term vanishes, so the band standardization is undefined."""


@dataclass(frozen=True)
class BandIngredients:
    """Pointwise quantities entering the band: see module docstring.

    w_vec is a_vec / a_tilde_prime; norm_a_r is the R-weighted norm of a_vec.
    """

    a_vec: np.ndarray
    a_tilde_prime: float
    g: float
    w_vec: np.ndarray
    norm_a_r: float


@dataclass(frozen=True)
class BandResult:
    c: float
    b_h: float
    z: float
    h: float
    n: int
    radii: np.ndarray


def a_tilde_prime(field: DensityField, x, guard: DegeneracyGuard | None = None) -> float:
    """Derivative of a(t) = <grad f, V> along the curve, written pointwise."""
    guard = guard or DegeneracyGuard()
    x = np.asarray(x, dtype=float)
    d2 = field.d2(x)
    guard.check(d2, x=x)
    grad = field.grad(x)
    vec = g_map(d2[0], d2[1], d2[2])
    lam2 = j_map(d2[0], d2[1], d2[2])
    dv = grad_g(d2[0], d2[1], d2[2], guard) @ field.grad_d2(x)
    return float(grad @ dv @ vec + lam2 * float(vec @ vec))


def ingredients_at(
    field: DensityField,
    x,
    constants: KernelConstants,
    guard: DegeneracyGuard | None = None,
) -> BandIngredients:
    """All pointwise band quantities at x.

    Requires positive density and a nonvanishing gradient term (a flat spot
    on the ridge leaves the standardization undefined).
    """
    guard = guard or DegeneracyGuard()
    x = np.asarray(x, dtype=float)
    fval = field.f(x)
    if not fval > 0.0:
        raise FlatFilamentError(f"density vanishes at {x.tolist()}")
    d2 = field.d2(x)
    guard.check(d2, x=x)
    grad = field.grad(x)
    gj = grad_g(d2[0], d2[1], d2[2], guard)
    a_vec = gj.T @ grad
    norm_a_r = float(np.sqrt(a_vec @ constants.r_matrix @ a_vec))
    if norm_a_r <= 0.0:
        raise FlatFilamentError(f"gradient sensitivity vanishes at {x.tolist()}")
    vec = g_map(d2[0], d2[1], d2[2])
    lam2 = j_map(d2[0], d2[1], d2[2])
    dv = gj @ field.grad_d2(x)
    atp = float(grad @ dv @ vec + lam2 * float(vec @ vec))
    g_val = atp / (np.sqrt(fval) * float(np.linalg.norm(vec)) * norm_a_r)
    return BandIngredients(
        a_vec=a_vec,
        a_tilde_prime=atp,
        g=float(g_val),
        w_vec=a_vec / atp,
        norm_a_r=norm_a_r,
    )


def omega_at(a_vec, b1: float) -> np.ndarray:
    """Local 2x2 covariance-shape matrix built from the sensitivity vector."""
    a1, a2, a3 = float(a_vec[0]), float(a_vec[1]), float(a_vec[2])
    off = 2.0 * a1 * a2 + 2.0 * a2 * a3
    return np.array(
        [
            [b1 * a1 * a1 + a2 * a2 + a3 * a3 + 2.0 * a1 * a3, off],
            [off, b1 * a3 * a3 + a2 * a2 + a1 * a1 + 2.0 * a1 * a3],
        ]
    )


def _sqrtm_2x2(m: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(m)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def _polyline_tangents(poly: np.ndarray) -> np.ndarray:
    m = len(poly)
    t = np.empty_like(poly)
    t[0] = poly[1] - poly[0]
    t[-1] = poly[-1] - poly[-2]
    if m > 2:
        t[1:-1] = poly[2:] - poly[:-2]
    norms = np.linalg.norm(t, axis=1, keepdims=True)
    return t / norms


def constant_c(
    polyline,
    field: DensityField,
    constants: KernelConstants,
    guard: DegeneracyGuard | None = None,
) -> float:
    """Curve constant in the threshold sequence: a log-weighted ridge length.

    Unit tangents come from central differences on the polyline (one-sided at
    open ends); the line integral uses the trapezoid rule over arc length.
    """
    poly = np.asarray(polyline, dtype=float)
    if poly.ndim != 2 or len(poly) < 2:
        raise ValueError("polyline must have at least 2 vertices")
    guard = guard or DegeneracyGuard()
    tangents = _polyline_tangents(poly)
    vals = np.empty(len(poly))
    for i, (p, m_s) in enumerate(zip(poly, tangents)):
        ing = ingredients_at(field, p, constants, guard)
        omega_half = _sqrtm_2x2(omega_at(ing.a_vec, constants.b1))
        vals[i] = np.linalg.norm(omega_half @ m_s) / ing.norm_a_r
    seglen = np.linalg.norm(np.diff(poly, axis=0), axis=1)
    integral = float(np.sum(0.5 * (vals[:-1] + vals[1:]) * seglen))
    return float(np.log(np.sqrt(constants.b2 / 2.0) / np.pi * integral))


def b_h_of(z: float, h: float, c: float) -> float:
    """Threshold sequence sqrt(2 log(1/h)) + (z + c)/sqrt(2 log(1/h))."""
    if not 0.0 < h < 1.0:
        raise ValueError("h must lie in (0, 1)")
    root = np.sqrt(2.0 * np.log(1.0 / h))
    return float(root + (z + c) / root)


def z_from_level(alpha: float) -> float:
    """Quantile z with exp(-2 exp(-z)) = 1 - alpha."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    return float(-np.log(-0.5 * np.log1p(-alpha)))


def band_radii(
    estimate,
    field: DensityField,
    constants: KernelConstants,
    n: int,
    h: float,
    z: float,
    guard: DegeneracyGuard | None = None,
) -> BandResult:
    """Per-vertex band radii b_h(z) / (sqrt(n h^6) |g(vertex)|).

    `estimate` is a FilamentEstimate or a bare polyline; the curve constant
    is computed on that same polyline with the supplied field.
    """
    poly = np.asarray(getattr(estimate, "polyline", estimate), dtype=float)
    if len(poly) == 0:
        raise ValueError("empty polyline")
    guard = guard or DegeneracyGuard()
    c = constant_c(poly, field, constants, guard)
    bh = b_h_of(z, h, c)
    scale = np.sqrt(n * h**6)
    radii = np.empty(len(poly))
    for i, p in enumerate(poly):
        ing = ingredients_at(field, p, constants, guard)
        radii[i] = bh / (scale * abs(ing.g))
    return BandResult(c=c, b_h=bh, z=float(z), h=float(h), n=int(n), radii=radii)


def pointwise_sd(
    field: DensityField,
    x,
    constants: KernelConstants,
    n: int,
    h: float,
    guard: DegeneracyGuard | None = None,
) -> float:
    """Asymptotic standard deviation of the scalar deviation coefficient at x."""
    ing = ingredients_at(field, x, constants, guard)
    fval = field.f(np.asarray(x, dtype=float))
    var = fval * float(ing.w_vec @ constants.r_matrix @ ing.w_vec)
    return float(np.sqrt(var) / np.sqrt(n * h**6))
