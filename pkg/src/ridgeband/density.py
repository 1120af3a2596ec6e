"""Density fields with derivatives through order three.

A DensityField exposes the density value, gradient, second-derivative vector
(f20, f11, f02) and the 3x2 matrix of third partials at a point.  Two kinds
are provided: a kernel density estimate over a point cloud (with spatial
binning so evaluation touches only nearby samples), and analytic test models
with exact derivatives and samplers.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .kernel import Kernel, unit_disk_quadrature

__all__ = [
    "PointCloud",
    "DensityField",
    "KdeField",
    "ElongatedGaussian",
    "Ring",
    "build_kde",
    "eval_all",
    "expected_d2",
    "expected_grad",
    "sample",
    "default_bandwidth",
    "rng_for",
    "load_points_csv",
    "write_points_csv",
]


@dataclass(frozen=True)
class PointCloud:
    """An immutable set of 2D sample coordinates."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.ascontiguousarray(np.asarray(self.points, dtype=float))
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 1:
            raise ValueError("points must have shape (n, 2) with n >= 1")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]


class DensityField:
    """Evaluator interface for a twice-plus differentiable density."""

    def f(self, x) -> float:
        raise NotImplementedError

    def grad(self, x) -> np.ndarray:
        raise NotImplementedError

    def d2(self, x) -> np.ndarray:
        """Second derivatives (f20, f11, f02) as a 3-vector."""
        raise NotImplementedError

    def grad_d2(self, x) -> np.ndarray:
        """Gradient of d2, shape (3, 2): rows f20, f11, f02; columns d/dx1, d/dx2."""
        raise NotImplementedError

    def eval_all(self, x):
        """(f, grad, d2, grad_d2) in one pass."""
        return self.f(x), self.grad(x), self.d2(x), self.grad_d2(x)


def eval_all(field: DensityField, x):
    """One-pass evaluation of all derivative orders at x."""
    return field.eval_all(x)


class KdeField(DensityField):
    """Kernel density estimate over a point cloud with grid-binned lookup.

    Samples are binned into a uniform grid of cell size h over the data
    bounding box; a query gathers the 3x3 cell neighborhood, which covers
    every sample within kernel reach.  Derivative of order k carries the
    normalization 1 / (n h^(2+k)).
    """

    def __init__(self, cloud: PointCloud, h: float, kernel: Kernel | None = None):
        if h <= 0:
            raise ValueError("bandwidth h must be positive")
        self.cloud = cloud
        self.h = float(h)
        self.kernel = kernel or Kernel()
        pts = cloud.points
        self._lo = pts.min(axis=0)
        span = pts.max(axis=0) - self._lo
        self._nx = max(1, int(np.floor(span[0] / self.h)) + 1)
        self._ny = max(1, int(np.floor(span[1] / self.h)) + 1)
        ix = np.clip((pts[:, 0] - self._lo[0]) // self.h, 0, self._nx - 1).astype(np.int64)
        iy = np.clip((pts[:, 1] - self._lo[1]) // self.h, 0, self._ny - 1).astype(np.int64)
        flat = ix * self._ny + iy
        order = np.argsort(flat, kind="stable")
        self._sorted = np.ascontiguousarray(pts[order])
        self._flat_sorted = flat[order]
        self._starts = np.searchsorted(self._flat_sorted, np.arange(self._nx * self._ny + 1))

    def _neighbors(self, x):
        ix = int(np.floor((x[0] - self._lo[0]) / self.h))
        iy = int(np.floor((x[1] - self._lo[1]) / self.h))
        if ix < -1 or ix > self._nx or iy < -1 or iy > self._ny:
            return self._sorted[:0]
        iy0, iy1 = max(iy - 1, 0), min(iy + 1, self._ny - 1)
        if iy1 < iy0:
            return self._sorted[:0]
        chunks = []
        for cx in range(max(ix - 1, 0), min(ix + 1, self._nx - 1) + 1):
            a = self._starts[cx * self._ny + iy0]
            b = self._starts[cx * self._ny + iy1 + 1]
            if b > a:
                chunks.append(self._sorted[a:b])
        if not chunks:
            return self._sorted[:0]
        if len(chunks) == 1:
            return chunks[0]
        return np.concatenate(chunks, axis=0)

    def _scaled_offsets(self, x):
        x = np.asarray(x, dtype=float)
        nbrs = self._neighbors(x)
        if nbrs.shape[0] == 0:
            return np.empty((0, 2))
        return (x - nbrs) / self.h

    def f(self, x) -> float:
        z = self._scaled_offsets(x)
        n, h = self.cloud.n, self.h
        return float(np.sum(Kernel.eval_k(z))) / (n * h**2)

    def grad(self, x) -> np.ndarray:
        z = self._scaled_offsets(x)
        n, h = self.cloud.n, self.h
        g = np.array(
            [np.sum(Kernel.eval_partial(z, (1, 0))), np.sum(Kernel.eval_partial(z, (0, 1)))]
        )
        return g / (n * h**3)

    def d2(self, x) -> np.ndarray:
        z = self._scaled_offsets(x)
        n, h = self.cloud.n, self.h
        return Kernel.d2(z).sum(axis=0) / (n * h**4)

    def grad_d2(self, x) -> np.ndarray:
        z = self._scaled_offsets(x)
        n, h = self.cloud.n, self.h
        p = Kernel.all_partials(z).sum(axis=0) / (n * h**5)
        return np.array([[p[6], p[7]], [p[7], p[8]], [p[8], p[9]]])

    def eval_all(self, x):
        z = self._scaled_offsets(x)
        n, h = self.cloud.n, self.h
        p = Kernel.all_partials(z).sum(axis=0)
        f = p[0] / (n * h**2)
        grad = p[1:3] / (n * h**3)
        d2 = p[3:6] / (n * h**4)
        gd2 = np.array([[p[6], p[7]], [p[7], p[8]], [p[8], p[9]]]) / (n * h**5)
        return float(f), grad, d2, gd2

    def f_naive(self, x) -> float:
        """Full-sum evaluation over all samples, for cross-checking the binned path."""
        x = np.asarray(x, dtype=float)
        z = (x - self.cloud.points) / self.h
        return float(np.sum(Kernel.eval_k(z))) / (self.cloud.n * self.h**2)


def build_kde(cloud: PointCloud, h: float, kernel: Kernel | None = None) -> KdeField:
    return KdeField(cloud, h, kernel)


class ElongatedGaussian(DensityField):
    """Centered axis-aligned Gaussian with distinct scales; its ridge is the long axis."""

    def __init__(self, sigma1: float, sigma2: float):
        if not sigma1 > sigma2 > 0:
            raise ValueError("require sigma1 > sigma2 > 0")
        self.sigma1 = float(sigma1)
        self.sigma2 = float(sigma2)
        self._norm = 1.0 / (2.0 * np.pi * sigma1 * sigma2)

    def f(self, x):
        x = np.asarray(x, dtype=float)
        q = x[..., 0] ** 2 / (2 * self.sigma1**2) + x[..., 1] ** 2 / (2 * self.sigma2**2)
        out = self._norm * np.exp(-q)
        return float(out) if out.ndim == 0 else out

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        f = self.f(x)
        a = -x[..., 0] / self.sigma1**2
        b = -x[..., 1] / self.sigma2**2
        return np.stack([a * f, b * f], axis=-1)

    def d2(self, x):
        x = np.asarray(x, dtype=float)
        f = self.f(x)
        a = -x[..., 0] / self.sigma1**2
        b = -x[..., 1] / self.sigma2**2
        return np.stack(
            [(a * a - 1 / self.sigma1**2) * f, a * b * f, (b * b - 1 / self.sigma2**2) * f],
            axis=-1,
        )

    def grad_d2(self, x):
        x = np.asarray(x, dtype=float)
        f = self.f(x)
        s1i, s2i = 1 / self.sigma1**2, 1 / self.sigma2**2
        a = -x[..., 0] * s1i
        b = -x[..., 1] * s2i
        f30 = a * (a * a - 3 * s1i) * f
        f21 = b * (a * a - s1i) * f
        f12 = a * (b * b - s2i) * f
        f03 = b * (b * b - 3 * s2i) * f
        return np.stack(
            [
                np.stack([f30, f21], axis=-1),
                np.stack([f21, f12], axis=-1),
                np.stack([f12, f03], axis=-1),
            ],
            axis=-2,
        )

    def eval_all(self, x):
        return self.f(x), self.grad(x), self.d2(x), self.grad_d2(x)

    def sample_with(self, rng: np.random.Generator, n: int) -> PointCloud:
        pts = rng.standard_normal((n, 2)) * np.array([self.sigma1, self.sigma2])
        return PointCloud(pts)

    def axis_segment(self, x_lo: float, x_hi: float, m: int) -> np.ndarray:
        """Polyline of m vertices along the ridge (the x1 axis)."""
        xs = np.linspace(x_lo, x_hi, m)
        return np.stack([xs, np.zeros_like(xs)], axis=-1)


class Ring(DensityField):
    """Radially symmetric density concentrated near a circle of radius r0.

    f(x) = C exp(-(r - r0)^2 / (2 s^2)) with C fixed by radial quadrature so
    the density integrates to one.  Requires r0 > 3 s, which keeps the mass
    away from the origin where the polar chain rule degenerates.
    """

    _R_CUTOFF = 1e-8

    def __init__(self, r0: float, s: float):
        if not (s > 0 and r0 > 3 * s):
            raise ValueError("require r0 > 3*s > 0")
        self.r0 = float(r0)
        self.s = float(s)
        mass, _ = integrate.quad(
            lambda r: r * np.exp(-((r - r0) ** 2) / (2 * s**2)),
            max(0.0, r0 - 12 * s),
            r0 + 12 * s,
        )
        self.c = 1.0 / (2.0 * np.pi * mass)

    def _profile(self, r):
        g = self.c * np.exp(-((r - self.r0) ** 2) / (2 * self.s**2))
        q = (r - self.r0) / self.s**2
        g1 = -q * g
        g2 = (q * q - 1 / self.s**2) * g
        g3 = (-q * q * q + 3 * q / self.s**2) * g
        return g, g1, g2, g3

    def f(self, x):
        x = np.asarray(x, dtype=float)
        r = np.hypot(x[..., 0], x[..., 1])
        out = self.c * np.exp(-((r - self.r0) ** 2) / (2 * self.s**2))
        return float(out) if out.ndim == 0 else out

    def _chain(self, x):
        x = np.asarray(x, dtype=float)
        x1, x2 = x[..., 0], x[..., 1]
        r = np.hypot(x1, x2)
        safe = np.maximum(r, self._R_CUTOFF)
        ok = r >= self._R_CUTOFF
        return x1, x2, r, safe, ok

    def grad(self, x):
        x1, x2, r, safe, ok = self._chain(x)
        _, g1, _, _ = self._profile(r)
        out = np.stack([g1 * x1 / safe, g1 * x2 / safe], axis=-1)
        return np.where(ok[..., None], out, 0.0)

    def d2(self, x):
        x1, x2, r, safe, ok = self._chain(x)
        _, g1, g2, _ = self._profile(r)
        rx, ry = x1 / safe, x2 / safe
        rxx, rxy, ryy = x2**2 / safe**3, -x1 * x2 / safe**3, x1**2 / safe**3
        out = np.stack(
            [
                g2 * rx * rx + g1 * rxx,
                g2 * rx * ry + g1 * rxy,
                g2 * ry * ry + g1 * ryy,
            ],
            axis=-1,
        )
        return np.where(ok[..., None], out, 0.0)

    def grad_d2(self, x):
        x1, x2, r, safe, ok = self._chain(x)
        _, g1, g2, g3 = self._profile(r)
        rx, ry = x1 / safe, x2 / safe
        rxx, rxy, ryy = x2**2 / safe**3, -x1 * x2 / safe**3, x1**2 / safe**3
        s5 = safe**5
        rxxx = -3 * x1 * x2**2 / s5
        rxxy = x2 * (2 * x1**2 - x2**2) / s5
        rxyy = x1 * (2 * x2**2 - x1**2) / s5
        ryyy = -3 * x2 * x1**2 / s5
        f30 = g3 * rx**3 + 3 * g2 * rx * rxx + g1 * rxxx
        f21 = g3 * rx**2 * ry + g2 * (2 * rx * rxy + ry * rxx) + g1 * rxxy
        f12 = g3 * rx * ry**2 + g2 * (2 * ry * rxy + rx * ryy) + g1 * rxyy
        f03 = g3 * ry**3 + 3 * g2 * ry * ryy + g1 * ryyy
        out = np.stack(
            [
                np.stack([f30, f21], axis=-1),
                np.stack([f21, f12], axis=-1),
                np.stack([f12, f03], axis=-1),
            ],
            axis=-2,
        )
        return np.where(ok[..., None, None], out, 0.0)

    def eval_all(self, x):
        return self.f(x), self.grad(x), self.d2(x), self.grad_d2(x)

    def sample_with(self, rng: np.random.Generator, n: int) -> PointCloud:
        # radial law proportional to r*exp(-(r-r0)^2/(2 s^2)); rejection from
        # a normal proposal with the linear factor as acceptance weight.  The
        # cap at r0 + 10 s discards mass below double-precision resolution.
        cap = self.r0 + 10 * self.s
        radii = np.empty(0)
        while radii.size < n:
            m = max(2 * (n - radii.size), 256)
            prop = rng.normal(self.r0, self.s, size=m)
            u = rng.random(m)
            acc = prop[(prop > 0) & (prop < cap) & (u < prop / cap)]
            radii = np.concatenate([radii, acc])
        radii = radii[:n]
        theta = rng.uniform(0.0, 2.0 * np.pi, size=n)
        return PointCloud(np.stack([radii * np.cos(theta), radii * np.sin(theta)], axis=-1))

    def circle_polyline(self, m: int) -> np.ndarray:
        """Polyline of m vertices on the ridge circle (open, not wrapped)."""
        t = 2.0 * np.pi * np.arange(m) / m
        return self.r0 * np.stack([np.cos(t), np.sin(t)], axis=-1)

    def mean_radius(self) -> float:
        """Mean of the radial law, by quadrature."""
        lo, hi = max(0.0, self.r0 - 12 * self.s), self.r0 + 12 * self.s
        w = lambda r: r * np.exp(-((r - self.r0) ** 2) / (2 * self.s**2))
        num, _ = integrate.quad(lambda r: r * w(r), lo, hi)
        den, _ = integrate.quad(w, lo, hi)
        return num / den


def rng_for(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator keyed by (seed, stream) for reproducible replicates."""
    key = np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(stream & 0xFFFFFFFFFFFFFFFF)])
    return np.random.Generator(np.random.Philox(key=key))


def sample(model, n: int, seed: int, stream: int = 0) -> PointCloud:
    """Draw n i.i.d. points from an analytic model, deterministic in (seed, stream)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return model.sample_with(rng_for(seed, stream), n)


def default_bandwidth(n: int, beta: float = 1.0) -> float:
    """Bandwidth h = (beta / n)^(1/9), the scaling that balances the band bias."""
    if n < 2:
        raise ValueError("n must be at least 2")
    if beta <= 0:
        raise ValueError("beta must be positive")
    return float((beta / n) ** (1.0 / 9.0))


def expected_d2(model: DensityField, kernel: Kernel, x, h: float, nodes: int = 48) -> np.ndarray:
    """Mean of the KDE second-derivative vector at x under the model.

    Computed as h^-2 times the disk integral of d2K(z) f(x - h z), by
    quadrature; exact up to quadrature error, no resampling noise.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    pts, w = unit_disk_quadrature(nodes, nodes + 16)
    x = np.asarray(x, dtype=float)
    fvals = model.f(x[None, :] - h * pts)
    d2k = Kernel.d2(pts)
    return np.einsum("mi,m,m->i", d2k, fvals, w) / h**2


def expected_grad(model: DensityField, kernel: Kernel, x, h: float, nodes: int = 48) -> np.ndarray:
    """Mean of the KDE gradient at x under the model, via disk quadrature."""
    if h <= 0:
        raise ValueError("h must be positive")
    pts, w = unit_disk_quadrature(nodes, nodes + 16)
    x = np.asarray(x, dtype=float)
    fvals = model.f(x[None, :] - h * pts)
    g = np.stack(
        [Kernel.eval_partial(pts, (1, 0)), Kernel.eval_partial(pts, (0, 1))], axis=-1
    )
    return np.einsum("mi,m,m->i", g, fvals, w) / h


def load_points_csv(path) -> PointCloud:
    """Read a two-column numeric CSV; one optional header line is allowed.

    Any malformed row is a hard error naming the offending line number.
    """
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                raise ValueError(f"line {lineno}: empty row")
            if len(row) != 2:
                raise ValueError(f"line {lineno}: expected 2 columns, got {len(row)}")
            try:
                rows.append((float(row[0]), float(row[1])))
            except ValueError:
                if lineno == 1:
                    continue  # header line
                raise ValueError(f"line {lineno}: non-numeric value in {row!r}") from None
    if not rows:
        raise ValueError("no data rows in CSV")
    return PointCloud(np.array(rows))


def write_points_csv(path, cloud: PointCloud, header: bool = True) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        if header:
            writer.writerow(["x", "y"])
        for p in cloud.points:
            writer.writerow([repr(float(p[0])), repr(float(p[1]))])
