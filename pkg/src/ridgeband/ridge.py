"""Ridge-point detection along integral curves and filament assembly.

A ridge crossing is a root of a(t) = <grad f, V> along the curve at which the
second eigenvalue is negative.  Detection scans the sampled trajectory
outward from t = 0 and refines the first qualifying sign change by root
bracketing; if no crossing qualifies within the search horizon the fallback
is theta = 0, flagged as not found.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy import optimize

from .density import DensityField
from .eigenfield import DegeneracyError, DegeneracyGuard, g_map, grad_v, j_map
from .flow import FlowSettings, Trajectory, rk4_step, trace

__all__ = [
    "FilamentHit",
    "FilamentEstimate",
    "a_of_t",
    "find_theta",
    "estimate_filament",
    "hausdorff",
    "close_polyline",
]

_ROOT_RTOL = 1e-10


@dataclass(frozen=True)
class FilamentHit:
    """First ridge crossing along a trajectory (theta = 0 when none is found)."""

    theta: float
    point: np.ndarray
    lambda2: float
    a_prime: float
    found: bool


@dataclass
class FilamentEstimate:
    """Per-start hits plus the merged, chained ridge polyline."""

    hits: list
    starts: np.ndarray
    polyline: np.ndarray
    failures: list = dc_field(default_factory=list)


def _a_and_lambda2(field: DensityField, x):
    _, grad, d2, _ = field.eval_all(x)
    vec = g_map(d2[0], d2[1], d2[2])
    return float(grad @ vec), float(j_map(d2[0], d2[1], d2[2]))


def a_of_t(field: DensityField, traj: Trajectory, guard: DegeneracyGuard | None = None):
    """Evaluate a(t) at every trajectory sample, with the driving field.

    The eigenvector here is always the raw (unnormalized) field value, so the
    root set does not depend on how the trace was parametrized.
    """
    guard = guard or DegeneracyGuard()
    if len(traj.times) == 0:
        raise ValueError("empty trajectory")
    out = np.empty((len(traj.times), 2))
    for k, (t, x) in enumerate(zip(traj.times, traj.points)):
        d2 = field.d2(x)
        guard.check(d2, x=x)
        vec = g_map(d2[0], d2[1], d2[2])
        out[k] = (t, float(field.grad(x) @ vec))
    return out


def _a_prime_at(field: DensityField, x, guard: DegeneracyGuard) -> float:
    _, grad, d2, _ = field.eval_all(x)
    vec = g_map(d2[0], d2[1], d2[2])
    lam2 = j_map(d2[0], d2[1], d2[2])
    dv = grad_v(field, x, guard)
    return float(grad @ dv @ vec + lam2 * float(vec @ vec))


def _hit_at(field, x, t, guard) -> FilamentHit | None:
    """Validated hit, or None when the point fails the ridge-point contract.

    A qualifying root of a(t) must sit inside the guard region with negative
    second eigenvalue and a nonzero crossing derivative; roots produced by a
    vanishing eigengap (where the eigenvector field itself collapses) fail
    the guard and are rejected.
    """
    d2 = field.d2(x)
    if not guard.accepts_vec(d2):
        return None
    lam2 = j_map(d2[0], d2[1], d2[2])
    if not lam2 < 0.0:
        return None
    try:
        a_prime = _a_prime_at(field, x, guard)
    except DegeneracyError:
        return None
    if a_prime == 0.0:
        return None
    return FilamentHit(
        theta=float(t),
        point=np.asarray(x, dtype=float),
        lambda2=float(lam2),
        a_prime=a_prime,
        found=True,
    )


def find_theta(
    field: DensityField,
    x0,
    flow: FlowSettings,
    guard: DegeneracyGuard | None = None,
    a_star: float | None = None,
) -> FilamentHit:
    """Locate the ridge crossing of smallest |t| along the curve through x0.

    Scans both time directions outward over the sampled trajectory; the first
    sign change of a(t) whose bracket has negative second eigenvalue at both
    ends is refined until |a| < 1e-10 times the largest sampled |a|.  Ties
    between the two directions resolve to positive t.  Returns a not-found
    hit with theta = 0 when no crossing qualifies within |t| <= a_star.
    """
    guard = guard or DegeneracyGuard()
    if a_star is None:
        a_star = flow.t_max
    if abs(a_star) > flow.t_max + 1e-12:
        raise ValueError("a_star must not exceed the trace horizon")
    x0 = np.asarray(x0, dtype=float)
    traj = trace(field, x0, flow, guard)

    m = len(traj.times)
    avals = np.empty(m)
    lam2s = np.empty(m)
    for k in range(m):
        avals[k], lam2s[k] = _a_and_lambda2(field, traj.points[k])
    scale = float(np.max(np.abs(avals)))
    tol = _ROOT_RTOL * scale
    iz = traj.zero_index

    not_found = FilamentHit(0.0, x0.copy(), float(lam2s[iz]), 0.0, False)
    if scale == 0.0:
        hit = _hit_at(field, x0, 0.0, guard) if lam2s[iz] < 0.0 else None
        return hit or not_found
    if abs(avals[iz]) <= tol and lam2s[iz] < 0.0:
        hit = _hit_at(field, x0, 0.0, guard)
        if hit is not None:
            return hit

    # Candidate brackets (pairs of consecutive samples in one branch), plus
    # on-sample roots, keyed by outer |t|; positive direction wins ties.
    candidates = []
    for sign, idx in ((+1, range(iz, m - 1)), (-1, range(iz, 0, -1))):
        for k in idx:
            k2 = k + 1 if sign > 0 else k - 1
            outer = abs(traj.times[k2])
            if outer > a_star + 1e-12:
                break
            candidates.append((outer, -sign, k, k2))
    candidates.sort(key=lambda c: (c[0], c[1]))

    for _, _, k, k2 in candidates:
        a_lo, a_hi = avals[k], avals[k2]
        if abs(a_hi) <= tol:
            if lam2s[k2] < 0.0:
                hit = _hit_at(field, traj.points[k2], traj.times[k2], guard)
                if hit is not None:
                    return hit
            continue
        if abs(a_lo) <= tol or a_lo * a_hi > 0.0:
            continue
        if not (lam2s[k] < 0.0 and lam2s[k2] < 0.0):
            continue
        refined = _refine(field, traj, k, k2, flow, tol)
        if refined is None:
            continue
        hit = _hit_at(field, refined[1], refined[0], guard)
        if hit is not None:
            return hit

    return not_found


def _refine(field, traj, k, k2, flow, tol):
    """Root of a(t) inside the bracket [t_k, t_k2] via Brent on a resolved a(t).

    Points inside the bracket come from a single RK4 substep off the nearer
    bracket end, so the positional error stays at the trace's own order.
    Returns None when the converged value does not meet the root tolerance.
    """
    t_lo, t_hi = float(traj.times[k]), float(traj.times[k2])
    x_lo, x_hi = traj.points[k], traj.points[k2]

    def point_at(t):
        if abs(t - t_lo) <= abs(t - t_hi):
            return rk4_step(field, x_lo, t - t_lo, 1.0, flow.normalize_v)
        return rk4_step(field, x_hi, t - t_hi, 1.0, flow.normalize_v)

    def a_at(t):
        a, _ = _a_and_lambda2(field, point_at(t))
        return a

    t_root = optimize.brentq(a_at, t_lo, t_hi, xtol=1e-14, rtol=8.9e-16, maxiter=200)
    x_root = point_at(t_root)
    a_root, _ = _a_and_lambda2(field, x_root)
    if abs(a_root) > tol:
        return None
    return t_root, x_root


def estimate_filament(
    field: DensityField,
    starts,
    flow: FlowSettings,
    guard: DegeneracyGuard | None = None,
    a_star: float | None = None,
    merge_radius: float | None = None,
) -> FilamentEstimate:
    """Run ridge detection from every start and assemble the hit polyline.

    Starts that fail (degenerate at start, outside bounds, degenerate along
    the whole scan) are recorded, never fatal.  Found hits are deduplicated
    at the merge radius (default: half the bandwidth for a KDE field, 1e-3
    otherwise) and chained nearest-neighbor into a polyline.
    """
    guard = guard or DegeneracyGuard()
    if merge_radius is None:
        from .density import KdeField

        merge_radius = field.h / 2.0 if isinstance(field, KdeField) else 1e-3
    starts = np.asarray(starts, dtype=float)
    if starts.ndim != 2 or starts.shape[0] < 1:
        raise ValueError("starts must be a nonempty (m, 2) array")
    hits, failures = [], []
    for i, x0 in enumerate(starts):
        try:
            hits.append(find_theta(field, x0, flow, guard, a_star))
        except (DegeneracyError, ValueError) as exc:
            failures.append((i, str(exc)))
            hits.append(None)
    found_pts = [h.point for h in hits if h is not None and h.found]
    polyline = _assemble_polyline(found_pts, merge_radius)
    return FilamentEstimate(hits=hits, starts=starts, polyline=polyline, failures=failures)


def _assemble_polyline(points, merge_radius):
    if not points:
        return np.empty((0, 2))
    kept = []
    for p in points:
        if all(np.linalg.norm(p - q) >= merge_radius for q in kept):
            kept.append(p)
    kept = np.array(kept)
    if len(kept) <= 2:
        return kept
    # chain greedily from the vertex farthest from the centroid
    centroid = kept.mean(axis=0)
    current = int(np.argmax(np.linalg.norm(kept - centroid, axis=1)))
    used = {current}
    order = [current]
    while len(used) < len(kept):
        rest = [j for j in range(len(kept)) if j not in used]
        d = [np.linalg.norm(kept[order[-1]] - kept[j]) for j in rest]
        nxt = rest[int(np.argmin(d))]
        used.add(nxt)
        order.append(nxt)
    return kept[order]


def close_polyline(poly) -> np.ndarray:
    """Append the first vertex so distances account for the closing segment."""
    poly = np.asarray(poly, dtype=float)
    if len(poly) < 3 or np.allclose(poly[0], poly[-1]):
        return poly
    return np.vstack([poly, poly[0]])


def _densify(poly, step):
    out = [poly[0]]
    for a, b in zip(poly[:-1], poly[1:]):
        seg = np.linalg.norm(b - a)
        k = max(1, int(np.ceil(seg / step)))
        for j in range(1, k + 1):
            out.append(a + (b - a) * (j / k))
    return np.array(out)


def hausdorff(a, b) -> float:
    """Symmetric Hausdorff distance between two polylines.

    Both are resampled at a tenth of the smallest segment length so vertex
    spacing does not bias the point-set distance.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or b.ndim != 2 or len(a) == 0 or len(b) == 0:
        raise ValueError("hausdorff requires two nonempty polylines")
    segs = []
    for poly in (a, b):
        if len(poly) > 1:
            lens = np.linalg.norm(np.diff(poly, axis=0), axis=1)
            lens = lens[lens > 0]
            if lens.size:
                segs.append(lens.min())
    if segs:
        step = min(segs) / 10.0
        a = _densify(a, step) if len(a) > 1 else a
        b = _densify(b, step) if len(b) > 1 else b
    from scipy.spatial import cKDTree

    d_ab = cKDTree(b).query(a)[0].max()
    d_ba = cKDTree(a).query(b)[0].max()
    return float(max(d_ab, d_ba))
