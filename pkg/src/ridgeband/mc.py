"""Monte Carlo harness for the distributional claims of the ridge estimator.

Three sampling experiments (sup-deviation law, pointwise projection law,
path-deviation rate) pair estimated ridge points with their population
counterparts start-by-start, which is what makes pointwise comparison
possible at all.  A fourth experiment simulates the limiting Gaussian field
directly on the rescaled ridge by white-noise convolution, where convergence
is governed by the bandwidth alone, and a quadrature check validates the
local expansion of that field's covariance.

Replicates use counter-based generator streams keyed by (seed, block, rep),
so runs are reproducible and mergeable regardless of execution order.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import bands
from .density import DensityField, build_kde, default_bandwidth, rng_for, sample
from .eigenfield import DegeneracyError, DegeneracyGuard, grad_g
from .flow import FlowSettings, trace
from .kernel import Kernel, KernelConstants, unit_disk_quadrature
from .ridge import FilamentHit, find_theta

__all__ = [
    "ExperimentError",
    "ExperimentConfig",
    "GaussFieldConfig",
    "run_sup_deviation",
    "run_pointwise",
    "run_rate",
    "simulate_gauss_field",
    "covariance_expansion_check",
    "limit_law_cdf",
]

_MAX_FAILURE_FRACTION = 0.10


class ExperimentError(RuntimeError):
    """A run produced too many failed replicates to summarize honestly."""


def limit_law_cdf(z):
    """Limiting law exp(-2 exp(-z)) of the standardized sup deviation."""
    return np.exp(-2.0 * np.exp(-np.asarray(z, dtype=float)))


@dataclass(frozen=True)
class ExperimentConfig:
    """Shared configuration for the sampling experiments.

    starts are the integral-curve seeds; t_max and bounds shape both the
    population traces (fixed fine step) and the plug-in traces (step h/4).
    """

    model: DensityField
    n_grid: tuple
    reps: int
    seed: int
    starts: np.ndarray
    t_max: float
    bounds: tuple
    beta: float = 1.0
    z_grid: tuple = (-1.0, 0.0, 1.0, 2.0, 3.0)
    a_star: float | None = None
    normalize_v: bool = False
    analytic_step: float = 1e-3
    step_factor: float = 0.25
    workers: int = 1

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        n_grid = tuple(int(n) for n in self.n_grid)
        if any(b <= a for a, b in zip(n_grid, n_grid[1:])):
            raise ValueError("n_grid must be strictly increasing")
        object.__setattr__(self, "n_grid", n_grid)
        object.__setattr__(self, "starts", np.asarray(self.starts, dtype=float))

    def analytic_flow(self) -> FlowSettings:
        return FlowSettings(
            step=self.analytic_step,
            t_max=self.t_max,
            bounds=self.bounds,
            direction="both",
            normalize_v=self.normalize_v,
        )

    def kde_flow(self, h: float) -> FlowSettings:
        # step_factor 0.25 resolves the kernel scale for unit-speed fields;
        # unnormalized runs on sharp models need it smaller by the field speed
        return FlowSettings(
            step=self.step_factor * h,
            t_max=self.t_max,
            bounds=self.bounds,
            direction="both",
            normalize_v=self.normalize_v,
        )


def _true_hits(config: ExperimentConfig, guard: DegeneracyGuard) -> list[FilamentHit]:
    flow = config.analytic_flow()
    hits = []
    for x0 in config.starts:
        hit = find_theta(config.model, x0, flow, guard, config.a_star)
        if not hit.found:
            raise ValueError(f"start {x0.tolist()} has no population ridge crossing")
        hits.append(hit)
    return hits


def _run_reps(fn, reps: int, workers: int) -> list:
    if workers <= 1:
        return [fn(r) for r in range(reps)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(reps)))


def _check_failures(records: list[dict], context: str) -> None:
    failed = sum(1 for r in records if "failed" in r)
    if failed > _MAX_FAILURE_FRACTION * len(records):
        raise ExperimentError(f"{context}: {failed}/{len(records)} replicates failed")


def run_sup_deviation(
    config: ExperimentConfig,
    constants: KernelConstants,
    guard: DegeneracyGuard | None = None,
) -> dict:
    """Empirical law of the standardized sup deviation over the start grid.

    Per replicate: sample, build the plug-in field, detect the ridge from
    every start, and take the sup over starts of |g(true hit)| sqrt(n h^6)
    times the deviation norm, pairing estimated and true hits by start.
    Reports the empirical probability that the sup stays below the threshold
    b_h(z) for each requested z.
    """
    guard = guard or DegeneracyGuard()
    true_hits = _true_hits(config, guard)
    true_polyline = np.array([h.point for h in true_hits])
    c = bands.constant_c(_dedup(true_polyline), config.model, constants, guard)
    g_abs = np.array(
        [
            abs(bands.ingredients_at(config.model, h.point, constants, guard).g)
            for h in true_hits
        ]
    )

    per_n = []
    for block, n in enumerate(config.n_grid):
        h = default_bandwidth(n, config.beta)
        flow = config.kde_flow(h)
        scale = np.sqrt(n * h**6)

        def one_rep(r, _n=n, _h=h, _flow=flow, _scale=scale, _block=block):
            cloud = sample(config.model, _n, config.seed, stream=(_block << 32) | r)
            kde = build_kde(cloud, _h)
            worst = 0.0
            for true_hit, g_a, x0 in zip(true_hits, g_abs, config.starts):
                try:
                    est = find_theta(kde, x0, _flow, guard, config.a_star)
                except (DegeneracyError, ValueError) as exc:
                    return {"rep": r, "failed": f"start {x0.tolist()}: {exc}"}
                if not est.found:
                    return {"rep": r, "failed": f"start {x0.tolist()}: no crossing"}
                dev = float(np.linalg.norm(est.point - true_hit.point))
                worst = max(worst, g_a * _scale * dev)
            return {"rep": r, "sup": worst}

        records = _run_reps(one_rep, config.reps, config.workers)
        _check_failures(records, f"sup deviation at n={n}")
        sups = np.array([r["sup"] for r in records if "sup" in r])
        p_at_z = {
            float(z): float(np.mean(sups < bands.b_h_of(z, h, c))) for z in config.z_grid
        }
        per_n.append(
            {
                "n": n,
                "h": h,
                "c": c,
                "records": records,
                "p_at_z": p_at_z,
                "limit_at_z": {float(z): float(limit_law_cdf(z)) for z in config.z_grid},
                "excluded": int(sum(1 for r in records if "failed" in r)),
            }
        )
    return {"kind": "mc_sup", "seed": config.seed, "per_n": per_n}


def _dedup(polyline: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    kept = [polyline[0]]
    for p in polyline[1:]:
        if np.linalg.norm(p - kept[-1]) > tol:
            kept.append(p)
    return np.array(kept)


def run_pointwise(
    config: ExperimentConfig,
    x_star,
    constants: KernelConstants,
    guard: DegeneracyGuard | None = None,
) -> dict:
    """Law of the deviation projected on the unit eigenvector at one ridge point.

    The scaled projection should be asymptotically centered normal; the
    theoretical variance is assembled two ways (whole-vector form and the
    sensitivity/crossing-derivative ratio), which must agree to roundoff.
    """
    guard = guard or DegeneracyGuard()
    x_star = np.asarray(x_star, dtype=float)
    flow_true = config.analytic_flow()
    true_hit = find_theta(config.model, x_star, flow_true, guard, config.a_star)
    if not true_hit.found:
        raise ValueError(f"start {x_star.tolist()} has no population ridge crossing")
    model = config.model
    ing = bands.ingredients_at(model, true_hit.point, constants, guard)
    fval = model.f(true_hit.point)
    d2 = model.d2(true_hit.point)
    from .eigenfield import g_map

    vec = g_map(d2[0], d2[1], d2[2])
    v_norm2 = float(vec @ vec)
    v_unit = vec / np.sqrt(v_norm2)
    var_w = fval * float(ing.w_vec @ constants.r_matrix @ ing.w_vec) * v_norm2
    var_ratio_form = fval * ing.norm_a_r**2 / ing.a_tilde_prime**2 * v_norm2

    per_n = []
    for block, n in enumerate(config.n_grid):
        h = default_bandwidth(n, config.beta)
        flow = config.kde_flow(h)
        scale = np.sqrt(n * h**6)

        def one_rep(r, _n=n, _h=h, _flow=flow, _scale=scale, _block=block):
            cloud = sample(model, _n, config.seed, stream=(_block << 32) | r)
            kde = build_kde(cloud, _h)
            try:
                est = find_theta(kde, x_star, _flow, guard, config.a_star)
            except (DegeneracyError, ValueError) as exc:
                return {"rep": r, "failed": str(exc)}
            if not est.found:
                return {"rep": r, "failed": "no crossing"}
            proj = float((est.point - true_hit.point) @ v_unit)
            return {"rep": r, "proj": _scale * proj}

        records = _run_reps(one_rep, config.reps, config.workers)
        _check_failures(records, f"pointwise law at n={n}")
        proj = np.array([r["proj"] for r in records if "proj" in r])
        per_n.append(
            {
                "n": n,
                "h": h,
                "records": records,
                "mean": float(proj.mean()),
                "se_mean": float(proj.std(ddof=1) / np.sqrt(len(proj))),
                "variance": float(proj.var(ddof=1)),
                "variance_theory": float(var_w),
                "variance_theory_ratio_form": float(var_ratio_form),
                "excluded": int(sum(1 for r in records if "failed" in r)),
            }
        )
    return {
        "kind": "mc_pointwise",
        "seed": config.seed,
        "true_point": true_hit.point.tolist(),
        "per_n": per_n,
    }


def run_rate(
    config: ExperimentConfig,
    guard: DegeneracyGuard | None = None,
) -> dict:
    """Sup-over-time path deviation against its theoretical rate.

    For a fixed start, the median over replicates of sup_t |estimated path -
    population path| is regressed (log-log) on sqrt(log n / (n h^5)); the
    fitted slope should sit near one.
    """
    if len(config.n_grid) < 3:
        raise ValueError("rate fit needs at least 3 sample sizes")
    guard = guard or DegeneracyGuard()
    x0 = config.starts[0]

    per_n = []
    medians, xvals = [], []
    for block, n in enumerate(config.n_grid):
        h = default_bandwidth(n, config.beta)
        flow = config.kde_flow(h)
        truth = trace(config.model, x0, flow, guard)

        def one_rep(r, _n=n, _h=h, _flow=flow, _truth=truth, _block=block):
            cloud = sample(config.model, _n, config.seed, stream=(_block << 32) | r)
            kde = build_kde(cloud, _h)
            try:
                est = trace(kde, x0, _flow, guard)
            except (DegeneracyError, ValueError) as exc:
                return {"rep": r, "failed": str(exc)}
            # est uses the same time stencil; compare over the truth window
            lo = est.zero_index - _truth.zero_index
            hi = lo + len(_truth.times)
            if lo < 0 or hi > len(est.times):
                return {"rep": r, "failed": f"path terminated: {est.terminal_reason}"}
            dev = np.linalg.norm(est.points[lo:hi] - _truth.points, axis=1)
            return {"rep": r, "sup": float(dev.max())}

        records = _run_reps(one_rep, config.reps, config.workers)
        _check_failures(records, f"rate at n={n}")
        sups = np.array([r["sup"] for r in records if "sup" in r])
        med = float(np.median(sups))
        xv = float(np.sqrt(np.log(n) / (n * h**5)))
        medians.append(med)
        xvals.append(xv)
        per_n.append(
            {
                "n": n,
                "h": h,
                "records": records,
                "median_sup": med,
                "rate_value": xv,
                "excluded": int(sum(1 for r in records if "failed" in r)),
            }
        )
    slope, intercept = np.polyfit(np.log(xvals), np.log(medians), 1)
    return {
        "kind": "mc_rate",
        "seed": config.seed,
        "per_n": per_n,
        "slope": float(slope),
        "intercept": float(intercept),
    }


@dataclass(frozen=True)
class GaussFieldConfig:
    """Direct simulation of the limiting field on the rescaled ridge.

    filament is a polyline in original units; for each bandwidth the ridge is
    rescaled by 1/h, white noise is laid on a grid of the given spacing over
    the thickened rescaled ridge, and the field is the noise convolved with
    the normalized sensitivity-weighted second kernel derivatives.
    """

    h_grid: tuple
    reps: int
    seed: int
    filament: np.ndarray
    noise_spacing: float = 1.0 / 16.0
    z_grid: tuple = (-1.0, 0.0, 1.0, 2.0, 3.0)
    sample_spacing: float = 0.05
    probe_count: int = 20
    cell_budget: int = 10_000_000

    def __post_init__(self):
        if self.noise_spacing > 1.0 / 8.0:
            raise ValueError("noise_spacing must be at most 1/8 to resolve the kernel")
        if any(not 0.0 < h < 1.0 for h in self.h_grid):
            raise ValueError("all bandwidths must lie in (0, 1)")
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        object.__setattr__(self, "h_grid", tuple(float(h) for h in self.h_grid))
        object.__setattr__(self, "filament", np.asarray(self.filament, dtype=float))


def _resample_polyline(poly: np.ndarray, spacing: float) -> np.ndarray:
    seg = np.linalg.norm(np.diff(poly, axis=0), axis=1)
    arc = np.concatenate([[0.0], np.cumsum(seg)])
    total = arc[-1]
    m = max(2, int(np.ceil(total / spacing)) + 1)
    s = np.linspace(0.0, total, m)
    out = np.empty((m, 2))
    out[:, 0] = np.interp(s, arc, poly[:, 0])
    out[:, 1] = np.interp(s, arc, poly[:, 1])
    return out


def _sensitivity_vec(field: DensityField, p, guard: DegeneracyGuard) -> np.ndarray:
    d2 = field.d2(np.asarray(p, dtype=float))
    guard.check(d2, x=p)
    return grad_g(d2[0], d2[1], d2[2], guard).T @ field.grad(np.asarray(p, dtype=float))


def _field_weights(probes, cells, field, constants, h, spacing, guard):
    """Rows: normalized response of the field at each probe to each noise cell."""
    w = np.empty((len(probes), len(cells)))
    for j, x in enumerate(probes):
        a_vec = _sensitivity_vec(field, h * x, guard)
        a_norm = np.sqrt(a_vec @ constants.r_matrix @ a_vec)
        d2k = Kernel.d2(x[None, :] - cells)
        w[j] = (d2k @ a_vec) * (spacing / a_norm)
    return w


def simulate_gauss_field(
    config: GaussFieldConfig,
    field: DensityField,
    constants: KernelConstants,
    guard: DegeneracyGuard | None = None,
) -> dict:
    """Simulate the limiting field on the rescaled ridge and test its sup law.

    Per bandwidth: pointwise variances at probe points (should be one), the
    covariance between far-apart probes (should vanish beyond kernel-support
    overlap), the empirical sup law against the threshold sequence, and the
    Kolmogorov-Smirnov distance to the limit after the threshold transform.
    """
    guard = guard or DegeneracyGuard()
    c = bands.constant_c(config.filament, field, constants, guard)
    log_rec = {"kind": "gaussfield", "seed": config.seed, "c": c, "per_h": []}
    for hidx, h in enumerate(config.h_grid):
        poly_h = config.filament / h
        probes = _resample_polyline(poly_h, config.sample_spacing)
        lo = poly_h.min(axis=0) - 1.0 - config.noise_spacing
        hi = poly_h.max(axis=0) + 1.0 + config.noise_spacing
        nx = int(np.ceil((hi[0] - lo[0]) / config.noise_spacing))
        ny = int(np.ceil((hi[1] - lo[1]) / config.noise_spacing))
        if nx * ny > config.cell_budget:
            raise ExperimentError(f"noise grid {nx}x{ny} exceeds cell budget")
        gx = lo[0] + config.noise_spacing * (np.arange(nx) + 0.5)
        gy = lo[1] + config.noise_spacing * (np.arange(ny) + 0.5)
        cells = np.stack(np.meshgrid(gx, gy, indexing="ij"), axis=-1).reshape(-1, 2)
        w = _field_weights(probes, cells, field, constants, h, config.noise_spacing, guard)

        var = np.sum(w * w, axis=1)
        probe_idx = np.linspace(0, len(probes) - 1, config.probe_count).astype(int)
        var_probes = var[probe_idx]

        # farthest probe pair; beyond support overlap the covariance is exactly 0
        far_cov = float(w[0] @ w[-1])
        far_dist = float(np.linalg.norm(probes[0] - probes[-1]))

        rng = rng_for(config.seed, stream=hidx)
        noise = rng.standard_normal((len(cells), config.reps))
        u = w @ noise
        sups = np.abs(u).max(axis=0)
        far_samples = u[0] * u[-1]

        root = np.sqrt(2.0 * np.log(1.0 / h))
        zeta = np.sort((sups - root) * root - c)
        cdf = limit_law_cdf(zeta)
        k = len(zeta)
        ks = float(
            np.max(np.maximum(cdf - np.arange(k) / k, (np.arange(1, k + 1)) / k - cdf))
        )
        p_at_z = {
            float(z): float(np.mean(sups < bands.b_h_of(z, h, c))) for z in config.z_grid
        }
        log_rec["per_h"].append(
            {
                "h": h,
                "n_cells": int(len(cells)),
                "n_probes": int(len(probes)),
                "var_probe_max_abs_err": float(np.abs(var_probes - 1.0).max()),
                "far_cov_weights": far_cov,
                "far_cov_mc": float(far_samples.mean()),
                "far_cov_mc_se": float(far_samples.std(ddof=1) / np.sqrt(k)),
                "far_dist": far_dist,
                "sups": sups.tolist(),
                "ks_distance": ks,
                "p_at_z": p_at_z,
                "limit_at_z": {float(z): float(limit_law_cdf(z)) for z in config.z_grid},
            }
        )
    return log_rec


def _overlap_matrix(y: np.ndarray, nodes: int = 96) -> np.ndarray:
    """Integral of d2K(s) d2K(s + y)^T over the plane, by disk quadrature.

    The integrand lives on the intersection of two unit disks; nodes cover
    the first factor's support and the second factor's own cutoff handles
    the rest.
    """
    pts, w = unit_disk_quadrature(nodes, nodes + 32)
    a = Kernel.d2(pts)
    b = Kernel.d2(pts + y[None, :])
    return np.einsum("mi,mj,m->ij", a, b, w)


def covariance_expansion_check(
    field: DensityField,
    constants: KernelConstants,
    x,
    h: float,
    y_radii: tuple = (0.02, 0.035, 0.05),
    n_dirs: int = 12,
    nodes: int = 96,
    guard: DegeneracyGuard | None = None,
) -> dict:
    """Local quadratic expansion of the simulated field's exact covariance.

    Computes the covariance r_h(x + y, x) by quadrature for small
    displacements, fits the quadratic form of 1 - r_h, and compares it with
    the assembled local matrix (curvature of the normalization plus the
    sensitivity-weighted kernel term).  x is in rescaled units; h x must lie
    in the field's valid region.
    """
    guard = guard or DegeneracyGuard()
    x = np.asarray(x, dtype=float)

    def a_vec_at(p_resc):
        return _sensitivity_vec(field, h * p_resc, guard)

    def a_h(p_resc):
        a = a_vec_at(p_resc)
        return 1.0 / np.sqrt(a @ constants.r_matrix @ a)

    def r_h(p, q):
        m = _overlap_matrix(q - p, nodes)
        return float(a_h(p) * a_h(q) * (a_vec_at(p) @ m @ a_vec_at(q)))

    r_at_zero = r_h(x, x)
    sym_res = abs(r_h(x, x + np.array([0.03, 0.01])) - r_h(x + np.array([0.03, 0.01]), x))
    far_y = np.array([2.05, 0.0])
    far_value = abs(r_h(x, x + far_y))

    ys, vals = [], []
    for rad in y_radii:
        for kk in range(n_dirs):
            ang = 2.0 * np.pi * kk / n_dirs + 0.13
            y = rad * np.array([np.cos(ang), np.sin(ang)])
            ys.append(y)
            vals.append(1.0 - r_h(x, x + y))
    ys = np.array(ys)
    vals = np.array(vals)
    design = np.stack(
        [ys[:, 0], ys[:, 1], ys[:, 0] ** 2, 2.0 * ys[:, 0] * ys[:, 1], ys[:, 1] ** 2],
        axis=1,
    )
    coef, *_ = np.linalg.lstsq(design, vals, rcond=None)
    lam_fit = np.array([[coef[2], coef[3]], [coef[3], coef[4]]])

    # assembled prediction: normalization curvature + kernel term
    a0 = a_vec_at(x)
    ah0 = a_h(x)
    eps = 1e-5
    da = np.empty((3, 2))
    for j in range(2):
        e = np.zeros(2)
        e[j] = eps
        da[:, j] = (a_vec_at(x + e) - a_vec_at(x - e)) / (2.0 * eps)
    r_mat = constants.r_matrix
    s_row = a0 @ r_mat @ da
    lam1 = 0.5 * ah0**2 * (da.T @ r_mat @ da) - 0.5 * ah0**4 * np.outer(s_row, s_row)
    lam2 = ah0**2 * constants.b2 * bands.omega_at(a0, constants.b1)
    lam_model = lam1 + lam2
    return {
        "kind": "covariance_expansion",
        "h": float(h),
        "x": x.tolist(),
        "r_at_zero_minus_one": float(r_at_zero - 1.0),
        "symmetry_residual": float(sym_res),
        "far_displacement": far_y.tolist(),
        "far_abs_value": float(far_value),
        "linear_coef": coef[:2].tolist(),
        "lambda_fit": lam_fit.tolist(),
        "lambda_model": lam_model.tolist(),
        "lambda_kernel_term": lam2.tolist(),
        "rel_frobenius": float(
            np.linalg.norm(lam_fit - lam_model) / np.linalg.norm(lam_model)
        ),
        "rel_frobenius_kernel_only": float(
            np.linalg.norm(lam_fit - lam2) / np.linalg.norm(lam2)
        ),
    }
