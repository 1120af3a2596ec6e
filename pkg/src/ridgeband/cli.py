"""Command-line interface: estimation, bands, experiments, constants.

Configuration is a flat key=value file ('#' starts a comment).  Every result
document is JSON with stable key order, a schema identifier, and no
timestamps, so identical inputs produce identical bytes.  Exit codes: 0
success, 1 usage or parse error, 2 runtime failure (no start could even be
traced), 3 degenerate result (no ridge points, or too many failed
replicates).
"""

from __future__ import annotations

import argparse
import importlib.resources
import json
import sys

import jsonschema
import numpy as np

from . import bands, mc
from .density import (
    ElongatedGaussian,
    Ring,
    build_kde,
    default_bandwidth,
    load_points_csv,
    sample,
    write_points_csv,
)
from .eigenfield import DegeneracyError, DegeneracyGuard
from .flow import FlowSettings
from .kernel import compute_constants
from .ridge import estimate_filament

__all__ = ["main", "UsageError"]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2
EXIT_DEGENERATE = 3


class UsageError(Exception):
    """Bad invocation, config, or input file."""


class RuntimeFailure(Exception):
    """Nothing could be computed (for example, every start failed to trace)."""


class DegenerateResult(Exception):
    """The run completed but produced no usable result."""


# ---------------------------------------------------------------- config ---

_CONFIG_KEYS = {
    "model": str,
    "sigma1": float,
    "sigma2": float,
    "r0": float,
    "s": float,
    "n": int,
    "seed": int,
    "h": float,
    "beta": float,
    "starts": str,
    "step": float,
    "step_factor": float,
    "t_max": float,
    "bounds": str,
    "normalize_v": bool,
    "a_star": float,
    "merge_radius": float,
    "delta": float,
    "z": float,
    "confidence": float,
    "n_grid": str,
    "reps": int,
    "z_grid": str,
    "h_grid": str,
    "noise_spacing": float,
    "sample_spacing": float,
    "x_star": str,
    "filament": str,
    "workers": int,
    "out": str,
}


def parse_config_text(text: str) -> dict:
    """Flat key=value lines into a {key: raw string} mapping; unknown keys fail."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise UsageError(f"config line {lineno}: unknown key {key!r}")
        if key in out:
            raise UsageError(f"config line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def emit_config_text(config: dict) -> str:
    return "\n".join(f"{k} = {v}" for k, v in sorted(config.items())) + "\n"


def _convert(config, key, default=None, required=False):
    if key not in config:
        if required:
            raise UsageError(f"config key {key!r} is required for this command")
        return default
    raw = config[key]
    typ = _CONFIG_KEYS[key]
    try:
        if typ is bool:
            if raw.lower() in ("true", "1", "yes"):
                return True
            if raw.lower() in ("false", "0", "no"):
                return False
            raise ValueError(raw)
        return typ(raw)
    except ValueError:
        raise UsageError(f"config key {key!r}: cannot parse {raw!r} as {typ.__name__}") from None


def _parse_floats(raw: str, key: str):
    try:
        return [float(p) for p in raw.split(",") if p.strip()]
    except ValueError:
        raise UsageError(f"config key {key!r}: expected comma-separated numbers") from None


def _parse_starts(raw: str) -> np.ndarray:
    kind, _, rest = raw.partition(":")
    try:
        if kind == "circle":
            cx, cy, r, count = _parse_floats(rest, "starts")
            if r <= 0 or count < 1:
                raise ValueError
            t = 2 * np.pi * np.arange(int(count)) / int(count)
            return np.stack([cx + r * np.cos(t), cy + r * np.sin(t)], axis=-1)
        if kind == "segment":
            x0, y0, x1, y1, count = _parse_floats(rest, "starts")
            if count < 1:
                raise ValueError
            s = np.linspace(0.0, 1.0, int(count))
            return np.stack([x0 + (x1 - x0) * s, y0 + (y1 - y0) * s], axis=-1)
        if kind == "list":
            pts = [tuple(map(float, pair.split(","))) for pair in rest.split(";") if pair.strip()]
            if not pts or any(len(p) != 2 for p in pts):
                raise ValueError
            return np.array(pts)
    except (ValueError, UsageError):
        pass
    raise UsageError(
        f"config key 'starts': cannot parse {raw!r}; use circle:cx,cy,r,count, "
        "segment:x0,y0,x1,y1,count, or list:x,y;x,y;..."
    )


def _parse_bounds(raw: str):
    vals = _parse_floats(raw, "bounds")
    if len(vals) != 4:
        raise UsageError("config key 'bounds': expected xmin,xmax,ymin,ymax")
    return tuple(vals)


def _model_from_config(config):
    name = _convert(config, "model", required=True)
    if name == "elongated_gaussian":
        return ElongatedGaussian(
            _convert(config, "sigma1", required=True), _convert(config, "sigma2", required=True)
        )
    if name == "ring":
        return Ring(_convert(config, "r0", required=True), _convert(config, "s", required=True))
    raise UsageError(f"unknown model {name!r}")


# ------------------------------------------------------------ documents ---


def _schema(name):
    path = importlib.resources.files("ridgeband.schemas").joinpath(f"{name}.v1.json")
    return json.loads(path.read_text(encoding="utf-8"))


def validate_document(doc: dict) -> None:
    name = doc.get("schema", "").split("/")[1:2]
    if not name:
        raise ValueError(f"document carries no schema id: {doc.get('schema')!r}")
    jsonschema.validate(doc, _schema(name[0]))


def _jsonify(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonify(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    return obj

def _round_sig(obj, digits):
    if isinstance(obj, float):
        return float(f"{obj:.{digits}g}")
    if isinstance(obj, dict):
        return {k: _round_sig(v, digits) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_round_sig(v, digits) for v in obj]
    return obj


def _write_document(doc: dict, out_path, quiet: bool) -> None:
    doc = _jsonify(doc)
    validate_document(doc)
    payload = json.dumps(doc, sort_keys=True, indent=1) + "\n"
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(payload)
        if not quiet:
            print(f"wrote {doc['schema']} to {out_path}")
    else:
        sys.stdout.write(payload)


# ------------------------------------------------------------- commands ---


def cmd_constants(args, config):
    nodes = args.nodes or 64
    consts = compute_constants(nodes)
    doc = {
        "schema": "ridgeband/constants/v1",
        "mu2": consts.mu2,
        "b1": consts.b1,
        "b2": consts.b2,
        "integral_of_k": consts.integral_of_k,
        "r_matrix": consts.r_matrix.tolist(),
        "quadrature_nodes": nodes,
    }
    doc = _round_sig(_jsonify(doc), 12)
    _write_document(doc, args.out, args.quiet)
    return EXIT_OK


def cmd_simulate(args, config):
    model = _model_from_config(config)
    n = _convert(config, "n", required=True)
    seed = args.seed if args.seed is not None else _convert(config, "seed", required=True)
    out = args.out or _convert(config, "out")
    if not out:
        raise UsageError("simulate requires an output path (--out or config out=)")
    if n < 1:
        raise UsageError("config key 'n' must be at least 1")
    write_points_csv(out, sample(model, n, seed))
    if not args.quiet:
        print(f"wrote {n} sampled points to {out}")
    return EXIT_OK


def _estimation_pieces(config, cloud, seed):
    n = cloud.n
    h = _convert(config, "h")
    if h is None:
        h = default_bandwidth(n, _convert(config, "beta", default=1.0))
    if not 0 < h:
        raise UsageError("bandwidth must be positive")
    bounds_raw = config.get("bounds")
    if bounds_raw:
        bounds = _parse_bounds(bounds_raw)
    else:
        lo = cloud.points.min(axis=0) - h
        hi = cloud.points.max(axis=0) + h
        bounds = (float(lo[0]), float(hi[0]), float(lo[1]), float(hi[1]))
    flow = FlowSettings(
        step=_convert(config, "step", default=h / 4.0),
        t_max=_convert(config, "t_max", required=True),
        bounds=bounds,
        direction="both",
        normalize_v=_convert(config, "normalize_v", default=False),
    )
    guard = DegeneracyGuard(_convert(config, "delta", default=1e-8))
    return h, flow, guard


def cmd_estimate(args, config):
    cloud = load_points_csv(args.points_csv)
    seed = args.seed if args.seed is not None else _convert(config, "seed")
    try:
        h, flow, guard = _estimation_pieces(config, cloud, seed)
        starts = _parse_starts(config["starts"]) if "starts" in config else None
        if starts is None:
            raise UsageError("config key 'starts' is required for estimate")
        kde = build_kde(cloud, h)
        est = estimate_filament(
            kde,
            starts,
            flow,
            guard,
            a_star=_convert(config, "a_star"),
            merge_radius=_convert(config, "merge_radius"),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    hits_doc = []
    for idx, hit in enumerate(est.hits):
        if hit is None:
            reason = next(msg for i, msg in est.failures if i == idx)
            hits_doc.append({"start_index": idx, "found": False, "error": reason})
        else:
            hits_doc.append(
                {
                    "start_index": idx,
                    "found": hit.found,
                    "theta": hit.theta,
                    "point": hit.point.tolist(),
                    "lambda2": hit.lambda2,
                    "a_prime": hit.a_prime,
                }
            )
    doc = {
        "schema": "ridgeband/estimate/v1",
        "n": cloud.n,
        "h": h,
        "seed": seed,
        "config": dict(config),
        "starts": starts.tolist(),
        "hits": hits_doc,
        "polyline": est.polyline.tolist(),
        "failures": [[i, msg] for i, msg in est.failures],
    }
    _write_document(doc, args.out or config.get("out"), args.quiet)
    if len(est.failures) == len(est.starts):
        raise RuntimeFailure("every start failed to trace")
    if len(est.polyline) == 0:
        raise DegenerateResult("no ridge points found")
    return EXIT_OK


def cmd_band(args, config):
    with open(args.filament_json, "r", encoding="utf-8") as fh:
        filament_doc = json.load(fh)
    validate_document(filament_doc)
    if filament_doc.get("schema") != "ridgeband/estimate/v1":
        raise UsageError("band requires a ridgeband/estimate/v1 document")
    cloud = load_points_csv(args.points_csv)
    if cloud.n != filament_doc["n"]:
        raise UsageError(
            f"sample size mismatch: document has n={filament_doc['n']}, CSV has {cloud.n}"
        )
    h = filament_doc["h"]
    config_h = _convert(config, "h")
    if config_h is not None and abs(config_h - h) > 1e-12:
        raise UsageError(f"bandwidth mismatch: document has h={h}, config has {config_h}")
    if "n" in config and _convert(config, "n") != cloud.n:
        raise UsageError("config n disagrees with the data; n is bound to the CSV")
    z = _convert(config, "z")
    confidence = _convert(config, "confidence")
    if z is None and confidence is None:
        raise UsageError("band requires config key 'z' or 'confidence'")
    if z is None:
        if not 0 < confidence < 1:
            raise UsageError("confidence must lie in (0, 1)")
        z = bands.z_from_level(1.0 - confidence)
    polyline = np.array(filament_doc["polyline"])
    if len(polyline) < 2:
        raise DegenerateResult("filament polyline has fewer than 2 vertices")
    kde = build_kde(cloud, h)
    guard = DegeneracyGuard(_convert(config, "delta", default=1e-8))
    result = bands.band_radii(polyline, kde, compute_constants(), cloud.n, h, z, guard)
    doc = {
        "schema": "ridgeband/band/v1",
        "n": cloud.n,
        "h": h,
        "z": result.z,
        "confidence": confidence,
        "c": result.c,
        "b_h": result.b_h,
        "config": dict(config),
        "polyline": polyline.tolist(),
        "radii": result.radii.tolist(),
    }
    _write_document(doc, args.out or config.get("out"), args.quiet)
    return EXIT_OK


def _experiment_config(config, seed):
    model = _model_from_config(config)
    n_grid = tuple(int(v) for v in _parse_floats(config.get("n_grid", ""), "n_grid"))
    if not n_grid:
        raise UsageError("config key 'n_grid' is required for experiments")
    z_raw = config.get("z_grid")
    kwargs = dict(
        model=model,
        n_grid=n_grid,
        reps=_convert(config, "reps", required=True),
        seed=seed,
        starts=_parse_starts(config["starts"]) if "starts" in config else np.empty((0, 2)),
        t_max=_convert(config, "t_max", required=True),
        bounds=_parse_bounds(config["bounds"]) if "bounds" in config else (-6.0, 6.0, -6.0, 6.0),
        beta=_convert(config, "beta", default=1.0),
        normalize_v=_convert(config, "normalize_v", default=False),
        a_star=_convert(config, "a_star"),
        workers=_convert(config, "workers", default=1),
    )
    if "step" in config:
        kwargs["analytic_step"] = _convert(config, "step")
    if "step_factor" in config:
        kwargs["step_factor"] = _convert(config, "step_factor")
    if z_raw:
        kwargs["z_grid"] = tuple(_parse_floats(z_raw, "z_grid"))
    try:
        return mc.ExperimentConfig(**kwargs)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _run_experiment(args, config, runner, needs_x_star=False):
    seed = args.seed if args.seed is not None else _convert(config, "seed", required=True)
    exp = _experiment_config(config, seed)
    consts = compute_constants()
    if needs_x_star:
        raw = config.get("x_star")
        if not raw:
            raise UsageError("config key 'x_star' is required for mc-pointwise")
        x_star = _parse_floats(raw, "x_star")
        if len(x_star) != 2:
            raise UsageError("config key 'x_star' must be x,y")
        out = runner(exp, np.array(x_star), consts)
    else:
        out = runner(exp, consts) if runner is not mc.run_rate else runner(exp)
    out["schema"] = "ridgeband/experiment/v1"
    out["config"] = dict(config)
    _write_document(out, args.out or config.get("out"), args.quiet)
    return EXIT_OK


def cmd_gaussfield(args, config):
    seed = args.seed if args.seed is not None else _convert(config, "seed", required=True)
    model = _model_from_config(config)
    raw = config.get("filament")
    if not raw:
        raise UsageError("config key 'filament' is required for gaussfield")
    filament = _parse_starts(raw)
    h_grid = tuple(_parse_floats(config.get("h_grid", ""), "h_grid"))
    if not h_grid:
        raise UsageError("config key 'h_grid' is required for gaussfield")
    try:
        gcfg = mc.GaussFieldConfig(
            h_grid=h_grid,
            reps=_convert(config, "reps", required=True),
            seed=seed,
            filament=filament,
            noise_spacing=_convert(config, "noise_spacing", default=1.0 / 16.0),
            sample_spacing=_convert(config, "sample_spacing", default=0.05),
            z_grid=tuple(_parse_floats(config["z_grid"], "z_grid"))
            if "z_grid" in config
            else (-1.0, 0.0, 1.0, 2.0, 3.0),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    out = mc.simulate_gauss_field(gcfg, model, compute_constants())
    out["schema"] = "ridgeband/experiment/v1"
    out["config"] = dict(config)
    _write_document(out, args.out or config.get("out"), args.quiet)
    return EXIT_OK


# ----------------------------------------------------------------- main ---


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser():
    parser = _Parser(prog="ridgeband", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text, **extra):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="flat key=value configuration file")
        p.add_argument("--seed", type=int, help="overrides the config seed")
        p.add_argument("--out", help="output path")
        p.add_argument("--quiet", action="store_true", help="suppress status lines")
        for arg, kw in extra.items():
            p.add_argument(arg, **kw)
        return p

    add("constants", "print kernel constants as JSON", **{"--nodes": dict(type=int)})
    add("simulate", "sample a model to a CSV of points")
    add("estimate", "estimate the ridge from a points CSV", points_csv=dict())
    add(
        "band",
        "confidence band radii for an estimated ridge",
        filament_json=dict(),
        points_csv=dict(),
    )
    add("mc-sup", "sup-deviation law experiment")
    add("mc-pointwise", "pointwise projection law experiment")
    add("mc-rate", "path deviation rate experiment")
    add("gaussfield", "limiting Gaussian field simulation")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        config = {}
        if getattr(args, "config", None):
            try:
                with open(args.config, "r", encoding="utf-8") as fh:
                    text = fh.read()
            except OSError as exc:
                raise UsageError(f"cannot read config: {exc}") from exc
            config = parse_config_text(text)
        dispatch = {
            "constants": cmd_constants,
            "simulate": cmd_simulate,
            "estimate": cmd_estimate,
            "band": cmd_band,
            "mc-sup": lambda a, c: _run_experiment(a, c, mc.run_sup_deviation),
            "mc-pointwise": lambda a, c: _run_experiment(
                a, c, mc.run_pointwise, needs_x_star=True
            ),
            "mc-rate": lambda a, c: _run_experiment(a, c, mc.run_rate),
            "gaussfield": cmd_gaussfield,
        }
        return dispatch[args.command](args, config)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RuntimeFailure, DegeneracyError, bands.FlatFilamentError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (DegenerateResult, mc.ExperimentError) as exc:
        print(f"degenerate result: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
