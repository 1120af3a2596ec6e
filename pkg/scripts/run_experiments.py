#!/usr/bin/env python3
"""Run the full experiment battery into a results directory.

Usage: python scripts/run_experiments.py [outdir] [--seed N] [--quick]

Writes one JSON document per experiment (sup-deviation law, pointwise law,
path rate, Gaussian-field sup law) using the same configurations as the
acceptance suite, at full scale by default or reduced scale with --quick.
"""

import argparse
import pathlib
import sys

from ridgeband.cli import main as cli_main

CONFIGS = {
    "mc_sup": """\
model = elongated_gaussian
sigma1 = 1.0
sigma2 = 0.3
n_grid = {n_sup}
reps = {reps_small}
seed = {seed}
starts = segment:0.2,0.08,0.5,0.08,4
t_max = 0.2
bounds = -4,4,-3,3
normalize_v = true
""",
    "mc_pointwise": """\
model = elongated_gaussian
sigma1 = 1.0
sigma2 = 0.4
n_grid = {n_pw}
reps = {reps_large}
seed = {seed}
starts = list:1.4,0.0
x_star = 1.4,0.0
t_max = 0.3
bounds = -5,5,-3,3
normalize_v = true
beta = 8.0
""",
    "mc_rate": """\
model = elongated_gaussian
sigma1 = 1.0
sigma2 = 0.25
n_grid = 2000,8000,32000
reps = {reps_rate}
seed = {seed}
starts = list:0.3,0.0
t_max = 0.035
bounds = -4,4,-3,3
step_factor = 0.006
""",
    "gaussfield": """\
model = elongated_gaussian
sigma1 = 2.0
sigma2 = 1.0
filament = segment:0.4,0,2.4,0,41
h_grid = 0.5,0.25,0.125
reps = {reps_large}
seed = {seed}
z_grid = -2,-1,-0.5,0,0.5,1,1.5,2,3,4
""",
}

COMMANDS = {
    "mc_sup": "mc-sup",
    "mc_pointwise": "mc-pointwise",
    "mc_rate": "mc-rate",
    "gaussfield": "gaussfield",
}


def run(outdir: pathlib.Path, seed: int, quick: bool) -> int:
    outdir.mkdir(parents=True, exist_ok=True)
    fills = dict(
        seed=seed,
        n_sup="2000,8000" if quick else "2000,8000,32000",
        n_pw="8000" if quick else "50000",
        reps_small=20 if quick else 100,
        reps_large=50 if quick else 400,
        reps_rate=10 if quick else 50,
    )
    for name, template in CONFIGS.items():
        cfg_path = outdir / f"{name}.cfg"
        cfg_path.write_text(template.format(**fills), encoding="utf-8")
        out_path = outdir / f"{name}.json"
        rc = cli_main(
            [COMMANDS[name], "--config", str(cfg_path), "--out", str(out_path)]
        )
        if rc != 0:
            print(f"{name}: exit code {rc}", file=sys.stderr)
            return rc
    print(f"all experiment documents in {outdir}")
    return 0


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("outdir", nargs="?", default="results")
    ap.add_argument("--seed", type=int, default=20260810)
    ap.add_argument("--quick", action="store_true")
    ns = ap.parse_args()
    sys.exit(run(pathlib.Path(ns.outdir), ns.seed, ns.quick))
