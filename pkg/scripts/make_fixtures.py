#!/usr/bin/env python3
"""Regenerate the bundled fixture documents used by the CLI tests and the
plotting frontend.  Deterministic: rerunning reproduces identical bytes."""

import pathlib
import sys

from ridgeband.cli import main

HERE = pathlib.Path(__file__).resolve().parent.parent
FIXTURES = HERE / "tests" / "fixtures"

RING_CFG = """\
model = ring
r0 = 1.0
s = 0.1
n = 4000
seed = 20260810
starts = circle:0,0,1.03,36
t_max = 0.4
bounds = -2,2,-2,2
normalize_v = true
merge_radius = 0.05
"""

BAND_CFG = "confidence = 0.95\n"

RATE_CFG = """\
model = elongated_gaussian
sigma1 = 1.0
sigma2 = 0.3
n_grid = 2000,8000,32000
reps = 20
seed = 20260810
starts = list:0.3,0.0
t_max = 0.035
bounds = -4,4,-3,3
step_factor = 0.006
"""

GAUSS_CFG = """\
model = elongated_gaussian
sigma1 = 2.0
sigma2 = 1.0
filament = segment:0.4,0,2.4,0,41
h_grid = 0.5,0.25,0.125
reps = 200
seed = 20260810
z_grid = -2,-1,-0.5,0,0.5,1,1.5,2,3,4
"""


def run(args):
    rc = main(args)
    if rc != 0:
        raise SystemExit(f"fixture step failed ({rc}): {args}")


def build():
    FIXTURES.mkdir(parents=True, exist_ok=True)
    (FIXTURES / "ring_config.cfg").write_text(RING_CFG, encoding="utf-8")
    (FIXTURES / "band_config.cfg").write_text(BAND_CFG, encoding="utf-8")
    (FIXTURES / "rate_config.cfg").write_text(RATE_CFG, encoding="utf-8")
    (FIXTURES / "gaussfield_config.cfg").write_text(GAUSS_CFG, encoding="utf-8")
    csv = FIXTURES / "ring_points.csv"
    est = FIXTURES / "ring_estimate.json"
    run(["simulate", "--config", str(FIXTURES / "ring_config.cfg"), "--out", str(csv), "--quiet"])
    run(
        [
            "estimate",
            str(csv),
            "--config",
            str(FIXTURES / "ring_config.cfg"),
            "--out",
            str(est),
            "--quiet",
        ]
    )
    run(
        [
            "band",
            str(est),
            str(csv),
            "--config",
            str(FIXTURES / "band_config.cfg"),
            "--out",
            str(FIXTURES / "ring_band.json"),
            "--quiet",
        ]
    )
    run(
        [
            "mc-rate",
            "--config",
            str(FIXTURES / "rate_config.cfg"),
            "--out",
            str(FIXTURES / "rate_experiment.json"),
            "--quiet",
        ]
    )
    run(
        [
            "gaussfield",
            "--config",
            str(FIXTURES / "gaussfield_config.cfg"),
            "--out",
            str(FIXTURES / "gaussfield_experiment.json"),
            "--quiet",
        ]
    )
    print(f"fixtures written to {FIXTURES}")


if __name__ == "__main__":
    sys.exit(build())
