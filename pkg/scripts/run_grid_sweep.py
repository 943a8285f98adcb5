#!/usr/bin/env python3
"""Sweep the bundled 3x4 grid (cohort entry probability x interim size) and
write one OC row per scenario.  Iterations default to a quick smoke run;
raise them for real operating characteristics."""

import argparse
import pathlib
import sys

from platformsim.cli import main as cli_main

ROOT = pathlib.Path(__file__).resolve().parents[1]


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--iterations", type=int, default=100)
    ap.add_argument("--seed", type=int, default=20)
    ap.add_argument("--workers", default="auto")
    ap.add_argument("--out", default="out/grid_sweep")
    args = ap.parse_args()
    return cli_main(["grid",
                     "--config", str(ROOT / "configs" / "grid_base.yaml"),
                     "--axes", str(ROOT / "configs" / "grid_axes.yaml"),
                     "--iterations", str(args.iterations),
                     "--seed", str(args.seed),
                     "--workers", str(args.workers),
                     "--out", args.out])


if __name__ == "__main__":
    sys.exit(main())
