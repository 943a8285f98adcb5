#!/usr/bin/env python3
"""Simulate one trajectory of the bundled example scenario and extract the
plot-ready tables from its dump."""

import argparse
import pathlib
import sys

from platformsim.cli import main as cli_main

ROOT = pathlib.Path(__file__).resolve().parents[1]


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=25)
    ap.add_argument("--out", default="out/demo_trial")
    args = ap.parse_args()
    rc = cli_main(["simulate",
                   "--config", str(ROOT / "configs" / "example_scenario.yaml"),
                   "--seed", str(args.seed), "--out", args.out])
    if rc != 0:
        return rc
    return cli_main(["plot-data", "--dump", f"{args.out}/trajectory.json",
                     "--out", args.out])


if __name__ == "__main__":
    sys.exit(main())
