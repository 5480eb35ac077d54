#!/usr/bin/env python3
"""Diagonal coupling sweep for the worked example states.

Writes the sweep CSV (analytic and grid-oracle indicator, success
probability, negativity per coupling) used to plot the interior maximum
at g = 2.
"""

import argparse
import sys

from cheshire import ExperimentConfig, PhotonKet
from cheshire.cli import format_sweep_csv, sweep_rows


def example_config() -> ExperimentConfig:
    prep = PhotonKet.normalized([1.0, 0.0, 1.0, 1.0])
    post = PhotonKet.normalized([1.0, 0.0, 1.0, -1.0])
    return ExperimentConfig(prep=prep, post=post, g_a=2.0, g_b=2.0)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--g-min", type=float, default=0.0)
    parser.add_argument("--g-max", type=float, default=8.0)
    parser.add_argument("--steps", type=int, default=161)
    parser.add_argument("--out", metavar="PATH", help="CSV destination (default stdout)")
    args = parser.parse_args(argv)

    rows = sweep_rows(example_config(), args.g_min, args.g_max, args.steps)
    text = format_sweep_csv(rows)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
