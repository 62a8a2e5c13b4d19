#!/usr/bin/env python3
"""Noise-strength sweep for both entangler families under GHZ-replacement noise.

Writes variance-vs-noise CSV tables (analytic deep limit, finite-depth
analytic, Monte Carlo) plus a JSON sidecar with the run parameters and
prediction checks.  Equivalent to ``ltm-lab fig3``.
"""

import argparse
import math

import numpy as np

from ltmlab.cli import run_fig3


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=6, help="register size (>= 3)")
    parser.add_argument("--p-grid", default="0.05:0.95:19",
                        help="noise grid as start:stop:count or comma list")
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--samples", type=int, default=512,
                        help="Monte-Carlo samples per point (0 skips MC)")
    parser.add_argument("--theta", type=float, default=math.pi / 20,
                        help="rotation angle of the slow entangler")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--check", action="store_true",
                        help="fail loudly if the scaling predictions are violated")
    args = parser.parse_args()

    if ":" in args.p_grid:
        start, stop, count = args.p_grid.split(":")
        p_values = np.linspace(float(start), float(stop), int(count)).tolist()
    else:
        p_values = [float(x) for x in args.p_grid.split(",")]

    report = run_fig3(
        n=args.n,
        p_values=p_values,
        seed=args.seed,
        out=args.out,
        n_samples=args.samples,
        theta=args.theta,
        check=args.check,
    )
    print(f"sweep table:       {report['sweep']}")
    print(f"convergence table: {report['convergence']}")
    print(f"rows written:      {len(report['rows'])}")


if __name__ == "__main__":
    main()
