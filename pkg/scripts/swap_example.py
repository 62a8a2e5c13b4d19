#!/usr/bin/env python3
"""Run the two-qubit SWAP walkthrough and print the report.

Thin wrapper around ``ltm-lab swap-example`` for people who prefer a
script; every analytic identity is cross-checked internally and a
NumericalFailure is raised on any mismatch.
"""

import argparse
import json

from ltmlab.cli import run_swap_example


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--samples", type=int, default=20_000,
                        help="Monte-Carlo samples per depth (0 skips MC)")
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--out", default=None,
                        help="directory for the JSON report (optional)")
    args = parser.parse_args()
    report = run_swap_example(n_samples=args.samples, seed=args.seed, out=args.out)
    print(json.dumps(report, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
