#!/usr/bin/env python3
"""Equilibrium-margin sweep on the 2x2 matrix game.

Runs NPG from the uniform profile for each margin value and reports how
many iterations the equilibrium gap needs to drop below the threshold.
Larger margins converge faster.
"""

import argparse

from mpglab.harness import sweep_delta


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("-o", "--output", default="results/delta_sweep")
    ap.add_argument("--deltas", default="0.001,0.01,0.1,1,10")
    ap.add_argument("--eta", type=float, default=1.0)
    ap.add_argument("-K", "--iterations", type=int, default=3000)
    ap.add_argument("--threshold", type=float, default=1e-3)
    args = ap.parse_args()

    deltas = [float(d) for d in args.deltas.split(",")]
    report = sweep_delta(deltas, eta=args.eta, iterations=args.iterations,
                         gap_threshold=args.threshold, output=args.output)
    for key in sorted(report["deltas"], key=float):
        entry = report["deltas"][key]
        print(f"margin {key:>6s}: {entry['iterations_to_threshold']} iterations "
              f"to gap <= {args.threshold:g}")


if __name__ == "__main__":
    main()
