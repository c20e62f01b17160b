"""Invariance defect of the center graph versus amplitude and order.

For each truncation order, prints the maximum chart-coordinate distance
of integrated trajectories to the graph at several radii, and the fitted
log-log slope.  The slope should be at least the truncation order.
"""

import argparse

import numpy as np

from delaymanifolds import (DelayModel, build_system, build_wc, decompose,
                            make_grid)
from delaymanifolds.verify import check_positive_invariance


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--nodes", type=int, default=24)
    ap.add_argument("--orders", type=int, nargs="+", default=[2, 3, 4])
    ap.add_argument("--radii", type=float, nargs="+",
                    default=[1e-2, 3e-3, 1e-3])
    ap.add_argument("--horizon", type=float, default=2.0)
    args = ap.parse_args()

    m = DelayModel(["-(pi/2)*(x + x**2)"], "1", 1.0)
    d = decompose(m, make_grid(1.0, 1, args.nodes))
    for order in args.orders:
        wc = build_wc(build_system(m, d, order))
        maxima = []
        for r in args.radii:
            rep = check_positive_invariance(m, wc, r, args.horizon,
                                            tol=np.inf)
            maxima.append(max(rep.max_defect, 1e-300))
        slope = np.polyfit(np.log10(args.radii), np.log10(maxima), 1)[0]
        cells = "  ".join(f"{v:.2e}" for v in maxima)
        print(f"order {order}:  {cells}  slope {slope:.2f}")


if __name__ == "__main__":
    main()
