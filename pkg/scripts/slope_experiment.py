"""Fitted large-time slope of the mean against -max(c, 0) for several constant sources."""

import argparse

from vhjlab.acceptance import slope_run
from vhjlab.domain import build_grid
from vhjlab.ergodic import ergodic_solve


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sources", type=float, nargs="+", default=[-5.0, -1.0, 0.0, 1.0])
    ap.add_argument("--n", type=int, default=256)
    ap.add_argument("--T", type=float, default=20.0)
    ap.add_argument("--p", type=float, default=2.0)
    ap.add_argument("--q", type=float, default=3.0)
    args = ap.parse_args()
    grid = build_grid("interval:0:1", args.n)
    print(f"{'f':>6} {'c':>10} {'-c+':>10} {'slope':>10}")
    for f in args.sources:
        c = ergodic_solve(grid, args.p, args.q, f).c
        s = slope_run(args.p, args.q, f, args.n, args.T)
        print(f"{f:6g} {c:10.4f} {-max(c, 0.0):10.4f} {s:10.4f}")


if __name__ == "__main__":
    main()
