"""Discrete ergodic constant with zero source on [0, 1] against the closed form, by resolution."""

import argparse

from vhjlab.domain import build_grid
from vhjlab.ergodic import ergodic_solve, interval_constant


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[64, 128, 256, 512])
    ap.add_argument("--pairs", default="2,3 2,4 3,4 3,5")
    args = ap.parse_args()
    pairs = [tuple(float(v) for v in s.split(",")) for s in args.pairs.split()]
    print(f"{'p':>4} {'q':>4} {'exact':>10}" + "".join(f"{'n=' + str(n):>12}" for n in args.sizes))
    for p, q in pairs:
        exact = interval_constant(p, q)
        row = [ergodic_solve(build_grid("interval:0:1", n), p, q, 0.0).c for n in args.sizes]
        print(f"{p:4g} {q:4g} {exact:10.4f}" + "".join(f"{c:12.4f}" for c in row))


if __name__ == "__main__":
    main()
