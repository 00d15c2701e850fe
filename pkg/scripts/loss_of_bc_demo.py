"""Boundary datum g = 50 t on [0, 1]: the solution detaches and the gap settles under refinement."""

import argparse

from vhjlab.acceptance import detachment_gap


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[128, 256, 512, 1024])
    ap.add_argument("--p", type=float, default=2.0)
    ap.add_argument("--q", type=float, default=3.0)
    args = ap.parse_args()
    prev = None
    print(f"{'n':>6} {'gap(T)':>12} {'events':>8} {'rel.change':>11}")
    for n in args.sizes:
        gap, events = detachment_gap(n, args.p, args.q)
        change = "" if prev is None else f"{abs(gap - prev) / prev:11.3%}"
        print(f"{n:6d} {gap:12.6f} {events:8d} {change}")
        prev = gap


if __name__ == "__main__":
    main()
