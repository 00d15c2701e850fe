"""Discrete domains: the reference interval and the projected disc.

Both grids carry the distance to the boundary ``d``, a boundary flag per node,
the collar/core split used by the barrier constructions, and a neighbour table
(one lower and one upper neighbour per axis) that the stencils in
:mod:`vhjlab.discrete_ops` consume. Grids are immutable once built.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class GridError(ValueError):
    pass


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Grid:
    """Node set with boundary semantics.

    ``neighbors[k, 0]`` / ``neighbors[k, 1]`` hold the lower / upper neighbour
    along axis ``k`` (-1 when absent); ``spacing`` has the matching distances
    (nan when absent).
    """

    dim: int
    points: np.ndarray
    h: float
    is_boundary: np.ndarray
    d: np.ndarray
    delta: float
    neighbors: np.ndarray
    spacing: np.ndarray
    kind: str
    extent: tuple
    collar: np.ndarray = field(init=False)
    core: np.ndarray = field(init=False)

    def __post_init__(self):
        interior = ~self.is_boundary
        # shell nodes |d - delta| <= h/2 go to the collar
        in_collar = interior & (self.d <= self.delta + 0.5 * self.h)
        object.__setattr__(self, "collar", _frozen(np.flatnonzero(in_collar)))
        object.__setattr__(self, "core", _frozen(np.flatnonzero(interior & ~in_collar)))

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def x(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def interior(self) -> np.ndarray:
        return np.flatnonzero(~self.is_boundary)

    @property
    def boundary(self) -> np.ndarray:
        return np.flatnonzero(self.is_boundary)

    @property
    def diameter(self) -> float:
        if self.kind == "interval":
            a, b = self.extent
            return b - a
        return 2.0 * self.extent[0]

    @property
    def min_spacing(self) -> float:
        return float(np.nanmin(self.spacing))

    def deepest_node(self) -> int:
        """Node of maximal ``d``; lowest index on ties."""
        return int(np.argmax(self.d))

    def to_csv(self, path) -> None:
        header = ["index", "x", "y"][: self.dim + 1] + ["d", "is_boundary"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for i in range(self.size):
                w.writerow([i, *(repr(float(c)) for c in self.points[i]),
                            repr(float(self.d[i])), int(self.is_boundary[i])])


def default_delta(diameter: float, h: float) -> float:
    return min(0.2 * diameter, 10.0 * h)


def build_interval_grid(a: float, b: float, n: int, delta: float | None = None) -> Grid:
    """``n + 1`` equispaced nodes on ``[a, b]`` with both endpoints on the boundary."""
    if not b > a:
        raise GridError(f"need b > a, got a={a}, b={b}")
    if n < 4:
        raise GridError(f"need n >= 4 cells for the stencils, got n={n}")
    h = (b - a) / n
    idx = np.arange(n + 1)
    x = a + h * idx
    x[-1] = b
    d = np.minimum(x - a, b - x)
    d[0] = d[-1] = 0.0
    is_b = np.zeros(n + 1, dtype=bool)
    is_b[[0, -1]] = True

    nb = np.full((1, 2, n + 1), -1, dtype=np.int64)
    nb[0, 0, 1:] = idx[:-1]
    nb[0, 1, :-1] = idx[1:]
    sp = np.full((1, 2, n + 1), np.nan)
    sp[0, 0, 1:] = np.diff(x)
    sp[0, 1, :-1] = np.diff(x)

    if delta is None:
        delta = default_delta(b - a, h)
    return Grid(dim=1, points=_frozen(x[:, None]), h=h, is_boundary=_frozen(is_b),
                d=_frozen(d), delta=float(delta), neighbors=_frozen(nb),
                spacing=_frozen(sp), kind="interval", extent=(float(a), float(b)))


def build_disc_grid(radius: float, n_per_axis: int, delta: float | None = None) -> Grid:
    """Cartesian lattice clipped to the closed disc.

    Lattice nodes with a 4-neighbour outside the disc become boundary nodes and
    are moved radially onto the circle.
    """
    if not radius > 0:
        raise GridError(f"need radius > 0, got {radius}")
    if n_per_axis < 8:
        raise GridError(f"need n_per_axis >= 8, got {n_per_axis}")
    h = 2.0 * radius / n_per_axis
    ticks = -radius + h * np.arange(n_per_axis + 1)
    X, Y = np.meshgrid(ticks, ticks, indexing="ij")
    inside = np.hypot(X, Y) <= radius * (1 + 1e-12)

    lattice_id = np.full(inside.shape, -1, dtype=np.int64)
    lattice_id[inside] = np.arange(inside.sum())
    I, J = np.nonzero(inside)
    npts = I.size

    def lookup(ii, jj):
        ok = (ii >= 0) & (ii <= n_per_axis) & (jj >= 0) & (jj <= n_per_axis)
        out = np.full(ii.shape, -1, dtype=np.int64)
        out[ok] = lattice_id[ii[ok], jj[ok]]
        return out

    nb = np.empty((2, 2, npts), dtype=np.int64)
    nb[0, 0] = lookup(I - 1, J)
    nb[0, 1] = lookup(I + 1, J)
    nb[1, 0] = lookup(I, J - 1)
    nb[1, 1] = lookup(I, J + 1)
    is_b = (nb < 0).any(axis=(0, 1))
    if (~is_b).sum() < 5:
        raise GridError("disc grid has fewer than 5 interior nodes")

    pts = np.column_stack([X[inside], Y[inside]])
    r = np.hypot(pts[:, 0], pts[:, 1])
    pts[is_b] *= (radius / r[is_b])[:, None]
    d = radius - np.hypot(pts[:, 0], pts[:, 1])
    d[is_b] = 0.0

    sp = np.full(nb.shape, np.nan)
    for k in range(2):
        for s in range(2):
            ok = nb[k, s] >= 0
            sp[k, s, ok] = np.linalg.norm(pts[nb[k, s, ok]] - pts[ok], axis=1)

    if delta is None:
        delta = default_delta(2 * radius, h)
    return Grid(dim=2, points=_frozen(pts), h=h, is_boundary=_frozen(is_b),
                d=_frozen(d), delta=float(delta), neighbors=_frozen(nb),
                spacing=_frozen(sp), kind="disc", extent=(float(radius),))


def build_grid(domain: str, n: int, delta: float | None = None) -> Grid:
    """Build from a short domain string: ``"interval"``, ``"interval:a:b"``, ``"disc"``, ``"disc:R"``."""
    name, *args = domain.split(":")
    vals = [float(v) for v in args]
    if name == "interval":
        a, b = vals if vals else (0.0, 1.0)
        return build_interval_grid(a, b, n, delta)
    if name == "disc":
        (R,) = vals if vals else (1.0,)
        return build_disc_grid(R, n, delta)
    raise GridError(f"unknown domain {domain!r}")


def read_grid_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(points, d, is_boundary)`` from a file written by :meth:`Grid.to_csv`."""
    rows = list(csv.DictReader(Path(path).open()))
    cols = [c for c in ("x", "y") if c in rows[0]]
    pts = np.array([[float(r[c]) for c in cols] for r in rows])
    d = np.array([float(r["d"]) for r in rows])
    isb = np.array([bool(int(r["is_boundary"])) for r in rows])
    return pts, d, isb
