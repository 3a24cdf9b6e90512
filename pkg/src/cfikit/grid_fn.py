"""Functions sampled on a uniform grid, with the convex-analysis calculus used throughout.

Values are stored at the nodes lo + i*h, i = 0..n_cells, and are read as the
piecewise-linear interpolant between nodes.
"""

import csv
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ._accel import kernels
from .errors import GridMismatchError, NotConvexError

TOL_CONVEX = 1e-9
DEFAULT_CELLS = 200


@dataclass(frozen=True)
class Grid:
    lo: float = 0.0
    hi: float = 1.0
    n_cells: int = DEFAULT_CELLS

    def __post_init__(self):
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)) or not self.lo < self.hi:
            raise ValueError(f"grid needs lo < hi, got [{self.lo}, {self.hi}]")
        if int(self.n_cells) != self.n_cells or self.n_cells < 2:
            raise ValueError(f"grid needs at least 2 cells, got {self.n_cells}")
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))
        object.__setattr__(self, "n_cells", int(self.n_cells))

    @property
    def h(self):
        return (self.hi - self.lo) / self.n_cells

    @property
    def n_nodes(self):
        return self.n_cells + 1

    @cached_property
    def nodes(self):
        x = self.lo + np.arange(self.n_nodes) * self.h
        x[-1] = self.hi
        x.setflags(write=False)
        return x

    @cached_property
    def midpoints(self):
        m = 0.5 * (self.nodes[:-1] + self.nodes[1:])
        m.setflags(write=False)
        return m

    def node(self, i):
        return float(self.nodes[i])

    def index_of(self, x):
        """Index of the node nearest to x."""
        i = int(round((x - self.lo) / self.h))
        return min(max(i, 0), self.n_cells)

    def check_same(self, other):
        if self != other:
            raise GridMismatchError(f"grid mismatch: {self} vs {other}")


@dataclass(frozen=True)
class SlopeInterval:
    s_lo: float
    s_hi: float

    def __post_init__(self):
        if not self.s_lo <= self.s_hi:
            raise ValueError(f"slope interval needs s_lo <= s_hi, got [{self.s_lo}, {self.s_hi}]")


class GridFunction:
    """Node values of a real function on a Grid. Immutable."""

    __slots__ = ("grid", "values")

    def __init__(self, grid, values):
        v = np.array(values, dtype=float)
        if v.shape != (grid.n_nodes,):
            raise ValueError(f"expected {grid.n_nodes} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            bad = int(np.flatnonzero(~np.isfinite(v))[0])
            raise ValueError(f"non-finite value at node {bad}")
        v.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", v)

    def __setattr__(self, name, value):
        raise AttributeError("GridFunction is immutable")

    @classmethod
    def from_callable(cls, grid, fn):
        return cls(grid, np.asarray(fn(grid.nodes.copy()), dtype=float) * np.ones(grid.n_nodes))

    @classmethod
    def constant(cls, grid, c):
        return cls(grid, np.full(grid.n_nodes, float(c)))

    def __call__(self, x):
        return np.interp(x, self.grid.nodes, self.values)

    def __len__(self):
        return self.grid.n_nodes

    def __repr__(self):
        return f"GridFunction({self.grid}, min={self.values.min():.6g}, max={self.values.max():.6g})"

    def _other(self, other):
        if isinstance(other, GridFunction):
            self.grid.check_same(other.grid)
            return other.values
        return other

    def __add__(self, other):
        return GridFunction(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridFunction(self.grid, self.values - self._other(other))

    def __rsub__(self, other):
        return GridFunction(self.grid, self._other(other) - self.values)

    def __mul__(self, c):
        return GridFunction(self.grid, self.values * self._other(c))

    __rmul__ = __mul__

    def __neg__(self):
        return GridFunction(self.grid, -self.values)

    def slopes(self):
        """First difference quotients, one per cell."""
        return np.diff(self.values) / self.grid.h

    def second_differences(self):
        """values[i+1] - 2 values[i] + values[i-1] at interior nodes."""
        v = self.values
        return v[2:] - 2.0 * v[1:-1] + v[:-2]

    def convexity_violation(self, tol=TOL_CONVEX):
        """First interior node whose second difference falls below -tol*(1+|f|), else None."""
        band = tol * (1.0 + np.abs(self.values).max())
        bad = np.flatnonzero(self.second_differences() < -band)
        return None if bad.size == 0 else int(bad[0]) + 1

    def is_convex(self, tol=TOL_CONVEX):
        return self.convexity_violation(tol) is None

    def max_abs(self):
        return float(np.abs(self.values).max())

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "value"])
            for x, v in zip(self.grid.nodes, self.values):
                w.writerow([repr(float(x)), repr(float(v))])

    @classmethod
    def read_csv(cls, path, grid=None):
        """Load a CSV written by to_csv; the grid is inferred from the x column unless given."""
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or [c.strip() for c in rows[0]] != ["x", "value"]:
            raise ValueError(f"{path}: expected header 'x,value'")
        data = np.array([[float(a), float(b)] for a, b in rows[1:]], dtype=float)
        if data.shape[0] < 3:
            raise ValueError(f"{path}: need at least 3 rows")
        x = data[:, 0]
        if grid is None:
            grid = Grid(x[0], x[-1], len(x) - 1)
        if len(x) != grid.n_nodes or not np.allclose(x, grid.nodes, atol=1e-12 * (1 + abs(grid.hi))):
            raise GridMismatchError(f"{path}: x column does not match {grid}")
        return cls(grid, data[:, 1])


def require_convex(f, tol=TOL_CONVEX, what="function"):
    i = f.convexity_violation(tol)
    if i is not None:
        raise NotConvexError(f"{what} is not convex: second difference "
                             f"{f.second_differences()[i - 1]:.3e} at node {i}")


def vex(f):
    """Greatest convex grid function below f (lower convex hull of the node graph)."""
    x = np.ascontiguousarray(f.grid.nodes, dtype=float)
    y = np.ascontiguousarray(f.values, dtype=float)
    idx = kernels.lower_hull(x, y)
    out = np.interp(x, x[idx], y[idx])
    # the hull passes through its support nodes exactly
    out[idx] = y[idx]
    return GridFunction(f.grid, np.minimum(out, y))


def cav(f):
    """Least concave grid function above f."""
    return -vex(-f)


def subgradient_range(f, i, tol=TOL_CONVEX):
    """(left, right) difference quotients at node i; missing sides are -inf / +inf."""
    require_convex(f, tol)
    n = f.grid.n_cells
    if not 0 <= i <= n:
        raise IndexError(f"node {i} outside 0..{n}")
    d = f.slopes()
    left = d[i - 1] if i > 0 else -np.inf
    right = d[i] if i < n else np.inf
    return float(left), float(right)


def tangent(f, y, side):
    """Affine function through node y with the left or right difference quotient as slope."""
    require_convex(f)
    n = f.grid.n_cells
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    if (side == "left" and y == 0) or (side == "right" and y == n):
        raise ValueError(f"{side} slope unavailable at endpoint node {y}")
    d = f.slopes()
    s = d[y - 1] if side == "left" else d[y]
    x = f.grid.nodes
    return GridFunction(f.grid, f.values[y] + s * (x - x[y]))


def chord(f, a, b):
    """Affine interpolant of f between nodes a < b, extended to the whole grid."""
    if not a < b:
        raise ValueError(f"chord needs a < b, got {a}, {b}")
    x = f.grid.nodes
    s = (f.values[b] - f.values[a]) / (x[b] - x[a])
    return GridFunction(f.grid, f.values[a] + s * (x - x[a]))


def bregman_perturbation(u, a, b):
    """Perturbation h = vex(u + g) - u, where g is the gap between u and its end tangents on [a, b].

    h vanishes outside [a, b] and is identically zero exactly when u on [a, b]
    is the maximum of at most three affine pieces.
    """
    require_convex(u, what="u")
    if not a < b:
        raise ValueError(f"need a < b, got {a}, {b}")
    x = u.grid.nodes
    d = u.slopes()
    seg = slice(a, b + 1)
    t_a = u.values[a] + d[a] * (x[seg] - x[a])
    t_b = u.values[b] + d[b - 1] * (x[seg] - x[b])
    g = np.zeros_like(x)
    g[seg] = u.values[seg] - np.maximum(t_a, t_b)
    g = np.maximum(g, 0.0)
    h = vex(GridFunction(u.grid, u.values + g)).values - u.values
    h[: a + 1] = 0.0
    h[b:] = 0.0
    # round-off below the scale of u is not a perturbation
    h[np.abs(h) < 1e-13 * (1.0 + u.max_abs())] = 0.0
    return GridFunction(u.grid, np.maximum(h, 0.0))
