"""Random instance generators for property tests and benchmarks."""

import numpy as np

from .cfi import Cfi
from .grid_fn import Grid, GridFunction, SlopeInterval
from .measure import SignedMeasure


def random_convex(grid, rng, n_pieces=4, curvature=1.0):
    """Max of random lines plus a random quadratic; convex on the grid."""
    x = grid.nodes
    q = curvature * rng.uniform(0.1, 1.0) * (x - rng.uniform(grid.lo, grid.hi)) ** 2
    lines = [rng.normal(0, 1) + rng.normal(0, 1) * x for _ in range(n_pieces)]
    return GridFunction(grid, np.maximum(q, np.max(lines, axis=0) - 1.0))


def random_cfi(rng, n_cells=40, tight_slopes=None):
    """A CFI with a smooth strictly convex upper boundary and a kinked lower boundary."""
    grid = Grid(0.0, 1.0, n_cells)
    x = grid.nodes
    alpha = rng.uniform(0.3, 1.5)
    x0 = rng.uniform(-0.3, 1.3)
    upper = alpha * (x - x0) ** 2 + rng.normal(0, 0.3) * x + rng.normal(0, 0.3)
    lines = []
    for _ in range(rng.integers(1, 5)):
        y = rng.uniform(0, 1)
        s = 2 * alpha * (y - x0)
        uy = alpha * (y - x0) ** 2
        lines.append(uy + s * (x - y) - rng.uniform(0.02, 0.3))
    lower = np.max(lines, axis=0) + (upper - alpha * (x - x0) ** 2)
    lower = np.minimum(lower, upper)
    lo_f = GridFunction(grid, lower)
    up_f = GridFunction(grid, upper)
    d_all = np.concatenate([lo_f.slopes(), up_f.slopes()])
    tight = rng.random(2) < 0.5 if tight_slopes is None else (tight_slopes, tight_slopes)
    s_lo = d_all.min() - (0.0 if tight[0] else rng.uniform(0.05, 0.5))
    s_hi = d_all.max() + (0.0 if tight[1] else rng.uniform(0.05, 0.5))
    return Cfi(lo_f, up_f, SlopeInterval(float(s_lo), float(s_hi)))


def random_affine_cfi(rng, n_cells=40, mode="upper"):
    """An affinely bounded CFI: affine upper of extremal slope meeting lower at one end.

    mode='upper': upper has slope s_hi and lower(lo) = upper(lo).
    mode='lower': upper has slope s_lo and lower(hi) = upper(hi).
    """
    grid = Grid(0.0, 1.0, n_cells)
    x = grid.nodes
    s_lo = rng.uniform(-1.0, 0.5)
    s_hi = s_lo + rng.uniform(0.5, 2.0)
    t = x if mode == "upper" else 1.0 - x
    # lower: max of lines through the touching end with slope s_lo-ish and a few lower lines
    k = rng.integers(1, 4)
    slopes = np.sort(rng.uniform(0, 1, k)) * (s_hi - s_lo)
    lines = [np.zeros_like(t)]
    for s in slopes:
        lines.append(s * t - rng.uniform(0.02, 0.6) * s)
    base = np.max(lines, axis=0)
    c0 = rng.normal(0, 0.3)
    if mode == "upper":
        lower = c0 + s_lo * x + base
        upper = c0 + s_hi * x
    else:
        lower = c0 + s_hi * x + base
        upper = c0 + s_lo * x + (s_hi - s_lo)
        # shift so both meet at x = 1
        lower = lower - lower[-1] + upper[-1]
    lower = np.minimum(lower, upper)
    return Cfi(GridFunction(grid, lower), GridFunction(grid, upper), SlopeInterval(s_lo, s_hi))


def random_measure(grid, rng, n_atoms=3, density_scale=1.0, smooth=True):
    """Random endpoint/interior atoms plus a random density (smooth or rough)."""
    a = np.zeros(grid.n_nodes)
    idx = rng.choice(grid.n_nodes, size=min(n_atoms, grid.n_nodes), replace=False)
    a[idx] = rng.normal(0, 1, idx.size)
    mid = grid.midpoints
    if smooth:
        k = rng.integers(1, 4)
        d = sum(rng.normal(0, 1) * np.cos(np.pi * j * (mid - grid.lo) / (grid.hi - grid.lo))
                for j in range(k + 1))
    else:
        d = rng.normal(0, 1, grid.n_cells)
    return SignedMeasure(grid, a, density_scale * d)


def random_discrete_measure(grid, rng, n_atoms=6):
    a = np.zeros(grid.n_nodes)
    idx = rng.choice(grid.n_nodes, size=min(n_atoms, grid.n_nodes), replace=False)
    a[idx] = rng.uniform(0.0, 1.0, idx.size)
    return SignedMeasure(grid, a)
