"""Finite signed measures on a grid and the stochastic-order predicates used for optimality.

A measure carries atoms at nodes and a density that is constant on each cell.
Integrals of piecewise-linear functions against such a measure are exact
with trapezoid node weights, which is how the LP oracle integrates too.
"""

import csv
from dataclasses import dataclass

import numpy as np

from ._accel import kernels
from .grid_fn import Grid, GridFunction

ORDER_TOL = 1e-9


class SignedMeasure:
    """Atoms at grid nodes plus a piecewise-constant density. Immutable."""

    __slots__ = ("grid", "atoms", "density")

    def __init__(self, grid, atoms=None, density=None):
        a = np.zeros(grid.n_nodes) if atoms is None else np.array(atoms, dtype=float)
        d = np.zeros(grid.n_cells) if density is None else np.array(density, dtype=float)
        if a.shape != (grid.n_nodes,):
            raise ValueError(f"atoms must have one entry per node ({grid.n_nodes}), got {a.shape}")
        if d.shape != (grid.n_cells,):
            raise ValueError(f"density must have one entry per cell ({grid.n_cells}), got {d.shape}")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(d))):
            raise ValueError("measure has non-finite entries")
        a.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "atoms", a)
        object.__setattr__(self, "density", d)

    def __setattr__(self, name, value):
        raise AttributeError("SignedMeasure is immutable")

    def __repr__(self):
        return (f"SignedMeasure({self.grid}, mass={self.total_mass():.6g}, "
                f"tv={self.total_variation():.6g})")

    # construction helpers

    @classmethod
    def from_atoms(cls, grid, pairs):
        """Build from (node index, mass) pairs; repeated nodes are rejected."""
        a = np.zeros(grid.n_nodes)
        seen = set()
        for i, m in pairs:
            if i in seen:
                raise ValueError(f"duplicate atom at node {i}")
            seen.add(i)
            a[i] = m
        return cls(grid, a)

    @classmethod
    def from_density(cls, grid, psi, atom_lo=0.0, atom_hi=0.0):
        """Density psi (callable, sampled at cell midpoints) plus endpoint atoms."""
        d = np.asarray(psi(grid.midpoints.copy()), dtype=float) * np.ones(grid.n_cells)
        a = np.zeros(grid.n_nodes)
        a[0] += atom_lo
        a[-1] += atom_hi
        return cls(grid, a, d)

    @classmethod
    def lebesgue(cls, grid):
        return cls(grid, None, np.ones(grid.n_cells))

    @classmethod
    def dirac(cls, grid, i, mass=1.0):
        a = np.zeros(grid.n_nodes)
        a[i] = mass
        return cls(grid, a)

    def _check(self, other):
        self.grid.check_same(other.grid)

    def __add__(self, other):
        self._check(other)
        return SignedMeasure(self.grid, self.atoms + other.atoms, self.density + other.density)

    def __sub__(self, other):
        self._check(other)
        return SignedMeasure(self.grid, self.atoms - other.atoms, self.density - other.density)

    def __neg__(self):
        return SignedMeasure(self.grid, -self.atoms, -self.density)

    def __mul__(self, c):
        return SignedMeasure(self.grid, c * self.atoms, c * self.density)

    __rmul__ = __mul__

    # integrals

    def node_weights(self):
        """Weights w with sum_i w_i u_i = integral of the piecewise-linear u."""
        h = self.grid.h
        w = self.atoms.copy()
        w[:-1] += 0.5 * h * self.density
        w[1:] += 0.5 * h * self.density
        return w

    def nodal(self):
        """The measure that puts the node weights as atoms (same integrals of piecewise-linear u)."""
        return SignedMeasure(self.grid, self.node_weights())

    def is_atomic(self):
        return not np.any(self.density)

    def integrate(self, f):
        """Integral of the piecewise-linear interpolant of f."""
        if isinstance(f, GridFunction):
            self.grid.check_same(f.grid)
            f = f.values
        return float(np.dot(self.node_weights(), f))

    def _cells(self, a, b):
        return slice(a, b)

    def total_mass(self, over=None, closed=(True, True)):
        """Mass over node range [a, b]; closed=(False, ...) drops the endpoint atom."""
        a, b = _range(self.grid, over)
        m = self.density[a:b].sum() * self.grid.h
        m += _endpoint_atoms(self.atoms, a, b, closed).sum()
        return float(m)

    def barycenter(self, over=None, closed=(True, True)):
        """Unnormalized first moment over node range [a, b]."""
        a, b = _range(self.grid, over)
        x = self.grid.nodes
        mid = self.grid.midpoints
        m = float(np.dot(self.density[a:b], mid[a:b]) * self.grid.h)
        m += float(np.dot(_endpoint_atoms(self.atoms, a, b, closed), x[a:b + 1]))
        return m

    def total_variation(self):
        return float(np.abs(self.atoms).sum() + np.abs(self.density).sum() * self.grid.h)

    def stop_loss(self, t):
        """Integral of max(x - t, 0), exact for the piecewise-constant density."""
        x = self.grid.nodes
        left, right = x[:-1], x[1:]
        lo = np.maximum(left, t)
        part = np.where(right > t, 0.5 * ((right - t) ** 2 - (lo - t) ** 2), 0.0)
        return float(np.dot(self.density, part) + np.dot(self.atoms, np.maximum(x - t, 0.0)))

    def stop_loss_nodes(self):
        """Stop-loss values at every node (exact there)."""
        x = np.ascontiguousarray(self.grid.nodes, dtype=float)
        return np.asarray(kernels.stop_loss_nodes(x, np.ascontiguousarray(self.node_weights())))

    def stop_loss_midpoints(self):
        """Stop-loss values at every cell midpoint."""
        g = self.grid
        h = g.h
        x, mid = g.nodes, g.midpoints
        dens_mass = self.density * h
        # cells strictly to the right of cell k contribute mass*(mid_j - t)
        cm = np.append(np.cumsum(dens_mass[::-1])[::-1][1:], 0.0)
        cxm = np.append(np.cumsum((dens_mass * mid)[::-1])[::-1][1:], 0.0)
        # atoms at nodes k+1..n
        am = np.cumsum(self.atoms[::-1])[::-1][1:]
        axm = np.cumsum((self.atoms * x)[::-1])[::-1][1:]
        return (cxm - mid * cm) + self.density * h * h / 8.0 + (axm - mid * am)

    def restrict(self, a, b, frac_a=1.0, frac_b=1.0):
        """Measure restricted to node range [a, b], keeping fractions of the endpoint atoms."""
        atoms = np.zeros(self.grid.n_nodes)
        dens = np.zeros(self.grid.n_cells)
        atoms[a:b + 1] = self.atoms[a:b + 1]
        if a == b:
            atoms[a] *= min(frac_a, frac_b) if frac_a != frac_b else frac_a
        else:
            atoms[a] *= frac_a
            atoms[b] *= frac_b
        dens[a:b] = self.density[a:b]
        return SignedMeasure(self.grid, atoms, dens)

    # io

    def to_csv(self, directory):
        import os
        os.makedirs(directory, exist_ok=True)
        x = self.grid.nodes
        with open(os.path.join(directory, "atoms.csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "mass"])
            for i in np.flatnonzero(self.atoms):
                w.writerow([repr(float(x[i])), repr(float(self.atoms[i]))])
        with open(os.path.join(directory, "density.csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["cell_left", "psi"])
            for xl, p in zip(x[:-1], self.density):
                w.writerow([repr(float(xl)), repr(float(p))])

    @classmethod
    def read_csv(cls, directory, grid=None):
        import os
        with open(os.path.join(directory, "density.csv"), newline="") as fh:
            rows = list(csv.reader(fh))
        if [c.strip() for c in rows[0]] != ["cell_left", "psi"]:
            raise ValueError("density.csv: expected header 'cell_left,psi'")
        cells = np.array([[float(a), float(b)] for a, b in rows[1:]])
        if grid is None:
            h = cells[1, 0] - cells[0, 0]
            grid = Grid(cells[0, 0], cells[-1, 0] + h, len(cells))
        if len(cells) != grid.n_cells:
            raise ValueError("density.csv: cell count does not match grid")
        atoms = np.zeros(grid.n_nodes)
        with open(os.path.join(directory, "atoms.csv"), newline="") as fh:
            rows = list(csv.reader(fh))
        if [c.strip() for c in rows[0]] != ["x", "mass"]:
            raise ValueError("atoms.csv: expected header 'x,mass'")
        for xs, ms in rows[1:]:
            i = grid.index_of(float(xs))
            if abs(grid.nodes[i] - float(xs)) > 1e-9 * grid.h:
                raise ValueError(f"atoms.csv: atom at {xs} is not on a grid node")
            atoms[i] += float(ms)
        return cls(grid, atoms, cells[:, 1])


def _range(grid, over):
    if over is None:
        return 0, grid.n_cells
    a, b = over
    if not (0 <= a <= b <= grid.n_cells) or int(a) != a or int(b) != b:
        raise ValueError(f"subinterval {over} is not a node range of {grid}")
    return int(a), int(b)


def _endpoint_atoms(atoms, a, b, closed):
    seg = atoms[a:b + 1].copy()
    if not closed[0]:
        seg[0] = 0.0
    if not closed[1]:
        seg[-1] = 0.0
    return seg


def default_tol(*measures):
    return ORDER_TOL * (1.0 + sum(m.total_variation() for m in measures))


def hahn_decompose(m):
    """Split m into nonnegative parts (pos, neg) with m = pos - neg, per atom and per cell."""
    pos = SignedMeasure(m.grid, np.maximum(m.atoms, 0.0), np.maximum(m.density, 0.0))
    neg = SignedMeasure(m.grid, np.maximum(-m.atoms, 0.0), np.maximum(-m.density, 0.0))
    return pos, neg


@dataclass(frozen=True)
class OrderCheck:
    """Outcome of an order predicate: holds iff slack >= -tol."""
    holds: bool
    slack: float
    tol: float
    reason: str = ""

    def __bool__(self):
        return self.holds


def _stop_loss_all(d):
    s = d.stop_loss_nodes()
    if d.is_atomic():
        return s
    return np.concatenate([s, d.stop_loss_midpoints()])


def _test_points(d):
    x = d.grid.nodes
    return x if d.is_atomic() else np.concatenate([x, d.grid.midpoints])


def _check(parts, tol):
    reason, slack = min(parts, key=lambda p: p[1])
    return OrderCheck(slack >= -tol, float(slack), tol, reason if slack < -tol else "")


def cx_check(m, n, tol=None):
    """m <=cx n: equal mass, equal first moment, and stop-loss of n - m nonnegative."""
    m.grid.check_same(n.grid)
    tol = default_tol(m, n) if tol is None else tol
    d = n - m
    parts = [("mass", -abs(d.total_mass())), ("barycenter", -abs(d.barycenter())),
             ("stop_loss", float(_stop_loss_all(d).min()))]
    return _check(parts, tol)


def icx_check(m, n, tol=None):
    """m <=icx n: equal mass and stop-loss of n - m nonnegative."""
    m.grid.check_same(n.grid)
    tol = default_tol(m, n) if tol is None else tol
    d = n - m
    parts = [("mass", -abs(d.total_mass())), ("stop_loss", float(_stop_loss_all(d).min()))]
    return _check(parts, tol)


def dcx_check(m, n, tol=None):
    """m <=dcx n: equal mass and the left stop-loss of n - m nonnegative."""
    m.grid.check_same(n.grid)
    tol = default_tol(m, n) if tol is None else tol
    d = n - m
    t = _test_points(d)
    # integral of (t - x)^+ = stop-loss(t) - (first moment - t * mass)
    left = _stop_loss_all(d) - (d.barycenter() - t * d.total_mass())
    parts = [("mass", -abs(d.total_mass())), ("left_stop_loss", float(left.min()))]
    return _check(parts, tol)


def cx_pointmass_check(m, p, mass, tol=None):
    """m <=cx mass * delta_p, which also requires mass >= 0."""
    tol = default_tol(m) if tol is None else tol
    if mass < -tol:
        return OrderCheck(False, float(mass), tol, "negative mass")
    res = cx_check(m, SignedMeasure.dirac(m.grid, p, mass), tol)
    if mass < 0 and mass < res.slack:
        return OrderCheck(res.holds, float(mass), tol, res.reason)
    return res


def leq_cx(m, n, tol=None):
    return cx_check(m, n, tol).holds


def leq_icx(m, n, tol=None):
    return icx_check(m, n, tol).holds


def leq_dcx(m, n, tol=None):
    return dcx_check(m, n, tol).holds


def leq_cx_pointmass(m, p, mass, tol=None):
    return cx_pointmass_check(m, p, mass, tol).holds


def stop_loss(m, t):
    return m.stop_loss(t)


def total_mass(m, over=None, closed=(True, True)):
    return m.total_mass(over, closed)


def barycenter(m, over=None, closed=(True, True)):
    return m.barycenter(over, closed)
