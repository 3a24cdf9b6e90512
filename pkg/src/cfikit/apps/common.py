"""Menus, mechanisms and their output files, shared by the application pipelines."""

import os
from dataclasses import dataclass, field

import numpy as np

from ..cfi import contact_masks
from ..errors import SolverError
from ..grid_fn import GridFunction
from ..lp import LpStatus, cfi_lp

LP_GAP_TOL = 1e-6


@dataclass(frozen=True)
class Menu:
    """Outside options as (slope, intercept) pairs of the affine payoffs they give.

    Screening items are (allocation x, transfer t) with payoff x*theta - t;
    delegation items are (mean action a, expected b-value) with payoff a*theta + b.
    """

    items: tuple
    kind: str = "screening"

    def __post_init__(self):
        if self.kind not in ("screening", "delegation"):
            raise ValueError(f"unknown menu kind {self.kind!r}")
        items = tuple((float(a), float(b)) for a, b in self.items)
        if not items:
            raise ValueError("menu is empty")
        object.__setattr__(self, "items", items)

    def lines(self):
        if self.kind == "screening":
            return [(x, -t) for x, t in self.items]
        return list(self.items)

    def envelope(self, x):
        """Best outside payoff at each point of x."""
        x = np.asarray(x, dtype=float)
        return np.max([a * x + b for a, b in self.lines()], axis=0)

    def default_allocation(self, x):
        """Slope of the chosen item; ties go to the larger slope (right derivative)."""
        x = np.asarray(x, dtype=float)
        lines = self.lines()
        vals = np.array([a * x + b for a, b in lines])
        best = vals.max(axis=0)
        slopes = np.array([a for a, _ in lines])
        scale = 1e-12 * (1.0 + np.abs(best))
        cand = np.where(vals >= best - scale, slopes[:, None], -np.inf)
        return cand.max(axis=0)

    def lower_boundary(self, grid):
        return GridFunction(grid, self.envelope(grid.nodes))


def null_menu():
    return Menu(((0.0, 0.0),))


def posted_price_menu(p):
    """The option-to-own menu {(0,0), (1,p)}."""
    return Menu(((0.0, 0.0), (1.0, float(p))))


@dataclass
class Mechanism:
    """Indirect utility with its allocation, transfers and diagnostics."""

    utility: GridFunction
    allocation: GridFunction
    transfer: GridFunction
    value: float
    cutoffs: dict = field(default_factory=dict)
    certified: bool = False
    oracle_gap: float = None
    report: object = None
    intervals: dict = field(default_factory=dict)

    def summary(self):
        lines = [f"value = {self.value:.10g}"]
        for k, v in self.cutoffs.items():
            lines.append(f"{k} = {v:.10g}")
        for k, v in self.intervals.items():
            lines.append(f"{k} = " + ", ".join(f"[{a:.6g}, {b:.6g}]" for a, b in v))
        lines.append(f"certified = {self.certified}")
        lines.append("oracle_gap = " + ("skipped" if self.oracle_gap is None else f"{self.oracle_gap:.3e}"))
        return "\n".join(lines)

    def write(self, out_dir):
        """Write indirect_utility.csv, allocation.csv, transfers.csv and report.txt."""
        os.makedirs(out_dir, exist_ok=True)
        paths = {
            "indirect_utility": os.path.join(out_dir, "indirect_utility.csv"),
            "allocation": os.path.join(out_dir, "allocation.csv"),
            "transfers": os.path.join(out_dir, "transfers.csv"),
            "report": os.path.join(out_dir, "report.txt"),
        }
        self.utility.to_csv(paths["indirect_utility"])
        self.allocation.to_csv(paths["allocation"])
        self.transfer.to_csv(paths["transfers"])
        with open(paths["report"], "w") as fh:
            fh.write(self.summary() + "\n")
            if self.report is not None:
                fh.write("\n" + str(self.report) + "\n")
        return paths


def oracle_gap(c, mu, value):
    """Relative gap between value and the LP optimum, or inf if the LP fails."""
    try:
        res = cfi_lp(c, mu)
    except SolverError:
        return float("inf")
    if res.status != LpStatus.OPTIMAL:
        return float("inf")
    return abs(value - res.objective) / (1.0 + abs(res.objective))


def extract_allocation(c, u_star, default_x=None):
    """Allocation implied by an extreme point.

    Right difference quotients of u_star, except that cells where u_star runs
    along the lower boundary take the default allocation, and ironed runs
    (affine stretches strictly above the lower boundary that end on it at both
    sides) take the average of the default allocation over the run. The result
    is clamped to the slope interval; the last node repeats the last cell.
    """
    g = c.grid
    n = g.n_cells
    d = u_star.slopes()
    x = np.append(d, d[-1])
    at_lo, _, _ = contact_masks(c, u_star)
    if default_x is not None:
        dx = default_x.values
        on_lower = np.zeros(n + 1, dtype=bool)
        on_lower[:n] = at_lo[:n] & at_lo[1:]
        x[on_lower] = dx[on_lower]
        for a, b in ironed_runs(c, u_star):
            seg = dx[a:b + 1]
            avg = np.trapezoid(seg, g.nodes[a:b + 1]) / (g.nodes[b] - g.nodes[a])
            x[a:b] = avg
        if on_lower[n - 1]:
            x[n] = dx[n]
    x = np.clip(x, c.slopes.s_lo, c.slopes.s_hi)
    return GridFunction(g, x)


def ironed_runs(c, u_star):
    """Maximal runs (a, b) of nodes strictly above the lower boundary inside, on it at both ends."""
    at_lo, at_hi, _ = contact_masks(c, u_star)
    runs = []
    idx = np.flatnonzero(at_lo)
    for a, b in zip(idx[:-1], idx[1:]):
        if b - a >= 2 and not at_hi[a + 1:b].any():
            runs.append((int(a), int(b)))
    return runs


def node_runs(mask):
    """Maximal runs of True as (first, last) index pairs."""
    out = []
    i = 0
    m = np.asarray(mask, dtype=bool)
    while i < m.size:
        if m[i]:
            j = i
            while j + 1 < m.size and m[j + 1]:
                j += 1
            out.append((i, j))
            i = j + 1
        else:
            i += 1
    return out
