"""Screening with type-dependent participation constraints.

Indirect utilities of incentive-compatible, individually rational mechanisms
form the interval between the outside-option envelope and the identity, with
slopes in [0, 1]. Revenue and weighted welfare are linear in the utility, so
the optimal mechanism is an extreme point found by concavification.
"""

from dataclasses import dataclass

import numpy as np

from ..cfi import Cfi, contact_masks, verify_extreme
from ..grid_fn import Grid, GridFunction, SlopeInterval
from ..measure import SignedMeasure
from ..solve import Bounded, concavify_solve, design_lower_boundary, one_kink_family, two_kink_family, verify_optimality
from .common import Mechanism, extract_allocation, ironed_runs, node_runs, oracle_gap

REVENUE = "revenue"


@dataclass(frozen=True)
class Welfare:
    """Weighted welfare: Pareto weights on agents' surplus plus alpha times profit net of cost."""

    pareto: object = None        # GridFunction or callable; None means zero weights
    alpha: float = 1.0
    cost: float = 0.0


def _grid_for(F, n_cells):
    return Grid(F.lo, F.hi, n_cells)


def screening_cfi(F, menu, n_cells=200):
    """Outside-option envelope below, identity above, slopes in [0, 1]."""
    if menu.kind != "screening":
        raise ValueError("screening needs a screening menu")
    if (0.0, 0.0) not in menu.items:
        raise ValueError("screening menus must contain the null item (0, 0)")
    for x, t in menu.items:
        if not (0.0 <= x <= 1.0) or t < 0:
            raise ValueError(f"menu item ({x}, {t}) needs x in [0,1] and t >= 0")
    g = _grid_for(F, n_cells)
    lower = menu.lower_boundary(g)
    upper = GridFunction(g, g.nodes.copy())
    return Cfi(lower, upper, SlopeInterval(0.0, 1.0))


def mu_revenue(F, grid):
    """Revenue measure: density -(2f + theta f') and endpoint atoms theta*f, signed -/+ at lo/hi."""
    def psi(t):
        return -(2.0 * F.pdf(t) + t * F.dpdf(t))
    return SignedMeasure.from_density(grid, psi,
                                      atom_lo=-grid.lo * float(F.pdf(grid.lo)),
                                      atom_hi=grid.hi * float(F.pdf(grid.hi)))


def _pareto_at(pareto, x, grid):
    if pareto is None:
        return np.zeros_like(x)
    if isinstance(pareto, GridFunction):
        return np.interp(x, pareto.grid.nodes, pareto.values)
    return np.asarray(pareto(x), dtype=float) * np.ones_like(x)


def mu_welfare(F, grid, pareto=None, alpha=1.0, cost=0.0):
    """Welfare measure: density pi f - alpha (2f + (theta - c) f'), atoms alpha (theta - c) f."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")

    def psi(t):
        f = F.pdf(t)
        return _pareto_at(pareto, t, grid) * f - alpha * (2.0 * f + (t - cost) * F.dpdf(t))
    return SignedMeasure.from_density(grid, psi,
                                      atom_lo=-alpha * (grid.lo - cost) * float(F.pdf(grid.lo)),
                                      atom_hi=alpha * (grid.hi - cost) * float(F.pdf(grid.hi)))


def objective_measure(F, grid, objective):
    if objective == REVENUE or objective is None:
        return mu_revenue(F, grid)
    if isinstance(objective, Welfare):
        return mu_welfare(F, grid, objective.pareto, objective.alpha, objective.cost)
    raise ValueError(f"unknown objective {objective!r}")


def transfers(u, x):
    """Transfers from the envelope identity t = theta x - u."""
    return GridFunction(u.grid, u.grid.nodes * x.values - u.values)


def revenue_from_transfers(F, u):
    """Expected transfer with the allocation constant on each cell (exact for piecewise-linear u)."""
    g = u.grid
    x = g.nodes
    d = u.slopes()
    t_cell = x[:-1] * d - u.values[:-1]
    return float(np.dot(t_cell, np.diff(F.cdf(x))))


def solve_screening(F, menu, objective=REVENUE, n_cells=200, oracle=True, tol=None):
    """Optimal screening mechanism for a menu of outside options.

    Returns a Mechanism whose cutoffs hold 'theta_star' (first type served the
    deterministic allocation 1) and whose intervals hold the ironing
    (bunching) intervals and the exclusion set (types taking their default
    option).
    """
    c = screening_cfi(F, menu, n_cells)
    mu = objective_measure(F, c.grid, objective)
    res = concavify_solve(c, mu, Bounded.UPPER_AFFINE)
    u = res.u
    rep = verify_optimality(c, u, mu, partition=res.partition, tol=tol)
    if not rep.overall:
        rep = verify_optimality(c, u, mu, tol=tol)
    ext = verify_extreme(c, u)
    gap = oracle_gap(c, mu, res.objective) if oracle else None
    dx = GridFunction(c.grid, menu.default_allocation(c.grid.nodes))
    x = extract_allocation(c, u, dx)
    t = transfers(u, x)
    nodes = c.grid.nodes
    iron = [(float(nodes[a]), float(nodes[b])) for a, b in res.ironing]
    return Mechanism(
        utility=u, allocation=x, transfer=t, value=res.objective,
        cutoffs={"theta_star": float(nodes[res.cutoff])},
        certified=bool(rep.overall and ext.ok), oracle_gap=gap, report=rep,
        intervals={"ironing": iron, "exclusion": exclusion_set(c, u, res.cutoff)},
    )


def exclusion_set(c, u, cutoff):
    """Type intervals below the cutoff that take their default option (not ironed)."""
    at_lo, _, _ = contact_masks(c, u)
    mask = at_lo.copy()
    mask[cutoff + 1:] = False
    for a, b in ironed_runs(c, u):
        mask[a + 1:b] = False
    x = c.grid.nodes
    return [(float(x[a]), float(x[b])) for a, b in node_runs(mask)]


def design_default_menu(F, welfare, prices, n_cells=200, two_kink=False, share=0.5, jobs=1):
    """Scan option-to-own menus {(0,0),(1,p)} (or two-kink mixtures) for the planner.

    The monopolist maximizes revenue given the menu; the planner scores the
    outcome with the welfare measure. Returns (best parameter, utility, value, scan).
    """
    g = _grid_for(F, n_cells)
    template = Cfi(GridFunction(g, np.zeros(g.n_nodes)), GridFunction(g, g.nodes.copy()),
                   SlopeInterval(0.0, 1.0))
    family = two_kink_family(g, prices, share) if two_kink else one_kink_family(g, prices)
    inner = mu_revenue(F, g)
    outer = mu_welfare(F, g, welfare.pareto, welfare.alpha, welfare.cost)
    return design_lower_boundary(family, inner, outer, template, jobs=jobs)
