"""Delegation with a menu of outside options and quadratic loss b(a) = -a^2/2.

The agent's indirect utility lies between the outside-option envelope and
theta^2/2, with slopes (mean actions) in the type support. With a constant
upward bias of the principal and a log-concave density, the optimum is an
action floor: outside options for low types, a tangent piece, then full
discretion.
"""

import numpy as np

from ..cfi import Cfi, verify_extreme
from ..errors import PreconditionError
from ..grid_fn import Grid, GridFunction, SlopeInterval
from ..measure import SignedMeasure
from ..solve import verify_optimality
from ._cutoff import tangent_cutoff_solve
from .common import Mechanism, Menu, extract_allocation, oracle_gap
from .distributions import is_log_concave


def default_delegation_menu(lo=0.0, hi=1.0):
    """The two extreme actions, each taken for sure."""
    return Menu(((lo, -lo * lo / 2.0), (hi, -hi * hi / 2.0)), kind="delegation")


def lottery_item(mean, var=0.0):
    """Mean action and expected b-value of a lottery with the given mean and variance."""
    return (float(mean), -(mean * mean + var) / 2.0)


def delegation_cfi(F, beta, menu, n_cells=200):
    """Interval and objective measure for the delegation problem.

    beta may be a constant or a callable of the type (the measure is built
    for both; the cutoff solver needs a constant).
    """
    if menu.kind != "delegation":
        raise ValueError("delegation needs a delegation menu")
    g = Grid(F.lo, F.hi, n_cells)
    x = g.nodes
    upper = GridFunction(g, x * x / 2.0)
    lower = menu.lower_boundary(g)
    tol = 1e-9 * (1.0 + np.abs(upper.values).max())
    for i, name in ((0, "lower"), (-1, "upper")):
        if abs(lower.values[i] - upper.values[i]) > tol:
            raise PreconditionError(f"menu envelope is not tangent to theta^2/2 at the {name} end of the support")
    for a, b in menu.items:
        if b > -a * a / 2.0 + tol:
            raise PreconditionError(f"menu item ({a}, {b}) beats the agent's ideal payoff")
    c = Cfi(lower, upper, SlopeInterval(F.lo, F.hi))
    return c, mu_delegation(F, g, beta)


def mu_delegation(F, grid, beta):
    if callable(beta):
        def psi(t):
            b = beta(t)
            db = (beta(t + 1e-6) - beta(t - 1e-6)) / 2e-6
            return F.pdf(t) - (db * F.pdf(t) + b * F.dpdf(t))
        b_lo, b_hi = float(beta(grid.lo)), float(beta(grid.hi))
    else:
        def psi(t):
            return F.pdf(t) - beta * F.dpdf(t)
        b_lo = b_hi = float(beta)
    return SignedMeasure.from_density(grid, psi, atom_lo=-b_lo * float(F.pdf(grid.lo)),
                                      atom_hi=b_hi * float(F.pdf(grid.hi)))


def solve_delegation(F, beta, menu, n_cells=200, oracle=True, tol=None):
    """Optimal action floor.

    cutoffs: theta_star (first type with full discretion; also the action
    floor), ell (last type taking an outside option), and the scheme's
    off-grid estimate of theta_star.
    """
    if callable(beta):
        raise PreconditionError("the cutoff solver needs a constant bias")
    if not is_log_concave(F):
        raise PreconditionError("the type density is not log-concave")
    c, mu = delegation_cfi(F, beta, menu, n_cells)
    sol = tangent_cutoff_solve(c, mu)
    u = sol.u
    rep = verify_optimality(c, u, mu, tol=tol)
    if not rep.overall and sol.searched != "all":
        wide = tangent_cutoff_solve(c, mu, exhaustive=True)
        if wide.objective > sol.objective:
            sol, u = wide, wide.u
            rep = verify_optimality(c, u, mu, tol=tol)
    ext = verify_extreme(c, u)
    gap = oracle_gap(c, mu, sol.objective) if oracle else None
    x = c.grid.nodes
    dx = GridFunction(c.grid, menu.default_allocation(x))
    a = extract_allocation(c, u, dx)
    b_val = GridFunction(c.grid, u.values - x * a.values)
    theta_star = float(x[sol.k])
    return Mechanism(
        utility=u, allocation=a, transfer=b_val, value=sol.objective,
        cutoffs={"theta_star": theta_star, "ell": float(x[sol.l]), "action_floor": theta_star,
                 "theta_star_scheme": sol.seed_theta, "theta0": sol.theta0},
        certified=bool(rep.overall and ext.ok), oracle_gap=gap, report=rep,
        intervals={"delegation_set": [(theta_star, float(F.hi))]},
    )


def delegation_comparative_statics(F, beta, menu_1, menu_2, n_cells=200, oracle=True):
    """Cutoffs (theta*_1, theta*_2) for nested menus whose envelopes satisfy u0_1 >= u0_2."""
    g = Grid(F.lo, F.hi, n_cells)
    u1, u2 = menu_1.envelope(g.nodes), menu_2.envelope(g.nodes)
    if np.any(u1 < u2 - 1e-12):
        i = int(np.argmax(u2 - u1))
        raise PreconditionError(f"first menu's envelope is below the second's at type {g.nodes[i]:.6g}")
    m1 = solve_delegation(F, beta, menu_1, n_cells, oracle)
    m2 = solve_delegation(F, beta, menu_2, n_cells, oracle)
    return m1.cutoffs["theta_star"], m2.cutoffs["theta_star"], m1, m2
