"""Large contests with limited disposal.

Expected quantile assignments are weakly majorized by the assortative
assignment and weakly majorize the constant m (the least average quality the
designer must hand out). Working with integrated assignments on the quantile
grid turns effort maximization into a linear program on an interval.
"""

import numpy as np
from scipy.optimize import brentq

from ..cfi import make_majorization_cfi, verify_extreme
from ..errors import PreconditionError
from ..grid_fn import Grid, GridFunction
from ..measure import SignedMeasure
from ..solve import verify_optimality
from .common import Mechanism, oracle_gap
from .distributions import is_myerson_regular


def mu_contest(F, grid):
    """Effort measure on quantiles: density -v'(F^-1)/f(F^-1), atoms -v(F^-1(0)) at 0 and v(F^-1(1)) at 1."""
    def psi(q):
        th = F.quantile(q)
        return -F.virtual_value_slope(th) / F.pdf(th)
    return SignedMeasure.from_density(grid, psi, atom_lo=-float(F.virtual_value(F.lo)),
                                      atom_hi=float(F.virtual_value(F.hi)))


def contest_cfi(F, G, m, n_cells=200):
    """Integrated assignments between I of G^-1 (lower) and I of the constant m (upper)."""
    if G.lo < 0:
        raise ValueError("prize qualities must be nonnegative")
    mean_g = G.mean()
    if not (0.0 <= m <= mean_g + 1e-12):
        raise PreconditionError(f"m = {m} must lie in [0, {mean_g:.6g}]")
    g = Grid(0.0, 1.0, n_cells)
    q = g.nodes
    ginv = GridFunction(g, G.quantile(q))
    # the grid mean of G^-1 can sit a hair below the exact mean; mandatory allocation uses the grid one
    grid_mean = float(np.trapezoid(ginv.values, q))
    const = GridFunction(g, np.full(g.n_nodes, min(m, grid_mean)))
    c = make_majorization_cfi(ginv, const, weak=True, s_floor=0.0)
    return c, mu_contest(F, g)


def _exclusion_quantile(F):
    """Smallest quantile with zero virtual value (bisection on the regular virtual value)."""
    v = lambda q: float(F.virtual_value(F.quantile(q)))
    if v(0.0) >= 0:
        return 0.0
    if v(1.0) <= 0:
        return 1.0
    return brentq(v, 0.0, 1.0, xtol=1e-13)


def _integrated_lower(c, q):
    return float(np.interp(q, c.grid.nodes, c.lower.values))


def solve_contest(F, G, m, n_cells=200, oracle=True, tol=None):
    """Effort-maximizing assignment: exclusion below a cutoff, assortative above.

    cutoffs: q_star and theta_star = F^-1(q_star) from the continuous
    conditions, and the grid's last excluded node q_grid.
    """
    if not is_myerson_regular(F):
        raise PreconditionError("type distribution is not Myerson-regular")
    c, mu = contest_cfi(F, G, m, n_cells)
    m = -float(c.upper.values[0])
    q = c.grid.nodes
    lo = c.lower.values
    q0 = _exclusion_quantile(F)
    binding = _integrated_lower(c, q0) > -m
    if binding:
        q_star = 0.0 if lo[0] >= -m else brentq(lambda s: _integrated_lower(c, s) + m, 0.0, q0, xtol=1e-13)
        level = -m
        I = np.maximum(lo, level)
    else:
        q_star = q0
        I = _best_flat(c, mu, q0, -m)
    I = GridFunction(c.grid, np.minimum(I, c.upper.values))
    value = float(mu.integrate(I))
    rep = verify_optimality(c, I, mu, tol=tol)
    ext = verify_extreme(c, I)
    gap = oracle_gap(c, mu, value) if oracle else None
    d = I.slopes()
    chi = GridFunction(c.grid, np.append(d, d[-1]).clip(0.0, None))
    th = F.quantile(q)
    # utility of type theta is the integral of the allocation; transfers from the envelope identity
    util = np.concatenate([[0.0], np.cumsum(d * np.diff(th))])
    cost = GridFunction(c.grid, th * chi.values - util)
    excluded = q[np.flatnonzero(I.values <= I.values[0] + c.level_tol)[-1]]
    return Mechanism(
        utility=I, allocation=chi, transfer=cost, value=value,
        cutoffs={"q_star": float(q_star), "theta_star": float(F.quantile(q_star)),
                 "q_grid": float(excluded), "mean_assigned": float(I.values[-1] - I.values[0]),
                 "disposal_binds": float(binding)},
        certified=bool(rep.overall and ext.ok), oracle_gap=gap, report=rep,
        intervals={"excluded": [(0.0, float(F.quantile(excluded)))]},
    )


def _best_flat(c, mu, q0, floor):
    """Best grid vertex max(lower, lower_k) for k near q0 with lower_k <= floor."""
    lo = c.lower.values
    n = c.grid.n_cells
    k0 = int(round(q0 * n))
    best = None
    for k in range(max(0, k0 - 3), min(n, k0 + 3) + 1):
        if lo[k] > floor + c.level_tol:
            continue
        v = np.maximum(lo, lo[k])
        val = mu.integrate(v)
        if best is None or val > best[0]:
            best = (val, v)
    if best is None:
        return np.maximum(lo, floor)
    return best[1]


def contest_sweep(F, G, ms, n_cells=200, oracle=True):
    """theta*_m over a list of disposal limits (nonincreasing in m)."""
    return [(float(m), solve_contest(F, G, m, n_cells, oracle)) for m in ms]
