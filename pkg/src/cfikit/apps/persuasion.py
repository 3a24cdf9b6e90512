"""Mean-based persuasion with lower and upper bounds on informativeness.

Distributions of posterior means G with G_lower >= G >= G_upper in the
majorization order are represented by their integrated CDFs
I_G(x) = -(integral of G from x to 1). The sender's value enters through the
measure whose distribution function is v'.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from ..cfi import majorization_cfi_from_integrals, verify_extreme
from ..errors import InvalidCfiError, PreconditionError
from ..grid_fn import Grid, GridFunction, SlopeInterval
from ..measure import SignedMeasure
from ..solve import reflect_cfi, reflect_measure, verify_optimality
from ._cutoff import tangent_cutoff_solve
from .common import Mechanism, oracle_gap
from .distributions import integral_above

FINE = 20001


@dataclass(frozen=True)
class Value:
    """Sender value through its first and second derivatives (callables on [0, 1])."""

    d1: object
    d2: object
    name: str = "custom"


def logistic_value(center=0.4, scale=0.1):
    """S-shaped value: a logistic CDF in the posterior mean."""
    def d1(x):
        s = expit((np.asarray(x, dtype=float) - center) / scale)
        return s * (1 - s) / scale

    def d2(x):
        s = expit((np.asarray(x, dtype=float) - center) / scale)
        return s * (1 - s) * (1 - 2 * s) / scale ** 2
    return Value(d1, d2, f"logistic({center}, {scale})")


def quadratic_value(a=1.0):
    return Value(lambda x: 2 * a * np.asarray(x, dtype=float),
                 lambda x: np.full_like(np.asarray(x, dtype=float), 2 * a), f"quadratic({a})")


def mu_value(v, grid):
    """Atom v'(0) at 0 and density v''; its distribution function is v'."""
    return SignedMeasure.from_density(grid, v.d2, atom_lo=float(v.d1(grid.lo)))


def integrated_cdf(G, grid):
    return GridFunction(grid, -integral_above(G, grid.nodes))


def persuasion_cfi(F_prior, G_lower, G_upper, v, n_cells=200, check_smooth=True):
    """Interval between the integrated CDFs of the least and most informative bounds."""
    g = Grid(0.0, 1.0, n_cells)
    I_lo, I_up, I_F = (integrated_cdf(G, g) for G in (G_lower, G_upper, F_prior))
    tol = 1e-7
    if np.any(I_up.values > I_F.values + tol) or abs(I_up.values[0] - I_F.values[0]) > tol:
        raise PreconditionError("upper bound is not majorized-comparable with the prior (needs G_upper >= F)")
    xs = np.linspace(0.0, 1.0, FINE)
    jumps = np.abs(np.diff(G_upper.cdf(xs)))
    if jumps.max() > 0.05:
        raise PreconditionError("upper bound CDF must be continuous")
    s_lo = float(G_lower.cdf(0.0))
    try:
        c = majorization_cfi_from_integrals(I_lo, I_up, SlopeInterval(s_lo, 1.0), weak=False,
                                            check_smooth=check_smooth)
    except InvalidCfiError as e:
        raise PreconditionError(f"bounds are not ordered (needs G_lower >= G_upper): {e}") from e
    return c, mu_value(v, g)


def is_s_shaped(v, n=2001, tol=1e-9):
    """v'' changes sign at most once, from positive to negative."""
    d = v.d2(np.linspace(0.0, 1.0, n))
    scale = tol * (1.0 + np.abs(d).max())
    s = np.sign(np.where(np.abs(d) <= scale, 0.0, d))
    s = s[s != 0]
    return bool(np.all(np.diff(s) <= 0))


def solve_persuasion_sshaped(F_prior, G_lower, G_upper, v, n_cells=200, oracle=True, tol=None):
    """Upper censorship within the bounds: reveal below x*, pool on [x*, h(x*)], then follow G_lower.

    The problem is the mirror image of the delegation one, so the same cutoff
    scheme runs on the reflected interval.
    """
    if not is_s_shaped(v):
        raise PreconditionError("value is not S-shaped (v'' must cross zero once, from above)")
    c, mu = persuasion_cfi(F_prior, G_lower, G_upper, v, n_cells)
    rc, rmu = reflect_cfi(c), reflect_measure(mu)
    sol = tangent_cutoff_solve(rc, rmu)
    if not verify_optimality(rc, sol.u, rmu, tol=tol).overall and sol.searched != "all":
        wide = tangent_cutoff_solve(rc, rmu, exhaustive=True)
        if wide.objective > sol.objective:
            sol = wide
    n = c.grid.n_cells
    I = GridFunction(c.grid, sol.u.values[::-1])
    value = float(mu.integrate(I))
    rep = verify_optimality(c, I, mu, tol=tol)
    ext = verify_extreme(c, I)
    gap = oracle_gap(c, mu, value) if oracle else None
    x = c.grid.nodes
    x_star = float(x[n - sol.k])
    h_star = float(x[n - sol.l])
    d = I.slopes()
    G = GridFunction(c.grid, np.append(d, d[-1]))
    return Mechanism(
        utility=I, allocation=G, transfer=GridFunction(c.grid, np.zeros(n + 1)), value=value,
        cutoffs={"x_star": x_star, "h": h_star, "x_star_scheme": 1.0 - sol.seed_theta},
        certified=bool(rep.overall and ext.ok), oracle_gap=gap, report=rep,
        intervals={"revealed": [(0.0, x_star)], "pooled": [(x_star, h_star)]},
    )
