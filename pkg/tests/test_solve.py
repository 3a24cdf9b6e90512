import numpy as np
import pytest

from cfikit import (Bounded, Cfi, Grid, GridFunction, SignedMeasure, SlopeInterval, cfi_lp, concavify_solve,
                    linearity_check, verify_optimality)
from cfikit.errors import NotAffinelyBoundedError
from cfikit.solve import affine_bound_kind, design_lower_boundary, one_kink_family
from cfikit.testing import random_affine_cfi, random_cfi, random_measure


def revenue_uniform(n=100):
    g = Grid(0.0, 1.0, n)
    c = Cfi(GridFunction(g, np.zeros(n + 1)), GridFunction(g, g.nodes), SlopeInterval(0.0, 1.0))
    mu = SignedMeasure.from_density(g, lambda t: -2.0 * np.ones_like(t), atom_hi=1.0)
    return c, mu


def test_uniform_revenue_closed_form():
    c, mu = revenue_uniform()
    res = concavify_solve(c, mu)
    assert res.cutoff == 50
    assert res.objective == pytest.approx(0.25, abs=1e-12)
    assert verify_optimality(c, res.u, mu).overall


@pytest.mark.parametrize("mode", ["upper", "lower"])
def test_concavify_matches_lp(mode, rng):
    for _ in range(15):
        c = random_affine_cfi(rng, n_cells=40, mode=mode)
        assert affine_bound_kind(c) == (Bounded.UPPER_AFFINE if mode == "upper" else Bounded.LOWER_AFFINE)
        mu = random_measure(c.grid, rng)
        res = concavify_solve(c, mu)
        assert res.objective == pytest.approx(cfi_lp(c, mu).objective, rel=1e-8, abs=1e-8)
        assert verify_optimality(c, res.u, mu, partition=res.partition).overall or \
            verify_optimality(c, res.u, mu).overall


def test_suboptimal_cutoff_not_certified():
    c, mu = revenue_uniform()
    x = c.grid.nodes
    u = GridFunction(c.grid, np.maximum(0.0, x - 0.3))
    assert not verify_optimality(c, u, mu).overall


def test_lp_optimum_certified_on_general_intervals(rng):
    for _ in range(10):
        c = random_cfi(rng, n_cells=30)
        mu = random_measure(c.grid, rng)
        u = cfi_lp(c, mu).u
        assert verify_optimality(c, u, mu).overall


def test_concavify_scope():
    rng = np.random.default_rng(1)
    c = random_cfi(rng, n_cells=20)
    with pytest.raises(NotAffinelyBoundedError):
        concavify_solve(c, random_measure(c.grid, rng))


def test_linearity_in_lower_boundary():
    c, mu = revenue_uniform()
    g = c.grid
    a = GridFunction(g, np.maximum(0.0, g.nodes - 0.3))
    b = GridFunction(g, np.maximum(0.0, 0.5 * (g.nodes - 0.1)))
    assert linearity_check(c, mu, a, b, 0.4) <= 1e-12


def test_option_to_own_design_uniform():
    # planner weight 0.8 on consumer surplus: W(p) = 0.8 (1-p)^2/2 + p(1-p), maximized at p = 1/6
    c, mu = revenue_uniform(120)
    g = c.grid
    outer = SignedMeasure.from_density(g, lambda t: 0.8 - 2.0 * np.ones_like(t), atom_hi=1.0)
    best, u, val, scan = design_lower_boundary(one_kink_family(g, g.nodes), mu, outer, c)
    assert best == pytest.approx(1 / 6, abs=g.h)
    p = best
    assert val == pytest.approx(0.8 * (1 - p) ** 2 / 2 + p * (1 - p), abs=1e-9)
    assert len(scan) == g.n_nodes
