import numpy as np
import pytest

from cfikit import Cfi, Grid, GridFunction, SlopeInterval, cfi_lp, falsify_extremality, make_majorization_cfi
from cfikit.cfi import cutoff_utility, detect_structure, is_witness, iso_to_function, verify_extreme
from cfikit.errors import GridMismatchError, InvalidCfiError, PreconditionError
from cfikit.testing import random_cfi, random_measure


def simple():
    g = Grid(0.0, 1.0, 20)
    x = g.nodes
    return Cfi(GridFunction(g, np.maximum(0.0, x - 0.5)), GridFunction(g, 0.5 * x + 0.1),
               SlopeInterval(0.0, 1.0), check_smooth=False)


def test_validation_errors():
    g = Grid(0.0, 1.0, 10)
    x = g.nodes
    with pytest.raises(InvalidCfiError):
        Cfi(GridFunction(g, x), GridFunction(g, x - 0.1), SlopeInterval(0, 1))
    with pytest.raises(InvalidCfiError):
        Cfi(GridFunction(g, -x ** 2), GridFunction(g, x + 1), SlopeInterval(-2, 2))
    with pytest.raises(InvalidCfiError):
        Cfi(GridFunction(g, 0 * x), GridFunction(g, 3 * x + 1), SlopeInterval(0, 1))
    with pytest.raises(GridMismatchError):
        Cfi(GridFunction(g, 0 * x), GridFunction(Grid(0, 1, 11), np.ones(12)), SlopeInterval(0, 1))


def test_immutable():
    c = simple()
    with pytest.raises(AttributeError):
        c.lower = c.upper


def test_contains():
    c = simple()
    x = c.grid.nodes
    assert c.contains(c.lower) and c.contains(c.upper)
    assert not c.contains(GridFunction(c.grid, c.upper.values + 0.01))
    bumpy = np.maximum(0.0, x - 0.5)
    bumpy[3] += 0.05
    assert not c.contains(GridFunction(c.grid, bumpy))


def test_boundaries_and_cutoffs_are_extreme():
    c = simple()
    assert verify_extreme(c, c.lower).ok
    assert verify_extreme(c, c.upper).ok
    u = cutoff_utility(c, 14)
    assert verify_extreme(c, u).ok


def test_cutoff_utility_above_upper_rejected():
    g = Grid(0.0, 1.0, 10)
    x = g.nodes
    c = Cfi(GridFunction(g, 0 * x), GridFunction(g, 0.3 * x), SlopeInterval(0, 1), check_smooth=False)
    with pytest.raises(PreconditionError):
        cutoff_utility(c, 2)


def test_midpoint_is_not_extreme_and_has_witness():
    c = simple()
    mid = GridFunction(c.grid, 0.5 * (c.lower.values + c.upper.values))
    assert not verify_extreme(c, mid).ok
    h = falsify_extremality(c, mid)
    assert h is not None and is_witness(c, mid, h.values)
    assert falsify_extremality(c, c.lower) is None


def test_lp_vertices_are_extreme(rng):
    for _ in range(20):
        c = random_cfi(rng, n_cells=30)
        u = cfi_lp(c, random_measure(c.grid, rng)).u
        rep = verify_extreme(c, u)
        assert rep.ok, str(rep)
        st = detect_structure(c, u, strict=False)
        assert not st.unlabeled()


def test_directory_round_trip(tmp_path):
    c = simple()
    c.to_dir(tmp_path / "c")
    d = Cfi.from_dir(tmp_path / "c", check_smooth=False)
    assert np.array_equal(d.lower.values, c.lower.values) and d.slopes == c.slopes


def test_majorization_interval_for_uniform_prizes():
    # G uniform on [0, 1], constant m = 0.25: the upper boundary is affine with I(0) = -0.25
    g = Grid(0.0, 1.0, 100)
    q = g.nodes
    c = make_majorization_cfi(GridFunction(g, q), GridFunction(g, np.full(g.n_nodes, 0.25)), weak=True, s_floor=0.0)
    assert c.upper.values[0] == pytest.approx(-0.25)
    assert np.allclose(np.diff(c.upper.values, 2), 0.0, atol=1e-12)
    assert c.lower.values[0] == pytest.approx(-0.5, abs=1e-12)
    assert c.slopes.s_lo == 0.0 and c.slopes.s_hi == 1.0


def test_majorization_needs_order():
    g = Grid(0.0, 1.0, 50)
    q = g.nodes
    with pytest.raises(InvalidCfiError):
        make_majorization_cfi(GridFunction(g, np.full(51, 0.5)), GridFunction(g, q))
    with pytest.raises(InvalidCfiError):
        make_majorization_cfi(GridFunction(g, q), GridFunction(g, np.full(51, 0.2)))


def test_integrated_function_is_exact_for_linear():
    g = Grid(0.0, 1.0, 10)
    I = iso_to_function(GridFunction(g, g.nodes))
    assert np.allclose(I.values, 0.5 * g.nodes ** 2 - 0.5)
