import numpy as np
import pytest
from scipy.optimize import linprog

from cfikit import LpProblem, LpStatus, cfi_lp, simplex_solve
from cfikit._accel import get_kernels
from cfikit.lp import EQ, GE, LE, cfi_problem, check_feasible, dump_lp, load_lp
from cfikit.testing import random_cfi, random_measure


def backends():
    out = [get_kernels("python")]
    try:
        out.append(get_kernels("compiled"))
    except ImportError:
        pass
    return out


def highs(p):
    """Reference optimum from scipy's HiGHS."""
    A_ub, b_ub, A_eq, b_eq = [], [], [], []
    for row, s, b in zip(p.A, p.senses, p.b):
        if s == LE:
            A_ub.append(row), b_ub.append(b)
        elif s == GE:
            A_ub.append(-row), b_ub.append(-b)
        else:
            A_eq.append(row), b_eq.append(b)
    res = linprog(-p.c, A_ub=np.array(A_ub) if A_ub else None, b_ub=b_ub or None,
                  A_eq=np.array(A_eq) if A_eq else None, b_eq=b_eq or None,
                  bounds=list(zip(p.lo, np.where(np.isinf(p.hi), None, p.hi))), method="highs")
    return res


def random_feasible_lp(rng, n=8, m=6):
    x0 = rng.uniform(0, 1, n)
    A = rng.normal(size=(m, n))
    senses = [rng.choice([LE, GE, EQ], p=[0.45, 0.45, 0.1]) for _ in range(m)]
    b = A @ x0 + np.array([0.0 if s == EQ else (0.5 if s == LE else -0.5) for s in senses])
    lo = np.where(rng.random(n) < 0.2, -np.inf, -rng.uniform(0, 1, n))
    hi = rng.uniform(1, 2, n)
    return LpProblem(rng.normal(size=n), A, senses, b, lo, hi)


@pytest.mark.parametrize("km", backends(), ids=lambda k: k.__name__.rsplit(".", 1)[-1])
def test_simplex_matches_highs(km, rng):
    for _ in range(40):
        p = random_feasible_lp(rng, n=int(rng.integers(3, 12)), m=int(rng.integers(2, 9)))
        sol = simplex_solve(p, kernel_module=km)
        ref = highs(p)
        if ref.status == 3:
            assert sol.status == LpStatus.UNBOUNDED
            continue
        assert ref.status == 0
        assert sol.status == LpStatus.OPTIMAL
        assert sol.objective == pytest.approx(-ref.fun, rel=1e-7, abs=1e-7)
        assert check_feasible(p, sol.values) <= 1e-7


def test_infeasible_and_unbounded():
    p = LpProblem([1.0], [[1.0], [1.0]], [LE, GE], [1.0, 2.0], [0.0], [5.0])
    assert simplex_solve(p).status == LpStatus.INFEASIBLE
    q = LpProblem([1.0, 1.0], [[1.0, -1.0]], [LE], [1.0], [0.0, 0.0], [np.inf, np.inf])
    assert simplex_solve(q).status == LpStatus.UNBOUNDED


def test_problem_validation():
    with pytest.raises(ValueError):
        LpProblem([1.0], [[1.0]], ["<"], [1.0])
    with pytest.raises(ValueError):
        LpProblem([1.0], [[1.0]], [LE], [1.0], [2.0], [1.0])


@pytest.mark.parametrize("km", backends(), ids=lambda k: k.__name__.rsplit(".", 1)[-1])
def test_cfi_lp_matches_highs(km, rng):
    for _ in range(10):
        c = random_cfi(rng, n_cells=int(rng.integers(15, 60)))
        mu = random_measure(c.grid, rng)
        ours = cfi_lp(c, mu, kernel_module=km)
        ref = highs(cfi_problem(c, mu, full_slope_rows=True))
        assert ours.objective == pytest.approx(-ref.fun, rel=1e-8, abs=1e-8)
        assert c.contains(ours.u)


def test_dump_load_round_trip(tmp_path, rng):
    p = random_feasible_lp(rng)
    dump_lp(p, tmp_path / "p.lp")
    q = load_lp(tmp_path / "p.lp")
    assert np.array_equal(p.A, q.A) and np.array_equal(p.c, q.c) and p.senses == q.senses
    assert np.array_equal(p.lo, q.lo) and np.array_equal(p.hi, q.hi)
