"""Dense bounded-variable primal simplex and the grid linear program over a CFI.

The solver keeps a full tableau, uses Bland's rule for both the entering and
the leaving variable, and handles variable bounds directly (no bound rows).
It is meant for the few hundred variables that a grid LP needs.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ._accel import kernels
from .errors import SolverError
from .grid_fn import GridFunction

FEAS_TOL = 1e-8
OPT_TOL = 1e-9
PIV_TOL = 1e-11
REFACTOR_EVERY = 100

LE, GE, EQ = "<=", ">=", "="


class LpStatus(str, Enum):
    OPTIMAL = "OPTIMAL"
    INFEASIBLE = "INFEASIBLE"
    UNBOUNDED = "UNBOUNDED"
    ITERATION_LIMIT = "ITERATION_LIMIT"


@dataclass
class LpProblem:
    """max c.x  s.t.  A x (<=, >=, =) b,  lo <= x <= hi."""
    c: np.ndarray
    A: np.ndarray
    senses: list
    b: np.ndarray
    lo: np.ndarray = None
    hi: np.ndarray = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        n = self.c.size
        self.A = np.asarray(self.A, dtype=float).reshape(-1, n)
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        self.senses = list(self.senses)
        m = self.A.shape[0]
        if len(self.senses) != m or self.b.size != m:
            raise ValueError("rows, senses and rhs must have equal length")
        for s in self.senses:
            if s not in (LE, GE, EQ):
                raise ValueError(f"unknown sense {s!r}")
        self.lo = np.zeros(n) if self.lo is None else np.asarray(self.lo, dtype=float)
        self.hi = np.full(n, np.inf) if self.hi is None else np.asarray(self.hi, dtype=float)
        if self.lo.shape != (n,) or self.hi.shape != (n,):
            raise ValueError("bounds must have one entry per variable")
        if np.any(self.lo > self.hi):
            j = int(np.flatnonzero(self.lo > self.hi)[0])
            raise ValueError(f"variable {j} has lo > hi")
        if not (np.all(np.isfinite(self.c)) and np.all(np.isfinite(self.A)) and np.all(np.isfinite(self.b))):
            raise ValueError("LP data must be finite")

    @property
    def n_vars(self):
        return self.c.size

    @property
    def n_rows(self):
        return self.A.shape[0]


@dataclass
class LpSolution:
    status: LpStatus
    values: np.ndarray
    objective: float
    iterations: int
    basis: np.ndarray = field(default=None, repr=False)


def _slack_bounds(senses):
    lo = np.array([0.0 if s == LE else (-np.inf if s == GE else 0.0) for s in senses])
    hi = np.array([np.inf if s == LE else 0.0 for s in senses])
    return lo, hi


def _start_value(lo, hi):
    if np.isfinite(lo):
        return lo, 0
    if np.isfinite(hi):
        return hi, 1
    return 0.0, 2


def simplex_solve(p, max_iter=None, kernel_module=None):
    """Solve an LpProblem with the bounded primal simplex method and Bland's rule."""
    k = kernels if kernel_module is None else kernel_module
    m, n = p.n_rows, p.n_vars
    max_iter = 100 * (m + n) if max_iter is None else max_iter

    s_lo, s_hi = _slack_bounds(p.senses)
    lo = np.concatenate([p.lo, s_lo])
    hi = np.concatenate([p.hi, s_hi])
    x = np.zeros(n + m)
    state = np.zeros(n + m, dtype=np.int8)
    for j in range(n):
        x[j], state[j] = _start_value(lo[j], hi[j])
    resid = p.b - p.A @ x[:n]

    # crash basis: the slack where its value is within bounds, an artificial otherwise
    art_rows, art_sign = [], []
    basis = np.empty(m, dtype=np.intp)
    for i in range(m):
        if s_lo[i] - FEAS_TOL <= resid[i] <= s_hi[i] + FEAS_TOL:
            basis[i] = n + i
            x[n + i] = resid[i]
            state[n + i] = 3
        else:
            x[n + i] = min(max(resid[i], s_lo[i]), s_hi[i])
            state[n + i] = 4 if s_lo[i] == s_hi[i] else (0 if x[n + i] == s_lo[i] else 1)
            art_rows.append(i)
            art_sign.append(1.0 if resid[i] - x[n + i] > 0 else -1.0)
    n_art = len(art_rows)
    ncol = n + m + n_art
    lo = np.concatenate([lo, np.zeros(n_art)])
    hi = np.concatenate([hi, np.full(n_art, np.inf)])
    x = np.concatenate([x, np.zeros(n_art)])
    state = np.concatenate([state, np.full(n_art, 3, dtype=np.int8)])
    state[(lo == hi) & (state != 3)] = 4

    full = np.zeros((m, ncol))
    full[:, :n] = p.A
    full[:, n:n + m] = np.eye(m)
    for a, (i, sg) in enumerate(zip(art_rows, art_sign)):
        full[i, n + m + a] = sg
        basis[i] = n + m + a
        x[n + m + a] = abs(resid[i] - x[n + i])
    diag = np.array([full[i, basis[i]] for i in range(m)])
    T = np.zeros((m + 1, ncol))
    T[:m] = full / diag[:, None]
    xb = x[basis].copy()

    it = 0

    def refactor(cost):
        # rebuild the tableau and basic values from the original rows to shed drift
        nonlocal xb
        try:
            binv = np.linalg.inv(full[:, basis])
        except np.linalg.LinAlgError:
            return False
        T[:m] = binv @ full
        nb = np.ones(ncol, dtype=bool)
        nb[basis] = False
        xb = binv @ (p.b - full[:, nb] @ x[nb])
        T[m] = cost - cost[basis] @ T[:m]
        T[m, basis] = 0.0
        return True

    def run(cost):
        nonlocal it, xb
        T[m] = cost - cost[basis] @ T[:m]
        T[m, basis] = 0.0
        scale = OPT_TOL * (1.0 + np.abs(cost).max())
        since = 0
        while True:
            if it >= max_iter:
                return LpStatus.ITERATION_LIMIT
            if since >= REFACTOR_EVERY:
                refactor(cost)
                since = 0
            j, direction = k.bland_entering(np.ascontiguousarray(T[m]), state, scale)
            if j < 0:
                if since == 0 or not refactor(cost):
                    return LpStatus.OPTIMAL
                since = 0
                j, direction = k.bland_entering(np.ascontiguousarray(T[m]), state, scale)
                if j < 0:
                    return LpStatus.OPTIMAL
            it += 1
            since += 1
            col = np.ascontiguousarray(T[:m, j])
            r, step, to_upper = k.ratio_test(col, xb, lo[basis].copy(), hi[basis].copy(),
                                             basis, int(direction), PIV_TOL)
            flip = hi[j] - lo[j]
            if r < 0 and not np.isfinite(flip):
                return LpStatus.UNBOUNDED
            if flip <= step:
                xb = xb - flip * direction * col
                x[j] = hi[j] if direction > 0 else lo[j]
                state[j] = 1 if direction > 0 else 0
                continue
            xb = xb - step * direction * col
            leave = basis[r]
            x[leave] = hi[leave] if to_upper else lo[leave]
            state[leave] = 4 if lo[leave] == hi[leave] else (1 if to_upper else 0)
            x[j] = x[j] + step * direction
            k.pivot(T, r, j)
            basis[r] = j
            xb[r] = x[j]
            state[j] = 3

    status = LpStatus.OPTIMAL
    if n_art:
        cost1 = np.zeros(ncol)
        cost1[n + m:] = -1.0
        status = run(cost1)
        x[basis] = xb
        if status == LpStatus.ITERATION_LIMIT:
            return LpSolution(status, x[:n].copy(), float("nan"), it)
        infeas = x[n + m:].sum()
        if infeas > FEAS_TOL * (1.0 + np.abs(p.b).max()):
            return LpSolution(LpStatus.INFEASIBLE, x[:n].copy(), float("nan"), it)
        # artificials are pinned at zero from here on
        hi[n + m:] = 0.0
        for a in range(n + m, ncol):
            if state[a] != 3:
                state[a] = 4
                x[a] = 0.0
    cost2 = np.zeros(ncol)
    cost2[:n] = p.c
    status = run(cost2)
    x[basis] = xb
    if status != LpStatus.OPTIMAL:
        return LpSolution(status, x[:n].copy(), float("nan"), it, basis.copy())

    # recompute basic values from the nonbasic ones for accuracy
    nb = np.ones(ncol, dtype=bool)
    nb[basis] = False
    rhs = p.b - full[:, nb] @ x[nb]
    try:
        x[basis] = np.linalg.solve(full[:, basis], rhs)
    except np.linalg.LinAlgError:
        pass
    vals = x[:n].copy()
    return LpSolution(LpStatus.OPTIMAL, vals, float(p.c @ vals), it, basis.copy())


def check_feasible(p, x, tol=FEAS_TOL):
    """Largest constraint or bound violation of x (0 when feasible)."""
    act = p.A @ x
    viol = [np.maximum(p.lo - x, 0).max(initial=0.0), np.maximum(x - p.hi, 0).max(initial=0.0)]
    for s, a, b in zip(p.senses, act, p.b):
        if s == LE:
            viol.append(max(a - b, 0.0))
        elif s == GE:
            viol.append(max(b - a, 0.0))
        else:
            viol.append(abs(a - b))
    return float(max(viol))


@dataclass
class CfiLpResult:
    u: GridFunction
    objective: float
    status: LpStatus
    iterations: int

    def __iter__(self):
        return iter((self.u, self.objective))


def cfi_problem(c, mu, full_slope_rows=False):
    """The grid LP: node values, convexity rows, slope rows, level bounds as variable bounds."""
    c.grid.check_same(mu.grid)
    g = c.grid
    n = g.n_cells
    N = n + 1
    rows, senses, rhs = [], [], []
    for i in range(1, n):
        r = np.zeros(N)
        r[i - 1], r[i], r[i + 1] = 1.0, -2.0, 1.0
        rows.append(r)
        senses.append(GE)
        rhs.append(0.0)
    cells = range(n) if full_slope_rows else (0, n - 1)
    s_lo, s_hi = c.slopes.s_lo, c.slopes.s_hi
    for i in cells:
        r = np.zeros(N)
        r[i], r[i + 1] = -1.0, 1.0
        if np.isfinite(s_lo) and (full_slope_rows or i == 0):
            rows.append(r.copy())
            senses.append(GE)
            rhs.append(s_lo * g.h)
        if np.isfinite(s_hi) and (full_slope_rows or i == n - 1):
            rows.append(r.copy())
            senses.append(LE)
            rhs.append(s_hi * g.h)
    return LpProblem(mu.node_weights(), np.array(rows), senses, np.array(rhs),
                     c.lower.values.copy(), c.upper.values.copy())


def cfi_lp(c, mu, full_slope_rows=False, kernel_module=None):
    """Maximize the integral of u against mu over the CFI on its grid."""
    p = cfi_problem(c, mu, full_slope_rows)
    sol = simplex_solve(p, kernel_module=kernel_module)
    if sol.status == LpStatus.INFEASIBLE:
        raise SolverError("grid LP reported infeasible although the lower boundary is feasible")
    if sol.status != LpStatus.OPTIMAL:
        raise SolverError(f"grid LP ended with status {sol.status.value} after {sol.iterations} iterations")
    u = np.clip(sol.values, c.lower.values, c.upper.values)
    return CfiLpResult(GridFunction(c.grid, u), float(mu.node_weights() @ u), sol.status, sol.iterations)


def dump_lp(p, path):
    """Write the problem in a fixed-column text format with OBJ, ROW and BND sections."""
    with open(path, "w") as fh:
        fh.write(f"NAME cfi_lp VARS {p.n_vars} ROWS {p.n_rows}\n")
        fh.write("OBJ\n")
        for j, v in enumerate(p.c):
            if v != 0.0:
                fh.write(f"    {j:>8d} {v:>25.17g}\n")
        for i in range(p.n_rows):
            fh.write(f"ROW {i:>8d} {p.senses[i]:>2s} {p.b[i]:>25.17g}\n")
            for j in np.flatnonzero(p.A[i]):
                fh.write(f"    {j:>8d} {p.A[i, j]:>25.17g}\n")
        fh.write("BND\n")
        for j in range(p.n_vars):
            fh.write(f"    {j:>8d} {p.lo[j]:>25.17g} {p.hi[j]:>25.17g}\n")
        fh.write("END\n")


def load_lp(path):
    """Read a problem written by dump_lp."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    head = lines[0].split()
    n, m = int(head[3]), int(head[5])
    c = np.zeros(n)
    A = np.zeros((m, n))
    senses, b = [None] * m, np.zeros(m)
    lo, hi = np.zeros(n), np.zeros(n)
    section, row = None, None
    for ln in lines[1:]:
        parts = ln.split()
        if not parts:
            continue
        if parts[0] in ("OBJ", "BND", "END"):
            section = parts[0]
            continue
        if parts[0] == "ROW":
            section, row = "ROW", int(parts[1])
            senses[row], b[row] = parts[2], float(parts[3])
            continue
        j = int(parts[0])
        if section == "OBJ":
            c[j] = float(parts[1])
        elif section == "ROW":
            A[row, j] = float(parts[1])
        elif section == "BND":
            lo[j], hi[j] = float(parts[1]), float(parts[2])
    return LpProblem(c, A, senses, b, lo, hi)
