"""Optimality verification, concavification, and lower-boundary design.

Verification works with the node weights of the measure, which integrate
piecewise-linear functions exactly. A node shared by two cells of the
partition may have its weight split between them (any real split summing to
the weight is sound); the split is chosen by a small LP that maximizes the
worst slack over all cell conditions.
"""

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import linprog

from .cfi import Cfi, Saturation, contact_masks, verify_extreme
from .errors import NotAffinelyBoundedError, SolverError, StructureError
from .grid_fn import GridFunction, SlopeInterval, cav
from .measure import ORDER_TOL, SignedMeasure

IRON_TOL = 1e-9


class CellKind(str, Enum):
    Y0 = "Y0"
    Y1 = "Y1"
    Y2 = "Y2"
    Y3 = "Y3"
    Y4 = "Y4"
    Y5 = "Y5"
    UNCOVERED = "uncovered"


@dataclass(frozen=True)
class Cell:
    lo: int
    hi: int
    kind: CellKind
    anchor: int = None

    @property
    def singleton(self):
        """Runs of singletons are stored as one range; pieces are genuine intervals."""
        return self.kind in (CellKind.Y0, CellKind.Y2) or (self.kind == CellKind.Y1 and self.anchor is None)


@dataclass
class Partition:
    cells: list

    def covers(self, n_cells):
        hit = np.zeros(n_cells + 1, dtype=bool)
        for c in self.cells:
            hit[c.lo:c.hi + 1] = True
        return bool(hit.all())

    def of_kind(self, kind):
        return [c for c in self.cells if c.kind == kind]


class Bounded(str, Enum):
    UPPER_AFFINE = "upper_affine"
    LOWER_AFFINE = "lower_affine"


def _singleton_runs(mask, kind):
    out = []
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return out
    start = prev = int(idx[0])
    for i in idx[1:]:
        i = int(i)
        if i != prev + 1:
            out.append(Cell(start, prev, kind))
            start = i
        prev = i
    out.append(Cell(start, prev, kind))
    return out


def build_partition(c, u_star, tangency="grid"):
    """Partition of the nodes induced by the extreme structure of u_star."""
    rep = verify_extreme(c, u_star, tangency)
    if not rep.ok:
        raise StructureError(rep.failure or "not extreme", rep.node, "; ".join(rep.lines[-1:]))
    st = rep.structure
    at_lo, at_hi, co = st.at_lower, st.at_upper, st.coincide
    cells = []
    cells += _singleton_runs(co, CellKind.Y0)
    cells += _singleton_runs(at_hi & ~co, CellKind.Y1)
    cells += _singleton_runs(at_lo & ~at_hi & ~co, CellKind.Y2)
    pieces = st.intervals
    k = 0
    while k < len(pieces):
        p = pieces[k]
        kind = p.label.kind
        if kind == Saturation.TANGENTIAL:
            lo, hi, anchor = p.a, p.b, p.label.anchor
            # merge a tangential neighbour that continues the same line through the anchor
            if (k + 1 < len(pieces) and pieces[k + 1].a == p.b
                    and pieces[k + 1].label.kind == Saturation.TANGENTIAL
                    and pieces[k + 1].label.anchor == p.b == anchor
                    and abs(pieces[k + 1].slope - p.slope) <= c.slope_eps):
                hi = pieces[k + 1].b
                k += 1
            cells.append(Cell(lo, hi, CellKind.Y1, anchor))
        elif kind == Saturation.SLOPE_HIGH:
            cells.append(Cell(p.a, p.b, CellKind.Y3))
        elif kind == Saturation.SLOPE_LOW:
            cells.append(Cell(p.a, p.b, CellKind.Y4))
        elif kind == Saturation.CHORDAL:
            cells.append(Cell(p.a, p.b, CellKind.Y5))
        else:
            cells.append(Cell(p.a, p.b, CellKind.UNCOVERED))
        k += 1
    cells.sort(key=lambda q: (q.lo, q.hi))
    return Partition(cells)


def coarse_partition(c, u_star):
    """Cells from the maximal affine runs of u_star, whether or not they touch a bound.

    Every cell argument of the verification only needs u_star to be affine on
    the cell (with extremal slope for Y3/Y4, or an upper contact for Y1), so
    this partition is as legitimate as the canonical one and certifies
    solutions that run along an affine stretch of a boundary.
    """
    at_lo, at_hi, co = contact_masks(c, u_star)
    v = u_star.values
    n = c.grid.n_cells
    lt = c.level_tol
    eps = c.slope_eps
    h = c.grid.h
    kink = np.zeros(n + 1, dtype=bool)
    kink[1:-1] = np.abs(v[2:] - 2 * v[1:-1] + v[:-2]) > lt
    cells = []
    cells += _singleton_runs(co, CellKind.Y0)
    cells += _singleton_runs(at_hi & ~co, CellKind.Y1)
    cells += _singleton_runs(at_lo & ~at_hi & ~co, CellKind.Y2)
    cuts = [0] + [int(i) for i in np.flatnonzero(kink)] + [n]
    for a, b in zip(cuts[:-1], cuts[1:]):
        s = (v[b] - v[a]) / ((b - a) * h)
        if np.all(co[a:b + 1]):
            continue
        if abs(s - c.slopes.s_hi) <= eps:
            cells.append(Cell(a, b, CellKind.Y3))
        elif abs(s - c.slopes.s_lo) <= eps:
            cells.append(Cell(a, b, CellKind.Y4))
        elif np.any(at_hi[a:b + 1] & ~co[a:b + 1]):
            y = a + int(np.flatnonzero(at_hi[a:b + 1] & ~co[a:b + 1])[0])
            cells.append(Cell(a, b, CellKind.Y1, y))
        else:
            cells.append(Cell(a, b, CellKind.Y5))
    cells.sort(key=lambda q: (q.lo, q.hi))
    return Partition(cells)


# verification

CONDITION = {
    CellKind.Y0: "vacuous",
    CellKind.Y1: "mass_nonneg",
    CellKind.Y2: "mass_nonpos",
    CellKind.Y3: "dcx",
    CellKind.Y4: "icx",
    CellKind.Y5: "cx_zero",
    CellKind.UNCOVERED: "uncovered",
}


@dataclass
class CellResult:
    cell: Cell
    condition: str
    passed: bool
    slack: float


@dataclass
class VerificationReport:
    overall: bool
    per_cell: list
    tol: float
    fractions: dict = field(default_factory=dict)
    x: np.ndarray = None
    source: str = "given"

    def __bool__(self):
        return self.overall

    def lines(self):
        out = []
        for r in self.per_cell:
            lo, hi = self.x[r.cell.lo], self.x[r.cell.hi]
            out.append(f"[{r.cell.kind.value}] [{lo:.6g},{hi:.6g}] condition={r.condition} "
                       f"pass={r.passed} slack={r.slack:.6e}")
        return out

    def __str__(self):
        head = ("certified" if self.overall else "conditions not certified") + f" (partition: {self.source})"
        return "\n".join(self.lines() + [head])


class _Rows:
    """Affine expressions r0 + R @ f in the split fractions, tagged by cell and sense."""

    def __init__(self, n_vars):
        self.n = n_vars
        self.r0, self.R, self.eq, self.cell = [], [], [], []

    def add(self, r0, R, eq, cell):
        self.r0.append(r0)
        self.R.append(R)
        self.eq.append(eq)
        self.cell.append(cell)


def _cell_rows(rows, k, cell, x, w, var_of):
    """Append the linear conditions of one cell. Masses m_i = w_i * frac(i, cell)."""
    nodes = np.arange(cell.lo, cell.hi + 1)

    def mass_expr(coef):
        # sum_i coef_i * m_i as (constant, vector over fraction variables)
        r0 = 0.0
        R = np.zeros(rows.n)
        for i, a in zip(nodes, coef):
            j = var_of.get((int(i), k))
            if j is None:
                r0 += a * w[i]
            else:
                R[j] += a * w[i]
        return r0, R

    kind = cell.kind
    if kind in (CellKind.Y0, CellKind.UNCOVERED):
        return
    if cell.singleton:
        sign = 1.0 if kind == CellKind.Y1 else -1.0
        for i in nodes:
            coef = np.zeros(nodes.size)
            coef[i - cell.lo] = sign
            rows.add(*mass_expr(coef), False, k)
        return
    xs = x[nodes]
    ones = np.ones(nodes.size)
    if kind == CellKind.Y1:
        y = x[cell.anchor]
        rows.add(*mass_expr(ones), False, k)
        rows.add(*mass_expr(xs - y), True, k)
        for t in xs:
            # M (y - t)^+ - sum (x - t)^+ m >= 0
            rows.add(*mass_expr(np.maximum(y - t, 0.0) * ones - np.maximum(xs - t, 0.0)), False, k)
        return
    rows.add(*mass_expr(ones), True, k)
    if kind == CellKind.Y3:
        for t in xs:
            rows.add(*mass_expr(-np.maximum(t - xs, 0.0)), False, k)
        return
    if kind == CellKind.Y5:
        rows.add(*mass_expr(xs - xs[0]), True, k)
    for t in xs:
        rows.add(*mass_expr(-np.maximum(xs - t, 0.0)), False, k)


def verify_optimality(c, u_star, mu, partition=None, tol=None, tangency="grid"):
    """Check the sufficient optimality conditions cell by cell.

    Without a partition, the canonical one from the extreme structure is
    tried first and the affine-run partition second. A failed report means the
    conditions were not certified, not that u_star is suboptimal.
    """
    c.grid.check_same(mu.grid)
    if partition is None:
        rep = _verify(c, mu, build_partition(c, u_star, tangency), tol)
        rep.source = "canonical"
        if rep.overall:
            return rep
        alt = _verify(c, mu, coarse_partition(c, u_star), tol)
        alt.source = "affine runs"
        return alt if alt.overall else rep
    return _verify(c, mu, partition, tol)


def _verify(c, mu, partition, tol):
    x = c.grid.nodes
    w = mu.node_weights()
    scale = np.abs(x).max() + (x[-1] - x[0])
    tol = ORDER_TOL * (1.0 + mu.total_variation()) * max(1.0, scale) if tol is None else tol

    members = {}
    for k, cell in enumerate(partition.cells):
        for i in range(cell.lo, cell.hi + 1):
            members.setdefault(i, []).append(k)
    var_of, groups = {}, []
    for i, ks in members.items():
        if len(ks) > 1:
            g = []
            for k in ks:
                var_of[(i, k)] = len(var_of)
                g.append(var_of[(i, k)])
            groups.append(g)
    nv = len(var_of)
    rows = _Rows(nv)
    for k, cell in enumerate(partition.cells):
        _cell_rows(rows, k, cell, x, w, var_of)

    r0 = np.array(rows.r0)
    R = np.array(rows.R).reshape(len(rows.r0), nv)
    eq = np.array(rows.eq, dtype=bool)
    frac = np.zeros(nv)
    if nv:
        frac = _best_split(r0, R, eq, groups, nv)
    vals = r0 + R @ frac if r0.size else r0
    slack_rows = np.where(eq, -np.abs(vals), vals)

    results = []
    cell_of = np.array(rows.cell, dtype=int)
    for k, cell in enumerate(partition.cells):
        cond = CONDITION[cell.kind]
        if cell.kind == CellKind.Y1 and not cell.singleton:
            cond = "cx_pointmass"
        if cell.kind == CellKind.UNCOVERED:
            results.append(CellResult(cell, cond, False, -np.inf))
            continue
        mine = slack_rows[cell_of == k] if slack_rows.size else np.array([])
        s = float(mine.min()) if mine.size else 0.0
        results.append(CellResult(cell, cond, s >= -tol, s))
    fractions = {key: float(frac[j]) for key, j in var_of.items()}
    overall = all(r.passed for r in results) and partition.covers(c.grid.n_cells)
    return VerificationReport(overall, results, tol, fractions, x)


def _best_split(r0, R, eq, groups, nv):
    """Split coefficients minimizing t subject to r >= -t and |r_eq| <= t, with t >= 0.

    Coefficients of a node sum to one but may have any sign: the sufficiency
    argument only needs the cell measures to add up to the original one.
    """
    m = r0.size
    # variables: fractions (nv), t
    A, b = [], []
    for i in range(m):
        row = np.append(-R[i], -1.0)
        A.append(row)
        b.append(r0[i])
        if eq[i]:
            A.append(np.append(R[i], -1.0))
            b.append(-r0[i])
    A_eq = np.zeros((len(groups), nv + 1))
    for gi, g in enumerate(groups):
        A_eq[gi, g] = 1.0
    cost = np.zeros(nv + 1)
    cost[-1] = 1.0
    bounds = [(None, None)] * nv + [(0.0, None)]
    res = linprog(cost, A_ub=np.array(A), b_ub=np.array(b), A_eq=A_eq, b_eq=np.ones(len(groups)),
                  bounds=bounds, method="highs")
    if res.status != 0:
        raise SolverError(f"split LP failed: {res.message}")
    return res.x[:nv]


# concavification

def affine_bound_kind(c):
    """Which affinely bounded case c falls into, or None."""
    lt = c.level_tol
    eps = c.slope_eps
    d = c.upper.slopes()
    if np.all(np.abs(d - c.slopes.s_hi) <= eps) and abs(c.upper.values[0] - c.lower.values[0]) <= lt:
        return Bounded.UPPER_AFFINE
    if np.all(np.abs(d - c.slopes.s_lo) <= eps) and abs(c.upper.values[-1] - c.lower.values[-1]) <= lt:
        return Bounded.LOWER_AFFINE
    return None


def reflect_cfi(c):
    """The interval seen through x -> lo + hi - x."""
    g = c.grid
    return Cfi(GridFunction(g, c.lower.values[::-1]), GridFunction(g, c.upper.values[::-1]),
               SlopeInterval(-c.slopes.s_hi, -c.slopes.s_lo), check_smooth=False)


def reflect_measure(mu):
    return SignedMeasure(mu.grid, mu.atoms[::-1], mu.density[::-1])


@dataclass
class ConcavifyResult:
    u: GridFunction
    objective: float
    partition: Partition
    cutoff: int
    ironing: list
    potential: np.ndarray
    envelope: np.ndarray

    def __iter__(self):
        return iter((self.u, self.objective, self.partition))


def concavify_solve(c, mu, bounded=None):
    """Exact grid optimum over an affinely bounded interval via the concave envelope of the potential."""
    kind = affine_bound_kind(c)
    if bounded is None:
        bounded = kind
    bounded = Bounded(bounded) if bounded is not None else None
    if bounded is None or kind != bounded:
        raise NotAffinelyBoundedError(f"interval is not affinely bounded as {bounded} (detected {kind})")
    if bounded == Bounded.LOWER_AFFINE:
        res = _concavify_upper(reflect_cfi(c), reflect_measure(mu))
        n = c.grid.n_cells
        cells = []
        for q in res.partition.cells:
            kind_q = {CellKind.Y3: CellKind.Y4, CellKind.Y4: CellKind.Y3}.get(q.kind, q.kind)
            anchor = None if q.anchor is None else n - q.anchor
            cells.append(Cell(n - q.hi, n - q.lo, kind_q, anchor))
        cells.sort(key=lambda q: (q.lo, q.hi))
        u = GridFunction(c.grid, res.u.values[::-1])
        return ConcavifyResult(u, float(mu.integrate(u)), Partition(cells), n - res.cutoff,
                               [(n - b, n - a) for a, b in res.ironing][::-1],
                               res.potential[::-1], res.envelope[::-1])
    return _concavify_upper(c, mu)


def _concavify_upper(c, mu):
    g = c.grid
    n = g.n_cells
    h = g.h
    x = g.nodes
    w = mu.node_weights()
    W = np.cumsum(w[::-1])[::-1]                 # W_j = sum_{i >= j} w_i
    tail = np.append(np.cumsum(W[1:][::-1])[::-1], 0.0)
    pot = h * tail                               # potential at node k: h * sum_{j > k} W_j
    env = cav(GridFunction(g, pot)).values
    k_star = int(np.flatnonzero(env >= env.max() - IRON_TOL * (1.0 + np.abs(pot).max()))[0])
    gap = env - pot
    iron_tol = IRON_TOL * (1.0 + np.abs(pot).max())
    lower = c.lower.values
    u = lower.copy()
    ironing = []
    i = 0
    while i < k_star:
        if gap[i + 1] > iron_tol and i + 1 <= k_star:
            j = i + 1
            while j < k_star and gap[j] > iron_tol:
                j += 1
            ironing.append((i, j))
            u[i:j + 1] = lower[i] + (lower[j] - lower[i]) * (x[i:j + 1] - x[i]) / (x[j] - x[i])
            i = j
        else:
            i += 1
    u[k_star:] = lower[k_star] + c.slopes.s_hi * (x[k_star:] - x[k_star])
    u = np.minimum(np.maximum(u, lower), c.upper.values)
    u_f = GridFunction(g, u)

    at_lo, at_hi, co = contact_masks(c, u_f)
    cells = _singleton_runs(co, CellKind.Y0)
    touch = np.zeros(n + 1, dtype=bool)
    touch[:k_star + 1] = True
    for a, b in ironing:
        touch[a + 1:b] = False
    cells += _singleton_runs(touch & ~co, CellKind.Y2)
    for a, b in ironing:
        cells.append(Cell(a, b, CellKind.Y5))
    if k_star < n:
        cells.append(Cell(k_star, n, CellKind.Y3))
    cells.sort(key=lambda q: (q.lo, q.hi))
    return ConcavifyResult(u_f, float(mu.integrate(u_f)), Partition(cells), k_star, ironing, pot, env)


# lower-boundary design

def one_kink_family(grid, prices, slope=1.0):
    """Lower boundaries max(0, slope * (x - p)): the option-to-own menus {(0,0),(slope, slope*p)}."""
    x = grid.nodes
    return [(float(p), GridFunction(grid, np.maximum(0.0, slope * (x - p)))) for p in prices]


def two_kink_family(grid, prices, share=0.5):
    """Convex combinations share*max(0, x - p1) + (1 - share)*max(0, x - p2) over pairs p1 <= p2."""
    x = grid.nodes
    out = []
    for i, p1 in enumerate(prices):
        for p2 in prices[i:]:
            v = share * np.maximum(0.0, x - p1) + (1 - share) * np.maximum(0.0, x - p2)
            out.append(((float(p1), float(p2)), GridFunction(grid, v)))
    return out


def _inner_value(args):
    param, lower, upper, slopes, inner_mu, outer_mu = args
    c = Cfi(lower, upper, slopes, check_smooth=False)
    res = concavify_solve(c, inner_mu)
    return param, res.u, float(outer_mu.integrate(res.u))


def design_lower_boundary(family, inner_mu, outer_mu, c_template, jobs=1):
    """Scan lower boundaries; for each, solve the inner problem and score it with outer_mu.

    Returns (best parameter, inner solution, outer value, all (parameter, value) pairs).
    """
    if affine_bound_kind(c_template) is None:
        raise NotAffinelyBoundedError("template must be affinely bounded")
    tasks = [(p, lo, c_template.upper, c_template.slopes, inner_mu, outer_mu) for p, lo in family]
    if not tasks:
        raise ValueError("empty lower-boundary family")
    results = []
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_inner_value, tasks))
    else:
        for t in tasks:
            try:
                results.append(_inner_value(t))
            except Exception as e:
                raise SolverError(f"inner solve failed at parameter {t[0]}: {e}") from e
    best = max(results, key=lambda r: r[2])
    return best[0], best[1], best[2], [(p, v) for p, _, v in results]


def linearity_check(c_template, inner_mu, u0_a, u0_b, alpha):
    """Sup-norm gap between the solution for a mixed lower boundary and the mixed solutions.

    Returns None (with a warning) when the template is not affinely bounded.
    """
    if affine_bound_kind(c_template) is None:
        warnings.warn("linearity check skipped: template is not affinely bounded")
        return None

    def solve_for(lower):
        c = Cfi(lower, c_template.upper, c_template.slopes, check_smooth=False)
        return concavify_solve(c, inner_mu).u.values

    mix = GridFunction(u0_a.grid, alpha * u0_a.values + (1 - alpha) * u0_b.values)
    ua, ub, um = solve_for(u0_a), solve_for(u0_b), solve_for(mix)
    return float(np.abs(um - (alpha * ua + (1 - alpha) * ub)).max())
