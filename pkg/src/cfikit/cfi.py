"""Convex function intervals: membership, extreme-point structure, and majorization builders.

A CFI is the set of convex u on the grid with lower <= u <= upper and every
first difference quotient inside [s_lo, s_hi].
"""

import os
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import (FalsificationError, GridMismatchError, InvalidCfiError,
                     NotConvexError, PreconditionError, StructureError)
from .grid_fn import (Grid, GridFunction, SlopeInterval, TOL_CONVEX,
                      bregman_perturbation, require_convex)

LEVEL_TOL = 1e-7
SMOOTH_CAP = 0.25
EPS_FLOOR = 1e-12
WITNESS_REL = 1e-6


class Cfi:
    """lower <= u <= upper, u convex, slopes of u in [s_lo, s_hi]. Immutable."""

    __slots__ = ("grid", "lower", "upper", "slopes")

    def __init__(self, lower, upper, slopes, check_smooth=True, smooth_cap=SMOOTH_CAP):
        if not isinstance(slopes, SlopeInterval):
            slopes = SlopeInterval(*slopes)
        if lower.grid != upper.grid:
            raise GridMismatchError(f"lower on {lower.grid}, upper on {upper.grid}")
        object.__setattr__(self, "grid", lower.grid)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "slopes", slopes)
        self._validate(check_smooth, smooth_cap)

    def __setattr__(self, name, value):
        raise AttributeError("Cfi is immutable")

    def __repr__(self):
        s = self.slopes
        return f"Cfi({self.grid}, slopes=[{s.s_lo:g}, {s.s_hi:g}])"

    def _validate(self, check_smooth, smooth_cap):
        for name, f in (("lower", self.lower), ("upper", self.upper)):
            try:
                require_convex(f, what=name)
            except NotConvexError as e:
                raise InvalidCfiError(str(e)) from None
        gap = self.upper.values - self.lower.values
        bad = np.flatnonzero(gap < -self.level_tol)
        if bad.size:
            i = int(bad[0])
            raise InvalidCfiError(f"lower exceeds upper by {-gap[i]:.3e} at node {i}")
        eps = self.slope_eps
        for name, f in (("lower", self.lower), ("upper", self.upper)):
            d = f.slopes()
            lo = np.flatnonzero(d < self.slopes.s_lo - eps)
            hi = np.flatnonzero(d > self.slopes.s_hi + eps)
            if lo.size or hi.size:
                j = int(min(np.concatenate([lo, hi])))
                raise InvalidCfiError(f"{name} slope {d[j]:.6g} on cell {j} outside "
                                      f"[{self.slopes.s_lo:g}, {self.slopes.s_hi:g}]")
        if check_smooth:
            s = self.slopes
            width = s.s_hi - s.s_lo
            if not np.isfinite(width):
                width = 1.0 + np.abs(self.upper.slopes()).max()
            inc = np.diff(self.upper.slopes())
            if inc.size and inc.max() > smooth_cap * width + eps:
                j = int(np.argmax(inc)) + 1
                raise InvalidCfiError(f"upper boundary has a kink at node {j} "
                                      f"(slope jump {inc.max():.4g}); a differentiable upper "
                                      "boundary is required")

    @property
    def level_tol(self):
        gap = np.abs(self.upper.values - self.lower.values).max()
        return LEVEL_TOL * (1.0 + gap)

    @property
    def slope_eps(self):
        return self.level_tol / self.grid.h

    def contains(self, u):
        return contains(self, u)

    def to_dir(self, directory):
        """Write lower.csv, upper.csv, slopes.txt and grid.txt into directory."""
        os.makedirs(directory, exist_ok=True)
        self.lower.to_csv(os.path.join(directory, "lower.csv"))
        self.upper.to_csv(os.path.join(directory, "upper.csv"))
        with open(os.path.join(directory, "slopes.txt"), "w") as fh:
            fh.write(f"s_lo = {self.slopes.s_lo!r}\ns_hi = {self.slopes.s_hi!r}\n")
        g = self.grid
        with open(os.path.join(directory, "grid.txt"), "w") as fh:
            fh.write(f"lo = {g.lo!r}\nhi = {g.hi!r}\nn_cells = {g.n_cells}\n")

    @classmethod
    def from_dir(cls, directory, check_smooth=True):
        grid_kv = _read_kv(os.path.join(directory, "grid.txt"))
        slope_kv = _read_kv(os.path.join(directory, "slopes.txt"))
        grid = Grid(float(grid_kv["lo"]), float(grid_kv["hi"]), int(grid_kv["n_cells"]))
        lower = GridFunction.read_csv(os.path.join(directory, "lower.csv"), grid)
        upper = GridFunction.read_csv(os.path.join(directory, "upper.csv"), grid)
        return cls(lower, upper, SlopeInterval(float(slope_kv["s_lo"]), float(slope_kv["s_hi"])),
                   check_smooth=check_smooth)


def _read_kv(path):
    out = {}
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{n}: expected 'key = value'")
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out


def violation(c, values):
    """Largest raw constraint violation of a node vector (0 when feasible)."""
    v = np.asarray(values, dtype=float)
    h = c.grid.h
    dv = np.diff(v)
    parts = [c.lower.values - v, v - c.upper.values, -(v[2:] - 2 * v[1:-1] + v[:-2])]
    if np.isfinite(c.slopes.s_lo):
        parts.append(c.slopes.s_lo * h - dv)
    if np.isfinite(c.slopes.s_hi):
        parts.append(dv - c.slopes.s_hi * h)
    return max(0.0, max(float(p.max()) for p in parts))


def contains(c, u, tol=None):
    """Membership with the level band and the convexity band of grid_fn."""
    c.grid.check_same(u.grid)
    lt = c.level_tol if tol is None else tol
    if not u.is_convex():
        return False
    v = u.values
    if np.any(v < c.lower.values - lt) or np.any(v > c.upper.values + lt):
        return False
    d = u.slopes()
    eps = lt / c.grid.h
    return bool(np.all(d >= c.slopes.s_lo - eps) and np.all(d <= c.slopes.s_hi + eps))


# extreme-point structure

class Saturation(str, Enum):
    TANGENTIAL = "tangential"
    CHORDAL = "chordal"
    SLOPE_LOW = "slope_low"
    SLOPE_HIGH = "slope_high"
    BOUNDARY = "boundary"


@dataclass(frozen=True)
class SaturationLabel:
    kind: Saturation
    anchor: int = None

    def __post_init__(self):
        if (self.kind == Saturation.TANGENTIAL) != (self.anchor is not None):
            raise ValueError("a tangential label carries an anchor, other labels do not")


@dataclass(frozen=True)
class Piece:
    """A maximal interval [a, b] (node indices) on which u is affine and strictly inside the bounds."""
    a: int
    b: int
    slope: float
    label: SaturationLabel = None


@dataclass
class ExtremeStructure:
    intervals: list
    at_lower: np.ndarray
    at_upper: np.ndarray
    coincide: np.ndarray

    def unlabeled(self):
        return [p for p in self.intervals if p.label is None]


@dataclass
class ExtremeReport:
    ok: bool
    structure: ExtremeStructure = None
    failure: str = ""
    node: int = None
    null_dim: int = 0
    lines: list = field(default_factory=list)

    def __bool__(self):
        return self.ok

    def __str__(self):
        return "\n".join(self.lines)


def contact_masks(c, u):
    lt = c.level_tol
    v = u.values
    at_lo = v - c.lower.values <= lt
    at_hi = c.upper.values - v <= lt
    coincide = c.upper.values - c.lower.values <= lt
    return at_lo, at_hi, coincide


def _free_runs(at_lo, at_hi):
    """Maximal node ranges [a, b] made of cells not lying entirely on one bound."""
    n = len(at_lo) - 1
    free = ~((at_lo[:-1] & at_lo[1:]) | (at_hi[:-1] & at_hi[1:]))
    runs, j = [], 0
    while j < n:
        if free[j]:
            k = j
            while k < n and free[k]:
                k += 1
            runs.append((j, k))
            j = k
        else:
            j += 1
    return runs


def _tangent_ok(c, y, s, side, rule):
    """Does slope s at the upper-contact node y qualify as tangential saturation?

    side is 'right' when the piece extends to the right of y.
    """
    d = c.upper.slopes()
    n = c.grid.n_cells
    eps = c.slope_eps
    sl = c.slopes
    if rule == "central":
        if y == 0:
            return abs(s - sl.s_lo) <= eps or abs(s - d[0]) <= eps
        if y == n:
            return abs(s - sl.s_hi) <= eps or abs(s - d[-1]) <= eps
        band = 0.5 * np.abs(np.diff(d)).max() if n > 1 else 0.0
        return abs(s - 0.5 * (d[y - 1] + d[y])) <= band + eps
    # grid rule: s lies in the difference-quotient subdifferential of upper at y
    # at the domain ends only the slope bound or the one-sided quotient qualifies
    if y == 0:
        return abs(s - sl.s_lo) <= eps or abs(s - d[0]) <= eps
    if y == n:
        return abs(s - sl.s_hi) <= eps or abs(s - d[-1]) <= eps
    return d[y - 1] - eps <= s <= d[y] + eps


def detect_structure(c, u, tangency="grid", strict=True):
    """Split the region where u is strictly inside the bounds into labeled affine pieces.

    Raises StructureError when a run between contact nodes is not piecewise
    affine with at most two kinks, or (strict=True) when a piece carries no
    saturation label.
    """
    c.grid.check_same(u.grid)
    if not contains(c, u):
        raise PreconditionError("candidate is not a member of the interval")
    at_lo, at_hi, coincide = contact_masks(c, u)
    lt = c.level_tol
    v = u.values
    n = c.grid.n_cells
    h = c.grid.h
    contact = at_lo | at_hi
    d2 = np.zeros(n + 1)
    d2[1:-1] = v[2:] - 2 * v[1:-1] + v[:-2]
    kink = np.abs(d2) > lt

    raw = []
    for a, b in _free_runs(at_lo, at_hi):
        cuts = [a]
        for i in range(a + 1, b):
            if contact[i] or kink[i]:
                cuts.append(i)
        cuts.append(b)
        # a stretch between contacts with more than two kinks cannot be extreme
        seg_start = a
        n_kinks = 0
        for i in range(a + 1, b + 1):
            if i < b and kink[i] and not contact[i]:
                n_kinks += 1
            if i == b or contact[i]:
                if n_kinks > 2:
                    raise StructureError("interior run not affine", seg_start,
                                         f"{n_kinks} kinks strictly inside [{seg_start}, {i}]")
                seg_start, n_kinks = i, 0
        for p, q in zip(cuts[:-1], cuts[1:]):
            raw.append((p, q, float((v[q] - v[p]) / ((q - p) * h))))

    tangential = {}
    for k, (a, b, s) in enumerate(raw):
        for y, side in ((a, "right"), (b, "left")):
            if at_hi[y] and not coincide[y] and _tangent_ok(c, y, s, side, tangency):
                tangential[k] = y
                break

    def end_ok(k, node):
        if at_lo[node]:
            return True
        for j in (k - 1, k + 1):
            if j in tangential and 0 <= j < len(raw) and node in raw[j][:2]:
                return True
        return False

    sl = c.slopes
    eps = c.slope_eps
    pieces = []
    for k, (a, b, s) in enumerate(raw):
        if k in tangential:
            label = SaturationLabel(Saturation.TANGENTIAL, tangential[k])
        elif a == 0 and abs(s - sl.s_lo) <= eps and end_ok(k, b):
            label = SaturationLabel(Saturation.SLOPE_LOW)
        elif b == n and abs(s - sl.s_hi) <= eps and end_ok(k, a):
            label = SaturationLabel(Saturation.SLOPE_HIGH)
        elif end_ok(k, a) and end_ok(k, b):
            label = SaturationLabel(Saturation.CHORDAL)
        elif (a == 0 and contact[0] and end_ok(k, b)) or (b == n and contact[n] and end_ok(k, a)):
            label = SaturationLabel(Saturation.BOUNDARY)
        else:
            label = None
            if strict:
                raise StructureError("no saturation condition", a,
                                     f"affine piece [{a}, {b}] with slope {s:.6g}")
        pieces.append(Piece(a, b, s, label))
    return ExtremeStructure(pieces, at_lo, at_hi, coincide)


def active_matrix(c, u, tol=None):
    """Rows of the grid constraints that u satisfies with equality (within tol)."""
    lt = c.level_tol if tol is None else tol
    v = u.values
    N = c.grid.n_nodes
    h = c.grid.h
    rows = []
    eye = np.eye(N)
    lev = (np.abs(v - c.lower.values) <= lt) | (np.abs(c.upper.values - v) <= lt)
    rows.extend(eye[lev])
    d2 = v[2:] - 2 * v[1:-1] + v[:-2]
    for i in np.flatnonzero(np.abs(d2) <= lt) + 1:
        r = np.zeros(N)
        r[i - 1], r[i], r[i + 1] = 1.0, -2.0, 1.0
        rows.append(r)
    dv = np.diff(v)
    for bound in (c.slopes.s_lo, c.slopes.s_hi):
        if not np.isfinite(bound):
            continue
        for j in np.flatnonzero(np.abs(dv - bound * h) <= lt):
            r = np.zeros(N)
            r[j], r[j + 1] = -1.0, 1.0
            rows.append(r)
    return np.array(rows).reshape(-1, N)


def _null_space(A, N):
    if A.shape[0] == 0:
        return np.eye(N)
    _, sv, vt = np.linalg.svd(A, full_matrices=True)
    rank = int(np.sum(sv > 1e-9 * max(1.0, sv.max())))
    return vt[rank:].T


def grid_vertex_dim(c, u, tol=None):
    """Dimension of the set of directions that keep every active constraint active."""
    A = active_matrix(c, u, tol)
    return _null_space(A, c.grid.n_nodes).shape[1]


def verify_extreme(c, u, tangency="grid"):
    """Check the extreme-point characterization on u and return an ExtremeReport.

    Passing requires a complete labeled structure and, because the grid turns
    the upper boundary into a polygon, that the active grid constraints pin u.
    """
    try:
        st = detect_structure(c, u, tangency=tangency, strict=False)
    except StructureError as e:
        return ExtremeReport(False, None, e.condition, e.node, lines=[f"FAIL {e}"])
    except PreconditionError as e:
        return ExtremeReport(False, None, "membership", None, lines=[f"FAIL {e}"])
    lines = []
    for p in st.intervals:
        kind = p.label.kind.value if p.label else "none"
        extra = f" anchor={p.label.anchor}" if p.label and p.label.anchor is not None else ""
        lines.append(f"[{kind}] [{p.a},{p.b}] slope={p.slope:.9g}{extra}")
    bad = st.unlabeled()
    if bad:
        p = bad[0]
        lines.append(f"FAIL no saturation condition on [{p.a},{p.b}]")
        return ExtremeReport(False, st, "no saturation condition", p.a, lines=lines)
    dim = grid_vertex_dim(c, u)
    if dim:
        lines.append(f"FAIL active constraints leave {dim} free direction(s)")
        return ExtremeReport(False, st, "free direction", None, dim, lines)
    lines.append("extreme")
    return ExtremeReport(True, st, lines=lines)


def _ramp(N, a, b, up=True):
    r = np.zeros(N)
    t = np.linspace(0.0, 1.0, b - a + 1)
    r[a:b + 1] = t if up else t[::-1]
    return r


def _candidates(c, u, st, failure_node):
    """Perturbation directions to try, most specific first."""
    N = c.grid.n_nodes
    n = c.grid.n_cells
    out = []
    if st is None:
        # non-affine run: Bregman perturbation on the run between contacts around the failure
        at_lo, at_hi, _ = contact_masks(c, u)
        contact = at_lo | at_hi
        a = failure_node if failure_node is not None else 0
        b = a + 1
        while b < n and not contact[b]:
            b += 1
        for lo_, hi_ in ((a, b), (max(a - 1, 0), min(b + 1, n))):
            if hi_ - lo_ >= 2:
                out.append(("bregman", bregman_perturbation(u, lo_, hi_).values))
        return out
    pieces = st.intervals
    targets = [k for k, p in enumerate(pieces) if p.label is None] or range(len(pieces))
    for k in targets:
        p = pieces[k]
        nxt = pieces[k + 1] if k + 1 < len(pieces) and pieces[k + 1].a == p.b else None
        prv = pieces[k - 1] if k > 0 and pieces[k - 1].b == p.a else None
        out.append(("h3", np.where((np.arange(N) >= p.a) & (np.arange(N) <= p.b), 1.0, 0.0)))
        if nxt is not None:
            out.append(("h1", _ramp(N, p.a, p.b) + _ramp(N, nxt.a, nxt.b, up=False) * (np.arange(N) > p.b)))
            h2 = _ramp(N, p.a, p.b)
            h2[p.b:nxt.b + 1] = 1.0
            out.append(("h2", h2))
        if prv is not None:
            out.append(("h1", _ramp(N, p.a, p.b, up=False) + _ramp(N, prv.a, prv.b) * (np.arange(N) < p.a)))
            h2 = _ramp(N, p.a, p.b, up=False)
            h2[prv.a:p.a + 1] = 1.0
            out.append(("h2", h2))
        out.append(("ramp", _ramp(N, p.a, p.b)))
        out.append(("ramp", _ramp(N, p.a, p.b, up=False)))
        if p.b == n:
            out.append(("h2", _ramp(N, p.a, n)))
    return out


def _try_scale(c, u, hvec):
    """Largest eps = eps0 / 2^k with u +- eps*h both feasible, or None."""
    v = u.values
    hn = np.abs(hvec).max()
    if hn == 0.0:
        return None
    hvec = hvec / hn
    base = violation(c, v)
    scale = 1.0 + np.abs(c.upper.values - c.lower.values).max()
    eps = scale
    floor = EPS_FLOOR * scale
    while eps >= floor:
        allow = base + WITNESS_REL * eps
        if violation(c, v + eps * hvec) <= allow and violation(c, v - eps * hvec) <= allow:
            return eps * hvec
        eps *= 0.5
    return None


def is_witness(c, u, hvec):
    """u + h and u - h both satisfy every grid constraint (relative to u's own round-off)."""
    hn = np.abs(hvec).max()
    if hn == 0.0:
        return False
    allow = violation(c, u.values) + WITNESS_REL * hn
    return (violation(c, u.values + hvec) <= allow and violation(c, u.values - hvec) <= allow)


def falsify_extremality(c, u, tangency="grid"):
    """Return h != 0 with u + h and u - h in the interval, or None when u verifies as extreme."""
    rep = verify_extreme(c, u, tangency)
    if rep.ok:
        return None
    if rep.failure == "membership":
        raise PreconditionError("candidate is not a member of the interval")
    cands = _candidates(c, u, rep.structure, rep.node)
    ns = _null_space(active_matrix(c, u), c.grid.n_nodes)
    for j in range(ns.shape[1]):
        cands.append(("null", ns[:, j]))
    for _, hvec in cands:
        w = _try_scale(c, u, hvec)
        if w is not None:
            return GridFunction(c.grid, w)
    raise FalsificationError(f"no two-sided perturbation found above eps floor "
                             f"(failure: {rep.failure} at node {rep.node})")


# constructors

def cutoff_utility(c, theta_star):
    """lower up to node theta_star, then the ray of slope s_hi from lower(theta_star)."""
    k = int(theta_star)
    x = c.grid.nodes
    v = c.lower.values.copy()
    v[k:] = c.lower.values[k] + c.slopes.s_hi * (x[k:] - x[k])
    over = v - c.upper.values
    if over.max() > c.level_tol:
        i = int(np.argmax(over))
        raise PreconditionError(f"ray from node {k} exceeds the upper boundary at node {i}")
    return GridFunction(c.grid, np.minimum(v, c.upper.values))


def iso_to_function(phi):
    """Cumulative trapezoid integral of phi minus its total integral."""
    v = phi.values
    h = phi.grid.h
    cum = np.concatenate([[0.0], np.cumsum(0.5 * h * (v[1:] + v[:-1]))])
    return GridFunction(phi.grid, cum - cum[-1])


def iso_from_function(I):
    """Right difference quotients of I (left quotient at the last node)."""
    d = I.slopes()
    return GridFunction(I.grid, np.append(d, d[-1]))


def make_majorization_cfi(f, g, weak=False, s_floor=None, check_smooth=True):
    """Interval of integrated functions between I_f (lower) and I_g (upper).

    f must majorize g (weakly when weak=True). Slopes are [f(lo), f(hi)], or
    [s_floor, f(hi)] in the weak case.
    """
    f.grid.check_same(g.grid)
    for name, phi in (("f", f), ("g", g)):
        dv = np.diff(phi.values)
        tol = TOL_CONVEX * (1.0 + phi.max_abs())
        if np.any(dv < -tol):
            j = int(np.flatnonzero(dv < -tol)[0])
            raise InvalidCfiError(f"{name} decreases on cell {j}")
    If, Ig = iso_to_function(f), iso_to_function(g)
    if weak:
        if s_floor is None:
            raise ValueError("weak majorization needs a slope floor")
        slopes = SlopeInterval(min(s_floor, float(f.values[0])), float(f.values[-1]))
    else:
        slopes = SlopeInterval(float(f.values[0]), float(f.values[-1]))
    return majorization_cfi_from_integrals(If, Ig, slopes, weak, check_smooth)


def majorization_cfi_from_integrals(If, Ig, slopes, weak=False, check_smooth=True):
    """Same interval from integrated functions computed elsewhere (exactly, say)."""
    tol = LEVEL_TOL * (1.0 + max(If.max_abs(), Ig.max_abs()))
    gap = Ig.values - If.values
    if gap.min() < -tol:
        i = int(np.flatnonzero(gap < -tol)[0])
        raise InvalidCfiError(f"majorization fails at node {i}: I_f - I_g = {-gap[i]:.3e}")
    if not weak and abs(gap[0]) > tol:
        raise InvalidCfiError(f"means differ by {gap[0]:.3e}; use weak majorization")
    hi = GridFunction(If.grid, np.maximum(Ig.values, If.values))
    return Cfi(If, hi, slopes, check_smooth=check_smooth)
