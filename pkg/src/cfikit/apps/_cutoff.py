"""Lower-tangent-upper extreme points: follow the lower boundary, take a tangent
from the upper boundary, then follow the upper boundary.

The cutoff is located by the constructive scheme for single-crossing
densities: for each candidate tangency point the tangent meets the lower
boundary at l(k), and the cutoff is where the first moment of the measure
about k over [l(k), k] changes sign (found by bisection). The grid solution is
then the best grid vertex of the family near that cutoff.
"""

from dataclasses import dataclass

import numpy as np

from ..grid_fn import GridFunction


@dataclass
class CutoffSolution:
    u: GridFunction
    objective: float
    k: int              # first node on the upper boundary
    l: int              # last node on the lower boundary
    seed_k: int
    seed_theta: float   # cutoff from the scheme, interpolated between nodes
    theta0: float       # sign change of the density
    searched: str


def density_crossing(mu):
    """Index of the node after the last cell with negative density (0 if none)."""
    neg = np.flatnonzero(mu.density < 0)
    return 0 if neg.size == 0 else int(neg[-1]) + 1


def _tangent_slope(d_up, k):
    n = d_up.size
    if k == 0:
        return d_up[0]
    if k == n:
        return d_up[-1]
    return 0.5 * (d_up[k - 1] + d_up[k])


def _meet_lower(x, lo, up, k, s):
    """Largest point left of x_k where the tangent line drops to the lower boundary."""
    f = up[k] + s * (x[:k + 1] - x[k]) - lo[:k + 1]
    below = np.flatnonzero(f[:k] <= 0)
    if below.size == 0:
        return x[0]
    i = int(below[-1])
    if f[i + 1] <= 0:
        return x[i + 1]
    return x[i] + (x[i + 1] - x[i]) * (-f[i]) / (f[i + 1] - f[i])


def first_moment(mu, a, b, about):
    """Integral of (t - about) over [a, b] against mu (atoms at nodes in [a, b])."""
    g = mu.grid
    x = g.nodes
    lo_c = np.maximum(x[:-1], a)
    hi_c = np.minimum(x[1:], b)
    ok = hi_c > lo_c
    dens = np.sum(mu.density[ok] * ((hi_c[ok] - about) ** 2 - (lo_c[ok] - about) ** 2) / 2.0)
    eps = 1e-12 * (g.hi - g.lo)
    sel = (x >= a - eps) & (x <= b + eps)
    return float(dens + np.sum((x[sel] - about) * mu.atoms[sel]))


def _scheme(c, mu):
    x = c.grid.nodes
    lo, up = c.lower.values, c.upper.values
    d_up = c.upper.slopes()
    n = c.grid.n_cells
    k0 = density_crossing(mu)

    def g(k):
        s = _tangent_slope(d_up, k)
        ell = _meet_lower(x, lo, up, k, s)
        return first_moment(mu, ell, x[k], x[k])

    if k0 == 0 or k0 >= n:
        return k0, float(x[k0])
    if g(n) > 0:
        return n, float(x[n])
    a, b = k0, n      # g(a) >= 0 > g(b) in the single-crossing case
    if g(a) <= 0:
        return a, float(x[a])
    while b - a > 1:
        m = (a + b) // 2
        if g(m) > 0:
            a = m
        else:
            b = m
    ga, gb = g(a), g(b)
    theta = x[a] + (x[b] - x[a]) * ga / (ga - gb) if ga != gb else x[b]
    return b, float(theta)


def _candidates(c, w, k):
    """(value, slope) of every valid vertex whose tangent line touches the upper boundary at node k.

    The line through (x_k, upper_k) has a slope in the grid subdifferential of
    the upper boundary at k; the candidate is max(lower, line) left of k and
    the upper boundary from k on. Vertices arise when the slope is an end of
    that subdifferential, the lower boundary's own slope at k, or the chord
    slope to a lower-boundary node.
    """
    x = c.grid.nodes
    lo, up = c.lower.values, c.upper.values
    n = c.grid.n_cells
    d_lo, d_up = c.lower.slopes(), c.upper.slopes()
    eps = c.slope_eps
    s_min = d_up[k - 1] if k > 0 else -np.inf
    s_max = d_up[k] if k < n else np.inf
    tail = float(np.dot(w[k:], up[k:]))
    out = []
    if k > 0:
        ls = np.arange(k)
        s = (up[k] - lo[ls]) / (x[k] - x[ls])
        pre_lo = np.cumsum(w * lo)
        pre_w = np.concatenate([[0.0], np.cumsum(w)])
        pre_xw = np.concatenate([[0.0], np.cumsum(w * x)])
        ok = (s >= s_min - eps) & (s <= s_max + eps)
        ok[1:] &= s[1:] >= d_lo[ls[1:] - 1] - eps
        Wm = pre_w[k] - pre_w[ls + 1]
        XWm = pre_xw[k] - pre_xw[ls + 1]
        vals = pre_lo[ls] + up[k] * Wm + s * (XWm - x[k] * Wm) + tail
        out += [(float(v), float(sl)) for v, sl in zip(vals[ok], s[ok])]
    extra = [s_min, s_max]
    if k > 0 and abs(lo[k] - up[k]) <= c.level_tol:
        extra.append(d_lo[k - 1])
    for sl in extra:
        if not np.isfinite(sl) or sl < s_min - eps or sl > s_max + eps:
            continue
        v = np.maximum(lo[:k], up[k] + sl * (x[:k] - x[k]))
        out.append((float(np.dot(w[:k], v)) + tail, float(sl)))
    if k == 0:
        out.append((tail, float(d_up[0])))
    return out


def build_candidate(c, k, s):
    x = c.grid.nodes
    lo, up = c.lower.values, c.upper.values
    v = up.copy()
    v[:k] = np.maximum(lo[:k], up[k] + s * (x[:k] - x[k]))
    return GridFunction(c.grid, np.minimum(np.maximum(v, lo), up))


def _last_lower(c, u):
    on = np.abs(u.values - c.lower.values) <= c.level_tol
    k = np.flatnonzero(~on)
    return int(k[0]) - 1 if k.size else c.grid.n_cells


def tangent_cutoff_solve(c, mu, radius=4, exhaustive=False):
    """Best lower-tangent-upper grid vertex near the cutoff found by the scheme."""
    n = c.grid.n_cells
    seed_k, seed_theta = _scheme(c, mu)
    w = mu.node_weights()
    if exhaustive:
        ks = range(0, n + 1)
    else:
        ks = range(max(0, seed_k - radius), min(n, seed_k + radius) + 1)
    best = (-np.inf, None, None)
    for k in ks:
        for val, sl in _candidates(c, w, k):
            if val > best[0]:
                best = (val, k, sl)
    if best[1] is None:
        if not exhaustive:
            return tangent_cutoff_solve(c, mu, radius, exhaustive=True)
        raise ValueError("no lower-tangent-upper vertex exists on this grid")
    _, k, sl = best
    u = build_candidate(c, k, sl)
    l = max(0, min(_last_lower(c, u), k))
    k0 = density_crossing(mu)
    return CutoffSolution(u, float(mu.integrate(u)), k, l, seed_k, seed_theta,
                          float(c.grid.nodes[k0]), "all" if exhaustive else f"±{radius} nodes")
