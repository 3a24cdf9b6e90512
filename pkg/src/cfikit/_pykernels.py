"""Pure numpy versions of the compiled kernels, used when the extension is absent."""

import numpy as np


def lower_hull(x, y):
    """Indices of the lower convex hull of points sorted by x (monotone chain)."""
    out = []
    for i in range(len(x)):
        while len(out) >= 2:
            a, b = out[-2], out[-1]
            cross = (x[b] - x[a]) * (y[i] - y[a]) - (y[b] - y[a]) * (x[i] - x[a])
            if cross <= 0.0:
                out.pop()
            else:
                break
        out.append(i)
    return np.array(out, dtype=np.intp)


def pivot(T, r, c):
    """Gauss-Jordan pivot of tableau T on entry (r, c), in place."""
    T[r] /= T[r, c]
    f = T[:, c].copy()
    f[r] = 0.0
    T -= np.outer(f, T[r])
    T[:, c] = 0.0
    T[r, c] = 1.0


def bland_entering(d, state, tol):
    """Smallest-index nonbasic column whose reduced cost improves the objective."""
    up = ((state == 0) | (state == 2)) & (d > tol)
    down = ((state == 1) | (state == 2)) & (d < -tol)
    idx = np.flatnonzero(up | down)
    if idx.size == 0:
        return -1, 0
    j = int(idx[0])
    return j, (1 if up[j] else -1)


def ratio_test(col, xb, lb, ub, basis, direction, piv_tol):
    """Bounded ratio test along x_B(t) = x_B - t * direction * col."""
    a = direction * np.asarray(col)
    with np.errstate(divide="ignore", invalid="ignore"):
        t_lo = np.where(a > piv_tol, (xb - lb) / a, np.inf)
        t_hi = np.where(a < -piv_tol, (xb - ub) / a, np.inf)
    t = np.minimum(t_lo, t_hi)
    t = np.where(np.isnan(t), np.inf, t)
    finite = np.isfinite(t)
    if not finite.any():
        return -1, np.inf, False
    t = np.where(finite, np.maximum(t, 0.0), np.inf)
    step = t.min()
    ties = np.flatnonzero(t <= step + 1e-12)
    best = int(ties[np.argmin(np.asarray(basis)[ties])])
    return best, float(step), bool(t_hi[best] < t_lo[best])


def stop_loss_nodes(x, mass):
    """S[k] = sum_i (x_i - x_k)^+ mass_i for every node k."""
    m_right = np.cumsum(mass[::-1])[::-1]
    xm_right = np.cumsum((x * mass)[::-1])[::-1]
    m_after = np.append(m_right[1:], 0.0)
    xm_after = np.append(xm_right[1:], 0.0)
    return xm_after - x * m_after
