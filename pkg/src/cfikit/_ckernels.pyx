# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops for hull construction, tableau pivoting and stop-loss sums."""

import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()


def lower_hull(const double[:] x, const double[:] y):
    """Indices of the lower convex hull of points sorted by x (monotone chain)."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t i, k = 0
    cdef cnp.intp_t[:] out = np.empty(n, dtype=np.intp)
    cdef double cross
    for i in range(n):
        while k >= 2:
            cross = ((x[out[k - 1]] - x[out[k - 2]]) * (y[i] - y[out[k - 2]])
                     - (y[out[k - 1]] - y[out[k - 2]]) * (x[i] - x[out[k - 2]]))
            if cross <= 0.0:
                k -= 1
            else:
                break
        out[k] = i
        k += 1
    return np.asarray(out[:k]).copy()


def pivot(double[:, ::1] T, Py_ssize_t r, Py_ssize_t c):
    """Gauss-Jordan pivot of tableau T on entry (r, c), in place."""
    cdef Py_ssize_t m = T.shape[0]
    cdef Py_ssize_t n = T.shape[1]
    cdef Py_ssize_t i, j
    cdef double p = T[r, c]
    cdef double f
    for j in range(n):
        T[r, j] /= p
    for i in range(m):
        if i == r:
            continue
        f = T[i, c]
        if f == 0.0:
            continue
        for j in range(n):
            T[i, j] -= f * T[r, j]
        T[i, c] = 0.0
    T[r, c] = 1.0


def bland_entering(double[:] d, signed char[:] state, double tol):
    """Smallest-index nonbasic column whose reduced cost improves the objective.

    state: 0 at lower bound, 1 at upper bound, 2 free at zero, 3 basic, 4 fixed.
    Returns (index, direction) or (-1, 0).
    """
    cdef Py_ssize_t j, n = d.shape[0]
    for j in range(n):
        if state[j] == 0 and d[j] > tol:
            return j, 1
        if state[j] == 1 and d[j] < -tol:
            return j, -1
        if state[j] == 2:
            if d[j] > tol:
                return j, 1
            if d[j] < -tol:
                return j, -1
    return -1, 0


def ratio_test(double[:] col, double[:] xb, double[:] lb, double[:] ub,
               cnp.intp_t[:] basis, int direction, double piv_tol):
    """Bounded ratio test along x_B(t) = x_B - t * direction * col.

    Returns (row, step, to_upper) with ties broken by the smallest basic index;
    row is -1 when no basic variable limits the step.
    """
    cdef Py_ssize_t i, m = col.shape[0]
    cdef Py_ssize_t best = -1
    cdef double step = INFINITY
    cdef double a, t
    cdef bint to_upper = False, up
    for i in range(m):
        a = direction * col[i]
        if a > piv_tol:
            if lb[i] == -INFINITY:
                continue
            t = (xb[i] - lb[i]) / a
            up = False
        elif a < -piv_tol:
            if ub[i] == INFINITY:
                continue
            t = (xb[i] - ub[i]) / a
            up = True
        else:
            continue
        if t < 0.0:
            t = 0.0
        if best < 0 or t < step - 1e-12:
            best = i
            step = t
            to_upper = up
        elif t <= step + 1e-12 and basis[i] < basis[best]:
            best = i
            to_upper = up
    return best, step, to_upper


def stop_loss_nodes(const double[:] x, const double[:] mass):
    """S[k] = sum_i (x_i - x_k)^+ mass_i for every node k."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t k
    cdef double acc_m = 0.0, acc_xm = 0.0
    cdef cnp.float64_t[:] out = np.zeros(n)
    for k in range(n - 1, -1, -1):
        out[k] = acc_xm - x[k] * acc_m
        acc_m += mass[k]
        acc_xm += x[k] * mass[k]
    return np.asarray(out)
