"""Type distributions on a compact support: density, its derivative, CDF and quantile.

Analytic kinds (uniform, truncated logistic, truncated Gaussian mixture) use
closed-form densities and derivatives. Tabulated CDFs fall back to central
differences.
"""

from enum import Enum

import numpy as np
from scipy.special import expit
from scipy.stats import norm

from ..grid_fn import GridFunction

QUANTILE_TABLE = 20001


class DistKind(str, Enum):
    UNIFORM = "uniform"
    TRUNCATED_LOGISTIC = "truncated_logistic"
    TRUNCATED_GAUSSIAN_MIXTURE = "truncated_gaussian_mixture"
    TABULATED = "tabulated"


class Distribution:
    """A distribution with a strictly positive density on [lo, hi]."""

    def __init__(self, kind, params=None, support=(0.0, 1.0)):
        self.kind = DistKind(kind)
        self.params = dict(params or {})
        self.lo, self.hi = float(support[0]), float(support[1])
        if not self.hi > self.lo:
            raise ValueError(f"empty support [{self.lo}, {self.hi}]")
        self._table = None
        if self.kind == DistKind.TABULATED:
            cdf = self.params["cdf"]
            v = np.asarray(cdf.values, dtype=float)
            if np.any(np.diff(v) < 0):
                raise ValueError("tabulated CDF decreases")
            if abs(v[0]) > 1e-9 or abs(v[-1] - 1.0) > 1e-9:
                raise ValueError("tabulated CDF must run from 0 to 1")
            self._x = cdf.grid.nodes
            self._F = v
            self._f = np.gradient(v, self._x)
            self._df = np.gradient(self._f, self._x)
            self.lo, self.hi = float(self._x[0]), float(self._x[-1])
        else:
            self._raw_lo = self._raw_cdf(self.lo)
            self._mass = self._raw_cdf(self.hi) - self._raw_lo
            if not self._mass > 0:
                raise ValueError("distribution puts no mass on the support")

    def __repr__(self):
        p = {k: v for k, v in self.params.items() if k != "cdf"}
        return f"Distribution({self.kind.value}, {p}, support=({self.lo}, {self.hi}))"

    # untruncated pieces

    def _raw_cdf(self, x):
        k, p = self.kind, self.params
        if k == DistKind.UNIFORM:
            return (np.asarray(x, dtype=float) - self.lo) / (self.hi - self.lo)
        if k == DistKind.TRUNCATED_LOGISTIC:
            return expit((np.asarray(x, dtype=float) - p["location"]) / p["scale"])
        if k == DistKind.TRUNCATED_GAUSSIAN_MIXTURE:
            x = np.asarray(x, dtype=float)
            return sum(w * norm.cdf(x, m, s) for w, m, s in zip(p["weights"], p["means"], p["sigmas"]))
        raise AssertionError(k)

    def _raw_pdf(self, x):
        k, p = self.kind, self.params
        x = np.asarray(x, dtype=float)
        if k == DistKind.UNIFORM:
            return np.full_like(x, 1.0 / (self.hi - self.lo))
        if k == DistKind.TRUNCATED_LOGISTIC:
            s = expit((x - p["location"]) / p["scale"])
            return s * (1 - s) / p["scale"]
        if k == DistKind.TRUNCATED_GAUSSIAN_MIXTURE:
            return sum(w * norm.pdf(x, m, s) for w, m, s in zip(p["weights"], p["means"], p["sigmas"]))
        raise AssertionError(k)

    def _raw_dpdf(self, x):
        k, p = self.kind, self.params
        x = np.asarray(x, dtype=float)
        if k == DistKind.UNIFORM:
            return np.zeros_like(x)
        if k == DistKind.TRUNCATED_LOGISTIC:
            s = expit((x - p["location"]) / p["scale"])
            return s * (1 - s) * (1 - 2 * s) / p["scale"] ** 2
        if k == DistKind.TRUNCATED_GAUSSIAN_MIXTURE:
            return sum(-w * (x - m) / s ** 2 * norm.pdf(x, m, s)
                       for w, m, s in zip(p["weights"], p["means"], p["sigmas"]))
        raise AssertionError(k)

    # public interface

    def pdf(self, x):
        if self.kind == DistKind.TABULATED:
            return np.interp(x, self._x, self._f)
        return self._raw_pdf(x) / self._mass

    def dpdf(self, x):
        """Derivative of the density."""
        if self.kind == DistKind.TABULATED:
            return np.interp(x, self._x, self._df)
        return self._raw_dpdf(x) / self._mass

    def cdf(self, x):
        if self.kind == DistKind.TABULATED:
            return np.interp(x, self._x, self._F)
        x = np.clip(np.asarray(x, dtype=float), self.lo, self.hi)
        return (self._raw_cdf(x) - self._raw_lo) / self._mass

    def quantile(self, q):
        """Inverse CDF by monotone interpolation of a fine table (leftmost preimage on flats)."""
        if self._table is None:
            if self.kind == DistKind.TABULATED:
                xs, Fs = self._x, self._F
            else:
                xs = np.linspace(self.lo, self.hi, QUANTILE_TABLE)
                Fs = self.cdf(xs)
                Fs[0], Fs[-1] = 0.0, 1.0
            # keep the leftmost point of every flat so np.interp picks it
            keep = np.concatenate([[True], np.diff(Fs) > 0])
            self._table = (Fs[keep], xs[keep])
        Fs, xs = self._table
        return np.interp(np.clip(q, 0.0, 1.0), Fs, xs)

    def mean(self):
        xs = np.linspace(self.lo, self.hi, QUANTILE_TABLE)
        return float(np.trapezoid(xs * self.pdf(xs), xs))

    def virtual_value(self, x):
        """x - (1 - F(x)) / f(x)."""
        return x - (1.0 - self.cdf(x)) / self.pdf(x)

    def virtual_value_slope(self, x):
        f = self.pdf(x)
        return 2.0 + (1.0 - self.cdf(x)) * self.dpdf(x) / f ** 2


def uniform(lo=0.0, hi=1.0):
    return Distribution(DistKind.UNIFORM, support=(lo, hi))


def truncated_logistic(location, scale, support=(0.0, 1.0)):
    return Distribution(DistKind.TRUNCATED_LOGISTIC, {"location": location, "scale": scale}, support)


def truncated_gaussian_mixture(weights, means, sigmas, support=(0.0, 1.0)):
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0) or w.sum() <= 0:
        raise ValueError("mixture weights must be nonnegative and not all zero")
    return Distribution(DistKind.TRUNCATED_GAUSSIAN_MIXTURE,
                        {"weights": list(w / w.sum()), "means": list(means), "sigmas": list(sigmas)},
                        support)


def tabulated(cdf):
    if not isinstance(cdf, GridFunction):
        raise TypeError("tabulated distributions take the CDF as a GridFunction")
    return Distribution(DistKind.TABULATED, {"cdf": cdf})


def is_log_concave(dist, n=2001, tol=1e-7):
    """Second differences of log f are nonpositive up to tol on a fine grid."""
    x = np.linspace(dist.lo, dist.hi, n)
    lf = np.log(dist.pdf(x))
    d2 = np.diff(lf, 2)
    return bool(d2.max() <= tol * (1.0 + np.abs(lf).max()))


def is_myerson_regular(dist, n=2001, tol=1e-9):
    """Virtual value nondecreasing on a fine grid."""
    x = np.linspace(dist.lo, dist.hi, n)
    v = dist.virtual_value(x)
    return bool(np.diff(v).min() >= -tol * (1.0 + np.abs(v).max()))


def integral_above(G, x):
    """Integral of the CDF of G from x to the top of [0, 1], i.e. 1 - E[max(X, x)]."""
    if hasattr(G, "integral_above") and not isinstance(G, Distribution):
        return G.integral_above(x)
    xs = np.linspace(0.0, 1.0, QUANTILE_TABLE)
    Fs = G.cdf(xs)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (Fs[1:] + Fs[:-1]) * np.diff(xs))])
    return np.interp(x, xs, cum[-1] - cum)


class PointMass:
    """All mass at one point: the no-information distribution of posterior means."""

    def __init__(self, at):
        self.at = float(at)

    def cdf(self, x):
        return (np.asarray(x, dtype=float) >= self.at).astype(float)

    def integral_above(self, x):
        return 1.0 - np.maximum(np.asarray(x, dtype=float), self.at)

    def mean(self):
        return self.at


class Mixture:
    """Convex combination of distributions; CDFs and their integrals mix linearly."""

    def __init__(self, parts):
        self.parts = [(float(w), d) for w, d in parts if w != 0]
        tot = sum(w for w, _ in self.parts)
        if abs(tot - 1.0) > 1e-12 or any(w < 0 for w, _ in self.parts):
            raise ValueError("mixture weights must be nonnegative and sum to 1")

    def cdf(self, x):
        return sum(w * d.cdf(x) for w, d in self.parts)

    def integral_above(self, x):
        return sum(w * integral_above(d, x) for w, d in self.parts)

    def mean(self):
        return sum(w * d.mean() for w, d in self.parts)
