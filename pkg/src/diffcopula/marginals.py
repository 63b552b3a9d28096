"""Marginal distributions of the observed process.

Hansen's skewed Student-t, the clamped empirical cdf, and Gaussian-kernel
cdf/pdf estimators with derivatives up to third order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special, stats

from .errors import (
    BandwidthError,
    ConvergenceError,
    DegenerateSampleError,
    DomainError,
    ParamError,
)


# ------------------------------------------------------------------ SKST
@dataclass(frozen=True)
class SkstParams:
    """Skewed Student-t with mean ``m``, standard deviation ``v``,
    skewness ``lam`` in (-1, 1) and ``tau > 2`` degrees of freedom."""

    m: float
    v: float
    lam: float
    tau: float

    def __post_init__(self):
        if not (self.v > 0 and -1 < self.lam < 1 and self.tau > 2):
            raise ParamError(f"invalid SKST parameters {self}")

    @property
    def q(self) -> float:
        t = self.tau
        # poch keeps the gamma ratio accurate for very large tau
        return float(special.poch(t / 2, 0.5)) / math.sqrt(math.pi * (t - 2))

    @property
    def a(self) -> float:
        t = self.tau
        return 4 * self.lam * self.q * (t - 2) / (t - 1)

    @property
    def b(self) -> float:
        return math.sqrt(1 + 3 * self.lam**2 - self.a**2)

    def as_tuple(self):
        return (self.m, self.v, self.lam, self.tau)


def _phi(phi) -> SkstParams:
    return phi if isinstance(phi, SkstParams) else SkstParams(*phi)


def _skst_w(y, p: SkstParams):
    # w = b z + a, with the kink of the density at w = 0
    return p.b * (np.asarray(y, float) - p.m) / p.v + p.a


def skst_logpdf(y, phi):
    p = _phi(phi)
    w = _skst_w(y, p)
    s = np.where(w < 0, 1 - p.lam, 1 + p.lam)
    core = np.log1p((w / s) ** 2 / (p.tau - 2))
    return math.log(p.b * p.q / p.v) - 0.5 * (p.tau + 1) * core


def skst_pdf(y, phi):
    """Density of the skewed Student-t at ``y``."""
    return np.exp(skst_logpdf(y, phi))


def skst_cdf(y, phi):
    p = _phi(phi)
    w = _skst_w(y, p)
    r = math.sqrt(p.tau / (p.tau - 2))
    left = (1 - p.lam) * special.stdtr(p.tau, w / (1 - p.lam) * r)
    right = (1 - p.lam) / 2 + (1 + p.lam) * (special.stdtr(p.tau, w / (1 + p.lam) * r) - 0.5)
    return np.where(w < 0, left, right)


def skst_quantile(u, phi):
    """Inverse of :func:`skst_cdf` by branch selection and the t quantile."""
    p = _phi(phi)
    u = np.asarray(u, float)
    if np.any((u <= 0) | (u >= 1)):
        raise DomainError("quantile argument must lie in (0, 1)")
    r = math.sqrt((p.tau - 2) / p.tau)
    split = (1 - p.lam) / 2
    lo = np.minimum(u, split) / (1 - p.lam)
    hi = 0.5 + (np.maximum(u, split) - split) / (1 + p.lam)
    w = np.where(u < split,
                 (1 - p.lam) * r * special.stdtrit(p.tau, lo),
                 (1 + p.lam) * r * special.stdtrit(p.tau, hi))
    if not np.all(np.isfinite(w)):
        raise ConvergenceError("t quantile failed")
    y = p.m + p.v * (w - p.a) / p.b
    return _newton_polish(y, u, p)


def _newton_polish(y, u, p, steps=2):
    # one or two Newton steps remove the last bits of t-quantile error
    for _ in range(steps):
        f = skst_pdf(y, p)
        y = y - np.where(f > 1e-300, (skst_cdf(y, p) - u) / np.maximum(f, 1e-300), 0.0)
    return y


def skst_log_derivs(y, phi):
    """First three derivatives of ``log f`` in ``y``."""
    p = _phi(phi)
    w = _skst_w(y, p)
    s = np.where(w < 0, 1 - p.lam, 1 + p.lam)
    k = (p.tau - 2) * s**2
    bv = p.b / p.v
    t1 = p.tau + 1
    d = k + w * w
    g = -t1 * w * bv / d
    g1 = -t1 * bv**2 * (k - w * w) / d**2
    g2 = t1 * bv**3 * 2 * w * (3 * k - w * w) / d**3
    return g, g1, g2


class Skst:
    """SKST distribution object with the marginal-source API."""

    def __init__(self, phi):
        self.phi = _phi(phi)

    def pdf(self, y):
        return skst_pdf(y, self.phi)

    def logpdf(self, y):
        return skst_logpdf(y, self.phi)

    def cdf(self, y):
        return skst_cdf(y, self.phi)

    def quantile(self, u):
        return skst_quantile(u, self.phi)

    def pdf_derivs(self, y, order=2):
        f = self.pdf(y)
        g, g1, g2 = skst_log_derivs(y, self.phi)
        out = [f, f * g, f * (g * g + g1), f * (g**3 + 3 * g * g1 + g2)]
        return out[: order + 1]

    def rvs(self, size, rng):
        return self.quantile(rng.uniform(size=size))


def fit_skst(data, start=None):
    """Maximum-likelihood SKST fit.

    Parameters are searched as ``(m, log v, atanh lam, log(tau - 2))``.

    Returns
    -------
    SkstParams
    """
    y = np.asarray(data, float)
    sd = float(np.std(y))
    if not sd > 0:
        raise DegenerateSampleError("constant sample")
    if start is None:
        skew = float(stats.skew(y))
        start = SkstParams(float(np.mean(y)), sd, float(np.clip(skew / 3, -0.6, 0.6)), 8.0)
    start = _phi(start)

    def unpack(z):
        return SkstParams(z[0], math.exp(z[1]), math.tanh(z[2]), 2 + math.exp(z[3]))

    def nll(z):
        try:
            p = unpack(z)
        except (ParamError, OverflowError):
            return np.inf
        val = -float(np.sum(skst_logpdf(y, p)))
        return val if math.isfinite(val) else np.inf

    z0 = np.array([start.m, math.log(start.v), math.atanh(start.lam), math.log(start.tau - 2)])
    best = None
    for z_init in (z0, z0 + np.array([0, 0, 0, 1.5])):
        res = optimize.minimize(nll, z_init, method="Nelder-Mead",
                                options={"xatol": 1e-8, "fatol": 1e-10, "maxiter": 4000})
        res = optimize.minimize(nll, res.x, method="BFGS")
        if best is None or res.fun < best.fun:
            best = res
    return unpack(best.x)


# ------------------------------------------------------- empirical cdf
class EmpiricalCdf:
    """Rescaled empirical cdf, ``#{Y_i <= y} / N`` with ``N`` the sample size,
    clamped to ``[1/(2N), 1 - 1/(2N)]`` so quantile maps stay finite."""

    def __init__(self, data, clamp=True):
        data = np.asarray(data, float).ravel()
        if data.size == 0:
            raise DegenerateSampleError("empty sample")
        self.sorted = np.sort(data)
        self.size = data.size
        self.eps = 1.0 / (2 * self.size) if clamp else 0.0

    def __call__(self, y):
        raw = np.searchsorted(self.sorted, np.asarray(y, float), side="right") / self.size
        return np.clip(raw, self.eps, 1 - self.eps)

    cdf = __call__


def empirical_cdf(data, y):
    return EmpiricalCdf(data)(y)


# --------------------------------------------------------------- kernel
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
KAPPA2 = 1.0
INT_K2 = 1.0 / (2.0 * math.sqrt(math.pi))
INT_DK2 = 1.0 / (4.0 * math.sqrt(math.pi))


class KernelEstimate:
    """Gaussian-kernel estimates of ``F_Y`` and ``f_Y`` with derivatives.

    ``F(y) = mean Phi((y - Y_i)/h)`` and ``f^(k)(y) = mean h^-(1+k)
    phi^(k)((y - Y_i)/h)``, so each output is the exact derivative of
    the previous one.
    """

    kappa2 = KAPPA2
    int_k2 = INT_K2
    int_dk2 = INT_DK2

    def __init__(self, data, h, chunk=2_000_000):
        if not h > 0:
            raise BandwidthError(f"bandwidth must be positive, got {h}")
        self.data = np.asarray(data, float).ravel()
        self.h = float(h)
        self._chunk = chunk

    def _apply(self, y, fn):
        y = np.asarray(y, float)
        flat = y.ravel()
        out = np.empty(flat.shape)
        step = max(1, self._chunk // self.data.size)
        for i in range(0, flat.size, step):
            z = (flat[i:i + step, None] - self.data[None, :]) / self.h
            out[i:i + step] = fn(z).mean(axis=1)
        return out.reshape(y.shape)

    def cdf(self, y):
        return self._apply(y, special.ndtr)

    def pdf(self, y):
        return self._apply(y, lambda z: np.exp(-0.5 * z * z)) * _INV_SQRT_2PI / self.h

    def logpdf(self, y):
        return np.log(self.pdf(y))

    def pdf_derivs(self, y, order=2):
        """``[f, f', ..., f^(order)]`` for ``order <= 3``."""
        if order not in (0, 1, 2, 3):
            raise ValueError("order must be 0..3")
        h = self.h

        def stack(z):
            e = np.exp(-0.5 * z * z)
            # derivatives of phi: phi' = -z phi, phi'' = (z^2-1) phi, phi''' = (3z - z^3) phi
            polys = [np.ones_like(z), -z, z * z - 1, 3 * z - z**3][: order + 1]
            return np.stack([p * e for p in polys], axis=0)

        y = np.asarray(y, float)
        flat = y.ravel()
        res = np.empty((order + 1, flat.size))
        step = max(1, self._chunk // self.data.size)
        for i in range(0, flat.size, step):
            z = (flat[i:i + step, None] - self.data[None, :]) / h
            res[:, i:i + step] = stack(z).mean(axis=2)
        return [res[k].reshape(y.shape) * _INV_SQRT_2PI / h ** (1 + k) for k in range(order + 1)]

    def quantile(self, u):
        u = np.asarray(u, float)
        lo = self.data.min() - 40 * self.h
        hi = self.data.max() + 40 * self.h
        out = np.empty(u.shape)
        for idx, ui in np.ndenumerate(u):
            out[idx] = optimize.brentq(lambda t: float(self.cdf(t)) - ui, lo, hi, xtol=1e-13)
        return out


def kernel_cdf_pdf_derivs(data, y, h, order):
    """Kernel cdf (``order='cdf'``) or the ``order``-th pdf derivative."""
    ke = KernelEstimate(data, h)
    if order == "cdf":
        return ke.cdf(y)
    return ke.pdf_derivs(y, int(order))[int(order)]


def silverman_bandwidth(data, factor=1.0):
    """``factor * 1.06 * sd * n**(-1/5)`` with the sample standard deviation."""
    y = np.asarray(data, float).ravel()
    if y.size < 2:
        raise DegenerateSampleError("need at least two observations")
    sd = float(np.std(y, ddof=1))
    if not sd > 0:
        raise DegenerateSampleError("sample standard deviation is zero")
    return factor * 1.06 * sd * y.size ** (-0.2)
