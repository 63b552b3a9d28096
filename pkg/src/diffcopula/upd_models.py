"""Underlying parametric diffusions: drift, diffusion, scale, stationary and
transition densities.

Every evaluator is vectorised over numpy arrays.  OU and CIR use closed forms;
the remaining kinds fall back on adaptive quadrature, bracketed root finding
and Euler kernels composed by Chapman-Kolmogorov quadrature.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np
from scipy import integrate, special

from .errors import (
    ConfigError,
    ConvergenceError,
    DomainError,
    FellerWarning,
    NonStationaryError,
    ParamError,
    QuadratureError,
)
from .special import log_iv

QUAD_EPSABS = 1e-10
QUAD_EPSREL = 1e-8
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


class Kind(str, Enum):
    OU = "OU"
    CIR = "CIR"
    NLDCEV = "NLDCEV"
    ZERO_DRIFT = "ZeroDriftFlexible"
    UNIT_DIFFUSION = "UnitDiffusionPolynomial"
    CUSTOM = "Custom"


class Method(str, Enum):
    GAUSSIAN = "ClosedFormGaussian"
    BESSEL = "ClosedFormBessel"
    EULER = "EulerSubstep"
    CK = "QuadratureChapmanKolmogorov"


@dataclass(frozen=True)
class TransitionDensitySpec:
    """How to evaluate a transition density.

    ``method=None`` picks the closed form when one exists and a sub-stepped
    Euler composition otherwise.  ``substeps=None`` sizes the sub-steps so
    that the effective mean reversion per sub-step stays below 0.05.
    """

    delta: float
    method: Optional[Method] = None
    substeps: Optional[int] = None

    def __post_init__(self):
        if not self.delta > 0:
            raise ParamError(f"delta must be positive, got {self.delta}")
        if self.substeps is not None and self.substeps < 1:
            raise ParamError("substeps must be >= 1")
        if self.method is not None:
            object.__setattr__(self, "method", Method(self.method))


def _arr(x):
    return np.asarray(x, dtype=float)


def _poly(coefs, powers, x):
    out = np.zeros_like(x)
    for c, p in zip(coefs, powers):
        out = out + c * x**p
    return out


@dataclass(frozen=True, eq=False)
class UpdModel:
    """A scalar diffusion dX = mu(X) dt + sigma(X) dW on an open interval.

    Parameter layouts
    -----------------
    OU, CIR : ``(kappa, alpha, sigma)``; CIR diffusion is ``sigma**2 * x``.
    NLDCEV : ``(a_{-k}, ..., a_l, beta, sigma)`` with ``k = k_neg``; drift is
        ``sum a_i x**i`` and diffusion ``sigma**2 x**(2 beta)``.
    UnitDiffusionPolynomial : drift coefficients ``(a_0, ..., a_l)``.
    ZeroDriftFlexible : ``(c_0, ..., c_l)`` with ``sigma**2 = exp(sum c_i x**i)``.
    Custom : arbitrary ``theta`` handed to ``drift_fn(x, theta)`` and
        ``diffusion2_fn(x, theta)``.

    A model built with ``reflected=True`` (see :meth:`reflect`) describes
    ``-X`` for the base model stored in ``base``.
    """

    kind: Kind
    theta: tuple
    domain: tuple = (-math.inf, math.inf)
    x_star: Optional[float] = None
    k_neg: int = 0
    drift_fn: Optional[Callable] = None
    diffusion2_fn: Optional[Callable] = None
    base: Optional["UpdModel"] = None
    _cache: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        object.__setattr__(self, "theta", tuple(float(t) for t in self.theta))
        lo, hi = float(self.domain[0]), float(self.domain[1])
        if not lo < hi:
            raise ParamError(f"empty domain {self.domain}")
        object.__setattr__(self, "domain", (lo, hi))
        self._validate()
        if self.x_star is None:
            object.__setattr__(self, "x_star", self._default_x_star())
        xs = float(self.x_star)
        if not lo < xs < hi:
            raise DomainError(f"x_star={xs} not inside {self.domain}")
        object.__setattr__(self, "x_star", xs)

    # ------------------------------------------------------------------ setup
    def _validate(self):
        k, th = self.kind, self.theta
        if self.reflected:
            return
        if k in (Kind.OU, Kind.CIR):
            if len(th) != 3:
                raise ParamError(f"{k.value} expects (kappa, alpha, sigma)")
            if th[2] <= 0:
                raise ParamError("sigma must be positive")
        if k is Kind.CIR:
            if th[1] <= 0 or th[0] <= 0:
                raise ParamError("CIR needs kappa > 0 and alpha > 0")
            if 2 * th[0] * th[1] / th[2] ** 2 < 1:
                warnings.warn("CIR parameters violate the Feller condition",
                              FellerWarning, stacklevel=3)
        if k is Kind.NLDCEV:
            if len(th) < 3:
                raise ParamError("NLDCEV expects (alphas..., beta, sigma)")
            if th[-1] <= 0:
                raise ParamError("sigma must be positive")
            if th[-2] == 1.0:
                raise ParamError("NLDCEV requires beta != 1")
        if k is Kind.CUSTOM and (self.drift_fn is None or self.diffusion2_fn is None):
            raise ParamError("Custom models need drift_fn and diffusion2_fn")

    def _default_x_star(self):
        if self.reflected:
            return -self.base.x_star
        k, th = self.kind, self.theta
        if k is Kind.OU:
            return th[1]
        if k is Kind.CIR:
            nu, om = self._cir_shape_rate()
            med = float(special.gammaincinv(nu, 0.5) / om)
            # the median underflows to zero for tiny shapes; fall back to the mean
            return med if med > 0 else th[1]
        lo, hi = self.domain
        if math.isfinite(lo) and math.isfinite(hi):
            return 0.5 * (lo + hi)
        if lo == 0.0 and hi == math.inf:
            return 1.0
        if math.isinf(lo) and math.isinf(hi):
            return 0.0
        return lo + 1.0 if math.isfinite(lo) else hi - 1.0

    @property
    def reflected(self) -> bool:
        return self.base is not None

    @property
    def has_closed_form(self) -> bool:
        return self.kind in (Kind.OU, Kind.CIR)

    def _cir_shape_rate(self):
        kappa, alpha, sigma = self.theta
        return 2 * kappa * alpha / sigma**2, 2 * kappa / sigma**2

    def _nldcev_parts(self):
        th = self.theta
        alphas = np.array(th[:-2])
        powers = np.arange(-self.k_neg, -self.k_neg + len(alphas))
        return alphas, powers, th[-2], th[-1]

    # --------------------------------------------------- drift and diffusion
    def check_domain(self, x):
        x = _arr(x)
        lo, hi = self.domain
        if np.any(~(x > lo)) or np.any(~(x < hi)):
            raise DomainError(f"point(s) outside open domain {self.domain}")
        return x

    def drift(self, x):
        x = _arr(x)
        if self.reflected:
            return -self.base.drift(-x)
        k, th = self.kind, self.theta
        if k in (Kind.OU, Kind.CIR):
            return th[0] * (th[1] - x)
        if k is Kind.NLDCEV:
            a, p, _, _ = self._nldcev_parts()
            return _poly(a, p, x)
        if k is Kind.UNIT_DIFFUSION:
            return _poly(th, range(len(th)), x)
        if k is Kind.ZERO_DRIFT:
            return np.zeros_like(x)
        return _arr(self.drift_fn(x, th)) + 0.0 * x

    def diffusion2(self, x):
        x = _arr(x)
        if self.reflected:
            return self.base.diffusion2(-x)
        k, th = self.kind, self.theta
        if k is Kind.OU:
            return np.full_like(x, th[2] ** 2)
        if k is Kind.CIR:
            return th[2] ** 2 * x
        if k is Kind.NLDCEV:
            _, _, beta, sigma = self._nldcev_parts()
            return sigma**2 * x ** (2 * beta)
        if k is Kind.UNIT_DIFFUSION:
            return np.ones_like(x)
        if k is Kind.ZERO_DRIFT:
            return np.exp(_poly(th, range(len(th)), x))
        return _arr(self.diffusion2_fn(x, th)) + 0.0 * x

    def sigma(self, x):
        return np.sqrt(self.diffusion2(x))

    def dsigma2(self, x):
        """Derivative of the squared diffusion coefficient in ``x``."""
        x = _arr(x)
        if self.reflected:
            return -self.base.dsigma2(-x)
        k, th = self.kind, self.theta
        if k in (Kind.OU, Kind.UNIT_DIFFUSION):
            return np.zeros_like(x)
        if k is Kind.CIR:
            return np.full_like(x, th[2] ** 2)
        if k is Kind.NLDCEV:
            _, _, beta, sigma = self._nldcev_parts()
            return 2 * beta * sigma**2 * x ** (2 * beta - 1)
        if k is Kind.ZERO_DRIFT:
            dp = _poly([i * c for i, c in enumerate(th)][1:], range(len(th) - 1), x)
            return dp * self.diffusion2(x)
        return self._central(self.diffusion2, x)

    def dsigma(self, x):
        return self.dsigma2(x) / (2.0 * self.sigma(x))

    def _central(self, fn, x):
        h = 1e-5 * (1.0 + np.abs(x))
        lo, hi = self.domain
        h = np.minimum(h, 0.5 * np.minimum(x - lo, hi - x))
        return (fn(x + h) - fn(x - h)) / (2 * h)

    def ddrift(self, x):
        return self._central(self.drift, _arr(x))

    # ------------------------------------------------------------ scale
    def log_scale_density(self, x):
        """``log s(x) = -int_{x*}^x 2 mu / sigma^2``."""
        x = _arr(x)
        if self.reflected:
            return self.base.log_scale_density(-x)
        k, th, xs = self.kind, self.theta, self.x_star
        if k is Kind.OU:
            kappa, alpha, sigma = th
            return kappa / sigma**2 * ((x - alpha) ** 2 - (xs - alpha) ** 2)
        if k is Kind.CIR:
            nu, om = self._cir_shape_rate()
            return -nu * np.log(x / xs) + om * (x - xs)
        if k is Kind.NLDCEV:
            a, p, beta, sigma = self._nldcev_parts()
            out = np.zeros_like(x)
            for ai, pi in zip(a, p):
                e = pi - 2 * beta
                if abs(e + 1) < 1e-14:
                    out = out + ai * np.log(x / xs)
                else:
                    out = out + ai * (x ** (e + 1) - xs ** (e + 1)) / (e + 1)
            return -2.0 / sigma**2 * out
        if k is Kind.UNIT_DIFFUSION:
            return -2.0 * sum(c * (x ** (i + 1) - xs ** (i + 1)) / (i + 1)
                              for i, c in enumerate(th)) + 0.0 * x
        if k is Kind.ZERO_DRIFT:
            return np.zeros_like(x)
        return self._quad_each(lambda z: -2 * self.drift(z) / self.diffusion2(z), x)

    def _quad_each(self, fn, x, base=None):
        base = self.x_star if base is None else base
        out = np.empty(x.shape)
        for idx, xi in np.ndenumerate(x):
            val, err = integrate.quad(lambda z: float(fn(z)), base, float(xi),
                                      epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=200)
            if not math.isfinite(val):
                raise QuadratureError(f"integral to {xi} did not converge")
            out[idx] = val
        return out

    def scale_density(self, x):
        return np.exp(self.log_scale_density(x))

    def scale_measure(self, x):
        """``S(x) = int_{x*}^x s(z) dz``."""
        x = _arr(x)
        if self.reflected:
            return -self.base.scale_measure(-x)
        if self.kind is Kind.ZERO_DRIFT:
            return x - self.x_star
        return self._quad_each(lambda z: math.exp(self.log_scale_density(z)), x)

    def scale_density_and_measure(self, x):
        self.check_domain(x)
        return self.scale_density(x), self.scale_measure(x)

    # ------------------------------------------------------- stationary law
    def log_xi(self):
        """Log of the normaliser making ``xi / (sigma^2 s)`` a density."""
        if "log_xi" in self._cache:
            return self._cache["log_xi"]
        if self.reflected:
            val = self.base.log_xi()
        elif self.has_closed_form:
            xs = self.x_star
            val = float(self._closed_logpdf(_arr(xs)) + np.log(self.diffusion2(xs)))
        else:
            val = self._numeric_log_xi()
        self._cache["log_xi"] = val
        return val

    def _numeric_log_xi(self):
        shift = float(np.log(self.diffusion2(self.x_star)))

        def integrand(z):
            e = -float(np.log(self.diffusion2(z))) - float(self.log_scale_density(z)) + shift
            return math.exp(e) if e < 700 else math.inf

        lo, hi = self.domain
        total = 0.0
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("error", integrate.IntegrationWarning)
                for a, b in ((lo, self.x_star), (self.x_star, hi)):
                    val, _ = integrate.quad(integrand, a, b, epsabs=0.0,
                                            epsrel=1e-11, limit=400)
                    total += val
        except (integrate.IntegrationWarning, OverflowError) as exc:
            raise NonStationaryError(f"normalising integral diverges: {exc}") from exc
        if not (math.isfinite(total) and total > 0):
            raise NonStationaryError("normalising integral is not finite")
        return shift - math.log(total)

    def _closed_logpdf(self, x):
        th = self.theta
        if self.kind is Kind.OU:
            kappa, alpha, sigma = th
            if kappa <= 0:
                raise NonStationaryError("OU needs kappa > 0 to be stationary")
            sd = sigma / math.sqrt(2 * kappa)
            z = (x - alpha) / sd
            return -0.5 * z * z - math.log(sd) - _LOG_SQRT_2PI
        nu, om = self._cir_shape_rate()
        with np.errstate(divide="ignore", invalid="ignore"):
            out = nu * math.log(om) - special.gammaln(nu) + (nu - 1) * np.log(x) - om * x
        return np.where(x > 0, out, -np.inf)

    def log_stationary_density(self, x):
        x = _arr(x)
        if self.reflected:
            return self.base.log_stationary_density(-x)
        if self.has_closed_form:
            return self._closed_logpdf(x)
        return self.log_xi() - np.log(self.diffusion2(x)) - self.log_scale_density(x)

    def stationary_density(self, x):
        return np.exp(self.log_stationary_density(x))

    def stationary_log_derivs(self, x):
        """Return ``(g, g')`` with ``g = d/dx log f_X``."""
        x = _arr(x)
        if self.reflected:
            g, g1 = self.base.stationary_log_derivs(-x)
            return -g, g1
        th = self.theta
        if self.kind is Kind.OU:
            var = th[2] ** 2 / (2 * th[0])
            return -(x - th[1]) / var, np.full_like(x, -1.0 / var)
        if self.kind is Kind.CIR:
            nu, om = self._cir_shape_rate()
            return (nu - 1) / x - om, -(nu - 1) / x**2
        g = self._g_generic(x)
        return g, self._central(self._g_generic, x)

    def _g_generic(self, x):
        return (2 * self.drift(x) - self.dsigma2(x)) / self.diffusion2(x)

    def stationary_pdf_derivs(self, x, order=2):
        """``[f, f', ..., f^(order)]`` of the stationary density, ``order <= 3``."""
        x = _arr(x)
        f = self.stationary_density(x)
        g, g1 = self.stationary_log_derivs(x)
        out = [f, f * g, f * (g * g + g1)]
        if order >= 3:
            g2 = self._central(lambda z: self.stationary_log_derivs(z)[1], x)
            out.append(f * (g**3 + 3 * g * g1 + g2))
        return out[: order + 1]

    def stationary_cdf(self, x):
        x = _arr(x)
        if self.reflected:
            return 1.0 - self.base.stationary_cdf(-x)
        th = self.theta
        if self.kind is Kind.OU:
            return special.ndtr((x - th[1]) * math.sqrt(2 * th[0]) / th[2])
        if self.kind is Kind.CIR:
            nu, om = self._cir_shape_rate()
            return special.gammainc(nu, om * np.maximum(x, 0.0))
        return self._numeric_cdf(x)

    def _numeric_pdf1(self, z):
        return math.exp(self.log_xi() - float(np.log(self.diffusion2(z)))
                        - float(self.log_scale_density(z)))

    def _cdf_piece(self, a, b):
        val, _ = integrate.quad(self._numeric_pdf1, a, b, epsabs=1e-13, epsrel=1e-11, limit=400)
        return val

    def _cdf_at_star(self):
        if "cdf_star" not in self._cache:
            self._cache["cdf_star"] = self._cdf_piece(self.domain[0], self.x_star)
        return self._cache["cdf_star"]

    def _numeric_cdf(self, x):
        # cumulative pieces walking outwards from x_star in sorted order
        flat = x.ravel()
        out = np.empty_like(flat)
        lo, hi = self.domain
        xs, f_star = self.x_star, self._cdf_at_star()
        up = [i for i in np.argsort(flat) if flat[i] >= xs]
        down = [i for i in np.argsort(flat)[::-1] if flat[i] < xs]
        for idx, sign in ((up, 1.0), (down, -1.0)):
            acc, prev = f_star, xs
            for i in idx:
                xi = flat[i]
                if xi <= lo or xi >= hi:
                    out[i] = 0.0 if xi <= lo else 1.0
                    continue
                acc += self._cdf_piece(prev, xi)
                prev = xi
                out[i] = acc
        return np.clip(out, 0.0, 1.0).reshape(x.shape)

    def stationary_quantile(self, u):
        u = _arr(u)
        if np.any((u <= 0) | (u >= 1)):
            raise DomainError("quantile argument must lie in (0, 1)")
        if self.reflected:
            return -self.base.stationary_quantile(1.0 - u)
        th = self.theta
        if self.kind is Kind.OU:
            return th[1] + th[2] / math.sqrt(2 * th[0]) * special.ndtri(u)
        if self.kind is Kind.CIR:
            nu, om = self._cir_shape_rate()
            return special.gammaincinv(nu, u) / om
        out = np.empty(u.shape)
        for idx, ui in np.ndenumerate(u):
            out[idx] = self._numeric_quantile(float(ui))
        return out

    def _numeric_quantile(self, u, maxiter=200, tol=1e-13):
        # safeguarded Newton; F is updated by integrating only the step taken
        lo, hi = self.domain
        x, F = self.x_star, self._cdf_at_star()
        a, b = lo, hi
        width = 1.0
        for _ in range(maxiter):
            if abs(F - u) < tol:
                return x
            if F < u:
                a = x
            else:
                b = x
            f = self._numeric_pdf1(x)
            x_new = x + (u - F) / f if f > 0 else math.nan
            if not (a < x_new < b and math.isfinite(x_new)):
                if math.isfinite(a) and math.isfinite(b):
                    x_new = 0.5 * (a + b)
                elif F < u:
                    x_new = 0.5 * (x + b) if math.isfinite(b) else x + width
                else:
                    x_new = 0.5 * (x + a) if math.isfinite(a) else x - width
                width *= 2
            if x_new == x:
                return x
            F += self._cdf_piece(x, x_new)
            x = x_new
        raise ConvergenceError(f"quantile iteration for u={u} did not converge")

    @property
    def stationary(self) -> "StationaryLaw":
        return StationaryLaw(self)

    # ------------------------------------------------------- transitions
    def default_spec(self, delta) -> TransitionDensitySpec:
        base = self.base if self.reflected else self
        if base.kind is Kind.OU:
            return TransitionDensitySpec(delta, Method.GAUSSIAN)
        if base.kind is Kind.CIR:
            return TransitionDensitySpec(delta, Method.BESSEL)
        k_eff = abs(float(base.ddrift(base.x_star))) or 1.0
        m = max(1, int(math.ceil(k_eff * delta / 0.05)))
        return TransitionDensitySpec(delta, Method.CK, m)

    def log_transition_density(self, x, x0, spec):
        """Log of ``p_X(x | x0)`` after ``spec.delta`` time units."""
        if not isinstance(spec, TransitionDensitySpec):
            spec = TransitionDensitySpec(float(spec))
        x, x0 = np.broadcast_arrays(_arr(x), _arr(x0))
        if self.reflected:
            return self.base.log_transition_density(-x, -x0, spec)
        method = spec.method or self.default_spec(spec.delta).method
        delta = spec.delta
        if method is Method.GAUSSIAN:
            if self.kind is not Kind.OU:
                raise ParamError("Gaussian closed form is only valid for OU")
            kappa, alpha, sigma = self.theta
            e = math.exp(-kappa * delta)
            var = sigma**2 * -math.expm1(-2 * kappa * delta) / (2 * kappa)
            z = x - alpha - (x0 - alpha) * e
            return -0.5 * z * z / var - 0.5 * math.log(var) - _LOG_SQRT_2PI
        if method is Method.BESSEL:
            if self.kind is not Kind.CIR:
                raise ParamError("Bessel closed form is only valid for CIR")
            return self._cir_log_density(x, x0, delta)
        m = spec.substeps or self.default_spec(delta).substeps or 1
        if method is Method.EULER and m == 1:
            return self.log_euler_density(x, x0, delta)
        return self._ck_log_density(x, x0, delta, m)

    def transition_density(self, x, x0, spec):
        return np.exp(self.log_transition_density(x, x0, spec))

    def _cir_log_density(self, x, x0, delta):
        kappa, alpha, sigma = self.theta
        em = math.exp(-kappa * delta)
        c = 2 * kappa / (sigma**2 * -math.expm1(-kappa * delta))
        q = 2 * kappa * alpha / sigma**2 - 1
        out = np.full(x.shape, -np.inf)
        ok = (x > 0) & (x0 > 0)
        u = c * x0[ok] * em
        v = c * x[ok]
        out[ok] = (math.log(c) - u - v + 0.5 * q * np.log(v / u)
                   + log_iv(q, 2 * np.sqrt(u * v)))
        return out

    def log_euler_density(self, x, x0, delta):
        """Single-step Euler (Gaussian) log density."""
        x, x0 = _arr(x), _arr(x0)
        mean = x0 + self.drift(x0) * delta
        var = self.diffusion2(x0) * delta
        return -0.5 * (x - mean) ** 2 / var - 0.5 * np.log(var) - _LOG_SQRT_2PI

    def _ck_log_density(self, x, x0, delta, m, max_nodes=2500):
        if m == 1:
            return self.log_euler_density(x, x0, delta)
        dt = delta / m
        out = np.empty(x.shape)
        lo, hi = self.domain
        for z0 in np.unique(x0):
            sel = x0 == z0
            s2 = float(self.diffusion2(z0))
            mu = float(self.drift(z0))
            sd_tot = math.sqrt(s2 * delta)
            centre = z0 + mu * delta
            a, b = centre - 12 * sd_tot, centre + 12 * sd_tot
            a = max(a, lo + 1e-9 * max(1.0, abs(lo))) if math.isfinite(lo) else a
            b = min(b, hi - 1e-9 * max(1.0, abs(hi))) if math.isfinite(hi) else b
            step = math.sqrt(s2 * dt) / 4
            n_nodes = int(min(max_nodes, max(201, math.ceil((b - a) / step) + 1)))
            grid = np.linspace(a, b, n_nodes)
            w = np.full(n_nodes, grid[1] - grid[0])
            w[[0, -1]] *= 0.5
            vec = np.exp(self.log_euler_density(grid, z0, dt))
            if m > 2:
                kern = np.exp(self.log_euler_density(grid[:, None], grid[None, :], dt))
                for _ in range(m - 2):
                    vec = kern @ (vec * w)
            last = np.exp(self.log_euler_density(x[sel][:, None], grid[None, :], dt))
            with np.errstate(divide="ignore"):
                out[sel] = np.log(last @ (vec * w))
        return out

    def euler_transition_density(self, x, x0, delta):
        return np.exp(self.log_euler_density(x, x0, delta))

    # ----------------------------------------------------------- helpers
    def reflect(self) -> "UpdModel":
        """Model of ``-X``; the inverse operation returns ``base``."""
        if self.reflected:
            return self.base
        lo, hi = self.domain
        return UpdModel(Kind.CUSTOM, self.theta, (-hi, -lo), -self.x_star,
                        drift_fn=lambda x, th: -self.drift(-x),
                        diffusion2_fn=lambda x, th: self.diffusion2(-x), base=self)

    def generic(self) -> "UpdModel":
        """Same drift and diffusion, forced onto the numeric code paths."""
        return UpdModel(Kind.CUSTOM, self.theta, self.domain, self.x_star,
                        drift_fn=lambda x, th: self.drift(x),
                        diffusion2_fn=lambda x, th: self.diffusion2(x))

    def to_dict(self) -> dict:
        if self.kind is Kind.CUSTOM:
            raise ConfigError("custom models carry code and cannot be serialised")
        return {"kind": self.kind.value, "theta": list(self.theta),
                "domain": list(self.domain), "x_star": self.x_star, "k_neg": self.k_neg}

    @classmethod
    def from_dict(cls, d: dict) -> "UpdModel":
        try:
            kind = Kind(d["kind"])
            theta = d["theta"]
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad model specification: {exc}") from exc
        dom = d.get("domain") or _default_domain(kind)
        return cls(kind, tuple(theta), tuple(float(v) for v in dom),
                   d.get("x_star"), int(d.get("k_neg", 0)))


def _default_domain(kind):
    if kind in (Kind.CIR, Kind.NLDCEV):
        return (0.0, math.inf)
    return (-math.inf, math.inf)


class StationaryLaw:
    """Stationary marginal of a model, exposed with the marginal-source API."""

    def __init__(self, model: UpdModel):
        self.model = model

    @property
    def xi(self):
        return math.exp(self.model.log_xi())

    def pdf(self, x):
        return self.model.stationary_density(x)

    def logpdf(self, x):
        return self.model.log_stationary_density(x)

    def cdf(self, x):
        return self.model.stationary_cdf(x)

    def quantile(self, u):
        return self.model.stationary_quantile(u)

    def pdf_derivs(self, x, order=2):
        return self.model.stationary_pdf_derivs(x, order)


# ----------------------------------------------------------- constructors
def ou(kappa, alpha=0.0, sigma=1.0, **kw) -> UpdModel:
    return UpdModel(Kind.OU, (kappa, alpha, sigma), **kw)


def normalized_ou(kappa) -> UpdModel:
    """OU with zero mean and unit stationary variance."""
    return ou(kappa, 0.0, math.sqrt(2 * kappa))


def cir(kappa, alpha, sigma, **kw) -> UpdModel:
    return UpdModel(Kind.CIR, (kappa, alpha, sigma), (0.0, math.inf), **kw)


def normalized_cir(kappa, alpha) -> UpdModel:
    """CIR with diffusion ``2 kappa x``; the stationary law is Gamma(alpha, 1)."""
    return cir(kappa, alpha, math.sqrt(2 * kappa))


def nldcev(alphas, beta, sigma, k_neg=0, **kw) -> UpdModel:
    return UpdModel(Kind.NLDCEV, (*alphas, beta, sigma), (0.0, math.inf),
                    k_neg=k_neg, **kw)


def unit_diffusion_polynomial(coefs, **kw) -> UpdModel:
    return UpdModel(Kind.UNIT_DIFFUSION, tuple(coefs), **kw)


def zero_drift(log_sigma2_coefs, **kw) -> UpdModel:
    return UpdModel(Kind.ZERO_DRIFT, tuple(log_sigma2_coefs), **kw)


def custom(drift_fn, diffusion2_fn, theta=(), domain=(-math.inf, math.inf),
           x_star=None) -> UpdModel:
    return UpdModel(Kind.CUSTOM, tuple(theta), domain, x_star,
                    drift_fn=drift_fn, diffusion2_fn=diffusion2_fn)


# -------------------------------------------------- functional interface
def eval_drift_diffusion(model: UpdModel, x):
    """Return ``(mu, sigma2)`` at ``x`` after domain and positivity checks."""
    model.check_domain(x)
    mu, s2 = model.drift(x), model.diffusion2(x)
    if np.any(~(s2 > 0)):
        raise ParamError("diffusion coefficient is not positive")
    return mu, s2


def scale_density_and_measure(model: UpdModel, x):
    return model.scale_density_and_measure(x)


def stationary_density(model: UpdModel, x):
    model.check_domain(x)
    return model.stationary_density(x)


def stationary_cdf(model: UpdModel, x):
    return model.stationary_cdf(x)


def stationary_quantile(model: UpdModel, u):
    return model.stationary_quantile(u)


def transition_density(model: UpdModel, x, x0, spec):
    model.check_domain(x0)
    return model.transition_density(x, x0, spec)


def euler_transition_density(model: UpdModel, x, x0, delta):
    return model.euler_transition_density(x, x0, delta)
