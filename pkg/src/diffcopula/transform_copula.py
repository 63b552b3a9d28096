"""Transformations Y = V(X), the induced dynamics of Y, the implied copula
and the identification normalisations."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate, optimize, special, stats

from .errors import ConvergenceError, DerivativeError, QuadratureError
from .upd_models import Kind, TransitionDensitySpec, UpdModel, custom


def _arr(x):
    return np.asarray(x, dtype=float)


@dataclass(frozen=True, eq=False)
class Transformation:
    """Strictly increasing map ``V`` from the X-domain to the Y-domain.

    ``U`` is the inverse of ``V``.  ``dU``, ``d2U`` and ``d3U`` are its first
    three derivatives; ``d2U``/``d3U`` may be ``None`` when unavailable.
    """

    V: Callable
    U: Callable
    dU: Callable
    d2U: Optional[Callable] = None
    d3U: Optional[Callable] = None
    provenance: str = "Custom"
    info: Optional[dict] = None

    def log_dU(self, y):
        return np.log(self.dU(y))

    def dV(self, x):
        return 1.0 / self.dU(self.V(x))

    def require(self, order):
        if order >= 2 and self.d2U is None:
            raise DerivativeError(f"{self.provenance} transform lacks U''")
        if order >= 3 and self.d3U is None:
            raise DerivativeError(f"{self.provenance} transform lacks U'''")


@dataclass(frozen=True, eq=False)
class Structure:
    """A full copula-diffusion model: UPD plus transformation."""

    model: UpdModel
    transform: Transformation


# ------------------------------------------------------- transformations
def identity_transform() -> Transformation:
    one = lambda y: np.ones_like(_arr(y))
    zero = lambda y: np.zeros_like(_arr(y))
    return Transformation(_arr, _arr, one, zero, zero, "Identity")


def affine_transform(a, b) -> Transformation:
    """``V(x) = a + b x`` with ``b > 0``."""
    if not b > 0:
        raise ValueError("affine slope must be positive")
    zero = lambda y: np.zeros_like(_arr(y))
    return Transformation(lambda x: a + b * _arr(x), lambda y: (_arr(y) - a) / b,
                          lambda y: np.full_like(_arr(y), 1.0 / b), zero, zero,
                          "Affine", {"a": a, "b": b})


def exp_transform() -> Transformation:
    """``V = exp``, ``U = log``: the transformed-OU (DO) map."""
    return Transformation(lambda x: np.exp(x), lambda y: np.log(y),
                          lambda y: 1.0 / _arr(y), lambda y: -1.0 / _arr(y) ** 2,
                          lambda y: 2.0 / _arr(y) ** 3, "DO")


def ew_transform(rho, delta) -> Transformation:
    """Sign-flipped EW map acting on the reflected CIR state ``-X``.

    The original map ``1/(X + delta) + rho`` decreases in ``X``; on
    ``Xbar = -X`` it reads ``V(xbar) = 1/(delta - xbar) + rho`` which is
    increasing, with inverse ``U(y) = delta - 1/(y - rho)``.
    """
    def U(y):
        return delta - 1.0 / (_arr(y) - rho)

    return Transformation(lambda x: 1.0 / (delta - _arr(x)) + rho, U,
                          lambda y: 1.0 / (_arr(y) - rho) ** 2,
                          lambda y: -2.0 / (_arr(y) - rho) ** 3,
                          lambda y: 6.0 / (_arr(y) - rho) ** 4,
                          "EW", {"rho": rho, "delta": delta})


def build_marginal_induced_transform(F_Y, model: UpdModel) -> Transformation:
    """``U = F_X^{-1}(F_Y(.))`` for a marginal source ``F_Y``.

    ``F_Y`` must expose ``cdf``, ``quantile`` and ``pdf_derivs(y, order)``.
    Derivatives of ``U`` follow from differentiating ``f_X(U) U' = f_Y``.
    """
    model.log_xi()

    def U(y):
        return model.stationary_quantile(F_Y.cdf(y))

    def V(x):
        return F_Y.quantile(model.stationary_cdf(x))

    def parts(y, order):
        y = _arr(y)
        u = U(y)
        fy = F_Y.pdf_derivs(y, order)
        fx = model.stationary_pdf_derivs(u, max(order - 1, 0))
        d1 = fy[0] / fx[0]
        out = [u, d1]
        if order >= 2:
            d2 = (fy[1] - fx[1] * d1**2) / fx[0]
            out.append(d2)
        if order >= 3:
            out.append((fy[2] - fx[2] * d1**3 - 3 * fx[1] * d1 * d2) / fx[0])
        return out

    return Transformation(V, U, lambda y: parts(y, 1)[1], lambda y: parts(y, 2)[2],
                          lambda y: parts(y, 3)[3], "MarginalInduced",
                          {"source": F_Y, "model": model, "parts": parts})


def derivative_parts(t: Transformation, y, order=2):
    """``[U, U', ..., U^(order)]`` evaluated together when possible."""
    if t.info and "parts" in t.info:
        return t.info["parts"](y, order)
    t.require(order)
    fns = [t.U, t.dU, t.d2U, t.d3U][: order + 1]
    return [f(y) for f in fns]


# ------------------------------------------------------ induced dynamics
def transformed_drift_diffusion(s: Structure, y):
    """Drift and squared diffusion of ``Y`` by Ito's lemma on ``U``."""
    u, d1, d2 = derivative_parts(s.transform, y, 2)
    mu_x, s2_x = s.model.drift(u), s.model.diffusion2(u)
    mu = mu_x / d1 - 0.5 * s2_x * d2 / d1**3
    return mu, s2_x / d1**2


def log_transformed_transition_density(s: Structure, y, y0, spec):
    t = s.transform
    return s.model.log_transition_density(t.U(y), t.U(y0), spec) + t.log_dU(y)


def transformed_transition_density(s: Structure, y, y0, spec):
    """``p_Y(y | y0) = U'(y) p_X(U(y) | U(y0))``."""
    return np.exp(log_transformed_transition_density(s, y, y0, spec))


def transformed_stationary_density(s: Structure, y):
    t = s.transform
    return t.dU(y) * s.model.stationary_density(t.U(y))


def log_copula_density(model: UpdModel, u0, u, delta):
    spec = delta if isinstance(delta, TransitionDensitySpec) else TransitionDensitySpec(delta)
    x0 = model.stationary_quantile(u0)
    x = model.stationary_quantile(u)
    return model.log_transition_density(x, x0, spec) - model.log_stationary_density(x)


def copula_density(model: UpdModel, u0, u, delta):
    """Copula density of consecutive observations implied by ``model``."""
    return np.exp(log_copula_density(model, u0, u, delta))


def gaussian_copula_density(u0, u, rho):
    a, b = stats.norm.ppf(u0), stats.norm.ppf(u)
    r2 = 1 - rho**2
    return np.exp(-(rho**2 * (a * a + b * b) - 2 * rho * a * b) / (2 * r2)) / math.sqrt(r2)


# ---------------------------------------------------------- rewrites
def rewrite_structure(s: Structure, T, T_inv, dT, d2T, y_domain_x=None) -> Structure:
    """Equivalent structure for the state ``T(X)``.

    The new UPD has drift ``T' mu + T'' sigma^2 / 2`` and diffusion
    ``T' sigma`` evaluated at ``T^{-1}``; the new transformation is
    ``V o T^{-1}`` with inverse ``T o U``.
    """
    m, t = s.model, s.transform

    def drift(z, th):
        x = T_inv(z)
        return dT(x) * m.drift(x) + 0.5 * d2T(x) * m.diffusion2(x)

    def diff2(z, th):
        x = T_inv(z)
        return dT(x) ** 2 * m.diffusion2(x)

    lo, hi = m.domain
    dom = (float(T(lo)) if math.isfinite(lo) else -math.inf,
           float(T(hi)) if math.isfinite(hi) else math.inf)
    if y_domain_x is not None:
        dom = y_domain_x
    new_model = custom(drift, diff2, m.theta, dom, float(T(m.x_star)))

    def parts(y, order):
        u, d1, d2 = derivative_parts(t, y, 2)
        return [T(u), dT(u) * d1, d2T(u) * d1**2 + dT(u) * d2][: order + 1]

    new_t = Transformation(lambda z: t.V(T_inv(z)), lambda y: parts(y, 0)[0],
                           lambda y: parts(y, 1)[1], lambda y: parts(y, 2)[2], None,
                           "Rewritten", {"parts": parts})
    return Structure(new_model, new_t)


def equivalence_check(s1: Structure, s2: Structure, grid) -> float:
    """Sup over ``grid`` of ``|dmu_Y| + |dsigma_Y|`` between two structures."""
    grid = _arr(grid)
    m1, v1 = transformed_drift_diffusion(s1, grid)
    m2, v2 = transformed_drift_diffusion(s2, grid)
    return float(np.max(np.abs(m1 - m2) + np.abs(np.sqrt(v1) - np.sqrt(v2))))


def default_grid(s: Structure, n=41):
    """``n`` points between the 1st and 99th stationary percentiles of Y."""
    u = np.linspace(0.01, 0.99, n)
    return s.transform.V(s.model.stationary_quantile(u))


# ------------------------------------------------------------- Lamperti
def _lamperti_ref(model: UpdModel):
    lo = model.domain[0]
    return lo if math.isfinite(lo) else model.x_star


def lamperti_map(model: UpdModel, method="auto"):
    """Return ``(gamma, gamma_inv)`` with ``gamma(x) = int dz / sigma(z)``.

    The integral starts at the left boundary when it is finite (the CIR and
    NLDCEV conventions) and at ``x_star`` otherwise.
    """
    use_closed = method == "closed" or (method == "auto" and model.kind in
                                        (Kind.OU, Kind.CIR, Kind.NLDCEV))
    th = model.theta
    if use_closed and model.kind is Kind.OU:
        k, a, sig = th
        ref = model.x_star
        return (lambda x: (_arr(x) - ref) / sig, lambda z: ref + sig * _arr(z))
    if use_closed and model.kind is Kind.CIR:
        sig = th[2]
        return (lambda x: 2 * np.sqrt(_arr(x)) / sig, lambda z: (sig * _arr(z) / 2) ** 2)
    if use_closed and model.kind is Kind.NLDCEV:
        beta, sig = th[-2], th[-1]
        c = sig * (1 - beta)
        return (lambda x: _arr(x) ** (1 - beta) / c,
                lambda z: (c * _arr(z)) ** (1 / (1 - beta)))
    return _numeric_lamperti(model)


def _numeric_lamperti(model: UpdModel):
    ref = _lamperti_ref(model)
    lo, hi = model.domain

    def g1(x):
        if x == ref:
            return 0.0
        val, _ = integrate.quad(lambda z: 1.0 / float(model.sigma(z)), ref, x,
                                epsabs=1e-13, epsrel=1e-12, limit=200)
        if not math.isfinite(val):
            raise QuadratureError("Lamperti integral diverged")
        return val

    def gamma(x):
        x = _arr(x)
        out = np.empty(x.shape)
        for i, xi in np.ndenumerate(x):
            out[i] = g1(float(xi))
        return out

    def gamma_inv(z):
        z = _arr(z)
        out = np.empty(z.shape)
        for i, zi in np.ndenumerate(z):
            out[i] = _invert(g1, float(zi), model.x_star, lo, hi)
        return out

    return gamma, gamma_inv


def _invert(fn, target, start, lo, hi, maxiter=200):
    a = b = start
    width = 1.0
    for _ in range(maxiter):
        if fn(a) <= target <= fn(b):
            break
        a = lo + 0.5 * (a - lo) if math.isfinite(lo) else a - width
        b = hi - 0.5 * (hi - b) if math.isfinite(hi) else b + width
        width *= 2
    else:
        raise ConvergenceError(f"could not bracket inverse at {target}")
    try:
        return optimize.brentq(lambda x: fn(x) - target, a, b, xtol=1e-15, rtol=1e-15,
                               maxiter=maxiter)
    except (RuntimeError, ValueError) as exc:
        raise ConvergenceError(str(exc)) from exc


def lamperti_drift_closed(model: UpdModel, xbar):
    """Closed-form unit-diffusion drift for OU, CIR and NLDCEV."""
    xbar = _arr(xbar)
    th = model.theta
    if model.kind is Kind.OU:
        k, a, sig = th
        return -k * xbar + k * (a - model.x_star) / sig
    if model.kind is Kind.CIR:
        k, a, sig = th
        a_star = a / sig**2
        return k * (2 * a_star / xbar - xbar / 2) - 1 / (2 * xbar)
    if model.kind is Kind.NLDCEV:
        alphas = np.array(th[:-2])
        beta, sig = th[-2], th[-1]
        powers = np.arange(-model.k_neg, -model.k_neg + len(alphas))
        out = -beta / (2 * (1 - beta) * xbar)
        for ai, i in zip(alphas, powers):
            a_star = ai * sig ** ((i - 1) / (1 - beta)) * (1 - beta) ** ((i - beta) / (1 - beta))
            out = out + a_star * xbar ** ((i - beta) / (1 - beta))
        return out
    raise ValueError(f"no closed Lamperti form for {model.kind.value}")


def lamperti_normalize(model: UpdModel, method="auto") -> UpdModel:
    """Unit-diffusion model for ``gamma(X)``.

    ``method='numeric'`` evaluates ``gamma`` by quadrature and its inverse by
    root finding; ``'auto'`` uses the closed forms where they exist.
    """
    if np.allclose(model.diffusion2(np.array([model.x_star])), 1.0) and \
            model.kind in (Kind.UNIT_DIFFUSION,):
        return model
    gamma, gamma_inv = lamperti_map(model, method)
    closed = method != "numeric" and model.kind in (Kind.OU, Kind.CIR, Kind.NLDCEV)

    if closed:
        drift = lambda z, th: lamperti_drift_closed(model, z)
    else:
        def drift(z, th):
            x = gamma_inv(z)
            return model.drift(x) / model.sigma(x) - 0.5 * model.dsigma(x)

    lo, hi = model.domain
    dom = (float(gamma(lo)) if math.isfinite(lo) else -math.inf,
           float(gamma(hi)) if math.isfinite(hi) else math.inf)
    return custom(drift, lambda z, th: np.ones_like(_arr(z)), model.theta, dom,
                  float(gamma(model.x_star)))


def lamperti_structure(s: Structure, method="auto") -> Structure:
    """Rewrite a structure onto its Lamperti-normalised UPD."""
    m = s.model
    gamma, gamma_inv = lamperti_map(m, method)
    return rewrite_structure(s, gamma, gamma_inv, lambda x: 1.0 / m.sigma(x),
                             lambda x: -m.dsigma(x) / m.diffusion2(x))


# -------------------------------------------------------- natural scale
def natural_scale_normalize(model: UpdModel) -> UpdModel:
    """Zero-drift model for ``S(X)`` with diffusion ``s^2 sigma^2`` at ``S^{-1}``."""
    if model.kind is Kind.ZERO_DRIFT:
        return model
    lo, hi = model.domain

    def S1(x):
        return float(model.scale_measure(x))

    def S_inv(z):
        z = _arr(z)
        out = np.empty(z.shape)
        for i, zi in np.ndenumerate(z):
            out[i] = _invert(S1, float(zi), model.x_star, lo, hi)
        return out

    def diff2(z, th):
        x = S_inv(z)
        return np.exp(2 * model.log_scale_density(x)) * model.diffusion2(x)

    # a recurrent diffusion has S -> -inf and +inf at its two boundaries
    return custom(lambda z, th: np.zeros_like(_arr(z)), diff2, model.theta,
                  (-math.inf, math.inf), 0.0)


# ---------------------------------------------------------- cdf scheme
def cdf_scheme_drift_diffusion(model: UpdModel, xbar, method="auto"):
    """Drift and squared diffusion of ``F_X(X)`` on (0, 1)."""
    xbar = _arr(xbar)
    th = model.theta
    if method != "numeric" and model.kind is Kind.OU:
        z = stats.norm.ppf(xbar)
        phi = stats.norm.pdf(z)
        return -2 * th[0] * z * phi, 2 * th[0] * phi**2
    if method != "numeric" and model.kind is Kind.CIR:
        k, a, sig = th
        nu, om = 2 * k * a / sig**2, 2 * k / sig**2
        q = special.gammaincinv(nu, xbar) / om
        f = stats.gamma.pdf(q, nu, scale=1 / om)
        mu = k * (a - q) * f + 0.5 * sig**2 * q * f * ((nu - 1) / q - om)
        return mu, sig**2 * q * f**2
    q = model.stationary_quantile(xbar)
    f, f1 = model.stationary_pdf_derivs(q, 1)
    return model.drift(q) * f + 0.5 * model.diffusion2(q) * f1, model.diffusion2(q) * f**2


def cdf_normalize(model: UpdModel, method="auto") -> UpdModel:
    """Model of ``F_X(X)`` on the unit interval."""
    model.log_xi()
    return custom(lambda z, th: cdf_scheme_drift_diffusion(model, z, method)[0],
                  lambda z, th: cdf_scheme_drift_diffusion(model, z, method)[1],
                  model.theta, (0.0, 1.0), 0.5)
