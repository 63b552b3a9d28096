"""Likelihood objectives and estimators for copula-based diffusions.

Estimators
----------
* full MLE for parametric transformations (DO, EW),
* two-step PMLE with the empirical or kernel-smoothed marginal cdf,
* two-stage parametric PMLE with an SKST marginal (PPMLE),
* sieve MLE with a log-spline marginal,
* the Euler high-frequency PMLE variant,
* plug-in kernel drift and diffusion estimates.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import optimize, stats

from .errors import (
    DataError,
    DegenerateSampleError,
    DomainError,
    FellerWarning,
    MonotonicityError,
    NonConvergenceError,
    NonFiniteLikelihoodError,
    NonStationaryError,
    ParamError,
    SingularHessianError,
    TailWarning,
)
from .marginals import (
    INT_DK2,
    INT_K2,
    EmpiricalCdf,
    KernelEstimate,
    fit_skst,
    silverman_bandwidth,
    skst_cdf,
    skst_logpdf,
)
from .sieve import LogSplineBasis, SieveDensity, SieveSpec
from .transform_copula import (
    Structure,
    Transformation,
    build_marginal_induced_transform,
    ew_transform,
    exp_transform,
    transformed_drift_diffusion,
)
from .upd_models import (
    Method,
    TransitionDensitySpec,
    UpdModel,
    cir,
    normalized_cir,
    normalized_ou,
    ou,
)

EULER = "euler"
EXACT = "exact"
_CLIP = 1e-12


# ------------------------------------------------------------ families
@dataclass(frozen=True)
class Family:
    """Parametric UPD family with its search reparameterisation.

    ``links`` holds one code per parameter: ``"log"`` for positive values,
    ``"atanh"`` for values in (-1, 1) and ``"id"`` for free values.
    """

    name: str
    param_names: tuple
    links: tuple
    build: Callable
    grid: tuple = ()

    def to_free(self, theta):
        return np.array([_link(v, c) for v, c in zip(theta, self.links)])

    def from_free(self, z):
        return np.array([_unlink(v, c) for v, c in zip(z, self.links)])

    def model(self, theta) -> UpdModel:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", FellerWarning)
            return self.build(np.asarray(theta, float))


def _link(v, code):
    if code == "log":
        return math.log(v)
    if code == "atanh":
        return math.atanh(v)
    return float(v)


def _unlink(z, code):
    if code == "log":
        return math.exp(min(z, 700.0))
    if code == "atanh":
        return math.tanh(z)
    return float(z)


NPTOU = Family("NPTOU", ("kappa",), ("log",), lambda th: normalized_ou(th[0]))
NPTCIR = Family("NPTCIR", ("kappa", "alpha"), ("log", "log"),
                lambda th: normalized_cir(th[0], th[1]),
                grid=((1.0,), (0.5, 1.0, 2.0, 5.0, 15.0)))
FAMILIES = {"OU": NPTOU, "NPTOU": NPTOU, "OU-SKST": NPTOU,
            "CIR": NPTCIR, "NPTCIR": NPTCIR, "CIR-SKST": NPTCIR}


def get_family(name) -> Family:
    if isinstance(name, Family):
        return name
    try:
        return FAMILIES[str(name).upper()]
    except KeyError:
        raise ParamError(f"unknown model family {name!r}") from None


# ------------------------------------------------------ options/results
@dataclass(frozen=True)
class FitOptions:
    """Optimiser settings.

    ``optimizer`` is ``"NelderMead"`` (multi-start simplex followed by a
    numeric-gradient BFGS polish) or ``"QuasiNewtonNumericGrad"``.
    """

    optimizer: str = "NelderMead"
    restarts: int = 5
    tolerance: float = 1e-9
    max_iter: int = 4000
    jitter: float = 0.3
    bandwidth_factor: float = 1.0
    seed: int = 12345
    compute_se: bool = True

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ParamError("tolerance must be positive")
        if self.restarts < 1:
            raise ParamError("restarts must be >= 1")
        if self.optimizer not in ("NelderMead", "QuasiNewtonNumericGrad"):
            raise ParamError(f"unknown optimizer {self.optimizer}")


@dataclass
class FitResult:
    """Estimated parameters with objective value and diagnostics.

    ``objective_value`` is the average log-likelihood (or pseudo
    log-likelihood) per transition; ``loglik`` is the corresponding sum.
    """

    theta_hat: np.ndarray
    objective_value: float
    se: Optional[np.ndarray]
    converged: bool
    evaluations: int
    estimator_kind: str
    param_names: tuple
    family: str
    n: int
    model: Optional[UpdModel] = field(default=None, repr=False)
    extra: dict = field(default_factory=dict, repr=False)
    trace: list = field(default_factory=list, repr=False)

    @property
    def loglik(self) -> float:
        return self.objective_value * self.n

    @property
    def params(self) -> dict:
        return dict(zip(self.param_names, map(float, self.theta_hat)))

    def to_dict(self) -> dict:
        se = None if self.se is None else [float(v) for v in self.se]
        out = {"estimator": self.estimator_kind, "family": self.family,
               "params": self.params, "se": dict(zip(self.param_names, se)) if se else None,
               "objective_value": float(self.objective_value), "loglik": float(self.loglik),
               "n": int(self.n), "converged": bool(self.converged),
               "evaluations": int(self.evaluations),
               "restart_best": [float(v) for v in self.trace]}
        for k, v in self.extra.items():
            if isinstance(v, (int, float, str, bool, list, dict)) or v is None:
                out[k] = v
        return out

    def to_json(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)


# ------------------------------------------------------------ helpers
def _check_data(data):
    y = np.asarray(data, float).ravel()
    if y.size < 3:
        raise DataError("need at least three observations")
    if not np.all(np.isfinite(y)):
        raise DataError("data contain non-finite values")
    if np.ptp(y) == 0:
        raise DegenerateSampleError("data are constant")
    return y


def _spec(delta, density=EXACT):
    if isinstance(delta, TransitionDensitySpec):
        return delta
    if density == EULER:
        return TransitionDensitySpec(delta, Method.EULER, 1)
    return TransitionDensitySpec(delta)


def copula_terms(x, model: UpdModel, delta, density=EXACT):
    """``log p_X(x_i | x_{i-1}) - log f_X(x_i)`` for ``i = 1..n``."""
    spec = _spec(delta, density)
    return (model.log_transition_density(x[1:], x[:-1], spec)
            - model.log_stationary_density(x[1:]))


def loglik_terms(data, model: UpdModel, transform: Transformation, delta, density=EXACT):
    y = np.asarray(data, float)
    x = transform.U(y)
    lo, hi = model.domain
    if np.any(~((x > lo) & (x < hi))):
        raise DomainError("transformed data leave the model domain")
    spec = _spec(delta, density)
    with np.errstate(divide="ignore", invalid="ignore"):
        return model.log_transition_density(x[1:], x[:-1], spec) + transform.log_dU(y[1:])


def loglik_full(data, model: UpdModel, transform: Transformation, delta):
    """Average full log-likelihood of ``Y`` under ``(model, transform)``."""
    terms = loglik_terms(data, model, transform, delta)
    bad = np.flatnonzero(~np.isfinite(terms))
    if bad.size:
        raise NonFiniteLikelihoodError(
            f"non-finite log-likelihood at observation {bad[0] + 1}", index=int(bad[0] + 1))
    return float(np.mean(terms))


def marginal_probs(data, cdf_variant="empirical", bandwidth_factor=1.0, h=None):
    """Estimated ``F_Y`` at the sample points, kept inside (0, 1)."""
    y = np.asarray(data, float)
    if cdf_variant == "empirical":
        return EmpiricalCdf(y)(y)
    if cdf_variant == "kernel":
        h = h if h is not None else silverman_bandwidth(y, bandwidth_factor)
        return np.clip(KernelEstimate(y, h).cdf(y), _CLIP, 1 - _CLIP)
    raise ParamError(f"unknown cdf variant {cdf_variant!r}")


def _copula_objective(probs, family: Family, delta, density=EXACT):
    def terms(theta):
        try:
            model = family.model(theta)
            x = model.stationary_quantile(probs)
            with np.errstate(all="ignore"):
                return copula_terms(x, model, delta, density)
        except (ParamError, DomainError, NonStationaryError, ValueError):
            return np.full(len(probs) - 1, -np.inf)
    return terms


def pmle_objective(data, model, delta, theta=None, cdf_variant="empirical",
                   bandwidth_factor=1.0, density=EXACT):
    """Average pseudo log-likelihood with ``U = F_X^{-1}(F_Y_hat)``.

    ``model`` is either an :class:`UpdModel` or a family name/object, in
    which case ``theta`` selects the member.
    """
    y = np.asarray(data, float)
    probs = marginal_probs(y, cdf_variant, bandwidth_factor)
    if not isinstance(model, UpdModel):
        model = get_family(model).model(theta)
    x = model.stationary_quantile(probs)
    return float(np.mean(copula_terms(x, model, delta, density)))


# ------------------------------------------------------------ optimiser
def maximize(fn, z0, opts: FitOptions, starts=None):
    """Multi-start maximisation of ``fn`` over free parameters.

    Returns ``(z_best, f_best, evaluations, converged, trace)``; ``trace``
    lists the best-so-far value after each restart and never decreases.
    """
    count = [0]

    def neg(z):
        count[0] += 1
        v = fn(np.asarray(z, float))
        return -v if np.isfinite(v) else np.inf

    rng = np.random.default_rng(opts.seed)
    z0 = np.asarray(z0, float)
    cand = [z0] if starts is None else [np.asarray(s, float) for s in starts]
    while len(cand) < opts.restarts:
        cand.append(z0 + opts.jitter * rng.standard_normal(z0.size))
    best, best_f, trace, ok = None, np.inf, [], False
    for z in cand[: max(opts.restarts, 1)]:
        if opts.optimizer == "NelderMead":
            res = optimize.minimize(neg, z, method="Nelder-Mead",
                                    options={"xatol": 1e-9, "fatol": opts.tolerance,
                                             "maxiter": opts.max_iter, "adaptive": z.size > 2})
        else:
            res = optimize.minimize(neg, z, method="BFGS",
                                    options={"gtol": 1e-7, "maxiter": opts.max_iter})
        if res.fun < best_f:
            best, best_f, ok = res.x, res.fun, bool(res.success) or ok
        trace.append(-best_f)
    if best is None or not np.isfinite(best_f):
        raise NonConvergenceError("objective not finite at any start")
    pol = optimize.minimize(neg, best, method="BFGS", options={"gtol": 1e-8})
    if pol.fun <= best_f:
        best, best_f = pol.x, pol.fun
        ok = True
    return best, -best_f, count[0], ok, trace


def _fit_family(terms_fn, family: Family, theta0, opts, kind, n, extra=None, starts=None):
    def f(z):
        return float(np.mean(terms_fn(family.from_free(z))))

    z, val, nev, ok, trace = maximize(f, family.to_free(theta0), opts, starts)
    theta = family.from_free(z)
    se = None
    if opts.compute_se:
        try:
            se = sandwich_se(None, lambda _d, th: terms_fn(th), theta)
        except (SingularHessianError, ValueError, FloatingPointError):
            se = None
    return FitResult(theta, val, se, ok, nev, kind, family.param_names, family.name, n,
                     family.model(theta), dict(extra or {}), trace)


def _kappa_start(probs, delta):
    z = stats.norm.ppf(probs)
    r = float(np.corrcoef(z[1:], z[:-1])[0, 1])
    return -math.log(min(max(r, 0.01), 0.999999)) / delta


def _starts(family: Family, terms_fn, probs, delta):
    k0 = _kappa_start(probs, delta)
    best, best_v = None, -np.inf
    grids = family.grid or ((1.0,),) * len(family.param_names)
    mesh = np.array(np.meshgrid(*grids[1:], indexing="ij")).reshape(len(grids) - 1, -1).T \
        if len(grids) > 1 else np.zeros((1, 0))
    for scale in (0.5, 1.0, 2.0):
        for rest in mesh:
            th = np.r_[k0 * scale, rest]
            v = float(np.mean(terms_fn(th)))
            if v > best_v:
                best, best_v = th, v
    return best


def fit_pmle(data, model_family, delta, opts: FitOptions = FitOptions(),
             cdf_variant="empirical", density=EXACT):
    """Two-step PMLE: plug in the estimated marginal cdf, maximise over theta."""
    y = _check_data(data)
    fam = get_family(model_family)
    probs = marginal_probs(y, cdf_variant, opts.bandwidth_factor)
    terms = _copula_objective(probs, fam, delta, density)
    theta0 = _starts(fam, terms, probs, delta)
    kind = "EulerPMLE" if density == EULER else "PMLE"
    return _fit_family(terms, fam, theta0, opts, kind, len(y) - 1,
                       {"cdf_variant": cdf_variant, "delta": delta})


def fit_euler_pmle(data, model_family, delta, opts: FitOptions = FitOptions(),
                   density=EULER):
    """PMLE with the one-step Euler transition density in place of the exact one."""
    return fit_pmle(data, model_family, delta, opts, density=density)


def fit_ppmle(data, model_family, delta, opts: FitOptions = FitOptions()):
    """Two-stage parametric PMLE: SKST marginal by MLE, then theta."""
    y = _check_data(data)
    fam = get_family(model_family)
    phi = fit_skst(y)
    probs = np.clip(skst_cdf(y, phi), _CLIP, 1 - _CLIP)
    terms = _copula_objective(probs, fam, delta)
    theta0 = _starts(fam, terms, probs, delta)
    res = _fit_family(terms, fam, theta0, opts, "PPMLE", len(y) - 1,
                      {"phi": list(phi.as_tuple()), "delta": delta})
    # report the full parametric log-likelihood including the marginal part
    res.objective_value = res.objective_value + float(np.mean(skst_logpdf(y[1:], phi)))
    return res


# --------------------------------------------------- parametric models
def _ar1_start(x, delta):
    b, a = np.polyfit(x[:-1], x[1:], 1)
    b = min(max(b, 1e-4), 1 - 1e-8)
    resid = x[1:] - a - b * x[:-1]
    kappa = -math.log(b) / delta
    alpha = a / (1 - b)
    s2 = float(np.var(resid)) * 2 * kappa / (1 - b * b)
    return kappa, alpha, s2


def do_parts(theta):
    kappa, alpha, s2 = theta
    return ou(kappa, alpha, math.sqrt(s2)), exp_transform()


def ew_parts(theta):
    kappa, alpha, s2, rho, dlt = theta
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", FellerWarning)
        base = cir(kappa, alpha, math.sqrt(s2))
    return base.reflect(), ew_transform(rho, dlt)


PARAMETRIC = {
    "DO": (("kappa", "alpha", "sigma2"), ("log", "id", "log"), do_parts),
    "EW": (("kappa", "alpha", "sigma2", "rho", "delta"), ("log", "log", "log", "id", "log"),
           ew_parts),
}


def parametric_terms(y, name, delta):
    names, links, parts = PARAMETRIC[name]

    def terms(theta):
        try:
            model, tr = parts(theta)
            return loglik_terms(y, model, tr, delta)
        except (ParamError, DomainError, ValueError, OverflowError):
            return np.full(len(y) - 1, -np.inf)
    return terms


def _ew_starts(y, delta, terms):
    best, best_v = None, -np.inf
    ymin, ymax = float(y.min()), float(y.max())
    for rho in (0.0, 0.5 * ymin, 0.9 * ymin):
        for frac in (0.02, 0.2, 0.6):
            dlt = frac / (ymax - rho)
            x = 1.0 / (y - rho) - dlt
            kappa, alpha, _ = _ar1_start(x, delta)
            alpha = float(np.mean(x))
            s2 = max(2 * kappa * float(np.var(x)) / alpha, 1e-8)
            th = np.array([kappa, alpha, s2, rho, dlt])
            v = float(np.mean(terms(th)))
            if v > best_v:
                best, best_v = th, v
    return best


def fit_parametric(data, parametric_model, delta, opts: FitOptions = FitOptions()):
    """Fit DO or EW by full MLE, or OU-SKST/CIR-SKST by two-stage PPMLE."""
    name = str(parametric_model).upper()
    if name in ("OU-SKST", "CIR-SKST"):
        return fit_ppmle(data, name.split("-")[0], delta, opts)
    if name not in PARAMETRIC:
        raise ParamError(f"unknown parametric model {parametric_model!r}")
    y = _check_data(data)
    names, links, parts = PARAMETRIC[name]
    fam = Family(name, names, links, lambda th: parts(th)[0])
    terms = parametric_terms(y, name, delta)
    if name == "DO":
        if np.any(y <= 0):
            raise DataError("DO needs positive data")
        theta0 = np.array(_ar1_start(np.log(y), delta))
    else:
        theta0 = _ew_starts(y, delta, terms)
        _check_monotone(ew_parts(theta0)[1], y)
    res = _fit_family(terms, fam, theta0, opts, "MLE", len(y) - 1, {"delta": delta})
    res.extra["transform"] = name
    return res


def _check_monotone(tr: Transformation, y):
    grid = np.linspace(y.min(), y.max(), 101)
    d = tr.dU(grid)
    if not np.all(np.isfinite(d) & (d > 0)):
        raise MonotonicityError("candidate transform is not increasing on the data range")


def parametric_structure(name, theta) -> Structure:
    model, tr = PARAMETRIC[name.upper()][2](theta)
    return Structure(model, tr)


# ---------------------------------------------------------------- SMLE
def fit_smle(data, model_family, delta, sieve: SieveSpec = SieveSpec(),
             opts: FitOptions = FitOptions(), pmle: Optional[FitResult] = None):
    """Joint sieve MLE over theta and log-spline coefficients.

    The search starts from the PMLE and the i.i.d. sieve fit, so the final
    log-likelihood is never below that restricted starting point.
    """
    y = _check_data(data)
    fam = get_family(model_family)
    basis = LogSplineBasis(y, sieve)
    c0 = basis.fit_iid()
    if pmle is None:
        pmle = fit_pmle(y, fam, delta, FitOptions(restarts=2, compute_se=False))
    k = len(fam.param_names)

    def terms(theta, free):
        c = basis.full_coefs(free)
        probs = np.clip(basis.cdf_data(c), _CLIP, 1 - _CLIP)
        try:
            model = fam.model(theta)
            x = model.stationary_quantile(probs)
            with np.errstate(all="ignore"):
                return copula_terms(x, model, delta) + basis.logpdf_data(c)[1:]
        except (ParamError, DomainError, NonStationaryError, ValueError):
            return np.full(len(y) - 1, -np.inf)

    def f(z):
        v = float(np.mean(terms(fam.from_free(z[:k]), z[k:])))
        return v if np.isfinite(v) else -np.inf

    z0 = np.r_[fam.to_free(pmle.theta_hat), c0]
    start_val = f(z0)
    count = [0]

    def neg(z):
        count[0] += 1
        v = f(z)
        return -v if np.isfinite(v) else 1e300

    res = optimize.minimize(neg, z0, method="L-BFGS-B",
                            options={"maxiter": opts.max_iter, "ftol": 1e-13, "gtol": 1e-7})
    z = res.x if -res.fun >= start_val else z0
    theta = fam.from_free(z[:k])
    coefs = basis.full_coefs(z[k:])
    se = None
    if opts.compute_se:
        try:
            se = sandwich_se(None, lambda _d, th: terms(th, z[k:]), theta)
        except (SingularHessianError, ValueError):
            se = None
    out = FitResult(theta, f(z), se, bool(res.success), count[0], "SMLE", fam.param_names,
                    fam.name, len(y) - 1, fam.model(theta),
                    {"delta": delta, "start_value": start_val}, [start_val, f(z)])
    out.extra["sieve"] = SieveDensity(basis, coefs)
    return out


# --------------------------------------------------------- sandwich SE
def _newey_west(scores, lags):
    n = scores.shape[0]
    s = scores - scores.mean(axis=0)
    omega = s.T @ s / n
    for lag in range(1, lags + 1):
        w = 1 - lag / (lags + 1)
        g = s[lag:].T @ s[:-lag] / n
        omega += w * (g + g.T)
    return omega


def sandwich_se(data, objective, theta_hat, lags=None, rel_step=1e-4):
    """HAC sandwich standard errors for an average-of-terms objective.

    Parameters
    ----------
    data : array_like or None
        Passed through to ``objective``.
    objective : callable
        ``objective(data, theta)`` returning per-observation log terms.
    theta_hat : array_like
        Interior maximiser.
    lags : int, optional
        Newey-West truncation lag, ``floor(4 (n/100)^(2/9))`` by default.

    Returns
    -------
    ndarray
        ``sqrt(diag(H^-1 S H^-1) / n)``.
    """
    th = np.asarray(theta_hat, float)
    p = th.size
    h = rel_step * np.maximum(np.abs(th), 1e-2)

    def terms(t):
        return np.asarray(objective(data, t), float)

    base = terms(th)
    n = base.size
    scores = np.empty((n, p))
    plus, minus = [], []
    for j in range(p):
        e = np.zeros(p)
        e[j] = h[j]
        tp, tm = terms(th + e), terms(th - e)
        plus.append(tp)
        minus.append(tm)
        scores[:, j] = (tp - tm) / (2 * h[j])
    hess = np.empty((p, p))
    f0 = base.mean()
    for j in range(p):
        hess[j, j] = (plus[j].mean() - 2 * f0 + minus[j].mean()) / h[j] ** 2
        for k in range(j):
            ej = np.zeros(p)
            ek = np.zeros(p)
            ej[j], ek[k] = h[j], h[k]
            v = (terms(th + ej + ek).mean() - terms(th + ej - ek).mean()
                 - terms(th - ej + ek).mean() + terms(th - ej - ek).mean()) / (4 * h[j] * h[k])
            hess[j, k] = hess[k, j] = v
    if not np.all(np.isfinite(hess)) or not np.all(np.isfinite(scores)):
        raise SingularHessianError("non-finite derivatives at theta_hat")
    if lags is None:
        lags = int(math.floor(4 * (n / 100) ** (2 / 9)))
    omega = _newey_west(scores, lags)
    try:
        hinv = np.linalg.inv(hess)
    except np.linalg.LinAlgError as exc:
        raise SingularHessianError(str(exc)) from exc
    if np.linalg.cond(hess) > 1e14:
        raise SingularHessianError("Hessian is numerically singular")
    cov = hinv @ omega @ hinv / n
    return np.sqrt(np.abs(np.diag(cov)))


# -------------------------------------------------- drift and diffusion
@dataclass
class DriftDiffEstimate:
    """Plug-in drift/diffusion estimates with asymptotic bias and variance.

    ``bias_*`` are the leading smoothing-bias coefficients (to be scaled by
    ``h**2``) and ``var_*`` the asymptotic variances for the rates
    ``sqrt(n h^3)`` (drift) and ``sqrt(n h)`` (diffusion).
    """

    grid: np.ndarray
    mu_hat: np.ndarray
    sigma2_hat: np.ndarray
    h: float
    bias_mu: np.ndarray
    var_mu: np.ndarray
    bias_sigma2: np.ndarray
    var_sigma2: np.ndarray

    def to_csv(self, path, mu_true=None, sigma2_true=None):
        cols = {"y": self.grid, "mu_hat": self.mu_hat, "sigma2_hat": self.sigma2_hat}
        if mu_true is not None:
            cols["mu_true"] = mu_true
            cols["sigma2_true"] = sigma2_true
        arr = np.column_stack(list(cols.values()))
        np.savetxt(path, arr, delimiter=",", header=",".join(cols), comments="", fmt="%.17g")


def asymptotic_bias_variance(sigma2_y, f_derivs, kappa2=1.0, int_k2=None, int_dk2=None):
    """Leading bias and variance terms of the kernel drift/diffusion estimators.

    ``f_derivs`` is ``[f_Y, f_Y', f_Y'', f_Y''']`` at the evaluation points.
    """
    int_k2 = INT_K2 if int_k2 is None else int_k2
    int_dk2 = INT_DK2 if int_dk2 is None else int_dk2
    f, _, f2, f3 = f_derivs
    b_mu = -kappa2 * sigma2_y * f3 / (4 * f)
    v_mu = sigma2_y**2 / (4 * f) * int_dk2
    b_s2 = -kappa2 * sigma2_y * f2 / f
    v_s2 = 4 * sigma2_y**2 / f * int_k2
    return b_mu, v_mu, b_s2, v_s2


def estimate_drift_diffusion(data, fit, grid, h=None, bandwidth_factor=1.0, marginal=None):
    """Kernel plug-in estimates of the drift and squared diffusion of ``Y``.

    ``fit`` is a :class:`FitResult` or an :class:`UpdModel`.  ``marginal``
    replaces the kernel estimate of ``F_Y`` when a known law is supplied.
    """
    y = np.asarray(data, float)
    grid = np.asarray(grid, float)
    model = fit if isinstance(fit, UpdModel) else fit.model
    if marginal is None:
        if h is None:
            h = silverman_bandwidth(y, bandwidth_factor)
        marginal = KernelEstimate(y, h)
    lo, hi = np.quantile(y, [0.01, 0.99])
    if np.any((grid < lo) | (grid > hi)):
        warnings.warn("grid extends beyond the 1st-99th percentile band", TailWarning,
                      stacklevel=2)
    tr = build_marginal_induced_transform(marginal, model)
    mu, s2 = transformed_drift_diffusion(Structure(model, tr), grid)
    fd = marginal.pdf_derivs(grid, 3)
    b_mu, v_mu, b_s2, v_s2 = asymptotic_bias_variance(s2, fd)
    return DriftDiffEstimate(grid, mu, s2, float(h) if h else float("nan"),
                             b_mu, v_mu, b_s2, v_s2)
