import json
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import stats

from diffcopula.errors import (
    BandwidthError,
    DegenerateSampleError,
    NonFiniteLikelihoodError,
    ParamError,
    TailWarning,
)
from diffcopula.estimate import (
    EXACT,
    FitOptions,
    _copula_objective,
    asymptotic_bias_variance,
    estimate_drift_diffusion,
    fit_euler_pmle,
    fit_parametric,
    fit_pmle,
    fit_smle,
    get_family,
    loglik_full,
    maximize,
    parametric_structure,
    pmle_objective,
    sandwich_se,
)
from diffcopula.inference_mc import Scenario
from diffcopula.marginals import INT_K2, KernelEstimate, Skst, skst_cdf, skst_logpdf
from diffcopula.sieve import LogSplineBasis, SieveDensity, SieveSpec
from diffcopula.simulate import PathConfig, simulate_ou_exact, simulate_transformed
from diffcopula.transform_copula import (
    Transformation,
    affine_transform,
    build_marginal_induced_transform,
    identity_transform,
)
from diffcopula.upd_models import normalized_cir, normalized_ou, ou

from .oracles import ar1_avg_loglik, integrate_1d

PHI = (0.0835, 0.0358, 0.5193, 25.3708)
DO_THETA = (4.4888, 2.8890, 1.0818)
FAST = FitOptions(restarts=2, compute_se=False)


@pytest.fixture(scope="module")
def ou_skst_data():
    scen = Scenario("OU-SKST", 20, 2202)
    y = simulate_transformed(scen.structure(), PathConfig(2202, scen.sampling_interval, seed=21))
    return y, scen


@pytest.fixture(scope="module")
def ou_skst_pmle(ou_skst_data):
    y, scen = ou_skst_data
    return fit_pmle(y, "NPTOU", scen.sampling_interval)


# ------------------------------------------------------------- loglik_full
def test_loglik_full_identity_ou_is_ar1():
    # [DERIVED] Gaussian AR(1) average log density
    k, a, s, d = 1.5, 0.3, 0.8, 0.1
    x = simulate_ou_exact(k, a, s, PathConfig(500, d, seed=1))
    val = loglik_full(x, ou(k, a, s), identity_transform(), d)
    assert_allclose(val, ar1_avg_loglik(x, k, a, s, d), rtol=1e-12)


def test_loglik_full_affine_jacobian():
    # [DERIVED] Jacobian term shifts by -log b
    k, d = 1.0, 0.2
    m = normalized_ou(k)
    x = simulate_ou_exact(k, 0.0, math.sqrt(2 * k), PathConfig(300, d, seed=2))
    a, b = 2.0, 3.5
    y = a + b * x
    base = loglik_full(x, m, identity_transform(), d)
    assert_allclose(loglik_full(y, m, affine_transform(a, b), d), base - math.log(b), rtol=1e-12)


def test_loglik_full_unit_pair():
    # [TRIVIAL] one transition with p_X = 1 and U' = 1
    k = 1.0
    d = -math.log(1 - 1 / (2 * math.pi)) / (2 * k)
    val = loglik_full(np.array([0.0, 0.0]), normalized_ou(k), identity_transform(), d)
    assert abs(val) < 1e-14


def test_loglik_nonfinite_index():
    t = Transformation(lambda x: x, lambda y: np.asarray(y, float),
                       lambda y: np.where(np.asarray(y) > 5, 0.0, 1.0))
    y = np.array([0.0, 0.1, 0.2, 9.0, 0.3])
    with pytest.raises(NonFiniteLikelihoodError) as exc:
        loglik_full(y, normalized_ou(1.0), t, 0.1)
    assert exc.value.index == 3


# ----------------------------------------------------------- pmle objective
def test_pmle_rank_invariance(ou_skst_data):
    y, scen = ou_skst_data
    d = scen.sampling_interval
    a = pmle_objective(y, "NPTOU", d, theta=[20.0])
    b = pmle_objective(y**3 + y, "NPTOU", d, theta=[20.0])
    assert a == b


def test_pmle_independent_data_near_zero(rng):
    y = rng.standard_normal(2000)
    assert abs(pmle_objective(y, normalized_ou(1.0), 20.0)) < 1e-6


def test_pmle_identity_with_true_marginal(ou_skst_data):
    # [DERIVED] full loglik minus mean log f_Y equals the copula objective
    y, scen = ou_skst_data
    d = scen.sampling_interval
    m = normalized_ou(22.0)
    probs = skst_cdf(y, PHI)
    copula = float(np.mean(_copula_objective(probs, get_family("NPTOU"), d)(np.array([22.0]))))
    full = loglik_full(y, m, build_marginal_induced_transform(Skst(PHI), m), d)
    assert abs(full - float(np.mean(skst_logpdf(y[1:], PHI))) - copula) < 1e-10


def test_pmle_kernel_variant_finite(ou_skst_data):
    y, scen = ou_skst_data
    v = pmle_objective(y, "NPTOU", scen.sampling_interval, theta=[20.0], cdf_variant="kernel")
    assert np.isfinite(v)
    with pytest.raises(ParamError):
        pmle_objective(y, "NPTOU", 0.01, theta=[1.0], cdf_variant="bogus")


# ------------------------------------------------------------------ fits
def test_fit_pmle_ou_skst_envelope(ou_skst_pmle):
    # [PAPER] one draw inside three reported RMSE envelopes
    k = 22.753
    assert abs(ou_skst_pmle.theta_hat[0] / k - 1) < 3 * 0.1133
    assert ou_skst_pmle.converged
    assert ou_skst_pmle.se is not None and ou_skst_pmle.se[0] > 0


def test_fit_pmle_gradient_and_trace(ou_skst_data, ou_skst_pmle):
    y, scen = ou_skst_data
    d = scen.sampling_interval
    k = ou_skst_pmle.theta_hat[0]
    e = 1e-4 * k
    g = (pmle_objective(y, "NPTOU", d, theta=[k + e])
         - pmle_objective(y, "NPTOU", d, theta=[k - e])) / (2 * e)
    assert abs(g) < 1e-4
    tr = ou_skst_pmle.trace
    assert all(b >= a for a, b in zip(tr, tr[1:]))
    assert ou_skst_pmle.objective_value >= tr[-1] - 1e-12


def test_maximize_best_so_far_monotone():
    f = lambda z: -float(np.sum((z - 1.0) ** 2)) + 0.1 * float(np.cos(5 * z[0]))  # noqa: E731
    z, val, nev, ok, trace = maximize(f, np.array([3.0, -2.0]), FitOptions(restarts=5))
    assert all(b >= a for a, b in zip(trace, trace[1:]))
    assert val >= trace[-1] and nev > 0


def test_fit_degenerate_data():
    with pytest.raises(DegenerateSampleError):
        fit_pmle(np.full(50, 1.3), "NPTOU", 0.01)


def test_fit_options_validation():
    with pytest.raises(ParamError):
        FitOptions(tolerance=0)
    with pytest.raises(ParamError):
        FitOptions(restarts=0)
    with pytest.raises(ParamError):
        FitOptions(optimizer="Simplex")
    with pytest.raises(ParamError):
        get_family("GARCH")


def test_fit_result_serialisation(ou_skst_pmle, tmp_path):
    p = tmp_path / "fit.json"
    ou_skst_pmle.to_json(p)
    d = json.loads(p.read_text())
    assert d["estimator"] == "PMLE" and "kappa" in d["params"]
    assert_allclose(d["loglik"], ou_skst_pmle.objective_value * ou_skst_pmle.n)


def test_fit_ppmle_envelope(ou_skst_data):
    # [PAPER] two-stage recovery within three PPMLE RMSE envelopes
    y, scen = ou_skst_data
    res = fit_parametric(y, "OU-SKST", scen.sampling_interval, FAST)
    assert res.estimator_kind == "PPMLE"
    assert abs(res.theta_hat[0] / 22.753 - 1) < 3 * 0.1059
    assert len(res.extra["phi"]) == 4


def test_fit_pmle_cir(rng):
    scen = Scenario("CIR-SKST", 20, 2202)
    y = simulate_transformed(scen.structure(), PathConfig(2202, scen.sampling_interval, seed=5))
    res = fit_pmle(y, "NPTCIR", scen.sampling_interval, FAST)
    assert abs(res.theta_hat[0] / scen.theta[0] - 1) < 0.6
    assert 0.5 < res.theta_hat[1] < 3.0


@pytest.fixture(scope="module")
def do_data():
    d = 1 / 252
    s = parametric_structure("DO", DO_THETA)
    return simulate_transformed(s, PathConfig(7444, d, seed=31)), d


def test_fit_do_within_three_se(do_data):
    # [PAPER] reported DO estimates for VIX as the data-generating value
    y, d = do_data
    res = fit_parametric(y, "DO", d)
    assert res.se is not None
    z = np.abs(res.theta_hat - np.array(DO_THETA)) / res.se
    assert np.all(z < 3), (res.theta_hat, res.se)


def test_fit_ew_smoke():
    theta = (4.0741, 0.0524, 0.0695, 0.1916, 0.0072)
    d = 1 / 252
    y = simulate_transformed(parametric_structure("EW", theta), PathConfig(3000, d, seed=4))
    res = fit_parametric(y, "EW", d, FAST)
    assert np.all(np.isfinite(res.theta_hat))
    from diffcopula.estimate import parametric_terms
    at_truth = float(np.mean(parametric_terms(y, "EW", d)(np.array(theta))))
    assert res.objective_value >= at_truth - 1e-8


def test_parametric_unknown():
    with pytest.raises(ParamError):
        fit_parametric(np.arange(1.0, 10.0), "GBM", 0.01)


# ----------------------------------------------------------------- Euler
@pytest.fixture(scope="module")
def ou_small_kd():
    k = 5.0
    d = 0.005 / k
    x = simulate_ou_exact(k, 0.0, math.sqrt(2 * k), PathConfig(5000, d, seed=41))
    return x, d


def test_euler_pmle_small_step(ou_small_kd):
    # [DERIVED] exact-likelihood oracle
    x, d = ou_small_kd
    ex = fit_pmle(x, "NPTOU", d, FAST).theta_hat[0]
    eu = fit_euler_pmle(x, "NPTOU", d, FAST).theta_hat[0]
    assert abs(eu - ex) / ex < 0.02


def test_euler_pmle_bias_grows_with_step():
    k = 5.0
    out = []
    for kd in (0.005, 0.5):
        d = kd / k
        x = simulate_ou_exact(k, 0.0, math.sqrt(2 * k), PathConfig(3000, d, seed=42))
        ex = fit_pmle(x, "NPTOU", d, FAST).theta_hat[0]
        eu = fit_euler_pmle(x, "NPTOU", d, FAST).theta_hat[0]
        out.append(abs(eu - ex) / ex)
    assert out[1] > out[0]


def test_euler_plumbing_exact_density(ou_small_kd):
    x, d = ou_small_kd
    a = fit_pmle(x, "NPTOU", d, FAST)
    b = fit_euler_pmle(x, "NPTOU", d, FAST, density=EXACT)
    assert np.array_equal(a.theta_hat, b.theta_hat)
    assert a.objective_value == b.objective_value


# ------------------------------------------------------------------ SMLE
@pytest.mark.slow
def test_smle(ou_skst_data, ou_skst_pmle):
    y, scen = ou_skst_data
    d = scen.sampling_interval
    res = fit_smle(y, "NPTOU", d, SieveSpec(), FitOptions(restarts=1), pmle=ou_skst_pmle)
    sieve = res.extra["sieve"]
    assert abs(sieve.integral() - 1) < 1e-8
    # joint maximisation never ends below its restricted starting point
    assert res.objective_value >= res.extra["start_value"] - 1e-10
    joint_se = math.hypot(res.se[0], ou_skst_pmle.se[0])
    assert abs(res.theta_hat[0] - ou_skst_pmle.theta_hat[0]) < 2 * joint_se


def test_sieve_likelihood_decomposition(ou_skst_data):
    # full loglik with a sieve marginal minus mean log f_{Y,m} equals the copula part
    y, scen = ou_skst_data
    d = scen.sampling_interval
    basis = LogSplineBasis(y, SieveSpec())
    sieve = SieveDensity(basis, basis.full_coefs(basis.fit_iid()))
    m = normalized_ou(20.0)
    full = loglik_full(y, m, build_marginal_induced_transform(sieve, m), d)
    probs = sieve.cdf(y)
    copula = float(np.mean(_copula_objective(probs, get_family("NPTOU"), d)(np.array([20.0]))))
    assert abs(full - float(np.mean(sieve.logpdf(y[1:]))) - copula) < 1e-10


def test_sieve_density_derivatives():
    rng = np.random.default_rng(0)
    y = rng.gamma(3.0, size=800)
    basis = LogSplineBasis(y, SieveSpec(knots=6))
    s = SieveDensity(basis, basis.full_coefs(basis.fit_iid()))
    assert abs(s.integral() - 1) < 1e-8
    assert_allclose(basis.cdf_data(s.coefs)[:20], s.cdf(y[:20]), atol=1e-12)
    # [DERIVED] cell rule against adaptive quadrature
    for v in (0.7, 2.0, 5.5):
        ref = integrate_1d(lambda z: float(s.pdf(z)), basis.lo, v)
        assert abs(float(s.cdf(v)) - ref) < 1e-10
    g = np.array([1.0, 2.5, 4.0])
    e = 1e-5
    f = s.pdf_derivs(g, 3)
    fp, fm = s.pdf_derivs(g + e, 3), s.pdf_derivs(g - e, 3)
    for k in range(3):
        assert_allclose((fp[k] - fm[k]) / (2 * e), f[k + 1], rtol=1e-4, atol=1e-8)
    assert_allclose(s.cdf(s.quantile([0.2, 0.7])), [0.2, 0.7], atol=1e-10)


# --------------------------------------------------------------- sandwich
def test_sandwich_iid_location(rng):
    # [DERIVED] SE of a mean is sd / sqrt(n)
    y = 2.0 + 1.5 * rng.standard_normal(5000)
    obj = lambda data, th: stats.norm.logpdf(data, th[0], 1.5)  # noqa: E731
    se = sandwich_se(y, obj, [float(np.mean(y))])
    assert abs(se[0] / (1.5 / math.sqrt(y.size)) - 1) < 0.05


def test_sandwich_reparameterisation(rng):
    # [TRIVIAL] delta method: se(theta) = theta * se(log theta)
    y = rng.exponential(2.0, 3000)
    lam = 1 / np.mean(y)
    obj = lambda data, th: np.log(th[0]) - th[0] * data  # noqa: E731
    obj_log = lambda data, z: z[0] - np.exp(z[0]) * data  # noqa: E731
    se = sandwich_se(y, obj, [lam], lags=0)
    se_log = sandwich_se(y, obj_log, [math.log(lam)], lags=0)
    assert_allclose(se[0], lam * se_log[0], rtol=1e-6)


@pytest.mark.slow
def test_do_se_vs_replication_sd():
    # [DERIVED] sandwich SEs within a factor 2 of the Monte Carlo spread
    d = 1 / 252
    s = parametric_structure("DO", DO_THETA)
    est, ses = [], []
    for r in range(16):
        y = simulate_transformed(s, PathConfig(2000, d, seed=55, replication=r))
        res = fit_parametric(y, "DO", d, FitOptions(restarts=1))
        est.append(res.theta_hat)
        ses.append(res.se)
    ratio = np.mean(ses, axis=0) / np.std(est, axis=0, ddof=1)
    assert np.all((ratio > 0.5) & (ratio < 2.0)), ratio


# --------------------------------------------------------- drift/diffusion
def test_drift_diffusion_truth_recovered():
    # [TRIVIAL] plug-in with the true model and true marginal
    m = normalized_cir(1.0, 2.0)
    grid = m.stationary_quantile(np.linspace(0.05, 0.95, 11))
    data = m.stationary_quantile(np.linspace(0.001, 0.999, 200))
    est = estimate_drift_diffusion(data, m, grid, marginal=m.stationary)
    assert np.max(np.abs(est.mu_hat - m.drift(grid))) < 1e-8
    assert np.max(np.abs(est.sigma2_hat - m.diffusion2(grid))) < 1e-8


def test_variance_formula_independent(ou_skst_data, ou_skst_pmle):
    # [DERIVED] 4 sigma^4 / f * int K^2 with int K^2 by quadrature
    y, _ = ou_skst_data
    grid = np.quantile(y, [0.25, 0.5, 0.75])
    est = estimate_drift_diffusion(y, ou_skst_pmle, grid)
    ke = KernelEstimate(y, est.h)
    ik2 = integrate_1d(lambda z: stats.norm.pdf(z) ** 2, -40, 40)
    ref = 4 * est.sigma2_hat**2 / ke.pdf(grid) * ik2
    assert np.max(np.abs(est.var_sigma2 - ref) / ref) < 1e-10
    assert np.all(est.sigma2_hat > 0)


def test_bias_variance_formulas():
    s2, f = np.array([2.0]), [np.array([0.5]), None, np.array([-0.3]), np.array([0.2])]
    bm, vm, bs, vs = asymptotic_bias_variance(s2, f)
    assert_allclose(bs, -2.0 * -0.3 / 0.5)
    assert_allclose(vs, 4 * 4.0 / 0.5 * INT_K2)
    assert_allclose(bm, -2.0 * 0.2 / (4 * 0.5))


def test_tail_warning_and_bandwidth(ou_skst_data, ou_skst_pmle):
    y, _ = ou_skst_data
    with pytest.warns(TailWarning):
        estimate_drift_diffusion(y, ou_skst_pmle, [y.min()])
    with pytest.raises(BandwidthError):
        estimate_drift_diffusion(y, ou_skst_pmle, [np.median(y)], h=-1.0)


def test_drift_diffusion_csv(ou_skst_data, ou_skst_pmle, tmp_path):
    y, _ = ou_skst_data
    grid = np.quantile(y, np.linspace(0.05, 0.95, 41))
    est = estimate_drift_diffusion(y, ou_skst_pmle, grid)
    p = tmp_path / "f.csv"
    est.to_csv(p, est.mu_hat, est.sigma2_hat)
    arr = np.loadtxt(p, delimiter=",", skiprows=1)
    assert arr.shape == (41, 5)
