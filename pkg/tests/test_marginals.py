import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy import stats

from diffcopula.errors import BandwidthError, DegenerateSampleError, ParamError
from diffcopula.marginals import (
    INT_DK2,
    INT_K2,
    EmpiricalCdf,
    KernelEstimate,
    Skst,
    SkstParams,
    empirical_cdf,
    fit_skst,
    kernel_cdf_pdf_derivs,
    silverman_bandwidth,
    skst_cdf,
    skst_log_derivs,
    skst_logpdf,
    skst_pdf,
    skst_quantile,
)

from .oracles import integrate_1d, standardized_t_pdf

PHI = (0.0835, 0.0358, 0.5193, 25.3708)

phis = st.tuples(st.floats(-1, 1), st.floats(0.1, 3), st.floats(-0.9, 0.9), st.floats(2.5, 40))


# ------------------------------------------------------------------- SKST
def test_skst_constants():
    # [DERIVED] constants from their definitions
    p = SkstParams(*PHI)
    t = p.tau
    q = math.gamma((t + 1) / 2) / math.sqrt(math.pi * (t - 2)) / math.gamma(t / 2)
    a = 4 * p.lam * q * (t - 2) / (t - 1)
    assert_allclose([p.q, p.a, p.b], [q, a, math.sqrt(1 + 3 * p.lam**2 - a**2)], rtol=1e-12)


def test_skst_symmetric_value_at_zero():
    # [DERIVED] t_5 density at 0 times sqrt(5/3)
    assert_allclose(skst_pdf(0.0, (0, 1, 0, 5)), stats.t.pdf(0, 5) * math.sqrt(5 / 3), atol=1e-5)
    assert_allclose(skst_pdf(0.0, (0, 1, 0, 5)), 0.49007, atol=5e-6)


def test_skst_symmetry_lambda_zero():
    p = (0.3, 1.4, 0.0, 7.0)
    assert_allclose(skst_pdf(0.3 + 0.7, p), skst_pdf(0.3 - 0.7, p), rtol=1e-15)


@given(st.floats(-1, 1), st.floats(0.1, 3), st.floats(2.5, 40))
def test_skst_lambda_zero_is_standardized_t(m, v, tau):
    y = m + v * np.linspace(-4, 4, 17)
    assert np.max(np.abs(skst_pdf(y, (m, v, 0.0, tau)) - standardized_t_pdf(y, m, v, tau))) < 1e-12


def test_skst_normalisation_and_moments_calibrated():
    # [PAPER] calibrated phi; quadrature of pdf, mean and variance
    m, v = PHI[0], PHI[1]
    p = SkstParams(*PHI)
    brk = m - p.a * v / p.b
    lo, hi = m - 60 * v, m + 60 * v
    f = lambda y: float(skst_pdf(y, PHI))  # noqa: E731
    tot = integrate_1d(f, lo, hi, points=[brk])
    mean = integrate_1d(lambda y: y * f(y), lo, hi, points=[brk])
    var = integrate_1d(lambda y: (y - m) ** 2 * f(y), lo, hi, points=[brk])
    assert abs(tot - 1) < 1e-8
    assert abs(mean - m) < 1e-6
    assert abs(var - v**2) < 1e-6


def test_skst_continuous_at_breakpoint():
    p = SkstParams(*PHI)
    brk = p.m - p.a * p.v / p.b
    eps = 1e-10
    assert_allclose(skst_pdf(brk - eps, PHI), skst_pdf(brk + eps, PHI), rtol=1e-7)


def test_skst_param_errors():
    for bad in [(0, -1, 0, 5), (0, 1, 1.0, 5), (0, 1, 0, 2.0)]:
        with pytest.raises(ParamError):
            skst_pdf(0.0, bad)


@given(st.floats(-1, 1), st.floats(0.1, 3), st.floats(2.5, 40))
def test_skst_symmetric_median(m, v, tau):
    assert abs(float(skst_cdf(m, (m, v, 0.0, tau))) - 0.5) < 1e-14


@given(phis, st.floats(1e-6, 1 - 1e-6))
def test_skst_quantile_round_trip(phi, u):
    assert abs(float(skst_cdf(skst_quantile(u, phi), phi)) - u) < 1e-10


def test_skst_round_trip_03():
    assert abs(float(skst_cdf(skst_quantile(0.3, PHI), PHI)) - 0.3) < 1e-10


def test_skst_cdf_matches_quadrature():
    # [DERIVED] five probes against quadrature of the pdf
    p = SkstParams(*PHI)
    brk = p.m - p.a * p.v / p.b
    lo = p.m - 80 * p.v
    for y in p.m + p.v * np.array([-2.5, -1.0, 0.0, 0.7, 2.0]):
        pts = [brk] if lo < brk < y else None
        ref = integrate_1d(lambda z: float(skst_pdf(z, PHI)), lo, y, points=pts)
        assert abs(float(skst_cdf(y, PHI)) - ref) < 1e-7


def test_skst_log_derivs_finite_differences():
    y = np.array([0.0, 0.05, 0.12])
    e = 1e-6
    d = skst_log_derivs(y, PHI)
    dp, dm = skst_log_derivs(y + e, PHI), skst_log_derivs(y - e, PHI)
    fd = (skst_logpdf(y + e, PHI) - skst_logpdf(y - e, PHI)) / (2 * e)
    assert_allclose(d[0], fd, rtol=1e-6)
    for k in range(2):
        assert_allclose(d[k + 1], (dp[k] - dm[k]) / (2 * e), rtol=1e-5)


def test_skst_pdf_derivs_consistency():
    d = Skst(PHI)
    y = np.array([0.02, 0.09])
    f = d.pdf_derivs(y, 3)
    e = 1e-6
    fp, fm = d.pdf_derivs(y + e, 3), d.pdf_derivs(y - e, 3)
    for k in range(3):
        assert_allclose((fp[k] - fm[k]) / (2 * e), f[k + 1], rtol=1e-5)


def _mean_abs_err(n, reps, seed):
    d = Skst(PHI)
    rng = np.random.default_rng(seed)
    errs = [np.abs(np.array(fit_skst(d.rvs(n, rng)).as_tuple()) - PHI) for _ in range(reps)]
    return np.mean(errs, axis=0)


def test_skst_rvs_and_fit_consistency():
    # [PAPER] calibrated phi; phi_hat moves towards phi as n grows
    d = Skst(PHI)
    rng = np.random.default_rng(3)
    big = d.rvs(40000, rng)
    assert abs(np.mean(big) - PHI[0]) < 4 * PHI[1] / math.sqrt(big.size)
    ks = stats.kstest(big, lambda z: skst_cdf(z, PHI))
    assert ks.pvalue > 0.01
    # averaged absolute errors of all four parameters shrink from n=500 to n=8000
    assert np.all(_mean_abs_err(8000, 4, 11) < _mean_abs_err(500, 4, 12))


# ------------------------------------------------------------ empirical cdf
def test_ecdf_below_min_is_floor():
    data = np.array([1.0, 2.0, 3.0, 4.0])
    assert empirical_cdf(data, 0.0) == 1 / 8


def test_ecdf_direct_count():
    assert empirical_cdf([1.0, 2.0, 3.0, 4.0], 2.5) == 0.5


def test_ecdf_max_is_clamped():
    # [DERIVED] literal formula would give 1
    assert empirical_cdf([1.0, 2.0, 3.0, 4.0], 4.0) == 1 - 1 / 8


@given(st.lists(st.floats(-100, 100), min_size=2, max_size=40), st.floats(-120, 120))
def test_ecdf_rank_invariance(data, y):
    g = lambda z: np.asarray(z) ** 3 + np.asarray(z)  # noqa: E731
    assert empirical_cdf(data, y) == empirical_cdf(g(np.asarray(data)), g(y))


@given(st.lists(st.floats(-100, 100), min_size=1, max_size=40))
def test_ecdf_bounds_and_monotone(data):
    F = EmpiricalCdf(data)
    grid = np.linspace(-101, 101, 50)
    v = F(grid)
    n = len(data)
    assert np.all(np.diff(v) >= 0)
    assert v.min() >= 1 / (2 * n) and v.max() <= 1 - 1 / (2 * n)


# ------------------------------------------------------------------ kernel
def test_kernel_single_point_pdf():
    # [DERIVED] standard normal pdf
    assert_allclose(kernel_cdf_pdf_derivs([0.0], 0.0, 1.0, 0), 0.3989423, atol=1e-7)


def test_kernel_derivative_consistency(rng):
    data = rng.standard_normal(200)
    ke = KernelEstimate(data, 0.4)
    y = np.array([-1.0, 0.1, 0.9])
    e = 1e-5
    d = ke.pdf_derivs(y, 3)
    assert np.max(np.abs((ke.cdf(y + e) - ke.cdf(y - e)) / (2 * e) - d[0])) < 1e-6 / ke.h
    for k in range(3):
        fd = (ke.pdf_derivs(y + e, 3)[k] - ke.pdf_derivs(y - e, 3)[k]) / (2 * e)
        assert_allclose(fd, d[k + 1], rtol=1e-5, atol=1e-8)


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=30), st.floats(0.05, 2))
def test_kernel_pdf_integrates_to_one(data, h):
    ke = KernelEstimate(data, h)
    lo, hi = min(data) - 12 * h, max(data) + 12 * h
    tot = integrate_1d(lambda z: float(ke.pdf(z)), lo, hi, points=sorted(set(data))[:50])
    assert abs(tot - 1) < 1e-8


def test_kernel_cdf_limits_and_monotone(rng):
    ke = KernelEstimate(rng.standard_normal(100), 0.3)
    v = ke.cdf(np.linspace(-10, 10, 200))
    assert np.all(np.diff(v) >= 0) and v[0] < 1e-12 and v[-1] > 1 - 1e-12
    assert np.all(ke.pdf(np.linspace(-10, 10, 200)) >= 0)


def test_kernel_cdf_to_ecdf_small_h(rng):
    data = np.sort(rng.standard_normal(300))
    h = 1e-6 * (data[-1] - data[0])
    probes = 0.5 * (data[1:] + data[:-1])
    ke = KernelEstimate(data, h)
    raw = EmpiricalCdf(data, clamp=False)(probes)
    assert np.max(np.abs(ke.cdf(probes) - raw)) < 1e-3


def test_kernel_constants():
    # [DERIVED] kernel moments by quadrature
    phi = stats.norm.pdf
    assert_allclose(integrate_1d(phi, -40, 40), 1, atol=1e-12)
    assert abs(integrate_1d(lambda z: z * phi(z), -40, 40)) < 1e-12
    assert_allclose(integrate_1d(lambda z: z * z * phi(z), -40, 40), 1.0, rtol=1e-10)
    assert_allclose(integrate_1d(lambda z: phi(z) ** 2, -40, 40), INT_K2, rtol=1e-10)
    assert_allclose(integrate_1d(lambda z: (z * phi(z)) ** 2, -40, 40), INT_DK2, rtol=1e-10)


def test_kernel_quantile_round_trip(rng):
    ke = KernelEstimate(rng.standard_normal(50), 0.5)
    u = np.array([0.01, 0.5, 0.97])
    assert_allclose(ke.cdf(ke.quantile(u)), u, atol=1e-10)


def test_bandwidth_error():
    with pytest.raises(BandwidthError):
        KernelEstimate([1.0, 2.0], 0.0)
    with pytest.raises(BandwidthError):
        kernel_cdf_pdf_derivs([1.0], 0.0, -1.0, 0)


# ---------------------------------------------------------------- Silverman
def test_silverman_formula(rng):
    y = rng.standard_normal(500)
    assert_allclose(silverman_bandwidth(y), 1.06 * np.std(y, ddof=1) * 500 ** -0.2, rtol=1e-14)


def test_silverman_factor_scaling(rng):
    # [PAPER] 1.5 h_S = 2.0730 for h_S = 1.3820
    y = rng.standard_normal(400)
    y = y * 1.3820 / silverman_bandwidth(y)
    assert_allclose(silverman_bandwidth(y), 1.3820, rtol=1e-12)
    assert_allclose(silverman_bandwidth(y, 1.5), 2.0730, atol=1e-12)


def test_silverman_rate():
    y = np.tile([0.0, 1.0], 100)
    y2 = np.tile([0.0, 1.0], 200)
    # same population sd; ratio of bandwidths from the n rate and the ddof correction
    ratio = silverman_bandwidth(y2) / silverman_bandwidth(y)
    sd_ratio = np.std(y2, ddof=1) / np.std(y, ddof=1)
    assert_allclose(ratio, 2 ** -0.2 * sd_ratio, rtol=1e-14)


def test_silverman_degenerate():
    with pytest.raises(DegenerateSampleError):
        silverman_bandwidth([2.0, 2.0, 2.0])
    with pytest.raises(DegenerateSampleError):
        silverman_bandwidth([2.0])


def test_skst_huge_tau_constants():
    # [DERIVED] q tends to 1/sqrt(2 pi) as tau grows; b stays real
    p = SkstParams(0.0, 1.0, -0.12, 1.9e15)
    assert abs(p.q - 1 / math.sqrt(2 * math.pi)) < 1e-12
    assert p.b > 0
