import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import stats

from deltaxrr import numfit
from deltaxrr.errors import ConfigError, FitError, GridError


def linear_problem(noise=0.0, seed=5, n=40):
    rng = np.random.default_rng(seed)
    x = np.linspace(0.0, 1.0, n)
    y = 1.2 + 3.4 * x + noise * rng.standard_normal(n)
    res = lambda p: p[0] + p[1] * x - y
    jac = lambda p: np.column_stack([np.ones_like(x), x])
    return x, y, numfit.FitProblem(residuals=res, p0=np.array([0.0, 1.0]),
                                   jacobian=jac)


def test_problem_validation():
    with pytest.raises(ConfigError):
        numfit.FitProblem(residuals=lambda p: p, p0=np.array([]))
    with pytest.raises(ConfigError):
        numfit.FitProblem(residuals=lambda p: p, p0=np.array([1.0]),
                          bounds=(np.zeros(2), np.ones(2)))
    with pytest.raises(ConfigError):
        numfit.FitProblem(residuals=lambda p: p, p0=np.array([1.0]),
                          bounds=(np.array([2.0]), np.array([1.0])))
    with pytest.raises(ConfigError):
        numfit.FitProblem(residuals=lambda p: p, p0=np.array([5.0]),
                          bounds=(np.array([0.0]), np.array([1.0])))
    with pytest.raises(ConfigError):
        numfit.FitProblem(residuals=lambda p: p, p0=np.array([1.0]),
                          weights=np.array([-1.0]))


def test_finite_difference_jacobian():
    x = np.linspace(0.0, 2.0, 25)
    fn = lambda p: p[0] * np.exp(-p[1] * x)
    p = np.array([2.0, 1.3])
    jac_fd = numfit.finite_difference_jacobian(fn, p)
    jac_an = np.column_stack([np.exp(-p[1] * x),
                              -p[0] * x * np.exp(-p[1] * x)])
    assert_allclose(jac_fd, jac_an, rtol=1e-6, atol=1e-10)


def test_lm_recovers_exponential():
    x = np.linspace(0.0, 3.0, 50)
    y = 2.5 * np.exp(-0.8 * x)
    prob = numfit.FitProblem(residuals=lambda p: p[0] * np.exp(-p[1] * x) - y,
                             p0=np.array([1.0, 0.3]))
    out = numfit.levenberg_marquardt(prob)
    assert out.converged
    assert_allclose(out.params, [2.5, 0.8], rtol=1e-6)
    assert out.ssr < 1e-16


def test_lm_linear_covariance_matches_closed_form():
    x, y, prob = linear_problem(noise=0.05)
    out = numfit.levenberg_marquardt(prob)
    assert out.converged
    design = np.column_stack([np.ones_like(x), x])
    beta = np.linalg.solve(design.T @ design, design.T @ y)
    assert_allclose(out.params, beta, rtol=1e-8)
    s2 = out.ssr / (x.size - 2)
    cov = s2 * np.linalg.inv(design.T @ design)
    assert_allclose(out.covariance, cov, rtol=1e-8)


def test_lm_respects_bounds():
    y = np.array([-1.0, -1.0])
    prob = numfit.FitProblem(residuals=lambda p: p[0] - y,
                             p0=np.array([0.5]),
                             bounds=(np.array([0.0]), np.array([10.0])))
    out = numfit.levenberg_marquardt(prob)
    assert out.converged
    assert out.params[0] == 0.0


def test_lm_weights_shift_the_optimum():
    y = np.array([0.0, 1.0])
    w = np.array([1.0, 3.0])
    prob = numfit.FitProblem(residuals=lambda p: p[0] - y,
                             p0=np.array([0.0]), weights=w)
    out = numfit.levenberg_marquardt(prob)
    assert_allclose(out.params[0], np.sum(w * y) / np.sum(w), rtol=1e-8)


def test_lm_exactly_determined_has_no_covariance():
    y = np.array([1.0, 2.0])
    prob = numfit.FitProblem(residuals=lambda p: p - y,
                             p0=np.array([0.0, 0.0]))
    out = numfit.levenberg_marquardt(prob)
    assert out.covariance is None
    with pytest.raises(FitError):
        numfit.covariance_ci(out, 0)
    with pytest.raises(ConfigError):
        numfit.profile_likelihood_ci(prob, out, 0)


def test_windowed_fft_validation():
    q = np.linspace(1.0, 2.0, 32)
    y = np.cos(q)
    bad = q.copy()
    bad[3] += 1e-3
    with pytest.raises(GridError):
        numfit.windowed_fft(bad, y)
    with pytest.raises(GridError):
        numfit.windowed_fft(q, y[:-1])
    with pytest.raises(ConfigError):
        numfit.windowed_fft(q, y, pad_factor=0)
    with pytest.raises(ConfigError):
        numfit.windowed_fft(q, y, window="flattop")


def test_windowed_fft_parseval():
    rng = np.random.default_rng(2)
    q = np.linspace(1.0, 3.0, 64)
    y = rng.standard_normal(64)
    for window, w in [("hann", np.hanning(64)), (None, np.ones(64))]:
        dec = numfit.windowed_fft(q, y, window=window, pad_factor=8)
        n_pad = dec.pad_factor * dec.n_raw
        assert n_pad % 2 == 0
        s = np.abs(dec.spectrum) ** 2
        total = (s[0] + 2.0 * np.sum(s[1:-1]) + s[-1]) / n_pad
        assert_allclose(total, np.sum((w * y) ** 2), rtol=1e-10)


def test_fft_round_trip():
    rng = np.random.default_rng(9)
    y = rng.standard_normal(256)
    back = np.fft.irfft(np.fft.rfft(y), 256)
    assert np.max(np.abs(back - y)) < 1e-12


def test_windowed_fft_locates_cosine():
    q = np.linspace(1.5, 5.0, 800)
    y = np.cos(18.0 * q)
    dec = numfit.windowed_fft(q, y)
    mag = np.abs(dec.spectrum)
    lo = dec.depth_nm > 5.0
    k = int(np.argmax(np.where(lo, mag, 0.0)))
    z_star, _ = numfit.refine_peak(dec.depth_nm, mag, k)
    assert abs(z_star - 18.0) < 0.05


def test_refine_peak_parabola():
    z = np.arange(5.0)
    mag = 1.0 - 0.1 * (z - 2.3) ** 2
    z_star, off = numfit.refine_peak(z, mag, 2)
    assert_allclose(z_star, 2.3, rtol=1e-12)
    assert_allclose(off, 0.3, rtol=1e-12)
    # edge bins cannot be refined
    assert numfit.refine_peak(z, mag, 0) == (0.0, 0.0)
    # offsets are clipped to half a bin
    mag2 = np.array([1.0, 0.0, 1.0, 1.5, 1.0])
    _, off2 = numfit.refine_peak(z, mag2, 2)
    assert off2 == 0.5


def test_interval_flags():
    ci = numfit.ConfidenceInterval(low=0.0, high=1.0, lower_bounded=False)
    assert ci.upper_bound_only
    ci2 = numfit.ConfidenceInterval(low=0.0, high=1.0)
    assert not ci2.upper_bound_only
    ci3 = numfit.ConfidenceInterval(low=0.0, high=1.0, lower_bounded=False,
                                    upper_bounded=False)
    assert not ci3.upper_bound_only


def test_profile_matches_wald_on_linear_model():
    x, y, prob = linear_problem(noise=0.05)
    out = numfit.levenberg_marquardt(prob)
    for k in (0, 1):
        wald = numfit.covariance_ci(out, k)
        prof = numfit.profile_likelihood_ci(prob, out, k)
        # quadratic SSR makes the two intervals agree exactly
        assert_allclose([prof.low, prof.high], [wald.low, wald.high],
                        rtol=1e-4)
        assert prof.lower_bounded and prof.upper_bounded


def test_profile_open_side_at_a_bound():
    y = np.array([0.001, 0.0, -0.001])
    prob = numfit.FitProblem(residuals=lambda p: p[0] - y,
                             p0=np.array([0.5]),
                             bounds=(np.array([0.0]), np.array([10.0])))
    out = numfit.levenberg_marquardt(prob)
    assert abs(out.params[0]) < 1e-9
    ci = numfit.profile_likelihood_ci(prob, out, 0)
    assert ci.low == 0.0
    assert not ci.lower_bounded
    assert ci.upper_bounded
    assert ci.upper_bound_only
    f = stats.f.ppf(0.95, 1, 2)
    expect_high = np.sqrt(out.ssr * f / (2.0 * 3.0))
    assert_allclose(ci.high, expect_high, rtol=1e-3)
