"""Numerical machinery: damped least squares, windowed FFT, likelihood CIs.

The Levenberg-Marquardt solver follows the damped Gauss-Newton scheme with
the gain-ratio update of the damping parameter (initial mu = tau * max of
diag(J^T J), tau = 1e-3; on success mu *= max(1/3, 1 - (2 rho - 1)^3), on
failure mu *= nu with doubling nu).  Box bounds are enforced by clamping
trial steps.  It is deliberately self-contained so the fitting behavior is
fully specified here.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import ConfigError, FitError, GridError


@dataclass
class FitProblem:
    """Weighted least-squares problem min_p sum_i w_i r_i(p)^2.

    ``residuals(p)`` returns the length-m residual vector.  ``jacobian`` is
    optional; central finite differences (relative step 1e-6) are used when
    it is absent.  ``bounds`` is (lower, upper) arrays with +-inf allowed.
    """

    residuals: object
    p0: np.ndarray
    jacobian: object = None
    bounds: tuple = None
    weights: np.ndarray = None
    tol_gradient: float = 1e-8
    tol_step: float = 1e-10
    max_iterations: int = 500

    def __post_init__(self):
        self.p0 = np.asarray(self.p0, dtype=float)
        if self.p0.ndim != 1 or self.p0.size == 0:
            raise ConfigError("p0 must be a non-empty 1-d array")
        if self.bounds is not None:
            lo = np.asarray(self.bounds[0], dtype=float)
            hi = np.asarray(self.bounds[1], dtype=float)
            if lo.shape != self.p0.shape or hi.shape != self.p0.shape:
                raise ConfigError("bounds must match p0")
            if np.any(lo >= hi):
                raise ConfigError("lower bounds must lie below upper bounds")
            if np.any(self.p0 < lo) or np.any(self.p0 > hi):
                raise ConfigError("p0 must respect the bounds")
            self.bounds = (lo, hi)
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if np.any(w < 0.0):
                raise ConfigError("weights must be non-negative")
            self.weights = w

    def clamp(self, p):
        if self.bounds is None:
            return p
        return np.clip(p, self.bounds[0], self.bounds[1])

    def weighted_residuals(self, p):
        r = np.asarray(self.residuals(p), dtype=float)
        if self.weights is not None:
            r = np.sqrt(self.weights) * r
        return r

    def weighted_jacobian(self, p, r=None):
        if self.jacobian is not None:
            j = np.asarray(self.jacobian(p), dtype=float)
        else:
            j = finite_difference_jacobian(self.residuals, p)
        if self.weights is not None:
            j = np.sqrt(self.weights)[:, None] * j
        return j


def finite_difference_jacobian(fn, p, rel_step=1e-6):
    """Central-difference Jacobian of a residual function."""
    p = np.asarray(p, dtype=float)
    f0 = np.asarray(fn(p), dtype=float)
    jac = np.empty((f0.size, p.size))
    for k in range(p.size):
        h = rel_step * max(abs(p[k]), 1.0)
        pp, pm = p.copy(), p.copy()
        pp[k] += h
        pm[k] -= h
        jac[:, k] = (np.asarray(fn(pp), dtype=float)
                     - np.asarray(fn(pm), dtype=float)) / (2.0 * h)
    return jac


@dataclass
class FitOutcome:
    """Solution of one least-squares minimization."""

    params: np.ndarray
    ssr: float
    converged: bool
    n_iterations: int
    message: str
    covariance: np.ndarray = None
    jacobian: np.ndarray = field(default=None, repr=False)
    residuals: np.ndarray = field(default=None, repr=False)
    n_data: int = 0


def levenberg_marquardt(problem):
    """Minimize the problem; returns a :class:`FitOutcome`.

    Convergence when the max-norm gradient falls below ``tol_gradient`` or
    the step below ``tol_step`` (relative); hitting the iteration cap
    returns ``converged=False`` with diagnostics instead of raising.
    """
    p = problem.clamp(problem.p0.copy())
    r = problem.weighted_residuals(p)
    jac = problem.weighted_jacobian(p, r)
    a = jac.T @ jac
    g = jac.T @ r
    ssr = float(r @ r)
    mu = 1e-3 * max(np.max(np.diag(a)), 1e-300)
    nu = 2.0
    message = "iteration limit reached"
    converged = False
    n_iter = 0

    if np.max(np.abs(g)) <= problem.tol_gradient:
        converged, message = True, "gradient below tolerance at start"
    else:
        for n_iter in range(1, problem.max_iterations + 1):
            try:
                h = np.linalg.solve(a + mu * np.eye(p.size), -g)
            except np.linalg.LinAlgError:
                mu *= nu
                nu *= 2.0
                continue
            p_try = problem.clamp(p + h)
            h_eff = p_try - p
            if np.linalg.norm(h_eff) <= problem.tol_step * (
                    np.linalg.norm(p) + problem.tol_step):
                converged, message = True, "step below tolerance"
                break
            r_try = problem.weighted_residuals(p_try)
            ssr_try = float(r_try @ r_try)
            predicted = float(h_eff @ (mu * h_eff - g))
            gain = (ssr - ssr_try) / predicted if predicted > 0.0 else -1.0
            if gain > 0.0:
                p, r, ssr = p_try, r_try, ssr_try
                jac = problem.weighted_jacobian(p, r)
                a = jac.T @ jac
                g = jac.T @ r
                mu *= max(1.0 / 3.0, 1.0 - (2.0 * gain - 1.0) ** 3)
                nu = 2.0
                if np.max(np.abs(g)) <= problem.tol_gradient:
                    converged, message = True, "gradient below tolerance"
                    break
            else:
                mu *= nu
                nu *= 2.0

    m, n = r.size, p.size
    cov = None
    if m > n:
        try:
            s2 = ssr / (m - n)
            cov = s2 * np.linalg.inv(a)
        except np.linalg.LinAlgError:
            cov = None
    return FitOutcome(params=p, ssr=ssr, converged=converged,
                      n_iterations=n_iter, message=message, covariance=cov,
                      jacobian=jac, residuals=r, n_data=m)


@dataclass(frozen=True)
class SpectralDecomposition:
    """One-sided depth spectrum of a real signal on a uniform Q grid."""

    depth_nm: np.ndarray
    spectrum: np.ndarray
    dq: float
    n_raw: int
    window: str
    pad_factor: int


def windowed_fft(q, y, window="hann", pad_factor=8):
    """One-sided FFT against depth z = 2 pi k / (N_pad dQ).

    ``q`` must be uniform (relative tolerance 1e-9); a Hann window tapers
    the data unless ``window=None``; zero padding by ``pad_factor`` refines
    the depth sampling.  Returns a :class:`SpectralDecomposition` of the
    positive-frequency half.
    """
    q = np.asarray(q, dtype=float)
    y = np.asarray(y, dtype=float)
    if q.ndim != 1 or q.size < 2 or y.shape != q.shape:
        raise GridError("need matching 1-d grids with >= 2 points")
    steps = np.diff(q)
    dq = float(np.mean(steps))
    if dq <= 0.0 or np.any(np.abs(steps - dq) > 1e-9 * max(abs(dq), 1.0)):
        raise GridError("Q grid must be uniform for the FFT")
    pad_factor = int(pad_factor)
    if pad_factor < 1:
        raise ConfigError("pad factor must be >= 1")
    if window == "hann":
        w = np.hanning(q.size)
    elif window is None or window == "none":
        w = np.ones(q.size)
    else:
        raise ConfigError("unknown window %r" % (window,))
    n_pad = pad_factor * q.size
    spec = np.fft.rfft(y * w, n=n_pad)
    z = 2.0 * np.pi * np.arange(spec.size) / (n_pad * dq)
    return SpectralDecomposition(depth_nm=z, spectrum=spec, dq=dq,
                                 n_raw=q.size, window=str(window),
                                 pad_factor=pad_factor)


def refine_peak(z, magnitude, k):
    """Quadratic sub-bin refinement around bin ``k``; returns (z*, offset)."""
    if k <= 0 or k >= magnitude.size - 1:
        return float(z[k]), 0.0
    ym, y0, yp = magnitude[k - 1], magnitude[k], magnitude[k + 1]
    denom = ym - 2.0 * y0 + yp
    off = 0.0 if denom == 0.0 else 0.5 * (ym - yp) / denom
    off = float(np.clip(off, -0.5, 0.5))
    dz = z[1] - z[0]
    return float(z[k] + off * dz), off


@dataclass(frozen=True)
class ConfidenceInterval:
    """A 95 % interval with flags for one-sided or open-ended results."""

    low: float
    high: float
    lower_bounded: bool = True
    upper_bounded: bool = True
    method: str = "profile"

    @property
    def upper_bound_only(self):
        return not self.lower_bounded and self.upper_bounded


def _f_threshold(ssr_min, m, n, level):
    dof = m - n
    if dof <= 0:
        raise ConfigError("need more data points than parameters for a CI")
    fq = stats.f.ppf(level, 1, dof)
    return ssr_min * (1.0 + fq / dof)


def _profile_ssr(problem, outcome, index, value):
    """SSR minimized over the other parameters with parameter ``index`` fixed."""
    free = [k for k in range(outcome.params.size) if k != index]
    if not free:
        p = outcome.params.copy()
        p[index] = value
        r = problem.weighted_residuals(p)
        return float(r @ r)

    def reduced(q):
        p = outcome.params.copy()
        p[index] = value
        p[free] = q
        return problem.residuals(p)

    bounds = None
    if problem.bounds is not None:
        bounds = (problem.bounds[0][free], problem.bounds[1][free])
    sub = FitProblem(residuals=reduced, p0=outcome.params[free].copy(),
                     bounds=bounds, weights=problem.weights,
                     tol_gradient=problem.tol_gradient,
                     tol_step=problem.tol_step,
                     max_iterations=problem.max_iterations)
    return levenberg_marquardt(sub).ssr


def profile_likelihood_ci(problem, outcome, index, level=0.95):
    """Profile-likelihood interval for one parameter via the F threshold.

    The parameter is marched away from its estimate until the re-minimized
    SSR crosses ``ssr_min (1 + F(1, m-n, level)/(m-n))``, then the crossing
    is bisected.  A side whose SSR never crosses, because a parameter bound
    or the search range stops it first, is flagged open: the data do not
    constrain that side (an upper-bound-only interval when the low side is
    the open one).
    """
    if outcome.covariance is not None:
        scale = float(np.sqrt(max(outcome.covariance[index, index], 0.0)))
    else:
        scale = 0.0
    p_hat = float(outcome.params[index])
    if scale <= 0.0 or not np.isfinite(scale):
        scale = 0.1 * abs(p_hat) + 1e-3
    threshold = _f_threshold(outcome.ssr, outcome.n_data, outcome.params.size,
                             level)

    def search(direction):
        lo_bound, hi_bound = -np.inf, np.inf
        if problem.bounds is not None:
            lo_bound = float(problem.bounds[0][index])
            hi_bound = float(problem.bounds[1][index])
        prev = p_hat
        step = scale
        for _ in range(60):
            trial = prev + direction * step
            hit_bound = False
            if direction < 0 and trial <= lo_bound:
                trial, hit_bound = lo_bound, True
            if direction > 0 and trial >= hi_bound:
                trial, hit_bound = hi_bound, True
            ssr = _profile_ssr(problem, outcome, index, trial)
            if ssr >= threshold:
                # bisect the crossing between prev and trial
                a, b = prev, trial
                for _ in range(50):
                    mid = 0.5 * (a + b)
                    if _profile_ssr(problem, outcome, index, mid) >= threshold:
                        b = mid
                    else:
                        a = mid
                    if abs(b - a) <= 1e-6 * (abs(a) + scale):
                        break
                return 0.5 * (a + b), True, False
            if hit_bound:
                return trial, False, True
            prev = trial
            step *= 1.6
        return prev, False, False

    low, low_crossed, low_at_bound = search(-1.0)
    high, high_crossed, high_at_bound = search(+1.0)
    if not (low_crossed or low_at_bound or high_crossed or high_at_bound):
        raise FitError("profile likelihood found no interval edge")
    return ConfidenceInterval(low=float(low), high=float(high),
                              lower_bounded=bool(low_crossed),
                              upper_bounded=bool(high_crossed),
                              method="profile")


def covariance_ci(outcome, index, level=0.95):
    """Symmetric Wald interval from the covariance (Student t quantile)."""
    if outcome.covariance is None:
        raise FitError("no covariance available for a Wald interval")
    dof = outcome.n_data - outcome.params.size
    if dof <= 0:
        raise ConfigError("need more data points than parameters for a CI")
    tq = stats.t.ppf(0.5 * (1.0 + level), dof)
    sigma = float(np.sqrt(max(outcome.covariance[index, index], 0.0)))
    p_hat = float(outcome.params[index])
    return ConfidenceInterval(low=p_hat - tq * sigma, high=p_hat + tq * sigma,
                              method="covariance")
