"""Inversion: recover buried-sheet depth, thickness, and profile from R(Q).

Pipeline for a single energy:

1. :func:`rescale` divides out the kinematic prefactor, y = Q^2 R / (4 pi)^2,
   on a uniform grid inside the analysis window.
2. :func:`fft_depth_phase` locates the sheet as the dominant high-depth peak
   of the windowed depth spectrum and reads off depth and phase.
3. :func:`split_frequencies` separates the slowly varying host envelope
   F_LF^2 from the oscillatory interference term I(Q).
4. :func:`fit_envelope` fits I / sqrt(F_LF^2) with
   A exp(-(Q sigma)^2 / 2) cos(Q d - phi), giving depth, Gaussian width
   (FWHM = 2 sqrt(2 ln 2) sigma), amplitude A = 2 r0 N2D |df|, and phase.
5. :func:`reconstruct_profile` band-limits I / (2 sqrt(F_LF^2)) back to
   depth space for a model-free profile.

The two-energy path replaces step 3's interference with the rescaled
difference of curves straddling the dopant absorption edge
(:func:`resonant_difference`), which cancels every non-resonant term.

:func:`thickness_from_resonance` inverts a fixed-angle energy scan across
the edge: the resonant contrast ratio falls monotonically with sheet
thickness (thinner sheet = denser dopant = stronger resonance), so a
simulated ratio-versus-thickness curve can be interpolated back through the
measured ratio.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import (
    ConfigError,
    CoverageError,
    CutoffError,
    EdgeSideError,
    FitError,
    NoLayerError,
    ResonanceBandError,
    WindowError,
)
from . import forward, numfit, xsf
from .model import DeltaLayerSpec
from .numfit import ConfidenceInterval

# reference energy of the As L3 absorption edge used for side checks, eV
AS_L3_EDGE_EV = 1323.6

DEFAULT_WINDOW = (1.5, 5.0)

# energy windows of the resonant contrast ratio, eV
CONTRAST_BASE_WINDOW = (1312.0, 1322.0)
CONTRAST_ABOVE_WINDOW = (1330.0, 1340.0)
CONTRAST_SPAN_WINDOW = (1320.0, 1340.0)

_FWHM = 2.0 * np.sqrt(2.0 * np.log(2.0))


@dataclass(frozen=True)
class RescaledCurve:
    """y = Q^2 R / (4 pi)^2 on a uniform wavevector grid inside the window.

    When ``qc_nm > 0`` the abscissa ``q`` is the internal wavevector
    sqrt(Q^2 - Q_c^2) of the host: below-surface interference accumulates
    phase with the refracted wave, so analyzing against the internal
    wavevector removes a depth- and phase-biasing chirp.  ``window`` is
    always quoted in vacuum Q.
    """

    q: np.ndarray
    y: np.ndarray
    energy_ev: float
    window: tuple
    qc_nm: float = 0.0

    @property
    def dq(self):
        return float(self.q[1] - self.q[0])


@dataclass(frozen=True)
class DepthDetection:
    """Dominant buried-interface peak of the depth spectrum."""

    depth_nm: float
    phase_rad: float
    peak_magnitude: float
    floor_magnitude: float
    prominence: float
    spectrum: numfit.SpectralDecomposition = field(repr=False, default=None)


@dataclass(frozen=True)
class FrequencySplit:
    """Low-frequency host envelope and high-frequency interference term."""

    q: np.ndarray
    low: np.ndarray        # F_LF^2, strictly positive
    interference: np.ndarray
    cutoff_nm: float


@dataclass(frozen=True)
class ExtractionResult:
    """Sheet parameters recovered from one interference signal."""

    depth_nm: float
    depth_ci: ConfidenceInterval
    rms_width_nm: float
    fwhm_nm: float
    fwhm_ci: ConfidenceInterval
    amplitude: float
    amplitude_ci: ConfidenceInterval
    phase_rad: float
    method: str
    outcome: numfit.FitOutcome = field(repr=False, default=None)


@dataclass(frozen=True)
class ReconstructedProfile:
    """Band-limited contrast profile; peak located on the magnitude."""

    z_nm: np.ndarray
    values: np.ndarray
    magnitude: np.ndarray
    peak_nm: float
    resolution_nm: float


def _wrap_angle(a):
    return float(np.angle(np.exp(1j * a)))


def rescale(curve, window=None, n_points=None, qc_nm=0.0):
    """Resample R(Q) into the analysis window and divide out (4 pi)^2 / Q^2.

    The window must lie inside the measured Q range and contain at least 64
    raw points; the default grid doubles the raw point count.  A positive
    ``qc_nm`` re-grids the result onto the uniform internal wavevector
    sqrt(Q^2 - Q_c^2); the window must then start above Q_c.
    """
    if window is None:
        window = (DEFAULT_WINDOW[0], float(curve.q[-1]))
    q_lo, q_hi = float(window[0]), float(window[1])
    if not q_lo < q_hi:
        raise WindowError("window must satisfy q_lo < q_hi")
    if q_lo < curve.q[0] - 1e-12 or q_hi > curve.q[-1] + 1e-12:
        raise WindowError(
            "window [%g, %g] outside measured range [%g, %g]"
            % (q_lo, q_hi, curve.q[0], curve.q[-1]))
    qc_nm = float(qc_nm)
    if qc_nm < 0.0:
        raise ConfigError("critical wavevector must be non-negative")
    if qc_nm > 0.0 and q_lo <= qc_nm:
        raise WindowError(
            "window start %g must exceed the critical wavevector %g"
            % (q_lo, qc_nm))
    sel = (curve.q >= q_lo) & (curve.q <= q_hi)
    in_window = int(np.sum(sel))
    if in_window < 64:
        raise ConfigError(
            "window holds %d raw points; need at least 64" % in_window)
    if n_points is None:
        n_points = 2 * in_window
    n_points = int(n_points)
    if n_points < 64:
        raise ConfigError("resampled grid needs at least 64 points")
    q_raw = curve.q[sel]
    y_raw = q_raw * q_raw * curve.r[sel] / (4.0 * np.pi) ** 2
    x_raw = np.sqrt(q_raw * q_raw - qc_nm * qc_nm)
    x = np.linspace(x_raw[0], x_raw[-1], n_points)
    y = np.interp(x, x_raw, y_raw)
    return RescaledCurve(q=x, y=y, energy_ev=float(curve.energy_ev),
                         window=(q_lo, q_hi), qc_nm=qc_nm)


def fft_depth_phase(rescaled, min_depth_nm=None):
    """Depth and phase of the strongest buried-layer oscillation.

    The rescaled signal is quadratically detrended, Hann windowed, and
    transformed; the search runs above four spectral bins (so at least
    three to four oscillation periods must fit the window).  The peak must
    rise at least a factor three above both the median spectral magnitude
    of the search range and its own local valleys; otherwise
    :class:`NoLayerError` reports the diagnostics.
    """
    q, y = rescaled.q, rescaled.y
    span = q[-1] - q[0]
    trend = np.polynomial.polynomial.polyval(
        q - q[0], np.polynomial.polynomial.polyfit(q - q[0], y, 2))
    spec = numfit.windowed_fft(q, y - trend, window="hann", pad_factor=8)
    z, mag = spec.depth_nm, np.abs(spec.spectrum)

    z_floor = 4.0 * 2.0 * np.pi / span
    if min_depth_nm is not None:
        z_floor = max(z_floor, float(min_depth_nm))
    region = z >= z_floor
    if not np.any(region):
        raise CoverageError("window too narrow to resolve any buried layer")
    idx = np.flatnonzero(region)
    k = idx[int(np.argmax(mag[idx]))]
    peak = float(mag[k])
    floor = float(np.median(mag[idx]))

    # local prominence guards against the smooth host envelope's leakage,
    # which decays monotonically and has no deep valleys around its maxima
    half_width = 2 * spec.pad_factor
    lo = max(idx[0], k - half_width)
    hi = min(mag.size - 1, k + half_width)
    valley = max(float(np.min(mag[lo:k + 1])), float(np.min(mag[k:hi + 1])))
    prominence = peak / valley if valley > 0.0 else np.inf

    if peak < 3.0 * floor or prominence < 3.0:
        raise NoLayerError(
            "no buried-layer peak above the spectral floor",
            diagnostics={"peak": peak, "floor": floor,
                         "prominence": prominence,
                         "search_from_nm": float(z_floor)})

    depth, off = numfit.refine_peak(z, mag, k)
    # with the Hann window centered on sample c, the spectral phase at the
    # refined peak is  Q_lo d - psi + c (2 pi off / N_pad)
    c = 0.5 * (spec.n_raw - 1)
    n_pad = spec.pad_factor * spec.n_raw
    psi = q[0] * depth - float(np.angle(spec.spectrum[k])) \
        + c * 2.0 * np.pi * off / n_pad
    return DepthDetection(depth_nm=depth, phase_rad=_wrap_angle(psi),
                          peak_magnitude=peak, floor_magnitude=floor,
                          prominence=float(prominence), spectrum=spec)


def _burg_coefficients(x, order):
    """Fit AR coefficients [1, a1..am] by Burg's forward-backward recursion."""
    n = x.size
    ak = np.zeros(order + 1)
    ak[0] = 1.0
    f = x.astype(float).copy()
    b = f.copy()
    dk = 2.0 * np.dot(f, f) - f[0] ** 2 - f[-1] ** 2
    for k in range(order):
        if dk <= 0.0:
            break
        ff = f[k + 1:]
        bb = b[k:n - 1]
        mu = -2.0 * np.dot(ff, bb) / dk
        ak[:k + 2] = ak[:k + 2] + mu * ak[:k + 2][::-1]
        ft = ff + mu * bb
        bt = bb + mu * ff
        f[k + 1:] = ft
        b[k:n - 1] = bt
        dk = (1.0 - mu * mu) * dk - f[k + 1] ** 2 - b[n - 2 - k] ** 2
    # reflect any pole outside the unit circle back inside so long
    # forecasts stay bounded
    roots = np.roots(ak)
    bad = np.abs(roots) > 1.0
    if np.any(bad):
        roots[bad] = roots[bad] / np.abs(roots[bad]) ** 2
        ak = np.real(np.poly(roots))
    return ak


def _ar_forecast(x, n_steps, order):
    """Continue x beyond its last sample by linear prediction."""
    ak = _burg_coefficients(x, order)
    a = -ak[1:][::-1]
    m = a.size
    buf = np.concatenate([x[-m:], np.empty(n_steps)])
    for i in range(n_steps):
        buf[m + i] = np.dot(a, buf[i:m + i])
    return buf[m:]


def _extend_signal(y, n_ext, order=8):
    """Extend y by n_ext samples on each side.

    An autoregressive forecast continues an oscillatory signal without
    the curvature break a reflected copy would have; point reflection is
    the fallback when the signal is too short to fit the model.
    """
    m = min(order, y.size // 4)
    if m < 2:
        return (2.0 * y[0] - y[1:n_ext + 1][::-1],
                2.0 * y[-1] - y[-n_ext - 1:-1][::-1])
    trail = _ar_forecast(y, n_ext, m)
    lead = _ar_forecast(y[::-1], n_ext, m)[::-1]
    return lead, trail


def split_frequencies(rescaled, cutoff_nm, depth_hint_nm=None,
                      require_positive_low=True):
    """Partition y into host envelope F_LF^2 and interference term I.

    The split is a brick-wall depth filter at ``cutoff_nm`` softened by a
    10 % raised-cosine taper, applied on a forecast-extended copy of the
    signal.  The cutoff must stay below the (detected or hinted) layer
    depth.  ``require_positive_low=False`` skips the positivity check for
    signals (such as two-energy differences) that carry no host baseline.
    """
    cutoff_nm = float(cutoff_nm)
    if cutoff_nm <= 0.0:
        raise CutoffError("cutoff must be positive")
    depth = depth_hint_nm
    if depth is None:
        try:
            depth = fft_depth_phase(rescaled).depth_nm
        except NoLayerError:
            depth = None
    if depth is not None and cutoff_nm >= depth:
        raise CutoffError(
            "cutoff %.3g nm must lie below the layer depth %.3g nm"
            % (cutoff_nm, depth))

    y = rescaled.y
    n = y.size
    # subtract a smooth inverse-power baseline first; the host term decays
    # like these, and removing the bulk of it keeps its spectral tail from
    # leaking through the taper band into the interference estimate
    powers = np.column_stack([rescaled.q ** (-k) for k in range(5)])
    coef, *_ = np.linalg.lstsq(powers, y, rcond=None)
    base = powers @ coef
    y = y - base
    left, right = _extend_signal(y, n - 1)
    ext = np.concatenate([left, y, right])
    spec = np.fft.rfft(ext)
    z = 2.0 * np.pi * np.arange(spec.size) / (ext.size * rescaled.dq)
    z_lo, z_hi = cutoff_nm * 0.95, cutoff_nm * 1.05
    mask = np.ones_like(z)
    taper = (z > z_lo) & (z < z_hi)
    mask[z >= z_hi] = 0.0
    mask[taper] = 0.5 * (1.0 + np.cos(np.pi * (z[taper] - z_lo) / (z_hi - z_lo)))
    low = base + np.fft.irfft(spec * mask, n=ext.size)[n - 1:2 * n - 1]
    if require_positive_low and np.any(low <= 0.0):
        raise ConfigError(
            "host envelope is not positive; widen the window or lower "
            "the cutoff")
    return FrequencySplit(q=rescaled.q, low=low,
                          interference=rescaled.y - low,
                          cutoff_nm=cutoff_nm)


def resonant_difference(above, below, window=None, n_points=None, qc_nm=0.0):
    """Rescaled difference (R_above - R_below) Q^2 / (4 pi)^2.

    Both curves are resampled onto one uniform grid; non-resonant structure
    cancels pointwise, leaving the interference of the resonant sheet.
    """
    if window is None:
        window = (DEFAULT_WINDOW[0],
                  float(min(above.q[-1], below.q[-1])))
    rc_above = rescale(above, window, n_points, qc_nm=qc_nm)
    rc_below = rescale(below, window, n_points=rc_above.q.size, qc_nm=qc_nm)
    return RescaledCurve(q=rc_above.q, y=rc_above.y - rc_below.y,
                         energy_ev=float(above.energy_ev),
                         window=rc_above.window, qc_nm=qc_nm)


def _demodulated_phase_line(q, s, d0, min_interior=12):
    # s ~ A H(q) cos(q d - phi); multiplying by exp(-i q d0) and averaging
    # away the 2 q d component leaves (A H / 2) exp(i (q (d - d0) - phi)),
    # so a weighted line through the unwrapped angle gives d and phi free
    # of any coupling to envelope/amplitude errors
    dq = q[1] - q[0]
    if not d0 > 0.0 or not dq > 0.0:
        return None
    # averaging over two cosine periods puts transfer zeros at d0/2, d0,
    # 3 d0/2 and 2 d0, suppressing both the mirror term and any residual
    # host leakage beating against the cutoff region
    w = int(round(4.0 * np.pi / (d0 * dq)))
    w = max(w, 5)
    if q.size < 2 * w + min_interior:
        return None
    m = s * np.exp(-1j * q * d0)
    kernel = np.full(w, 1.0 / w)
    m_lf = np.convolve(m, kernel, mode="same")
    interior = slice(w, q.size - w)
    amp = np.abs(m_lf[interior])
    if not np.any(amp > 0.0):
        return None
    psi = np.unwrap(np.angle(m_lf[interior]))
    slope, intercept = np.polyfit(q[interior], psi, 1, w=amp)
    return d0 + float(slope), -float(intercept)


def fit_envelope(q, signal, depth_hint_nm, phase_hint_rad=None,
                 method="single", phase_offset_rad=0.0):
    """Fit A exp(-(Q sigma)^2/2) cos(Q d - phi_raw) to a normalized signal.

    Multiple phase starts protect against the phase-depth degeneracy; the
    best converged minimum wins.  The reported ``phase_rad`` subtracts the
    quarter turn contributed by the host's substrate step (plus any extra
    ``phase_offset_rad``, e.g. the host absorption phase), so it estimates
    the argument of the scattering-factor contrast itself.  A fit in which
    no start converges raises :class:`FitError`.
    """
    q = np.asarray(q, dtype=float)
    s = np.asarray(signal, dtype=float)
    if q.shape != s.shape or q.ndim != 1:
        raise ConfigError("signal must match the Q grid")
    d0 = float(depth_hint_nm)
    a0 = float(np.percentile(np.abs(s), 98))
    if not a0 > 0.0:
        raise FitError("signal has no amplitude to fit")

    def model(p, qq):
        a, sig, d, phi = p
        return a * np.exp(-0.5 * (qq * sig) ** 2) * np.cos(qq * d - phi)

    def residuals(p):
        return model(p, q) - s

    def jacobian(p):
        a, sig, d, phi = p
        env = np.exp(-0.5 * (q * sig) ** 2)
        arg = q * d - phi
        cos_a, sin_a = np.cos(arg), np.sin(arg)
        return np.column_stack([
            env * cos_a,
            -a * q * q * sig * env * cos_a,
            -a * env * sin_a * q,
            a * env * sin_a,
        ])

    lo = np.array([1e-12, 0.0, max(2.0, 0.5 * d0), -4.0 * np.pi])
    hi = np.array([np.inf, 3.0, min(150.0, 2.0 * d0), 4.0 * np.pi])
    starts = []
    if phase_hint_rad is not None:
        starts.append(float(phase_hint_rad))
    starts.extend([0.0, 0.5 * np.pi, np.pi, 1.5 * np.pi])

    best = None
    for phi0 in starts:
        p0 = np.array([a0, 0.4, d0, _wrap_angle(phi0)])
        problem = numfit.FitProblem(residuals=residuals, p0=p0,
                                    jacobian=jacobian, bounds=(lo, hi))
        outcome = numfit.levenberg_marquardt(problem)
        if not outcome.converged:
            continue
        if best is None or outcome.ssr < best[1].ssr:
            best = (problem, outcome)
    if best is None:
        raise FitError("envelope fit did not converge from any phase start")
    problem, outcome = best
    a_hat, sig_hat, d_hat, phi_hat = outcome.params

    # the least-squares valley couples d and phi through any residual
    # amplitude ripple of the filtered signal; coherent demodulation
    # decouples them (slope = depth correction, intercept = phase)
    refined = _demodulated_phase_line(q, s, d_hat)
    if refined is not None:
        d_hat, phi_hat = refined

    # a width estimate pinned at zero makes its Jacobian column vanish and
    # the covariance singular; profile scans still work there
    try:
        depth_ci = numfit.covariance_ci(outcome, 2)
    except FitError:
        depth_ci = numfit.profile_likelihood_ci(problem, outcome, 2)
    # recenter on the demodulated estimate; the interval half-width still
    # comes from the least-squares curvature
    shift = float(d_hat) - float(outcome.params[2])
    if shift != 0.0:
        depth_ci = ConfidenceInterval(
            low=depth_ci.low + shift, high=depth_ci.high + shift,
            lower_bounded=depth_ci.lower_bounded,
            upper_bounded=depth_ci.upper_bounded, method=depth_ci.method)
    try:
        amp_ci = numfit.covariance_ci(outcome, 0)
    except FitError:
        amp_ci = numfit.profile_likelihood_ci(problem, outcome, 0)
    try:
        sig_ci = numfit.profile_likelihood_ci(problem, outcome, 1)
    except FitError:
        sig_ci = numfit.covariance_ci(outcome, 1)
    fwhm_ci = ConfidenceInterval(
        low=_FWHM * max(sig_ci.low, 0.0), high=_FWHM * sig_ci.high,
        lower_bounded=sig_ci.lower_bounded, upper_bounded=sig_ci.upper_bounded,
        method=sig_ci.method)

    return ExtractionResult(
        depth_nm=float(d_hat), depth_ci=depth_ci,
        rms_width_nm=float(sig_hat), fwhm_nm=float(_FWHM * sig_hat),
        fwhm_ci=fwhm_ci, amplitude=float(a_hat), amplitude_ci=amp_ci,
        phase_rad=_wrap_angle(phi_hat - 0.5 * np.pi + phase_offset_rad),
        method=method, outcome=outcome)


def reconstruct_profile(q, g, z_max_nm=None):
    """Band-limited inverse transform of g(Q) = I / (2 sqrt(F_LF^2)).

    Returns the real part on a fine depth grid together with the magnitude,
    whose dominant peak locates the sheet; the depth resolution is
    2 pi / (Q_hi - Q_lo).
    """
    q = np.asarray(q, dtype=float)
    g = np.asarray(g, dtype=float)
    if q.shape != g.shape or q.ndim != 1 or q.size < 2:
        raise ConfigError("g must match a 1-d Q grid")
    span = q[-1] - q[0]
    resolution = 2.0 * np.pi / span
    if z_max_nm is None:
        z_max_nm = min(120.0, np.pi / (q[1] - q[0]))
    z = np.arange(0.0, float(z_max_nm), resolution / 12.0)
    kernel = np.exp(1j * np.outer(z, q))
    p = np.trapezoid(kernel * g[None, :], q, axis=1) / np.pi
    mag = np.abs(p)
    k = int(np.argmax(mag))
    peak, _ = numfit.refine_peak(z, mag, k)
    return ReconstructedProfile(z_nm=z, values=np.real(p), magnitude=mag,
                                peak_nm=float(peak),
                                resolution_nm=float(resolution))


@dataclass(frozen=True)
class SingleEnergyAnalysis:
    detection: DepthDetection
    split: FrequencySplit = field(repr=False, default=None)
    result: ExtractionResult = None
    profile: ReconstructedProfile = field(repr=False, default=None)


def host_critical_q(energy_ev, tables_dir=None):
    """Critical wavevector of the silicon host at one energy."""
    return xsf.critical_q(xsf.silicon(tables_dir), energy_ev)


def host_absorption_phase(energy_ev, tables_dir=None):
    """Argument of the silicon host's complex density at one energy.

    The substrate step contributes -pi/2 + arg(rho_host) to the phase of
    the interference term; absorption makes rho_host complex, so reported
    contrast phases must add this back to compare against tabulated
    scattering factors.
    """
    return float(np.angle(xsf.sld(xsf.silicon(tables_dir), energy_ev)))


def analyze_single_energy(curve, window=None, cutoff_nm=None, qc_nm=None,
                          tables_dir=None):
    """Full single-energy pipeline; raises :class:`NoLayerError` on host-only data.

    ``qc_nm=None`` applies the host refraction correction computed from the
    silicon tables; pass 0 to analyze against vacuum Q (kinematic data).
    """
    if qc_nm is None:
        qc_nm = host_critical_q(curve.energy_ev, tables_dir)
    rc = rescale(curve, window, qc_nm=qc_nm)
    det = fft_depth_phase(rc)
    if cutoff_nm is None:
        cutoff_nm = 0.5 * det.depth_nm
    split = split_frequencies(rc, cutoff_nm, depth_hint_nm=det.depth_nm)
    norm = np.sqrt(split.low)
    result = fit_envelope(rc.q, split.interference / norm,
                          depth_hint_nm=det.depth_nm,
                          phase_hint_rad=det.phase_rad, method="single",
                          phase_offset_rad=host_absorption_phase(
                              curve.energy_ev, tables_dir))
    profile = reconstruct_profile(rc.q, split.interference / (2.0 * norm))
    return SingleEnergyAnalysis(detection=det, split=split, result=result,
                                profile=profile)


def analyze_difference(above, below, window=None, cutoff_nm=None, qc_nm=None,
                       tables_dir=None):
    """Two-energy pipeline on curves straddling the dopant edge."""
    if qc_nm is None:
        qc_nm = host_critical_q(below.energy_ev, tables_dir)
    diff = resonant_difference(above, below, window, qc_nm=qc_nm)
    det = fft_depth_phase(diff)
    if cutoff_nm is None:
        cutoff_nm = 0.5 * det.depth_nm
    rc_below = rescale(below, diff.window, n_points=diff.q.size, qc_nm=qc_nm)
    split_below = split_frequencies(rc_below, cutoff_nm,
                                    depth_hint_nm=det.depth_nm)
    diff_split = split_frequencies(diff, cutoff_nm,
                                   depth_hint_nm=det.depth_nm,
                                   require_positive_low=False)
    norm = np.sqrt(split_below.low)
    mid_phase = 0.5 * (host_absorption_phase(below.energy_ev, tables_dir)
                       + host_absorption_phase(above.energy_ev, tables_dir))
    result = fit_envelope(diff.q, diff_split.interference / norm,
                          depth_hint_nm=det.depth_nm,
                          phase_hint_rad=det.phase_rad, method="difference",
                          phase_offset_rad=mid_phase)
    profile = reconstruct_profile(diff.q,
                                  diff_split.interference / (2.0 * norm))
    return SingleEnergyAnalysis(detection=det, split=diff_split,
                                result=result, profile=profile)


def check_edge_straddle(below_ev, above_ev, edge_ev=AS_L3_EDGE_EV):
    """Require one energy on each side of the edge (below < edge < above)."""
    below_ev, above_ev = float(below_ev), float(above_ev)
    if below_ev == above_ev:
        raise EdgeSideError(
            "the two energies are identical (%g eV); need one on each side "
            "of the %g eV edge" % (below_ev, edge_ev))
    lo, hi = min(below_ev, above_ev), max(below_ev, above_ev)
    if not (lo < edge_ev < hi):
        raise EdgeSideError(
            "energies %g and %g eV lie on the same side of the %g eV edge"
            % (below_ev, above_ev, edge_ev))


def resonant_contrast(scan, mode="span"):
    """Contrast ratio of an energy scan across the edge.

    ``mode="span"``: (max - min over 1320-1340 eV) / (mean over
    1312-1322 eV), the definition used for simulated scans.
    ``mode="means"``: (mean over 1330-1340 - mean over 1312-1322) / (mean
    over 1312-1322), signed, as evaluated on measured scans; the second
    return value is the standard-deviation-propagated uncertainty.
    """
    e, r = scan.energies_ev, scan.r
    lo_w, hi_w = CONTRAST_BASE_WINDOW, CONTRAST_ABOVE_WINDOW
    need_hi = CONTRAST_SPAN_WINDOW[1]
    if e[0] > lo_w[0] or e[-1] < need_hi:
        raise CoverageError(
            "scan [%g, %g] eV must cover %g-%g eV"
            % (e[0], e[-1], lo_w[0], need_hi))
    base_sel = (e >= lo_w[0]) & (e <= lo_w[1])
    base = float(np.mean(r[base_sel]))
    if mode == "span":
        sel = (e >= CONTRAST_SPAN_WINDOW[0]) & (e <= CONTRAST_SPAN_WINDOW[1])
        dr = float(np.max(r[sel]) - np.min(r[sel]))
        return dr / base
    if mode == "means":
        above_sel = (e >= hi_w[0]) & (e <= hi_w[1])
        above = float(np.mean(r[above_sel]))
        ratio = (above - base) / base
        s_lo = float(np.std(r[base_sel]))
        s_hi = float(np.std(r[above_sel]))
        sigma = np.sqrt(s_hi ** 2 + (above / base) ** 2 * s_lo ** 2) / base
        return ratio, sigma
    raise ConfigError("unknown contrast mode %r" % (mode,))


@dataclass(frozen=True)
class ThicknessInversion:
    """Sheet thickness recovered from the resonant contrast ratio."""

    thickness_nm: float
    ci: ConfidenceInterval
    band: tuple
    grid_nm: np.ndarray = field(repr=False, default=None)
    ratios: np.ndarray = field(repr=False, default=None)


def thickness_from_resonance(measured_ratio, measured_sigma, stack, delta,
                             theta_deg=10.0, energies_ev=None,
                             thickness_grid_nm=None):
    """Invert |measured_ratio| through a simulated ratio-vs-thickness curve.

    For each trial thickness the sheet is modeled as a uniform slab of
    density N2D / thickness at the measured depth, its fixed-angle energy
    scan simulated dynamically, and the contrast ratio evaluated with the
    span definition.  A monotone shape-preserving interpolant then maps the
    measured ratio back to a thickness; values outside the simulated band
    raise :class:`ResonanceBandError` carrying the band.
    """
    measured = abs(float(measured_ratio))
    sigma = 0.0 if measured_sigma is None else abs(float(measured_sigma))
    if thickness_grid_nm is None:
        thickness_grid_nm = np.geomspace(0.2, 5.0, 25)
    grid = np.asarray(thickness_grid_nm, dtype=float)
    if energies_ev is None:
        energies_ev = np.arange(1310.0, 1342.0 + 1e-9, 0.5)

    ratios = np.empty(grid.size)
    for i, width in enumerate(grid):
        slab = DeltaLayerSpec.slab(delta.depth_nm, width, delta.n2d_nm2,
                                   delta.dopant, delta.host)
        scan = forward.simulate_energy_scan(stack, slab, theta_deg,
                                            energies_ev)
        ratios[i] = resonant_contrast(scan, mode="span")

    # keep the monotone decreasing head; past it the slab's own form factor
    # zeroes make the ratio fold back and the inversion ambiguous
    end = 1
    while end < ratios.size and ratios[end] < ratios[end - 1]:
        end += 1
    r_mono, t_mono = ratios[:end], grid[:end]
    band = (float(np.min(r_mono)), float(np.max(r_mono)))
    if not band[0] <= measured <= band[1]:
        raise ResonanceBandError(
            "measured ratio %.4g outside the simulated band [%.4g, %.4g]"
            % (measured, band[0], band[1]), band=band)

    inverse = PchipInterpolator(r_mono[::-1], t_mono[::-1], extrapolate=False)
    thickness = float(inverse(measured))
    lo_edge = float(inverse(min(measured + sigma, band[1])))
    hi_edge = float(inverse(max(measured - sigma, band[0])))
    ci = ConfidenceInterval(
        low=min(lo_edge, hi_edge), high=max(lo_edge, hi_edge),
        lower_bounded=measured + sigma <= band[1],
        upper_bounded=measured - sigma >= band[0],
        method="interpolant")
    return ThicknessInversion(thickness_nm=thickness, ci=ci, band=band,
                              grid_nm=grid, ratios=ratios)
