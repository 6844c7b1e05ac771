"""Forward models: kinematic and dynamical specular reflectivity.

Two regimes:

* :func:`born_reflectivity` evaluates the kinematic (single-scattering)
  reflectivity R(Q) = (4 pi)^2 / Q^2 * |F(Q)|^2 from a discretized density
  profile, where F is the e^{-iQz} transform of rho(z) including the exact
  analytic tail of the semi-infinite substrate.  It is quantitative well
  above the critical edge and diverges below it.

* :func:`dynamical_reflectivity` runs the exact recursive (multiple
  scattering) solution over a slab decomposition of the stack, with
  interface roughness entering through Nevot-Croce factors on each Fresnel
  coefficient.  A buried dopant sheet is resolved into sub-slabs no wider
  than 0.1 nm.

Geometry: grazing angle theta (degrees), Q = 4 pi sin(theta) / lambda in
nm^-1, depth positive into the sample.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigError,
    DomainError,
    SamplingError,
    SingularityError,
)
from . import xsf
from .model import SHAPE_DIRAC

# Born output is tagged unreliable below this Q; the critical edge of Si
# sits near 0.3 nm^-1 at the energies of interest, with dynamical effects
# fading over the next few multiples.
BORN_Q_MIN = 1.5

_DIRAC_SLAB_NM = 0.05


@dataclass(frozen=True)
class ReflectivityCurve:
    """R(Q) at one photon energy, with optional uncertainties and angles."""

    q: np.ndarray
    r: np.ndarray
    energy_ev: float
    sigma_r: np.ndarray = None
    theta_deg: np.ndarray = None

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        r = np.asarray(self.r, dtype=float)
        if q.ndim != 1 or q.size < 2:
            raise ConfigError("curve needs a 1-d Q grid with >= 2 points")
        if not np.all(np.diff(q) > 0.0):
            raise ConfigError("Q grid must be strictly increasing")
        if r.shape != q.shape:
            raise ConfigError("R must match the Q grid")
        if np.any(r < 0.0):
            raise ConfigError("R must be non-negative")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "r", r)
        if self.sigma_r is not None:
            s = np.asarray(self.sigma_r, dtype=float)
            if s.shape != q.shape or np.any(s < 0.0):
                raise ConfigError("sigma_R must be non-negative on the Q grid")
            object.__setattr__(self, "sigma_r", s)
        if self.theta_deg is not None:
            th = np.asarray(self.theta_deg, dtype=float)
            if th.shape != q.shape:
                raise ConfigError("theta grid must match the Q grid")
            expect = q_from_theta(th, self.energy_ev)
            if np.any(np.abs(expect - q) > 1e-9 * np.maximum(np.abs(q), 1.0)):
                raise ConfigError(
                    "theta grid inconsistent with Q = 4 pi sin(theta)/lambda")
            object.__setattr__(self, "theta_deg", th)


@dataclass(frozen=True)
class EnergyScan:
    """R(E) at fixed grazing angle across an absorption edge."""

    theta_deg: float
    energies_ev: np.ndarray
    r: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        e = np.asarray(self.energies_ev, dtype=float)
        r = np.asarray(self.r, dtype=float)
        if e.ndim != 1 or e.size < 2 or not np.all(np.diff(e) > 0.0):
            raise ConfigError("energy grid must be 1-d and strictly increasing")
        if r.shape != e.shape:
            raise ConfigError("R must match the energy grid")
        if not 0.0 < float(self.theta_deg) <= 90.0:
            raise DomainError("grazing angle must lie in (0, 90] degrees")
        object.__setattr__(self, "energies_ev", e)
        object.__setattr__(self, "r", r)


def q_from_theta(theta_deg, energy_ev):
    """Momentum transfer Q = 4 pi sin(theta) / lambda, nm^-1."""
    theta = np.asarray(theta_deg, dtype=float)
    if np.any(theta <= 0.0) or np.any(theta > 90.0):
        raise DomainError("grazing angle must lie in (0, 90] degrees")
    lam = xsf.CONSTANTS.wavelength_nm(energy_ev)
    out = 4.0 * np.pi * np.sin(np.radians(theta)) / lam
    return float(out) if out.ndim == 0 else out


def born_reflectivity(profile, q):
    """Kinematic R(Q) from a density profile (trapezoid + substrate tail).

    The profile must start in vacuum; its last sample is treated as the
    semi-infinite substrate density, whose e^{-iQz} tail is added in closed
    form.  Q = 0 raises :class:`SingularityError`; Q beyond the grid Nyquist
    limit pi/dz raises :class:`SamplingError`.
    """
    q = np.atleast_1d(np.asarray(q, dtype=float))
    if np.any(q <= 0.0):
        raise SingularityError("Born reflectivity requires Q > 0")
    if np.max(q) > profile.nyquist_q_max():
        raise SamplingError(
            "Q_max = %g exceeds the grid Nyquist limit %g (refine dz)"
            % (np.max(q), profile.nyquist_q_max()))
    z = profile.z
    rho = profile.rho
    phase = np.exp(-1j * np.outer(q, z))
    f_body = np.trapezoid(rho[None, :] * phase, z, axis=1)
    f_tail = rho[-1] * np.exp(-1j * q * z[-1]) / (1j * q)
    amp = f_body + f_tail
    r = (4.0 * np.pi) ** 2 / q ** 2 * np.abs(amp) ** 2
    return r if r.size > 1 else float(r[0])


def fresnel_reflectance(n1, n2, theta_deg):
    """|r|^2 for sigma polarization at a sharp interface, grazing incidence.

    ``theta_deg`` is the grazing angle in medium 1.  Complex indices follow
    the Im(n) <= 0 convention of this toolkit; the reflectance is computed
    in the conjugate (absorption-positive) frame, which leaves |r|^2
    unchanged.
    """
    theta = float(theta_deg)
    if not 0.0 < theta <= 90.0:
        raise DomainError("grazing angle must lie in (0, 90] degrees")
    n1c = np.conj(complex(n1)) if np.imag(n1) < 0 else complex(n1)
    n2c = np.conj(complex(n2)) if np.imag(n2) < 0 else complex(n2)
    th = np.radians(theta)
    s1 = np.sin(th)
    # Snell with grazing angles: n1 cos(theta1) = n2 cos(theta2), so
    # n2 sin(theta2) = sqrt(n2^2 - n1^2 + (n1 sin(theta1))^2); grouping
    # the index difference first avoids cancellation between the two
    # near-unity magnitudes at small angles
    n2m1 = (n2c - n1c) * (n2c + n1c)
    n2s2 = np.sqrt(n2m1 + (n1c * s1) ** 2 + 0.0j)
    if np.imag(n2s2) < 0:
        n2s2 = -n2s2
    num = n1c * s1 - n2s2
    den = n1c * s1 + n2s2
    return float(np.abs(num / den) ** 2)


def _slab_decomposition(stack, delta, energy_ev, max_sub_nm=0.1):
    """Break the stack (+ sheet) into slabs for the recursive solution.

    Returns (breaks, indices, roughness): interface depths, the complex
    refractive index of vacuum, every finite slab, and the substrate, and
    the RMS roughness per interface (zero at the sub-slab cuts introduced
    for the sheet).
    """
    host_ifaces = stack.interface_depths()
    breaks = list(host_ifaces)
    if delta is not None and delta.n2d_nm2 > 0.0:
        half = delta.span_halfwidth_nm(4.0)
        if delta.shape == SHAPE_DIRAC:
            half = 0.5 * _DIRAC_SLAB_NM
        lo = max(0.0, delta.depth_nm - half)
        hi = delta.depth_nm + half
        n_cut = max(1, int(np.ceil((hi - lo) / max_sub_nm)))
        breaks.extend(np.linspace(lo, hi, n_cut + 1))
    breaks = np.unique(np.round(np.array(breaks, dtype=float), 9))

    lam = xsf.CONSTANTS.wavelength_nm(energy_ev)
    host_n = [xsf.refractive_index(l.material, energy_ev) for l in stack.layers]

    def host_index_at(depth):
        i = int(np.searchsorted(host_ifaces, depth, side="right")) - 1
        return host_n[max(i, 0)]

    centers = 0.5 * (breaks[:-1] + breaks[1:])
    widths = np.diff(breaks)
    indices = [1.0 + 0.0j]  # vacuum
    for c, w in zip(centers, widths):
        n_here = host_index_at(c)
        if delta is not None and delta.n2d_nm2 > 0.0:
            amp = xsf.CONSTANTS.r0_nm * delta.contrast(energy_ev) * delta.n2d_nm2
            if delta.shape == SHAPE_DIRAC:
                if c - 0.5 * w <= delta.depth_nm <= c + 0.5 * w:
                    n_here -= (lam * lam / (2.0 * np.pi)) * amp / w
            else:
                drho = amp * delta.shape_values(c - delta.depth_nm)
                n_here -= (lam * lam / (2.0 * np.pi)) * drho
        indices.append(n_here)
    indices.append(host_n[-1])  # substrate below the last break
    indices = np.array(indices, dtype=complex)

    roughness = np.zeros(breaks.size)
    for depth, layer in zip(host_ifaces, stack.layers):
        j = int(np.argmin(np.abs(breaks - depth)))
        roughness[j] = float(layer.roughness_nm)
    return breaks, indices, roughness


def dynamical_reflectivity(stack, delta, energy_ev, q, max_sub_nm=0.1):
    """Exact recursive R(Q) with Nevot-Croce roughness factors.

    ``delta`` may be None for a host-only sample.  Q must satisfy
    0 < Q <= 4 pi / lambda.
    """
    q = np.atleast_1d(np.asarray(q, dtype=float))
    lam = xsf.CONSTANTS.wavelength_nm(energy_ev)
    if np.any(q <= 0.0):
        raise SingularityError("dynamical reflectivity requires Q > 0")
    if np.any(q > 4.0 * np.pi / lam + 1e-12):
        raise DomainError("Q exceeds the backscattering limit 4 pi / lambda")

    breaks, indices, roughness = _slab_decomposition(
        stack, delta, energy_ev, max_sub_nm)
    # absorption-positive frame; |r|^2 is conjugation invariant
    n = np.conj(indices)
    k0 = 2.0 * np.pi / lam
    sin_th = q / (2.0 * k0)

    # kz per (Q, slab): k0 sqrt(n^2 - cos^2 theta), branch Im(kz) >= 0.
    # n^2 - cos^2 is evaluated as (n-1)(n+1) + sin^2 so the two near-unity
    # magnitudes never cancel
    n2m1 = (n - 1.0) * (n + 1.0)
    kz = k0 * np.sqrt(n2m1[None, :] + sin_th[:, None] ** 2 + 0.0j)
    kz = np.where(np.imag(kz) < 0.0, -kz, kz)

    # bottom-up recursion on the upward/downward amplitude ratio at each
    # interface; only slab thicknesses enter the propagation phases
    x = np.zeros(q.size, dtype=complex)
    last = breaks.size - 1
    for j in range(last, -1, -1):
        if j < last:
            x = x * np.exp(2.0j * kz[:, j + 1] * (breaks[j + 1] - breaks[j]))
        kzi, kzj = kz[:, j], kz[:, j + 1]
        r_f = (kzi - kzj) / (kzi + kzj)
        r_f = r_f * np.exp(-2.0 * kzi * kzj * roughness[j] ** 2)
        x = (r_f + x) / (1.0 + r_f * x)
    r = np.abs(x) ** 2
    return r if r.size > 1 else float(r[0])


def simulate_energy_scan(stack, delta, theta_deg, energies_ev):
    """Fixed-angle R(E); the optical constants re-interpolate at every E."""
    energies = np.asarray(energies_ev, dtype=float)
    r = np.empty(energies.size)
    for i, e in enumerate(energies):
        q = q_from_theta(theta_deg, e)
        r[i] = dynamical_reflectivity(stack, delta, e, np.array([q]))
    return EnergyScan(theta_deg=float(theta_deg), energies_ev=energies, r=r)


def add_counting_noise(curve, i0, rng):
    """Poisson counting noise at incident flux ``i0`` photons per point.

    Counts are drawn as Poisson(R * i0) and renormalized; the returned curve
    carries sigma_R = sqrt(R / i0) from the noise-free rate.
    """
    i0 = float(i0)
    if not i0 > 0.0:
        raise ConfigError("incident intensity must be positive")
    counts = rng.poisson(curve.r * i0)
    noisy = counts / i0
    sigma = np.sqrt(curve.r / i0)
    return ReflectivityCurve(q=curve.q, r=noisy, energy_ev=curve.energy_ev,
                             sigma_r=sigma, theta_deg=curve.theta_deg)
