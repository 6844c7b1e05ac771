"""Sample description: layer stacks, buried dopant sheets, density profiles.

A sample is a :class:`LayerStack` (top surface first, semi-infinite substrate
last) plus an optional :class:`DeltaLayerSpec` describing a dilute dopant
sheet buried at depth d below the surface.  :func:`discretize` renders both
onto a uniform depth grid as a complex scattering length density profile.

Because the dopant sheet is dilute and substitutional, its contribution is
the contrast against the host it replaces,

    drho(z) = r0 * (f_dopant - f_host) * N2D * h(z - d),

added on top of the host profile; the host density itself is not reduced.
h(z) is an even, unit-integral line shape.  Thicknesses quoted for Gaussian
sheets follow the FWHM convention delta = 2 sqrt(2 ln 2) sigma.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from .errors import ConfigError, CoverageError, SamplingError
from . import xsf

FWHM_PER_SIGMA = 2.0 * np.sqrt(2.0 * np.log(2.0))

SHAPE_DIRAC = "dirac"
SHAPE_GAUSSIAN = "gaussian"
SHAPE_TABULATED = "tabulated"


@dataclass(frozen=True)
class Layer:
    """One homogeneous slab.  ``thickness_nm is None`` marks the substrate.

    ``roughness_nm`` is the RMS interface width applied at this layer's top
    interface.
    """

    material: xsf.Material
    thickness_nm: object = None
    roughness_nm: float = 0.0

    def __post_init__(self):
        if self.thickness_nm is not None and not float(self.thickness_nm) > 0.0:
            raise ConfigError("layer thickness must be positive or None")
        if float(self.roughness_nm) < 0.0:
            raise ConfigError("interface roughness must be non-negative")

    @property
    def is_substrate(self):
        return self.thickness_nm is None


@dataclass(frozen=True)
class LayerStack:
    """Ordered layers, surface first; the last layer must be semi-infinite."""

    layers: tuple

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ConfigError("a stack needs at least one layer")
        if not layers[-1].is_substrate:
            raise ConfigError("the last layer must be the semi-infinite substrate")
        for layer in layers[:-1]:
            if layer.is_substrate:
                raise ConfigError("only the last layer may be semi-infinite")
        object.__setattr__(self, "layers", layers)

    @property
    def total_finite_thickness(self):
        return float(np.sum([l.thickness_nm for l in self.layers[:-1]] or [0.0]))

    def interface_depths(self):
        """Depth of each layer's top interface, surface (0.0) first."""
        depths = [0.0]
        for layer in self.layers[:-1]:
            depths.append(depths[-1] + float(layer.thickness_nm))
        return np.array(depths)


@dataclass(frozen=True)
class DeltaLayerSpec:
    """A dilute dopant sheet: areal density N2D at depth d with line shape h.

    Shapes: ``dirac`` (ideal sheet), ``gaussian`` (RMS width ``sigma_nm``),
    or ``tabulated`` (samples of h on ``profile_z_nm``, renormalized to unit
    integral; must be even about z = 0).
    """

    depth_nm: float
    n2d_nm2: float
    dopant: xsf.ScatteringFactorTable
    host: xsf.ScatteringFactorTable
    shape: str = SHAPE_GAUSSIAN
    sigma_nm: float = 0.0
    profile_z_nm: np.ndarray = field(default=None, repr=False)
    profile_h: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if not float(self.depth_nm) > 0.0:
            raise ConfigError("delta-layer depth must be positive")
        if float(self.n2d_nm2) < 0.0:
            raise ConfigError("areal density must be non-negative")
        if self.shape not in (SHAPE_DIRAC, SHAPE_GAUSSIAN, SHAPE_TABULATED):
            raise ConfigError("unknown delta-layer shape %r" % (self.shape,))
        if self.shape == SHAPE_GAUSSIAN and not float(self.sigma_nm) > 0.0:
            raise ConfigError("gaussian shape needs sigma > 0")
        if self.shape == SHAPE_TABULATED:
            z = np.asarray(self.profile_z_nm, dtype=float)
            h = np.asarray(self.profile_h, dtype=float)
            if z.ndim != 1 or z.size < 2 or h.shape != z.shape:
                raise ConfigError("tabulated shape needs matching z and h arrays")
            if not np.all(np.diff(z) > 0.0):
                raise ConfigError("tabulated shape z grid must strictly increase")
            if np.any(h < 0.0):
                raise ConfigError("tabulated shape must be non-negative")
            area = np.trapezoid(h, z)
            if not area > 0.0:
                raise ConfigError("tabulated shape must have positive integral")
            h = h / area
            centroid = np.trapezoid(z * h, z)
            width = z[-1] - z[0]
            if abs(centroid) > 1e-6 * width:
                raise ConfigError("tabulated shape must be even about z = 0")
            object.__setattr__(self, "profile_z_nm", z)
            object.__setattr__(self, "profile_h", h)

    @classmethod
    def gaussian_fwhm(cls, depth_nm, fwhm_nm, n2d_nm2, dopant, host):
        """Gaussian sheet specified by its FWHM thickness."""
        return cls(depth_nm=depth_nm, n2d_nm2=n2d_nm2, dopant=dopant,
                   host=host, shape=SHAPE_GAUSSIAN,
                   sigma_nm=float(fwhm_nm) / FWHM_PER_SIGMA)

    @classmethod
    def dirac(cls, depth_nm, n2d_nm2, dopant, host):
        return cls(depth_nm=depth_nm, n2d_nm2=n2d_nm2, dopant=dopant,
                   host=host, shape=SHAPE_DIRAC)

    @classmethod
    def slab(cls, depth_nm, width_nm, n2d_nm2, dopant, host):
        """Top-hat sheet of full width ``width_nm`` (uniform N3D = N2D/width)."""
        w = float(width_nm)
        if not w > 0.0:
            raise ConfigError("slab width must be positive")
        # two-point table; linear interpolation keeps it exactly flat
        z = np.array([-0.5 * w, 0.5 * w])
        h = np.array([1.0 / w, 1.0 / w])
        return cls(depth_nm=depth_nm, n2d_nm2=n2d_nm2, dopant=dopant,
                   host=host, shape=SHAPE_TABULATED,
                   profile_z_nm=z, profile_h=h)

    @property
    def fwhm_nm(self):
        """Full width at half maximum of h (0 for a dirac sheet)."""
        if self.shape == SHAPE_GAUSSIAN:
            return FWHM_PER_SIGMA * float(self.sigma_nm)
        if self.shape == SHAPE_DIRAC:
            return 0.0
        z, h = self.profile_z_nm, self.profile_h
        half = 0.5 * float(np.max(h))
        above = h >= half
        idx = np.flatnonzero(above)
        lo, hi = idx[0], idx[-1]
        z_lo = z[lo] if lo == 0 else np.interp(
            half, [h[lo - 1], h[lo]], [z[lo - 1], z[lo]])
        z_hi = z[hi] if hi == z.size - 1 else np.interp(
            half, [h[hi + 1], h[hi]], [z[hi + 1], z[hi]])
        return float(z_hi - z_lo)

    def span_halfwidth_nm(self, n_sigma=5.0):
        """Half-extent the depth grid must cover beyond d."""
        if self.shape == SHAPE_GAUSSIAN:
            return n_sigma * float(self.sigma_nm)
        if self.shape == SHAPE_TABULATED:
            return float(max(abs(self.profile_z_nm[0]), abs(self.profile_z_nm[-1])))
        return 0.0

    def shape_values(self, offsets_nm):
        """h evaluated at signed offsets from the sheet center (not dirac)."""
        u = np.asarray(offsets_nm, dtype=float)
        if self.shape == SHAPE_GAUSSIAN:
            s = float(self.sigma_nm)
            return np.exp(-0.5 * (u / s) ** 2) / (s * np.sqrt(2.0 * np.pi))
        if self.shape == SHAPE_TABULATED:
            return np.interp(u, self.profile_z_nm, self.profile_h,
                             left=0.0, right=0.0)
        raise ConfigError("a dirac sheet has no pointwise density")

    def shape_transform(self, q):
        """H(Q) = integral h(u) exp(-iQu) du (real for the even shapes here)."""
        q = np.atleast_1d(np.asarray(q, dtype=float))
        if self.shape == SHAPE_DIRAC:
            out = np.ones_like(q, dtype=complex)
        elif self.shape == SHAPE_GAUSSIAN:
            out = np.exp(-0.5 * (q * float(self.sigma_nm)) ** 2).astype(complex)
        else:
            z, h = self.profile_z_nm, self.profile_h
            # h is piecewise linear between the nodes, so two integrations
            # by parts give the transform exactly: boundary terms plus the
            # slope change at each node
            slope = np.diff(h) / np.diff(z)
            kink = np.diff(slope, prepend=0.0, append=0.0)
            out = np.empty(q.size, dtype=complex)
            big = np.abs(q) * np.max(np.abs(z)) >= 1e-3
            qb = q[big]
            eb = np.exp(-1j * np.outer(qb, z))
            out[big] = ((h[0] * eb[:, 0] - h[-1] * eb[:, -1]) / (1j * qb)
                        - (eb @ kink) / qb ** 2)
            if not np.all(big):
                # unit area by construction; second moment covers Q ~ 0
                m2 = np.trapezoid(z * z * h, z)
                out[~big] = 1.0 - 0.5 * m2 * q[~big] ** 2
        return out if out.size > 1 else complex(out[0])

    def contrast(self, energy_ev):
        """Complex scattering factor contrast f_dopant - f_host at E."""
        return xsf.delta_f(self.dopant, self.host, energy_ev)


def three_d_density(delta, thickness_nm=None):
    """Peak-equivalent volume density N3D = N2D / thickness (FWHM), nm^-3."""
    if thickness_nm is None:
        thickness_nm = delta.fwhm_nm
    thickness_nm = float(thickness_nm)
    if not thickness_nm > 0.0:
        raise ConfigError("thickness must be positive to form N3D")
    return float(delta.n2d_nm2) / thickness_nm


@dataclass(frozen=True)
class DensityProfile:
    """Complex SLD rho(z) on a uniform depth grid at one photon energy."""

    z0_nm: float
    dz_nm: float
    rho: np.ndarray
    energy_ev: float

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=complex)
        if rho.ndim != 1 or rho.size < 2:
            raise ConfigError("density profile needs at least two samples")
        if not float(self.dz_nm) > 0.0:
            raise ConfigError("grid step must be positive")
        object.__setattr__(self, "rho", rho)

    @property
    def z(self):
        return self.z0_nm + self.dz_nm * np.arange(self.rho.size)

    def nyquist_q_max(self):
        return np.pi / self.dz_nm


def _smoothed_step(z, z0, sigma):
    if sigma > 0.0:
        return 0.5 * (1.0 + erf((z - z0) / (np.sqrt(2.0) * sigma)))
    return (z >= z0).astype(float)


def discretize(stack, delta=None, energy_ev=1330.0, dz_nm=0.01, span=None,
               q_max_nm=10.0):
    """Render stack (+ optional dopant sheet) to a :class:`DensityProfile`.

    Interfaces are smeared with the error function of each layer's top
    roughness.  ``span`` is an explicit ``(z_top, z_bottom)`` pair in nm
    (surface at 0, positive into the sample); by default the grid runs from
    2 nm above the surface to 5 nm below the deeper of the last interface
    and the dopant sheet.  An explicit span that cuts off finite layers,
    less than 5 sigma of the sheet, or less than 3 nm of substrate raises
    :class:`CoverageError`.  dz must satisfy dz <= pi / q_max.
    """
    dz_nm = float(dz_nm)
    if not dz_nm > 0.0:
        raise ConfigError("dz must be positive")
    if dz_nm > np.pi / float(q_max_nm):
        raise SamplingError(
            "dz = %g nm undersamples Q_max = %g nm^-1 (need dz <= %g)"
            % (dz_nm, q_max_nm, np.pi / float(q_max_nm)))

    t_finite = stack.total_finite_thickness
    delta_half = delta.span_halfwidth_nm() if delta is not None else 0.0
    delta_bottom = (delta.depth_nm + delta_half) if delta is not None else 0.0

    if span is None:
        z_top = -2.0
        z_bottom = max(t_finite, delta_bottom) + 5.0
    else:
        z_top, z_bottom = (float(span[0]), float(span[1]))
        if z_top > 0.0:
            raise CoverageError("span must start at or above the surface")
        if z_bottom < t_finite + 3.0:
            raise CoverageError(
                "span ends %.3g nm below surface; need the %.3g nm of finite "
                "layers plus 3 nm of substrate" % (z_bottom, t_finite))
        if delta is not None and z_bottom < delta_bottom:
            raise CoverageError(
                "span ends above the dopant sheet tail (need %.3g nm)"
                % delta_bottom)

    n = int(np.ceil((z_bottom - z_top) / dz_nm)) + 1
    z = z_top + dz_nm * np.arange(n)

    slds = [0.0 + 0.0j] + [xsf.sld(l.material, energy_ev) for l in stack.layers]
    depths = stack.interface_depths()
    rho = np.zeros(n, dtype=complex)
    for i, z_i in enumerate(depths):
        step = slds[i + 1] - slds[i]
        if step != 0.0:
            rho += step * _smoothed_step(z, z_i, float(stack.layers[i].roughness_nm))

    if delta is not None and delta.n2d_nm2 > 0.0:
        amp = xsf.CONSTANTS.r0_nm * delta.contrast(energy_ev) * delta.n2d_nm2
        if delta.shape == SHAPE_DIRAC:
            j = int(np.argmin(np.abs(z - delta.depth_nm)))
            rho[j] += amp / dz_nm
        else:
            rho += amp * delta.shape_values(z - delta.depth_nm)

    return DensityProfile(z0_nm=float(z[0]), dz_nm=dz_nm, rho=rho,
                          energy_ev=float(energy_ev))
