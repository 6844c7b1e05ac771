"""Atomic scattering factors, scattering length densities, refractive indices.

Tabulated complex forward-scattering factors f(E) = f1 + i f2 are loaded from
``.nff`` text files (one header line, then ``E  f1  f2`` rows in eV), linearly
interpolated in energy, and combined with number densities into the complex
scattering length density

    rho(E) = r0 * sum_q N_q f_q(E)        [nm^-2]

and the refractive index n(E) = 1 - (lambda^2 / 2 pi) rho(E).  The sign
convention pairs f = f1 + i f2 with the e^{-iQz} transform kernel, so
Im rho >= 0 and Im n <= 0 for absorbing media.

Units throughout: nm, nm^-1, nm^-3, eV.

The table directory is resolved in this order:

1. explicit ``tables_dir`` argument (the command line exposes ``--tables-dir``),
2. the ``DELTAXRR_TABLES`` environment variable,
3. the tables packaged under ``deltaxrr/data/tables``.
"""

import os
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfigError,
    DataGapError,
    DomainError,
    EnergyRangeError,
    ParseError,
    TableNotFoundError,
    TableStructureError,
)

TABLES_ENV_VAR = "DELTAXRR_TABLES"

# f1 entries at or below this value mark rows where the real part is not
# usable (kept in the table so f2 coverage is not lost).
F1_SENTINEL_THRESHOLD = -9000.0

# number densities of the reference materials, nm^-3
SI_NUMBER_DENSITY = 49.94          # crystalline Si, 2.329 g/cm^3
SIO2_SI_NUMBER_DENSITY = 22.1      # amorphous SiO2, 2.20 g/cm^3
SIO2_O_NUMBER_DENSITY = 44.2


@dataclass(frozen=True)
class PhysicalConstants:
    """Physical constants used by the toolkit, in nm / eV units."""

    r0_nm: float = 2.8179403262e-6   # classical electron radius
    hc_ev_nm: float = 1239.841984    # h*c

    def wavelength_nm(self, energy_ev):
        """Photon wavelength in nm for ``energy_ev`` > 0."""
        energy_ev = np.asarray(energy_ev, dtype=float)
        if np.any(energy_ev <= 0.0):
            raise DomainError("photon energy must be positive")
        out = self.hc_ev_nm / energy_ev
        return float(out) if out.ndim == 0 else out


CONSTANTS = PhysicalConstants()


@dataclass(frozen=True)
class ScatteringFactorTable:
    """Tabulated f1/f2 against strictly increasing energy for one element.

    Parameters
    ----------
    element : str
        Element symbol, lowercase ("si", "o", "as").
    energies : ndarray
        Energies in eV, strictly increasing, at least two rows.
    f1, f2 : ndarray
        Real and imaginary parts of the scattering factor per row.  f1 rows
        equal to the sentinel value are retained but unusable; f2 must be
        non-negative everywhere.
    """

    element: str
    energies: np.ndarray
    f1: np.ndarray
    f2: np.ndarray
    f1_usable: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        e = np.asarray(self.energies, dtype=float)
        f1 = np.asarray(self.f1, dtype=float)
        f2 = np.asarray(self.f2, dtype=float)
        if e.ndim != 1 or e.size < 2:
            raise TableStructureError(
                "table for %r needs at least two rows" % (self.element,))
        if f1.shape != e.shape or f2.shape != e.shape:
            raise TableStructureError(
                "table for %r has mismatched column lengths" % (self.element,))
        if not np.all(np.diff(e) > 0.0):
            raise TableStructureError(
                "energies for %r must be strictly increasing" % (self.element,))
        if np.any(f2 < 0.0):
            raise TableStructureError(
                "f2 for %r must be non-negative" % (self.element,))
        usable = f1 > F1_SENTINEL_THRESHOLD
        object.__setattr__(self, "energies", e)
        object.__setattr__(self, "f1", f1)
        object.__setattr__(self, "f2", f2)
        object.__setattr__(self, "f1_usable", usable)

    @property
    def energy_min(self):
        return float(self.energies[0])

    @property
    def energy_max(self):
        return float(self.energies[-1])


def load_nff(source, element):
    """Parse a ``.nff`` stream or path into a :class:`ScatteringFactorTable`.

    ``source`` may be a filesystem path, bytes, a string of file content, or
    a file-like object.  The first line is a header and is skipped.  Each
    following non-empty line must provide three columns ``E f1 f2``; a
    malformed row raises :class:`ParseError` naming its 1-based line number.
    Rows whose energies do not strictly increase raise
    :class:`TableStructureError`.
    """
    text = _read_text(source)
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty table for %r" % (element,), line=1)
    energies, f1s, f2s = [], [], []
    for lineno, raw in enumerate(lines[1:], start=2):
        stripped = raw.strip()
        if not stripped:
            continue
        parts = stripped.split()
        if len(parts) < 3:
            raise ParseError(
                "expected three columns 'E f1 f2', got %d" % len(parts),
                line=lineno)
        try:
            e, f1, f2 = (float(parts[0]), float(parts[1]), float(parts[2]))
        except ValueError:
            raise ParseError("non-numeric value in %r" % stripped, line=lineno)
        energies.append(e)
        f1s.append(f1)
        f2s.append(f2)
    energies = np.array(energies, dtype=float)
    if energies.size >= 2 and not np.all(np.diff(energies) > 0.0):
        bad = int(np.flatnonzero(np.diff(energies) <= 0.0)[0])
        raise TableStructureError(
            "energies must strictly increase (row %g eV followed by %g eV)"
            % (energies[bad], energies[bad + 1]))
    return ScatteringFactorTable(
        element=element,
        energies=energies,
        f1=np.array(f1s, dtype=float),
        f2=np.array(f2s, dtype=float),
    )


def _read_text(source):
    if hasattr(source, "read"):
        data = source.read()
        return data.decode("utf-8") if isinstance(data, bytes) else data
    if isinstance(source, bytes):
        return source.decode("utf-8")
    if isinstance(source, str) and "\n" in source:
        return source
    path = os.fspath(source)
    if not os.path.exists(path):
        raise TableNotFoundError("scattering factor table not found: %s" % path)
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def default_tables_dir():
    """Packaged table directory (lowest-priority fallback)."""
    return os.path.join(os.path.dirname(__file__), "data", "tables")


def resolve_tables_dir(tables_dir=None):
    """Apply the documented resolution order for the table directory."""
    if tables_dir:
        return os.fspath(tables_dir)
    env = os.environ.get(TABLES_ENV_VAR)
    if env:
        return env
    return default_tables_dir()


def load_element(element, tables_dir=None):
    """Load ``<element>.nff`` from the resolved table directory."""
    element = element.lower()
    directory = resolve_tables_dir(tables_dir)
    path = os.path.join(directory, element + ".nff")
    if not os.path.exists(path):
        raise TableNotFoundError(
            "scattering factor table not found: %s" % path)
    return load_nff(path, element)


def scattering_factor(table, energy_ev):
    """Complex f(E) = f1 + i f2, linear interpolation between bracketing rows.

    Energies outside the tabulated range raise :class:`EnergyRangeError`;
    a bracketing row with sentinel f1 raises :class:`DataGapError`.  Exactly
    tabulated energies reproduce their row bit-for-bit.
    """
    e = float(energy_ev)
    grid = table.energies
    if e < grid[0] or e > grid[-1]:
        raise EnergyRangeError(
            "%.6g eV outside tabulated range [%.6g, %.6g] for %r"
            % (e, grid[0], grid[-1], table.element))
    idx = int(np.searchsorted(grid, e))
    if idx < grid.size and grid[idx] == e:
        if not table.f1_usable[idx]:
            raise DataGapError(
                "f1 unusable at %.6g eV for %r" % (e, table.element))
        return complex(table.f1[idx], table.f2[idx])
    lo, hi = idx - 1, idx
    if not (table.f1_usable[lo] and table.f1_usable[hi]):
        raise DataGapError(
            "f1 unusable between %.6g and %.6g eV for %r"
            % (grid[lo], grid[hi], table.element))
    t = (e - grid[lo]) / (grid[hi] - grid[lo])
    f1 = table.f1[lo] + t * (table.f1[hi] - table.f1[lo])
    f2 = table.f2[lo] + t * (table.f2[hi] - table.f2[lo])
    return complex(f1, f2)


def delta_f(dopant, host, energy_ev):
    """Dopant-minus-host scattering factor contrast at one energy."""
    return scattering_factor(dopant, energy_ev) - scattering_factor(host, energy_ev)


@dataclass(frozen=True)
class Material:
    """A homogeneous material as (table, number density) components.

    ``components`` is a tuple of (:class:`ScatteringFactorTable`, N_q) pairs
    with N_q in nm^-3.  At least one component is required; a vacuum is a
    material whose densities are all zero.
    """

    name: str
    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ConfigError("material %r needs at least one component" % (self.name,))
        for table, density in comps:
            if not isinstance(table, ScatteringFactorTable):
                raise ConfigError(
                    "material %r component is not a scattering factor table"
                    % (self.name,))
            if float(density) < 0.0:
                raise ConfigError(
                    "material %r has negative number density" % (self.name,))
        object.__setattr__(self, "components", comps)


def sld(material, energy_ev):
    """Complex scattering length density r0 * sum_q N_q f_q(E), nm^-2."""
    total = 0.0 + 0.0j
    for table, density in material.components:
        density = float(density)
        if density == 0.0:
            continue
        total += density * scattering_factor(table, energy_ev)
    return CONSTANTS.r0_nm * total


def refractive_index(material, energy_ev):
    """Complex refractive index n = 1 - (lambda^2 / 2 pi) rho."""
    lam = CONSTANTS.wavelength_nm(energy_ev)
    return 1.0 - (lam * lam / (2.0 * np.pi)) * sld(material, energy_ev)


def critical_q(material, energy_ev):
    """Critical momentum transfer Q_c = sqrt(16 pi Re rho), nm^-1."""
    return float(np.sqrt(16.0 * np.pi * max(sld(material, energy_ev).real, 0.0)))


def silicon(tables_dir=None, table=None):
    """Crystalline silicon material from the packaged (or given) tables."""
    table = table if table is not None else load_element("si", tables_dir)
    return Material("si", ((table, SI_NUMBER_DENSITY),))


def silica(tables_dir=None, si_table=None, o_table=None):
    """Amorphous SiO2 material from the packaged (or given) tables."""
    si_table = si_table if si_table is not None else load_element("si", tables_dir)
    o_table = o_table if o_table is not None else load_element("o", tables_dir)
    return Material("sio2", ((si_table, SIO2_SI_NUMBER_DENSITY),
                            (o_table, SIO2_O_NUMBER_DENSITY)))


def vacuum(reference_table):
    """Zero-density material (n = 1) reusing ``reference_table``."""
    return Material("vacuum", ((reference_table, 0.0),))
