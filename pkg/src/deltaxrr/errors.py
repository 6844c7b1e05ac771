"""Exception types shared across the toolkit.

Every error raised on purpose derives from :class:`ToolkitError` and carries
an ``exit_code`` so the command line layer can map failures onto its
documented exit codes without string matching.
"""


class ToolkitError(Exception):
    """Base class for all deliberate toolkit failures."""

    exit_code = 1


class ConfigError(ToolkitError):
    """Invalid configuration, argument, or precondition violation."""

    exit_code = 2


class ParseError(ConfigError):
    """Malformed input file. Carries the 1-based line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = "line %d: %s" % (line, message)
        super().__init__(message)
        self.line = line


class TableStructureError(ConfigError):
    """Scattering factor table violates a structural invariant."""


class EnergyRangeError(ConfigError):
    """Requested energy lies outside the tabulated range."""


class DataGapError(ConfigError):
    """Requested energy falls on or between sentinel (unusable) table rows."""


class DomainError(ConfigError):
    """Argument outside its mathematical domain (angle, energy, ...)."""


class SingularityError(ConfigError):
    """Evaluation requested at a singular point (for instance Q = 0)."""


class SamplingError(ConfigError):
    """Grid too coarse for the requested wavevector range (Nyquist)."""


class CoverageError(ConfigError):
    """Spatial or spectral span does not cover the structure it must resolve."""


class GridError(ConfigError):
    """Abscissa grid is not uniform (or otherwise unusable) where required."""


class WindowError(ConfigError):
    """Analysis window is empty, inverted, or outside the data range."""


class CutoffError(ConfigError):
    """Frequency-split cutoff incompatible with the detected layer depth."""


class TableNotFoundError(ToolkitError):
    """A required scattering factor table file is missing."""

    exit_code = 3


class OutputError(ToolkitError):
    """Output location cannot be created or written."""

    exit_code = 3


class NoLayerError(ToolkitError):
    """No buried-layer signal detected above the noise floor.

    ``diagnostics`` holds whatever the detector can report (peak height,
    spectral floor, search range) for the caller to print.
    """

    exit_code = 4

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class EdgeSideError(ToolkitError):
    """Two-energy analysis requested with both energies on one side of the edge."""

    exit_code = 5


class ResonanceBandError(ToolkitError):
    """Measured resonant contrast outside the simulated band.

    ``band`` is the (low, high) interval that the simulation can reach.
    """

    exit_code = 6

    def __init__(self, message, band=None):
        super().__init__(message)
        self.band = band


class FitError(ToolkitError):
    """Least-squares fit failed to produce a usable minimum."""

    exit_code = 1
