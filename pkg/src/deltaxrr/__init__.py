"""Specular X-ray reflectivity of buried dopant sheets.

Forward simulation (kinematic and dynamical) and inversion (single-energy
Fourier filtering and two-energy resonant differencing) for dilute dopant
delta-layers buried in a crystalline host.
"""

__version__ = "0.1.0"

from . import dataio, extract, forward, model, numfit, xsf  # noqa: F401
from .errors import ToolkitError  # noqa: F401
