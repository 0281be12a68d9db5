"""Spectral curve, Riemann-Hilbert checks and Monte Carlo for the Gaussian matrix model with an external source."""

__version__ = "0.1.0"

from . import curve, errors, evolution, mc, rh
from .curve import CurveSpec, validate_spec

__all__ = ["CurveSpec", "curve", "errors", "evolution", "mc", "rh", "validate_spec", "__version__"]
