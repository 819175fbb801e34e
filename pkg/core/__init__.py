"""
Core simulation modules: couplings, closed-form spectra, time-domain oracle,
dispersive checks and peak extraction.
"""

__version__ = "1.0.0"
