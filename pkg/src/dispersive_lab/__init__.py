"""Numerical laboratory for large-time dispersive scaling of NLS and quantum fluids."""

__version__ = "0.1.0"
