"""PEM fuel-cell MPPT simulation lab."""

__version__ = "0.1.0"
