"""Numerical verification of Carleman estimates for ultrahyperbolic operators."""

__version__ = "0.1.0"
