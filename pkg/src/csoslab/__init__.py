"""Verified numerical engine for the cyclic eight-vertex solid-on-solid model:
exact desk-scale oracle, Bethe-root continuation, and the closed determinant
formulas for partition functions, scalar products, norms, form factors and the
two-point generating function, each cross-checked against the oracle."""

from .elliptic import EllipticContext, bracket, theta1

__all__ = ["EllipticContext", "bracket", "theta1"]

__version__ = "0.1.0"
