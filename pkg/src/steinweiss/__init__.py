"""Numerical laboratory for Stein-Weiss inequalities with partial-variable
weights on the upper half space."""
__version__ = "0.1.0"
