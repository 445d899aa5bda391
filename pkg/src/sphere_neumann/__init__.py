"""Numerical verification of the spherical Neumann isoperimetric chain."""
