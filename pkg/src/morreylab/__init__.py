"""Desk-scale numerical verification of harmonic-analysis estimates:
dyadic decompositions, maximal and sharp operators, Muckenhoupt weights,
Morrey and mixed norms, potential kernels, and the spectral solvers that
exercise the elliptic/parabolic a-priori bounds."""

from . import dyadic, grid, maximal, norms, potentials, solvers, testfunctions, weights
from .grid import Field, GridSpec, Structure, make_grid, make_structure

__all__ = [
    "Field",
    "GridSpec",
    "Structure",
    "make_grid",
    "make_structure",
    "grid",
    "dyadic",
    "maximal",
    "weights",
    "norms",
    "potentials",
    "solvers",
    "testfunctions",
]

__version__ = "0.1.0"
