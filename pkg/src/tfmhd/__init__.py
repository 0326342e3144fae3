"""Periodic-box two-fluid MHD solver with Littlewood-Paley blow-up diagnostics."""

from .grid import DOMAIN_LENGTH, Grid3, SpectralField, VectorField, hermitize
from .littlewood_paley import BesovSpec, FilterBank, build_filter_bank
from .operators import (
    curl,
    dealias,
    derivative,
    divergence,
    gradient,
    inner_l2,
    l2_norm,
    laplacian,
    lp_norm_physical,
    nonlinear_product,
    project_leray,
    sobolev_norm,
    transform_forward,
    transform_inverse,
)

__version__ = "0.1.0"

__all__ = [
    "DOMAIN_LENGTH",
    "Grid3",
    "SpectralField",
    "VectorField",
    "hermitize",
    "BesovSpec",
    "FilterBank",
    "build_filter_bank",
    "curl",
    "dealias",
    "derivative",
    "divergence",
    "gradient",
    "inner_l2",
    "l2_norm",
    "laplacian",
    "lp_norm_physical",
    "nonlinear_product",
    "project_leray",
    "sobolev_norm",
    "transform_forward",
    "transform_inverse",
    "__version__",
]
