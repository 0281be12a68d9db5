"""Spectral curve of the Gaussian matrix model with an external source."""

from .branch import BranchPointSet, branch_points, count_real_branch_points
from .cuts import CutStructure, cut_structure, edge_constants, gamma_crossing_points, mass_between
from .density import DensityProfile, density, density_profile, in_support, xi0
from .lambdas import (
    LambdaValue,
    OrderingPoint,
    OrderingReport,
    check_ordering,
    h_fn,
    lambda0,
    lambda_constants,
    lambda_fn,
    lambda_values,
    resolve_sheet,
    standard_lattice,
)
from .primitive import primitive
from .sheets import reference_point, xi_branch, xi_sheets
from .spec import CurveSpec, as_fraction, d2x_dz2, dx_dz, fiber_roots, validate_spec, x_of_z

__all__ = [
    "BranchPointSet",
    "CurveSpec",
    "CutStructure",
    "DensityProfile",
    "LambdaValue",
    "OrderingPoint",
    "OrderingReport",
    "as_fraction",
    "branch_points",
    "check_ordering",
    "count_real_branch_points",
    "cut_structure",
    "d2x_dz2",
    "density",
    "density_profile",
    "dx_dz",
    "edge_constants",
    "fiber_roots",
    "gamma_crossing_points",
    "h_fn",
    "in_support",
    "lambda0",
    "lambda_constants",
    "lambda_fn",
    "lambda_values",
    "mass_between",
    "primitive",
    "reference_point",
    "resolve_sheet",
    "standard_lattice",
    "validate_spec",
    "x_of_z",
    "xi0",
    "xi_branch",
    "xi_sheets",
]
