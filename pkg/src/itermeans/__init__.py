"""Iterative means from series of inverse iterates, invariance checking for
mean-type mappings, and residual scans of the associated composite
functional equation."""

from ._core import BACKEND
from .config import GridSpec, NumericsConfig, DEFAULT_CONFIG
from .expr import FuncExpr, ValidationReport, parse, validate_bijection
from .maps import DisplacementClass, MonotoneMap, classify_displacement, compose, iterate
from .series import (
    SeriesReport,
    build_f_from_g,
    reflexivity_residual,
    series_map,
    series_report,
    shifted_series,
    sum_inverse_iterates,
)
from .means import (
    GroupoidOp,
    MeanCheckReport,
    MeanObject,
    addition,
    arithmetic_mean,
    check_mean,
    custom_op,
    make_composition_mean,
    make_gwqam,
    make_iterative_mean,
    make_iterative_mean_from_r,
    make_product_mean,
    multiplication,
    scaled_arithmetic,
    shift_symmetry_reduction,
)
from .invariance import (
    CompositeEquationReport,
    CompositeTriple,
    DerivativeObstructionReport,
    GaussTrace,
    build_generator_chain,
    build_triple,
    check_bisymmetry,
    composite_equation_residual,
    derivative_obstruction,
    gauss_iterate,
    invariance_residual,
)

__version__ = "0.1.0"
