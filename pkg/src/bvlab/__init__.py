"""bvlab: Beltrami-Vekua forms of planar elliptic systems, their gauge and
diffeomorphism invariants, and the reduction to Vekua normal form."""

from .domains import Disk, ImageDomain, Rectangle, unit_disk
from .elliptic import RealEllipticSystem, manufacture_forcing, validate_ellipticity
from .fields import (
    ZBAR,
    ComplexField,
    GridField,
    Point,
    X,
    Y,
    Z,
    abs2,
    compose,
    conj,
    eval_field,
    exp,
    sample_grid,
    sqrt,
    wirtinger,
)
from .invariants import check_density_uniqueness, f_noninvariance_ratio, mass, theta_density, zero_count
from .pipeline import BVData, bv_residual, derive_bv, derive_stages
from .quadrature import integrate
from .reduction import (
    cauchy_transform,
    gauge_away_A,
    normal_form,
    reduce_to_vekua,
    uniformize_constant,
    uniformize_numeric,
)
from .symmetry import Diffeomorphism, Gauge, apply_gauge, closure_residual, conformal_residual, pullback

__version__ = "0.1.0"

__all__ = [
    "BVData",
    "ComplexField",
    "Diffeomorphism",
    "Disk",
    "Gauge",
    "GridField",
    "ImageDomain",
    "Point",
    "RealEllipticSystem",
    "Rectangle",
    "X",
    "Y",
    "Z",
    "ZBAR",
    "abs2",
    "apply_gauge",
    "bv_residual",
    "cauchy_transform",
    "check_density_uniqueness",
    "closure_residual",
    "compose",
    "conformal_residual",
    "conj",
    "derive_bv",
    "derive_stages",
    "eval_field",
    "exp",
    "f_noninvariance_ratio",
    "gauge_away_A",
    "integrate",
    "manufacture_forcing",
    "mass",
    "normal_form",
    "pullback",
    "reduce_to_vekua",
    "sample_grid",
    "sqrt",
    "theta_density",
    "uniformize_constant",
    "uniformize_numeric",
    "unit_disk",
    "validate_ellipticity",
    "wirtinger",
    "zero_count",
]
