"""Exception hierarchy shared by all bvlab modules."""


class BVLabError(Exception):
    """Base class; ``stage`` names the operation that failed."""

    stage = "bvlab"

    def __init__(self, message, stage=None):
        super().__init__(message)
        if stage is not None:
            self.stage = stage


class PointOutsideDomain(BVLabError):
    stage = "eval_field"


class GridTooCoarse(BVLabError):
    stage = "wirtinger"


class ResolutionTooSmall(BVLabError):
    stage = "integrate"


class DerivativeUnavailable(BVLabError):
    stage = "wirtinger"


class DomainUnbounded(BVLabError):
    stage = "integrate"


class EllipticityViolation(BVLabError):
    stage = "structure_data"


class MuNearUnitCircle(BVLabError):
    stage = "bv_form"


class GaugeVanishes(BVLabError):
    stage = "apply_gauge"


class JacobianNonpositive(BVLabError):
    stage = "pullback"


class FIdenticallyZero(BVLabError):
    stage = "f_noninvariance_ratio"


class MuNotZero(BVLabError):
    stage = "gauge_away_A"


class NotAUniformizer(BVLabError):
    stage = "reduce_to_vekua"


class MuTooLarge(BVLabError):
    stage = "uniformize_numeric"


class ZOnBoundary(BVLabError):
    stage = "cauchy_transform"


class SchemaInvalid(BVLabError):
    stage = "schema"
