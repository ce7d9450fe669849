"""Real first-order planar elliptic systems in skeleton form.

The system for real unknowns ``u, v`` is::

    -v_y + a11 u_x + a12 u_y + a13 u + a14 v = f1
     v_x + a21 u_x + a22 u_y + a23 u + a24 v = f2
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .domains import Domain
from .fields import ComplexField, as_field, dx, dy, find_grid, sample_grid
from .quadrature import cell_grid

__all__ = [
    "COEFF_NAMES",
    "RealEllipticSystem",
    "EllipticityReport",
    "validate_ellipticity",
    "manufacture_forcing",
    "system_residual",
    "sample_points",
]

COEFF_NAMES = ("a11", "a12", "a13", "a14", "a21", "a22", "a23", "a24")
EPS_ELL = 1e-10
REALITY_TOL = 1e-12


def sample_points(domain, n):
    """Cell centers of an ``n x n`` box partition that lie inside ``domain``."""
    X, Y, mask, _, _ = cell_grid(domain, n)
    return X[mask], Y[mask]


@dataclass(frozen=True)
class RealEllipticSystem:
    domain: Domain
    a11: ComplexField
    a22: ComplexField
    a12: ComplexField = 0.0
    a21: ComplexField = 0.0
    a13: ComplexField = 0.0
    a14: ComplexField = 0.0
    a23: ComplexField = 0.0
    a24: ComplexField = 0.0
    f1: ComplexField = 0.0
    f2: ComplexField = 0.0
    check_n: int = field(default=8, compare=False)

    def __post_init__(self):
        for name in COEFF_NAMES + ("f1", "f2"):
            object.__setattr__(self, name, as_field(getattr(self, name)))
        if self.check_n:
            self.check_reality(self.check_n)

    def coefficient(self, name) -> ComplexField:
        return getattr(self, name)

    def coefficients(self):
        return {name: getattr(self, name) for name in COEFF_NAMES}

    def with_forcing(self, f1, f2) -> "RealEllipticSystem":
        return replace(self, f1=as_field(f1), f2=as_field(f2))

    def grid(self):
        """The grid leaf carried by the coefficients, if any."""
        return find_grid(*(getattr(self, n) for n in COEFF_NAMES + ("f1", "f2")))

    def on_grid(self, n, rect=None) -> "RealEllipticSystem":
        """Copy with every coefficient and forcing sampled on an ``n x n`` grid."""
        rect = rect or self.domain.bbox()
        kw = {name: sample_grid(getattr(self, name), rect, n) for name in COEFF_NAMES + ("f1", "f2")}
        return replace(self, **kw)

    def check_reality(self, n=8):
        xs, ys = sample_points(self.domain, n)
        if xs.size == 0:
            return
        for name in COEFF_NAMES + ("f1", "f2"):
            im = np.abs(getattr(self, name)(xs, ys).imag).max()
            if im > REALITY_TOL:
                raise ValueError(f"coefficient {name} is not real (|Im| = {im:.3e})")


class EllipticityReport(NamedTuple):
    min_a11: float
    min_discriminant: float
    passed: bool


def validate_ellipticity(sys: RealEllipticSystem, n=32, eps=EPS_ELL) -> EllipticityReport:
    """Sampled minima of ``a11`` and ``a11 a22 - (a12 + a21)^2 / 4``."""
    if n < 4:
        raise ValueError("ellipticity sampling needs n >= 4")
    xs, ys = sample_points(sys.domain, n)
    a11 = sys.a11(xs, ys).real
    a22 = sys.a22(xs, ys).real
    s = (sys.a12(xs, ys) + sys.a21(xs, ys)).real
    disc = a11 * a22 - 0.25 * s * s
    m11, md = float(a11.min()), float(disc.min())
    return EllipticityReport(m11, md, bool(m11 > eps and md > eps))


def manufacture_forcing(sys: RealEllipticSystem, u, v):
    """Forcings ``(f1, f2)`` for which ``(u, v)`` solves ``sys`` exactly."""
    u, v = as_field(u), as_field(v)
    ux, uy, vx, vy = dx(u), dy(u), dx(v), dy(v)
    f1 = -vy + sys.a11 * ux + sys.a12 * uy + sys.a13 * u + sys.a14 * v
    f2 = vx + sys.a21 * ux + sys.a22 * uy + sys.a23 * u + sys.a24 * v
    return f1, f2


def system_residual(sys: RealEllipticSystem, u, v):
    """The two equation residuals for a candidate solution ``(u, v)``."""
    g1, g2 = manufacture_forcing(sys, u, v)
    return g1 - sys.f1, g2 - sys.f2
