"""Test corpora: elliptic systems with manufactured solutions and random BV data.

Random draws use ``numpy.random.default_rng(seed)`` (the PCG64 generator),
so a given seed reproduces the same corpus on every platform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domains import Disk, Rectangle, unit_disk
from .elliptic import RealEllipticSystem, manufacture_forcing
from .fields import X, Y, Z, ZBAR, ComplexField, as_field, exp
from .pipeline import BVData
from .symmetry import Diffeomorphism, Gauge

__all__ = [
    "ManufacturedCase",
    "manufactured_systems",
    "manufactured_case",
    "rng",
    "random_bv",
    "random_gauge",
    "random_affine",
    "random_constant_data",
    "disk_family",
]

UNIT_SQUARE = Rectangle(0.0, 1.0, 0.0, 1.0)


@dataclass(frozen=True)
class ManufacturedCase:
    name: str
    system: RealEllipticSystem
    u: ComplexField
    v: ComplexField


def rng(seed):
    return np.random.default_rng(seed)


def _case(name, domain, u, v, **coeffs):
    sys = RealEllipticSystem(domain, **coeffs)
    f1, f2 = manufacture_forcing(sys, u, v)
    return ManufacturedCase(name, sys.with_forcing(f1, f2), as_field(u), as_field(v))


def manufactured_systems():
    """Five systems with exact solutions ``(u, v)`` and matching forcings."""
    u1, v1 = X * X - Y * Y, 2 * X * Y
    u2, v2 = exp(X) * Y + X * X, X * Y * Y - exp(-Y)
    return [
        _case("cauchy_riemann", UNIT_SQUARE, u2, v2, a11=1, a22=1),
        _case(
            "constant_anisotropic",
            UNIT_SQUARE,
            exp(X + Y / 2) + u1,
            X * exp(-Y) + v1,
            a11=1,
            a22=4,
            a14=1,
            a23=0.5,
        ),
        _case(
            "variable_alpha",
            UNIT_SQUARE,
            u2,
            v2,
            a11=1,
            a22=1 + X / 2,
            a13=0.3 * Y,
            a14=0.2,
            a23=-0.4,
            a24=X,
        ),
        _case(
            "full_variable",
            UNIT_SQUARE,
            u2,
            v2,
            a11=1 + 0.2 * X * Y,
            a22=1.5 + X * X,
            a12=0.3 * exp(-Y),
            a21=0.2 * X,
            a13=X - Y,
            a14=exp(Y) / 2,
            a23=X * Y,
            a24=-1 + X,
        ),
        _case(
            "disk_skew",
            Disk(0.0, 0.9),
            exp(0.5 * X) * (1 + Y * Y),
            X * Y + 0.5 * Y,
            a11=1.2 + 0.3 * exp(X * Y),
            a22=1.5 + 0.2 * X * Y,
            a12=0.5 * Y,
            a21=-0.2 + 0.1 * X,
            a13=0.4,
            a24=-0.3 * X,
        ),
    ]


def manufactured_case(name) -> ManufacturedCase:
    for case in manufactured_systems():
        if case.name == name:
            return case
    raise KeyError(name)


def _cx(g, scale=1.0, size=None):
    return scale * (g.standard_normal(size) + 1j * g.standard_normal(size))


def random_bv(g, domain=None, mu_max=0.8) -> BVData:
    """Smooth expression data with ``sup |mu| <= mu_max`` on ``domain`` (default the unit disk)."""
    domain = domain or unit_disk()
    x0, x1, y0, y1 = domain.bbox()
    R = max(abs(complex(x, y)) for x in (x0, x1) for y in (y0, y1))
    c = _cx(g, 1.0, 3)
    c = c * (mu_max * g.uniform(0.2, 1.0) / (abs(c[0]) + R * (abs(c[1]) + abs(c[2]))))
    mu = c[0] + c[1] * Z + c[2] * ZBAR
    a = _cx(g, 0.5, 3)
    b = _cx(g, 0.5, 3)
    f = _cx(g, 0.5, 2)
    A = a[0] + a[1] * Z * ZBAR + a[2] * exp(0.5 * Z)
    B = b[0] + b[1] * ZBAR + b[2] * Z * Z
    F = f[0] * exp(ZBAR) + f[1] * X
    return BVData(mu, A, B, F, domain)


def random_gauge(g) -> Gauge:
    """``phi = c exp(p(z, zbar))`` with a random quadratic ``p``: nowhere zero."""
    k = _cx(g, 0.4, 4)
    c = _cx(g, 1.0) + 0.1
    p = k[0] * Z + k[1] * ZBAR + k[2] * Z * ZBAR + k[3] * X * Y
    return Gauge.from_field(c * exp(p))


def random_affine(g, source=None) -> Diffeomorphism:
    a = _cx(g, 1.0)
    a = a / abs(a) * g.uniform(0.5, 2.0)
    b = _cx(g, 1.0)
    b = b / abs(b) * abs(a) * g.uniform(0.0, 0.8)
    c = _cx(g, 0.3)
    return Diffeomorphism.affine(a, b, c, source)


def random_constant_data(g, mu_max=0.9):
    """Constant ``(mu0, B0)`` with ``|mu0| <= mu_max``."""
    mu0 = mu_max * np.sqrt(g.uniform()) * np.exp(2j * np.pi * g.uniform())
    return complex(mu0), complex(_cx(g, 1.0))


def disk_family(t) -> BVData:
    """``(0, 0, t, 0)`` on the unit disk."""
    return BVData(0.0, 0.0, t, 0.0, unit_disk())
