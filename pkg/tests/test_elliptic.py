import numpy as np
import pytest

from bvlab import corpus
from bvlab.domains import Rectangle
from bvlab.elliptic import (
    RealEllipticSystem,
    manufacture_forcing,
    sample_points,
    system_residual,
    validate_ellipticity,
)
from bvlab.fields import X, Y, Z, Const

SQ = Rectangle(0, 1, 0, 1)


def _max(f, domain=SQ, n=16):
    xs, ys = sample_points(domain, n)
    return float(np.abs(f(xs, ys)).max())


def test_cauchy_riemann_is_elliptic():
    rep = validate_ellipticity(RealEllipticSystem(SQ, a11=1, a22=1), 16)
    assert rep.min_a11 == 1 and rep.min_discriminant == 1 and rep.passed


def test_anisotropic_discriminant():
    rep = validate_ellipticity(RealEllipticSystem(SQ, a11=1, a22=4), 16)
    assert rep.min_discriminant == 4 and rep.passed


def test_degenerate_system_fails():
    rep = validate_ellipticity(RealEllipticSystem(SQ, a11=1, a22=1, a12=1, a21=1), 16)
    assert rep.min_discriminant == 0 and not rep.passed


def test_ellipticity_needs_resolution():
    with pytest.raises(ValueError):
        validate_ellipticity(RealEllipticSystem(SQ, a11=1, a22=1), 3)


def test_complex_coefficient_rejected():
    with pytest.raises(ValueError):
        RealEllipticSystem(SQ, a11=1, a22=Z)


def test_forcing_harmonic_pair():
    f1, f2 = manufacture_forcing(RealEllipticSystem(SQ, a11=1, a22=1), X * X - Y * Y, 2 * X * Y)
    assert _max(f1) == 0 and _max(f2) == 0


def test_forcing_linear():
    f1, f2 = manufacture_forcing(RealEllipticSystem(SQ, a11=1, a22=1), X, Const(0))
    assert _max(f1 - 1) == 0 and _max(f2) == 0


def test_forcing_anisotropic():
    f1, f2 = manufacture_forcing(RealEllipticSystem(SQ, a11=1, a22=4), Y, X)
    assert _max(f1) == 0 and _max(f2 - 5) == 0


@pytest.mark.parametrize("case", corpus.manufactured_systems(), ids=lambda c: c.name)
def test_manufactured_closure_expression(case):
    r1, r2 = system_residual(case.system, case.u, case.v)
    assert _max(r1, case.system.domain) <= 1e-12
    assert _max(r2, case.system.domain) <= 1e-12


@pytest.mark.parametrize("case", corpus.manufactured_systems()[1:4], ids=lambda c: c.name)
def test_manufactured_closure_grid(case):
    from bvlab.fields import sample_grid

    errs = []
    for n in (33, 65, 129):
        gs = case.system.on_grid(n)
        u, v = (sample_grid(w, SQ, n) for w in (case.u, case.v))
        r1, r2 = system_residual(gs, u, v)
        t = np.linspace(0, 1, n)[1:-1]
        gx, gy = np.meshgrid(t, t, indexing="ij")
        errs.append(max(np.abs(r1(gx, gy)).max(), np.abs(r2(gx, gy)).max()))
    for e1, e2 in zip(errs, errs[1:]):
        assert 1.7 <= np.log2(e1 / e2) <= 2.3
