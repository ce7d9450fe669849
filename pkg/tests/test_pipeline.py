import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bvlab import corpus
from bvlab.domains import Rectangle, unit_disk
from bvlab.elliptic import RealEllipticSystem, sample_points
from bvlab.errors import EllipticityViolation, MuNearUnitCircle
from bvlab.fields import X, Y, Z, Const, as_field, exp
from bvlab.pipeline import (
    BVData,
    CanonicalSystem,
    StructureData,
    bv_form,
    bv_residual,
    canonical_form,
    derive_bv,
    derive_stages,
    fiber_vekua,
    identity_points,
    obstruction,
    pipeline_identities,
    spectral_vekua,
    structure_data,
)
from bvlab.verify import ALGEBRAIC, manufactured_convergence, manufactured_residual, transport_convergence

SQ = Rectangle(0, 1, 0, 1)
PTS = sample_points(SQ, 12)


def val(f):
    return as_field(f)(*PTS)


def close(f, target, tol=1e-12):
    return np.abs(val(f) - target).max() <= tol


def _constant_structure(alpha, beta):
    return structure_data(RealEllipticSystem(SQ, a11=1, a22=alpha, a12=-beta))


def _canonical(a=0, b=0, c=0, d=0, f=0, g=0):
    c_ = [Const(v) for v in (a, b, c, d, f, g)]
    return CanonicalSystem(*c_, c_[1], c_[3])


def test_structure_cauchy_riemann():
    sd = structure_data(RealEllipticSystem(SQ, a11=1, a22=1))
    assert close(sd.alpha, 1) and close(sd.beta, 0) and close(sd.Delta, 4)
    assert close(sd.lam, 1j) and close(sd.mu, 0)


def test_structure_anisotropic():
    sd = structure_data(RealEllipticSystem(SQ, a11=1, a22=4))
    assert close(sd.alpha, 4) and close(sd.lam, 2j) and close(sd.mu, 1 / 3)


def test_structure_degenerate_raises():
    with pytest.raises(EllipticityViolation):
        structure_data(RealEllipticSystem(SQ, a11=1, a22=1, a12=-1, a21=-1))


def test_obstruction_rigid():
    ob = obstruction(_constant_structure(2.0, 0.5))
    assert close(ob.G1, 0) and close(ob.G2, 0)


def test_obstruction_variable_alpha():
    ob = obstruction(structure_data(RealEllipticSystem(SQ, a11=1, a22=1 + X / 2)))
    xs, _ = PTS
    assert close(ob.P, 0.5) and close(ob.Q, 0) and close(ob.G1, 0)
    assert close(ob.G2, 1 / (4 + 2 * xs))


def test_obstruction_variable_beta_transport():
    # alpha = 1, beta = y/2: Delta = 4 - y^2/4 > 0 on the square
    sys = RealEllipticSystem(SQ, a11=1, a22=1, a12=-Y / 4, a21=-Y / 4)
    st_ = derive_stages(sys)
    # P = alpha_x - alpha beta_y = -1/2
    assert close(st_.obstruction.P, -0.5)
    assert pipeline_identities(st_, *PTS)["transport"] <= 1e-12


def test_canonical_cauchy_riemann():
    f1, f2 = X * Y, exp(Y)
    cs = derive_stages(RealEllipticSystem(SQ, a11=1, a22=1, f1=f1, f2=f2)).canonical
    for k in (cs.a, cs.b, cs.c, cs.d):
        assert close(k, 0)
    assert close(cs.f, val(f1)) and close(cs.g, val(f2))


def test_canonical_anisotropic():
    sys = RealEllipticSystem(SQ, a11=1, a22=4, a14=1, f1=X, f2=Y)
    sd = structure_data(sys)
    cs = canonical_form(sys, sd, obstruction(sd))
    assert close(cs.b, 4) and close(cs.d, 0) and close(cs.a, 0) and close(cs.c, 0)
    assert close(cs.f, 4 * PTS[0]) and close(cs.g, PTS[1])


def test_canonical_variable_a22():
    sys = RealEllipticSystem(SQ, a11=1, a22=1 + X / 2)
    sd = structure_data(sys)
    ob = obstruction(sd)
    cs = canonical_form(sys, sd, ob)
    assert close(cs.a, -1 / (2 + PTS[0]))
    assert close(cs.btilde, val(cs.b) - val(ob.G1), 0.0)
    assert close(cs.dtilde, val(cs.d) - val(ob.G2), 0.0)


def test_fiber_zero_coefficients():
    fv = fiber_vekua(_canonical(f=2, g=-4), _constant_structure(3, 1))
    for k in (fv.A0, fv.A1, fv.B0, fv.B1):
        assert close(k, 0)
    assert close(fv.F0, 1) and close(fv.F1, -2)


def _matching(fv, cs, sd):
    al, be = val(sd.alpha), val(sd.beta)
    A0, A1, B0, B1 = (val(k) for k in (fv.A0, fv.A1, fv.B0, fv.B1))
    return max(
        np.abs(A0 + B0 - val(cs.a) / 2).max(),
        np.abs(-al * A1 - be * B0 + al * B1 - val(cs.btilde) / 2).max(),
        np.abs(A1 + B1 - val(cs.c) / 2).max(),
        np.abs(A0 - be * A1 - B0 - val(cs.dtilde) / 2).max(),
    )


def test_fiber_anisotropic_hand_values():
    sd = _constant_structure(4, 0)
    cs = _canonical(b=4)
    fv = fiber_vekua(cs, sd)
    assert close(fv.A1, -0.25) and close(fv.A0, 0) and close(fv.B0, 0) and close(fv.B1, 0.25)
    assert _matching(fv, cs, sd) <= 1e-12


@settings(max_examples=50, deadline=None)
@given(*(st.floats(-5, 5) for _ in range(4)))
def test_fiber_matching_property(a, b, c, d):
    sd = _constant_structure(2, 1)
    cs = _canonical(a=a, b=b, c=c, d=d)
    assert _matching(fiber_vekua(cs, sd), cs, sd) <= 1e-12 * (1 + abs(a) + abs(b) + abs(c) + abs(d))


def test_spectral_zero_fiber():
    sd = _constant_structure(2, 1)
    sv = spectral_vekua(fiber_vekua(_canonical(f=1, g=3), sd), sd)
    lam = val(sd.lam)
    assert close(sv.A_lambda, 0) and close(sv.B_lambda, 0)
    assert close(sv.F_lambda, (1 + lam * 3) / 2)


def test_spectral_cauchy_riemann_collapse():
    sd = _constant_structure(1, 0)
    fv = fiber_vekua(_canonical(a=1, b=2, c=-1, d=0.5), sd)
    sv = spectral_vekua(fv, sd)
    assert close(sv.A_lambda, val(fv.A0) + 1j * val(fv.A1))
    assert close(sv.B_lambda, val(fv.B0) + 1j * val(fv.B1))


def test_spectral_sum_anisotropic():
    sd = _constant_structure(4, 0)
    sv = spectral_vekua(fiber_vekua(_canonical(b=4), sd), sd)
    assert close(sv.A_lambda + sv.B_lambda, 0)


def test_bv_cauchy_riemann_homogeneous():
    bv = derive_bv(RealEllipticSystem(SQ, a11=1, a22=1))
    for k in (bv.mu, bv.A, bv.B, bv.F):
        assert close(k, 0)


def test_bv_constant_principal_part_forcing():
    f1, f2 = X + Y, X * Y
    bv = derive_bv(RealEllipticSystem(SQ, a11=1, a22=4, f1=f1, f2=f2))
    mu0, lam, al, be = 1 / 3, 2j, 4, 0
    assert close(bv.mu, mu0) and close(bv.A, 0) and close(bv.B, 0)
    assert close(bv.F, (1 - mu0) * (al * val(f1) + lam * (val(f2) + be * val(f1))) / 2)


def test_bv_mu_zero_equals_spectral():
    sys = RealEllipticSystem(SQ, a11=1, a22=1, a13=X, a24=Y, a14=0.3)
    st_ = derive_stages(sys)
    assert close(st_.bv.A, val(st_.spectral.A_lambda), 0.0)
    assert close(st_.bv.B, val(st_.spectral.B_lambda), 0.0)


def test_bv_anisotropic_chain_nonzero():
    bv = derive_bv(RealEllipticSystem(SQ, a11=1, a22=4, a14=1))
    assert close(bv.mu, 1 / 3)
    assert np.abs(val(bv.A)).min() > 0.1 and np.abs(val(bv.B)).min() > 0.1


def test_bv_form_rejects_mu_near_circle():
    sd = _constant_structure(4, 0)
    sv = spectral_vekua(fiber_vekua(_canonical(), sd), sd)
    bad = StructureData(sd.alpha, sd.beta, sd.Delta, sd.lam, Const(1 - 1e-10))
    with pytest.raises(MuNearUnitCircle):
        bv_form(sv, bad, SQ)


def test_bv_residual_holomorphic():
    bv = BVData(0, 0, 0, 0, unit_disk())
    assert close(bv_residual(bv, Z**2), 0, 0.0)


def test_bv_residual_constant_w():
    bv = BVData(0, 0, 0.7, 0, unit_disk())
    assert close(bv_residual(bv, 1), 0.7, 0.0)


@pytest.mark.parametrize("case", corpus.manufactured_systems(), ids=lambda c: c.name)
def test_identities_expression(case):
    st_ = derive_stages(case.system)
    ids = pipeline_identities(st_, *identity_points(case.system))
    for k in ALGEBRAIC:
        assert ids[k] <= 1e-12, k
    assert ids["transport"] <= 1e-10
    assert ids["min_im_lambda"] > 0 and ids["max_abs_mu"] < 1


def test_variable_alpha_has_obstruction():
    st_ = derive_stages(corpus.manufactured_case("variable_alpha").system)
    assert np.abs(val(st_.obstruction.G2)).min() > 0.1


@pytest.mark.parametrize("case", corpus.manufactured_systems(), ids=lambda c: c.name)
def test_manufactured_expression(case):
    assert manufactured_residual(case) <= 1e-10


@pytest.mark.parametrize("case", corpus.manufactured_systems(), ids=lambda c: c.name)
def test_manufactured_grid_second_order(case):
    rows = manufactured_convergence(case, (32, 64, 128))
    for (_, h1, e1), (_, h2, e2) in zip(rows, rows[1:]):
        assert 1.7 <= np.log(e1 / e2) / np.log(h1 / h2) <= 2.3


@pytest.mark.parametrize("name", ["variable_alpha", "full_variable"])
def test_transport_grid_second_order(name):
    rows = transport_convergence(corpus.manufactured_case(name), (32, 64, 128))
    for (_, h1, e1), (_, h2, e2) in zip(rows, rows[1:]):
        assert 1.7 <= np.log(e1 / e2) / np.log(h1 / h2) <= 2.3


@pytest.mark.parametrize("name", ["constant_anisotropic", "full_variable"])
def test_grid_algebraic_identities(name):
    gs = corpus.manufactured_case(name).system.on_grid(64)
    ids = pipeline_identities(derive_stages(gs), *identity_points(gs))
    for k in ALGEBRAIC:
        assert ids[k] <= 1e-8, k
