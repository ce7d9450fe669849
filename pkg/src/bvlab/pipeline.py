"""From a real elliptic system to Beltrami-Vekua data ``(mu, A, B, F)``.

Every stage returns its own small record so the algebraic identities that
hold between stages can be checked in isolation.  For grid-backed systems
each stage output is re-sampled on the system grid, so derivatives taken by
later stages are finite differences of the stored samples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domains import Domain
from .elliptic import EPS_ELL, RealEllipticSystem, sample_points
from .errors import EllipticityViolation, MuNearUnitCircle
from .fields import ComplexField, GridField, as_field, conj, dx, dy, find_grid, sample_grid, sqrt

__all__ = [
    "EPS_MU",
    "StructureData",
    "Obstruction",
    "CanonicalSystem",
    "FiberVekuaCoeffs",
    "SpectralVekua",
    "BVData",
    "PipelineStages",
    "structure_data",
    "obstruction",
    "canonical_form",
    "fiber_vekua",
    "spectral_vekua",
    "bv_form",
    "derive_stages",
    "derive_bv",
    "bv_residual",
    "manufactured_w",
    "identity_points",
    "pipeline_identities",
]

EPS_MU = 1e-8


@dataclass(frozen=True)
class StructureData:
    alpha: ComplexField
    beta: ComplexField
    Delta: ComplexField
    lam: ComplexField
    mu: ComplexField


@dataclass(frozen=True)
class Obstruction:
    P: ComplexField
    Q: ComplexField
    G1: ComplexField
    G2: ComplexField


@dataclass(frozen=True)
class CanonicalSystem:
    a: ComplexField
    b: ComplexField
    c: ComplexField
    d: ComplexField
    f: ComplexField
    g: ComplexField
    btilde: ComplexField
    dtilde: ComplexField


@dataclass(frozen=True)
class FiberVekuaCoeffs:
    A0: ComplexField
    A1: ComplexField
    B0: ComplexField
    B1: ComplexField
    F0: ComplexField
    F1: ComplexField


@dataclass(frozen=True)
class SpectralVekua:
    A_lambda: ComplexField
    B_lambda: ComplexField
    F_lambda: ComplexField


@dataclass(frozen=True)
class BVData:
    """Coefficients of ``w_zbar - mu w_z + A w + B conj(w) = F`` on ``domain``."""

    mu: ComplexField
    A: ComplexField
    B: ComplexField
    F: ComplexField
    domain: Domain

    def __post_init__(self):
        for name in ("mu", "A", "B", "F"):
            object.__setattr__(self, name, as_field(getattr(self, name)))

    def max_abs_mu(self, n=32):
        xs, ys = sample_points(self.domain, n)
        return float(np.abs(self.mu(xs, ys)).max()) if xs.size else 0.0

    def validate(self, n=32, eps=EPS_MU):
        m = self.max_abs_mu(n)
        if m > 1 - eps:
            raise MuNearUnitCircle(f"sup |mu| = {m:.12g} exceeds 1 - {eps:g}")
        return self

    def evaluate(self, x, y):
        return tuple(getattr(self, k)(x, y) for k in ("mu", "A", "B", "F"))


@dataclass(frozen=True)
class PipelineStages:
    system: RealEllipticSystem
    structure: StructureData
    obstruction: Obstruction
    canonical: CanonicalSystem
    fiber: FiberVekuaCoeffs
    spectral: SpectralVekua
    bv: BVData


def _settler(grid):
    if grid is None:
        return lambda f: as_field(f)

    def settle(f):
        f = as_field(f)
        if isinstance(f, GridField) and f.same_grid(grid):
            return f
        return sample_grid(f, grid.rect, grid.n)

    return settle


def _check_points(domain, grid, n=32):
    if grid is None:
        return sample_points(domain, n)
    X, Y = grid.nodes()
    inside = domain.contains(X, Y)
    return X[inside], Y[inside]


def structure_data(sys: RealEllipticSystem, check_n=32, eps=EPS_ELL) -> StructureData:
    """Ratios ``alpha, beta``, discriminant, upper root ``lambda`` and ``mu``."""
    grid = sys.grid()
    settle = _settler(grid)
    alpha = settle(sys.a22 / sys.a11)
    beta = settle(-(sys.a12 + sys.a21) / sys.a11)
    Delta = settle(4 * alpha - beta * beta)
    xs, ys = _check_points(sys.domain, grid, check_n)
    if xs.size:
        dmin = float(Delta(xs, ys).real.min())
        if not dmin > eps:
            raise EllipticityViolation(f"discriminant 4*alpha - beta^2 reaches {dmin:.3e}")
    lam = settle((-beta + 1j * sqrt(Delta)) / 2)
    mu = settle((lam - 1j) / (lam + 1j))
    return StructureData(alpha, beta, Delta, lam, mu)


def obstruction(sd: StructureData, grid=None) -> Obstruction:
    settle = _settler(grid if grid is not None else find_grid(sd.alpha, sd.beta))
    al, be, De = sd.alpha, sd.beta, sd.Delta
    P = settle(dx(al) - al * dy(be))
    Q = settle(dx(be) + dy(al) - be * dy(be))
    G1 = settle((be * P - 2 * al * Q) / De)
    G2 = settle((2 * P - be * Q) / De)
    return Obstruction(P, Q, G1, G2)


def canonical_form(sys: RealEllipticSystem, sd: StructureData, ob: Obstruction) -> CanonicalSystem:
    """Coefficients of the system in the variables ``U = a22 u, V = v - a12 u``."""
    settle = _settler(sys.grid())
    a11, a12, a21, a22 = sys.a11, sys.a12, sys.a21, sys.a22
    a13, a14, a23, a24 = sys.a13, sys.a14, sys.a23, sys.a24
    al, be = sd.alpha, sd.beta
    s1 = a13 + a12 * a14 - dy(a12)
    a = settle(s1 / a11 - dx(a22) / a22)
    b = settle(al * a14)
    c = settle((a23 + a12 * a24 + dx(a12) - dy(a22)) / a22 - (a12 + a21) / (a11 * a22) * s1)
    d = settle(a24 + be * a14)
    f = settle(al * sys.f1)
    g = settle(sys.f2 + be * sys.f1)
    return CanonicalSystem(a, b, c, d, f, g, settle(b - ob.G1), settle(d - ob.G2))


def fiber_vekua(cs: CanonicalSystem, sd: StructureData) -> FiberVekuaCoeffs:
    settle = _settler(find_grid(cs.a, sd.alpha))
    al, be, De = sd.alpha, sd.beta, sd.Delta
    sigma = cs.a - cs.dtilde
    tau = al * cs.c - cs.btilde
    k = 2 * tau - be * sigma
    A1 = settle(k / (2 * De))
    A0 = settle((cs.a + cs.dtilde) / 4 + be * k / (4 * De))
    B0 = settle(sigma / 4 - be * k / (4 * De))
    B1 = settle((cs.c * De - k) / (2 * De))
    return FiberVekuaCoeffs(A0, A1, B0, B1, settle(cs.f / 2), settle(cs.g / 2))


def spectral_vekua(fv: FiberVekuaCoeffs, sd: StructureData) -> SpectralVekua:
    """Image of the fiber equation under the evaluation ``i -> lambda``."""
    settle = _settler(find_grid(fv.A0, sd.lam))
    lam = sd.lam
    return SpectralVekua(
        settle(fv.A0 + fv.A1 * lam),
        settle(fv.B0 + fv.B1 * lam),
        settle(fv.F0 + fv.F1 * lam),
    )


def bv_form(sv: SpectralVekua, sd: StructureData, domain, check_n=32) -> BVData:
    settle = _settler(find_grid(sv.A_lambda, sd.mu))
    k = 1 - sd.mu
    bv = BVData(sd.mu, settle(k * sv.A_lambda), settle(k * sv.B_lambda), settle(k * sv.F_lambda), domain)
    return bv.validate(check_n)


def derive_stages(sys: RealEllipticSystem, check_n=32) -> PipelineStages:
    sd = structure_data(sys, check_n)
    ob = obstruction(sd, sys.grid())
    cs = canonical_form(sys, sd, ob)
    fv = fiber_vekua(cs, sd)
    sv = spectral_vekua(fv, sd)
    bv = bv_form(sv, sd, sys.domain, check_n)
    return PipelineStages(sys, sd, ob, cs, fv, sv, bv)


def derive_bv(sys: RealEllipticSystem, check_n=32) -> BVData:
    return derive_stages(sys, check_n).bv


def bv_residual(bv: BVData, w) -> ComplexField:
    """``w_zbar - mu w_z + A w + B conj(w) - F``."""
    w = as_field(w)
    return w.dzbar - bv.mu * w.dz + bv.A * w + bv.B * conj(w) - bv.F


def manufactured_w(sys: RealEllipticSystem, sd: StructureData, u, v) -> ComplexField:
    """``U + lambda V`` with ``U = a22 u`` and ``V = v - a12 u``."""
    u, v = as_field(u), as_field(v)
    w = sys.a22 * u + sd.lam * (v - sys.a12 * u)
    grid = sys.grid()
    return w if grid is None else sample_grid(w, grid.rect, grid.n)


def identity_points(sys: RealEllipticSystem, n=24):
    """Check points: domain samples, or interior grid nodes for grid systems."""
    grid = sys.grid()
    if grid is None:
        return sample_points(sys.domain, n)
    X, Y = grid.nodes()
    X, Y = X[1:-1, 1:-1], Y[1:-1, 1:-1]
    inside = sys.domain.contains(X, Y)
    return X[inside], Y[inside]


def pipeline_identities(st: PipelineStages, xs, ys) -> dict:
    """Max pointwise residual of each stage identity at the given points."""
    sd, ob, cs, fv, sv = st.structure, st.obstruction, st.canonical, st.fiber, st.spectral

    def ev(f):
        return as_field(f)(xs, ys)

    al, be, lam, mu = ev(sd.alpha), ev(sd.beta), ev(sd.lam), ev(sd.mu)
    a, c, bt, dt = ev(cs.a), ev(cs.c), ev(cs.btilde), ev(cs.dtilde)
    A0, A1, B0, B1 = ev(fv.A0), ev(fv.A1), ev(fv.B0), ev(fv.B1)
    transport = ev(dx(sd.lam)) + lam * ev(dy(sd.lam)) - (ev(ob.G1) + ev(ob.G2) * lam)

    def mx(v):
        return float(np.abs(v).max()) if np.size(v) else 0.0

    return {
        "root": mx(lam * lam + be * lam + al),
        "cayley_1": mx((1 + 1j * lam) / (1 - 1j * lam) + mu),
        "cayley_2": mx(2 / (1 - 1j * lam) - (1 - mu)),
        "transport": mx(transport),
        "matching_U_real": mx(A0 + B0 - a / 2),
        "matching_V_real": mx(-al * A1 - be * B0 + al * B1 - bt / 2),
        "matching_U_i": mx(A1 + B1 - c / 2),
        "matching_V_i": mx(A0 - be * A1 - B0 - dt / 2),
        "sum_identity": mx(ev(sv.A_lambda) + ev(sv.B_lambda) - (a + c * lam) / 2),
        "min_im_lambda": float(lam.imag.min()) if lam.size else 1.0,
        "max_abs_mu": mx(mu),
    }
