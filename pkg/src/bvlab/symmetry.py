"""Gauge action and diffeomorphism pullback on Beltrami-Vekua data."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .elliptic import sample_points
from .errors import GaugeVanishes, JacobianNonpositive, PointOutsideDomain
from .fields import (
    ComplexField,
    FunctionField,
    X,
    Y,
    Z,
    ZBAR,
    abs2,
    as_field,
    compose,
    conj,
    find_grid,
    sample_grid,
)
from .pipeline import BVData

__all__ = [
    "EPS_PHI",
    "Gauge",
    "Diffeomorphism",
    "apply_gauge",
    "pullback",
    "pullback_parts",
    "conformal_residual",
    "closure_residual",
    "newton_inverse",
]

EPS_PHI = 1e-8
K_GUARD = 1e-14


@dataclass(frozen=True)
class Gauge:
    """Nowhere-zero multiplier ``phi`` with its Wirtinger derivatives."""

    phi: ComplexField
    phi_z: ComplexField
    phi_zbar: ComplexField

    @classmethod
    def from_field(cls, phi) -> "Gauge":
        phi = as_field(phi)
        return cls(phi, phi.dz, phi.dzbar)

    @classmethod
    def constant(cls, c) -> "Gauge":
        return cls(as_field(c), as_field(0), as_field(0))

    def times(self, other: "Gauge") -> "Gauge":
        """The gauge ``self.phi * other.phi``."""
        p, q = self.phi, other.phi
        return Gauge(p * q, self.phi_z * q + p * other.phi_z, self.phi_zbar * q + p * other.phi_zbar)

    def min_abs(self, domain, n=32) -> float:
        xs, ys = sample_points(domain, n)
        return float(np.abs(self.phi(xs, ys)).min()) if xs.size else np.inf

    def boundary_winding(self, domain, n=1024) -> int:
        """Winding number of ``phi`` around the boundary of ``domain``.

        Nonzero means ``phi`` vanishes somewhere inside, even when no sample
        point lands on the zero.  Returns 0 if the boundary cannot be traced.
        """
        try:
            b = domain.boundary_points(n)
            v = self.phi(b.real, b.imag)
        except (NotImplementedError, PointOutsideDomain):
            return 0
        if not np.all(np.isfinite(v)) or np.abs(v).min() == 0:
            return 0
        turns = np.angle(np.roll(v, -1) / v).sum() / (2 * np.pi)
        return int(np.rint(turns))


@dataclass(frozen=True)
class Diffeomorphism:
    """Orientation-preserving map ``Phi`` from ``source`` onto ``target``.

    ``inverse`` is another :class:`Diffeomorphism` (or ``None``).  ``info``
    carries free-form metadata such as solver statistics.
    """

    Phi: ComplexField
    Phi_z: ComplexField
    Phi_zbar: ComplexField
    source: object = None
    target: object = None
    inverse: "Diffeomorphism | None" = None
    info: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_field(cls, Phi, source=None, target=None, inverse=None, info=None):
        Phi = as_field(Phi)
        return cls(Phi, Phi.dz, Phi.dzbar, source, target, inverse, dict(info or {}))

    @classmethod
    def affine(cls, a, b=0.0, c=0.0, source=None) -> "Diffeomorphism":
        """``z -> a z + b conj(z) + c`` with ``|a| > |b|``."""
        a, b, c = complex(a), complex(b), complex(c)
        D = abs(a) ** 2 - abs(b) ** 2
        if not D > 0:
            raise JacobianNonpositive(f"affine map has Jacobian {D:.3e}")
        # inverse: z = (conj(a)(w - c) - b conj(w - c)) / D
        ia, ib = a.conjugate() / D, -b / D
        ic = -(ia * c + ib * c.conjugate())
        inv = cls(ia * Z + ib * ZBAR + ic, as_field(ia), as_field(ib), info={"affine": [ia, ib, ic]})
        fwd = cls(a * Z + b * ZBAR + c, as_field(a), as_field(b), source, None, inv, {"affine": [a, b, c]})
        return fwd.with_source(source) if source is not None else fwd

    @classmethod
    def identity(cls, source=None) -> "Diffeomorphism":
        return cls.affine(1.0, 0.0, 0.0, source)

    def with_source(self, source) -> "Diffeomorphism":
        from .domains import ImageDomain

        target = ImageDomain(source, self) if self.inverse is not None else self.target
        inv = self.inverse
        if inv is not None:
            inv = Diffeomorphism(inv.Phi, inv.Phi_z, inv.Phi_zbar, target, source, None, inv.info)
        return Diffeomorphism(self.Phi, self.Phi_z, self.Phi_zbar, source, target, inv, self.info)

    @property
    def affine_coeffs(self):
        return self.info.get("affine")

    def jacobian(self) -> ComplexField:
        return abs2(self.Phi_z) - abs2(self.Phi_zbar)

    def beltrami_coefficient(self) -> ComplexField:
        return self.Phi_zbar / self.Phi_z

    def then(self, outer: "Diffeomorphism") -> "Diffeomorphism":
        """``outer o self`` with chain-rule derivatives."""
        P = self.Phi
        gz, gzb = compose(outer.Phi_z, P), compose(outer.Phi_zbar, P)
        Phi_z = gz * self.Phi_z + gzb * conj(self.Phi_zbar)
        Phi_zbar = gz * self.Phi_zbar + gzb * conj(self.Phi_z)
        inv = None
        if self.inverse is not None and outer.inverse is not None:
            inv = outer.inverse.then(self.inverse)
        a1, a2 = self.affine_coeffs, outer.affine_coeffs
        info = {}
        if a1 is not None and a2 is not None:
            (p, q, r), (s, t, u) = a1, a2
            # s(pz + q zb + r) + t conj(pz + q zb + r) + u
            info["affine"] = [
                s * p + t * q.conjugate(),
                s * q + t * p.conjugate(),
                s * r + t * r.conjugate() + u,
            ]
        return Diffeomorphism(compose(outer.Phi, P), Phi_z, Phi_zbar, self.source, outer.target, inv, info)

    def check_jacobian(self, n=32):
        if self.source is None:
            return
        xs, ys = sample_points(self.source, n)
        if xs.size == 0:
            return
        jmin = float(self.jacobian()(xs, ys).real.min())
        if not jmin > 0:
            raise JacobianNonpositive(f"min Jacobian {jmin:.3e} on the source domain")

    def inverse_error(self, n=16) -> float:
        """Max of ``|Phi(Psi(w)) - w|`` over sampled ``w`` in the target."""
        if self.inverse is None or self.target is None:
            return np.nan
        xs, ys = sample_points(self.target, n)
        w = xs + 1j * ys
        back = compose(self.Phi, self.inverse.Phi)(xs, ys)
        return float(np.nanmax(np.abs(back - w))) if xs.size else 0.0


def apply_gauge(bv: BVData, g: Gauge, check_n=32, eps=EPS_PHI) -> BVData:
    """Data of the equation satisfied by ``phi * w``."""
    m = g.min_abs(bv.domain, check_n)
    if m < eps:
        raise GaugeVanishes(f"min |phi| = {m:.3e} < {eps:g}")
    k = g.boundary_winding(bv.domain)
    if k != 0:
        raise GaugeVanishes(f"phi winds {k} times around the boundary, so it vanishes inside")
    phi = g.phi
    A = bv.A - g.phi_zbar / phi + bv.mu * g.phi_z / phi
    B = bv.B * phi / conj(phi)
    return BVData(bv.mu, A, B, phi * bv.F, bv.domain)


def pullback_parts(bv: BVData, d: Diffeomorphism):
    """``(mu o Phi, K, J, numerator of mu*)`` as fields on the source."""
    mu_o = compose(bv.mu, d.Phi)
    K = d.Phi_z + mu_o * conj(d.Phi_zbar)
    N = d.Phi_zbar + mu_o * conj(d.Phi_z)
    return mu_o, K, d.jacobian(), N


def pullback(bv: BVData, d: Diffeomorphism, check_n=32, resample_n=None) -> BVData:
    """Data of the equation satisfied by ``w o Phi`` on ``d.source``.

    If ``resample_n`` is given (or the data are grid-backed and the source is
    a rectangle-bounded domain) the result is re-sampled on a grid over the
    source bounding box.
    """
    if d.source is None:
        raise ValueError("pullback needs a diffeomorphism with a source domain")
    d.check_jacobian(check_n)
    mu_o, K, J, N = pullback_parts(bv, d)
    xs, ys = sample_points(d.source, check_n)
    if xs.size and float(np.abs(K(xs, ys)).min()) < K_GUARD:
        raise JacobianNonpositive("K vanishes on the source domain")
    ratio = J / K
    fields = [N / K, ratio * compose(bv.A, d.Phi), ratio * compose(bv.B, d.Phi), ratio * compose(bv.F, d.Phi)]
    if resample_n is None:
        grid = find_grid(bv.mu, bv.A, bv.B, bv.F)
        resample_n = None if grid is None else grid.n
    if resample_n is not None:
        try:
            fields = [sample_grid(f, d.source.bbox(), resample_n) for f in fields]
        except PointOutsideDomain:
            # the source bounding box leaves the data grid; keep lazy composition
            pass
    return BVData(*fields, d.source)


def conformal_residual(bv: BVData, d: Diffeomorphism) -> ComplexField:
    """``(1 - |mu*|^2) - (1 - |mu o Phi|^2) J / |K|^2``; vanishes identically."""
    mu_o, K, J, N = pullback_parts(bv, d)
    return (1 - abs2(N / K)) - (1 - abs2(mu_o)) * J / abs2(K)


def closure_residual(bv: BVData, d: Diffeomorphism) -> ComplexField:
    """``|K|^2 - |Phi_zbar + (mu o Phi) conj(Phi_z)|^2 - (1 - |mu o Phi|^2) J``."""
    mu_o, K, J, N = pullback_parts(bv, d)
    return abs2(K) - abs2(N) - (1 - abs2(mu_o)) * J


def newton_inverse(d: Diffeomorphism, guess=None, iters=30, tol=1e-13) -> FunctionField:
    """Pointwise inverse of ``d.Phi`` by Newton iteration.

    Each step solves ``Phi_z dz + Phi_zbar conj(dz) = w - Phi(z)``.  Points
    where the iteration leaves the domain of the map or fails to converge
    map to NaN.
    """
    guess = as_field(guess) if guess is not None else X + 1j * Y
    Phi, Pz, Pzb = d.Phi, d.Phi_z, d.Phi_zbar

    def inv(x, y):
        w = (np.asarray(x, float) + 1j * np.asarray(y, float)).ravel()
        z = guess(x, y).ravel()
        for _ in range(iters):
            r = w - _eval_nan(Phi, z)
            a, b = _eval_nan(Pz, z), _eval_nan(Pzb, z)
            step = (np.conj(a) * r - b * np.conj(r)) / (np.abs(a) ** 2 - np.abs(b) ** 2)
            z = np.where(np.isfinite(step), z + step, np.nan)
            if np.nanmax(np.abs(step), initial=0.0) < tol:
                break
        res = np.abs(w - _eval_nan(Phi, z))
        z[~(res < 1e-8)] = np.nan
        return z.reshape(np.shape(x))

    return FunctionField(inv, name="newton_inverse")


def _eval_nan(f, z):
    """Evaluate ``f`` at complex points; NaN where undefined."""
    out = np.full(z.shape, np.nan + 0j)
    fin = np.isfinite(z)
    try:
        out[fin] = f(z[fin].real, z[fin].imag)
    except PointOutsideDomain:
        for k in np.flatnonzero(fin):
            try:
                out[k] = f(z[k].real, z[k].imag)
            except PointOutsideDomain:
                pass
    return out
