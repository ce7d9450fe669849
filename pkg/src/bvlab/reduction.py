"""Reduction of Beltrami-Vekua data to Vekua normal form.

One Beltrami solve (closed form for constant ``mu``, an experimental FFT
iteration otherwise) straightens the principal part; one Cauchy transform
removes ``A`` by the gauge ``exp(T A)``.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy import signal

from .domains import ImageDomain, Rectangle
from .elliptic import sample_points
from .errors import (
    MuNearUnitCircle,
    MuNotZero,
    MuTooLarge,
    NotAUniformizer,
    PointOutsideDomain,
    ZOnBoundary,
)
from .fields import GridField, Point, as_field, compose, conj, exp
from .pipeline import EPS_MU, BVData
from .quadrature import cell_grid, interior_mask
from .symmetry import Diffeomorphism, Gauge, apply_gauge, newton_inverse, pullback

__all__ = [
    "CauchyValue",
    "GaugeAwayResult",
    "NormalFormResult",
    "cauchy_transform",
    "cauchy_transform_grid",
    "interior_max",
    "gauge_away_A",
    "uniformize_constant",
    "uniformize_numeric",
    "beltrami_residual",
    "reduce_to_vekua",
    "reduction_residuals",
    "normal_form",
]

MU_ZERO_TOL = 1e-12
UNIFORMIZER_TOL = 1e-8
NUMERIC_MU_GATE = 0.5
DEFAULT_MARGIN = 0.1


class CauchyValue(NamedTuple):
    value: complex
    refined: complex
    error_estimate: float


class GaugeAwayResult(NamedTuple):
    gauge: Gauge
    bv: BVData
    T: GridField


class NormalFormResult(NamedTuple):
    Phi: Diffeomorphism
    phi: Gauge
    bv_normal: BVData
    residuals: dict


# -- Cauchy transform ---------------------------------------------------------------
def _check_target(domain, p):
    if not domain.bounded:
        from .errors import DomainUnbounded

        raise DomainUnbounded("the Cauchy transform needs a bounded domain")
    if not domain.contains_point(p):
        b = domain.boundary_points(4096)
        if np.abs(b - p.z).min() < 1e-9:
            raise ZOnBoundary(f"target {p.z} lies on the boundary")
        raise PointOutsideDomain(f"target {p.z} is outside the domain")


# squared radius 12.25 is never a lattice distance, so symmetric pairs stay together
NEAR_CELLS = 3.5


def _F(w, ref):
    # -i (w log w - w), an antiderivative with mixed derivative 1/w; the branch
    # cut of the logarithm points along -ref, away from the region being integrated
    rot = np.exp(1j * np.angle(ref))
    with np.errstate(divide="ignore", invalid="ignore"):
        logw = np.log(w / rot) + 1j * np.angle(ref)
        out = -1j * (w * logw - w)
    return np.where(w == 0, 0.0, out)


def _rect_integrals(z, x0, x1, y0, y1):
    """``int int dx dy / (zeta - z)`` over rectangles not containing ``z`` in their interior."""
    ref = 0.5 * (x0 + x1) + 0.5j * (y0 + y1) - z
    ref = np.where(ref == 0, 1.0, ref)
    c = [_F(x + 1j * y - z, ref) for x, y in ((x1, y1), (x0, y1), (x1, y0), (x0, y0))]
    return c[0] - c[1] - c[2] + c[3]


def cell_kernel_integral(z, x0, x1, y0, y1) -> complex:
    """Exact ``int int dx dy / (zeta - z)`` over the rectangle ``[x0, x1] x [y0, y1]``.

    The rectangle is cut at ``z`` so that every piece has ``z`` on its
    boundary at most; each piece then sees a single branch of the logarithm.
    """
    z = complex(z)
    xs = sorted({x0, min(max(z.real, x0), x1), x1})
    ys = sorted({y0, min(max(z.imag, y0), y1), y1})
    total = 0j
    for a, b in zip(xs, xs[1:]):
        for c, d in zip(ys, ys[1:]):
            total += complex(_rect_integrals(z, np.array(a), np.array(b), np.array(c), np.array(d)))
    return total


def _cauchy_sum(A, domain, z, n):
    X, Y, mask, hx, hy = cell_grid(domain, n)
    x0, _, y0, _ = domain.bbox()
    i = int(np.clip(np.floor((z.real - x0) / hx), 0, n - 1))
    j = int(np.clip(np.floor((z.imag - y0) / hy), 0, n - 1))
    # cells near z: product integration, A at the center against the exact kernel
    near = np.abs(X + 1j * Y - z) <= NEAR_CELLS * max(hx, hy)
    near[i, j] = True
    far = mask & ~near
    zeta = X[far] + 1j * Y[far]
    s = np.sum(A(X[far], Y[far]) / (zeta - z)) * hx * hy
    sel = mask & near
    sel[i, j] = False
    cx, cy = X[sel], Y[sel]
    if cx.size:
        I = _rect_integrals(z, cx - hx / 2, cx + hx / 2, cy - hy / 2, cy + hy / 2)
        s += np.sum(A(cx, cy) * I)
    if mask[i, j]:
        # the cell holding z: A frozen at z
        cx, cy = X[i, j], Y[i, j]
        I = cell_kernel_integral(z, cx - hx / 2, cx + hx / 2, cy - hy / 2, cy + hy / 2)
        s += complex(A(np.array(z.real), np.array(z.imag))) * I
    return complex(-s / np.pi)


def cauchy_transform(A, domain, z, n=256) -> CauchyValue:
    """``-(1/pi) int A(zeta) / (zeta - z)`` by the masked midpoint rule.

    Cells within a few spacings of ``z`` use product integration: ``A`` at
    the cell center times the exact integral of the kernel over the cell
    (``A(z)`` for the cell holding ``z``).  This keeps the rule accurate
    wherever ``z`` sits inside its cell, including on a cell corner.
    ``error_estimate`` is the difference between ``n`` and ``2n`` cells.
    """
    A = as_field(A)
    p = Point.of(z)
    _check_target(domain, p)
    v1 = _cauchy_sum(A, domain, p.z, n)
    v2 = _cauchy_sum(A, domain, p.z, 2 * n)
    return CauchyValue(v1, v2, abs(v1 - v2))


def cauchy_transform_grid(A, domain, n=256) -> GridField:
    """``T A`` at all ``n x n`` cell centers of the bounding box, by FFT convolution.

    ``A`` is evaluated only at centers inside ``domain``; the self-cell is
    skipped exactly as in :func:`cauchy_transform`.
    """
    if not domain.bounded:
        from .errors import DomainUnbounded

        raise DomainUnbounded("the Cauchy transform needs a bounded domain")
    A = as_field(A)
    X, Y, mask, hx, hy = cell_grid(domain, n)
    vals = np.zeros((n, n), dtype=complex)
    vals[mask] = A(X[mask], Y[mask])
    d = np.arange(-(n - 1), n)
    DI, DJ = np.meshgrid(d, d, indexing="ij")
    with np.errstate(divide="ignore", invalid="ignore"):
        # entry (p - q) holds 1 / (zeta_q - z_p)
        kern = -1.0 / (DI * hx + 1j * DJ * hy)
    kern[n - 1, n - 1] = 0.0
    T = -signal.fftconvolve(vals, kern, mode="valid") * hx * hy / np.pi
    return GridField(X[0, 0], X[-1, 0], Y[0, 0], Y[0, -1], T)


def interior_max(f, domain, n=256, margin=DEFAULT_MARGIN) -> float:
    """Max of ``|f|`` over cell centers at distance ``>= margin`` from the boundary."""
    X, Y, mask, hx, hy = cell_grid(domain, n)
    core = interior_mask(mask, hx, hy, margin)
    if not core.any():
        raise ValueError("margin leaves no interior cells")
    return float(np.abs(as_field(f)(X[core], Y[core])).max())


def _max_abs_mu(bv, n=32):
    xs, ys = sample_points(bv.domain, n)
    return float(np.abs(bv.mu(xs, ys)).max()) if xs.size else 0.0


def gauge_away_A(bv: BVData, n=256) -> GaugeAwayResult:
    """Gauge by ``phi = exp(T A)`` so that the new ``A`` is approximately zero."""
    m = _max_abs_mu(bv)
    if m > MU_ZERO_TOL:
        raise MuNotZero(f"sup |mu| = {m:.3e}; uniformize first")
    T = cauchy_transform_grid(bv.A, bv.domain, n)
    g = Gauge.from_field(exp(T))
    return GaugeAwayResult(g, apply_gauge(bv, g), T)


# -- Beltrami uniformization ----------------------------------------------------------
def uniformize_constant(mu0) -> Diffeomorphism:
    """``Phi(z) = z + mu0 conj(z)``, which solves ``Phi_zbar = mu0 Phi_z``."""
    mu0 = complex(mu0)
    if abs(mu0) > 1 - EPS_MU:
        raise MuNearUnitCircle(f"|mu0| = {abs(mu0):.12g} is too close to 1")
    d = Diffeomorphism.affine(1.0, mu0, 0.0)
    d.info["uniformizer"] = "constant"
    return d


def beltrami_residual(Phi: Diffeomorphism, mu, domain, n=32) -> float:
    """Max of ``|Phi_zbar - mu Phi_z|`` over sample points of ``domain``."""
    xs, ys = sample_points(domain, n)
    if xs.size == 0:
        return 0.0
    r = Phi.Phi_zbar(xs, ys) - as_field(mu)(xs, ys) * Phi.Phi_z(xs, ys)
    return float(np.abs(r).max())


def _smooth_step(t):
    # C-infinity transition from 0 (t <= 0) to 1 (t >= 1)
    t = np.clip(t, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        b = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1 - t, 1.0)), 0.0)
    return a / (a + b)


def taper(x, y, rect, width=0.15):
    """Cutoff equal to 1 away from the rectangle edges and 0 near them."""
    x0, x1, y0, y1 = rect
    wx, wy = width * (x1 - x0), width * (y1 - y0)
    gx = _smooth_step((x - x0 - 0.25 * wx) / wx) * _smooth_step((x1 - x - 0.25 * wx) / wx)
    gy = _smooth_step((y - y0 - 0.25 * wy) / wy) * _smooth_step((y1 - y - 0.25 * wy) / wy)
    return gx * gy


def uniformize_numeric(mu, rect, n=256, max_iter=200, tol=1e-10, width=0.15) -> Diffeomorphism:
    """Experimental periodic FFT solver for ``Phi_zbar = mu Phi_z`` on ``rect``.

    ``mu`` is multiplied by a smooth cutoff that vanishes near the edges.  The
    map is ``Phi = z + m conj(z) + f`` with ``f`` periodic; ``q = Phi_zbar``
    is found from the fixed point ``q = mu (1 + S(q - mean q))`` where ``S``
    is the periodic Beurling transform.  Derivatives of the returned map are
    finite differences; ``info`` reports iterations and the Beltrami residual.
    """
    if hasattr(rect, "bbox"):
        rect = rect.bbox()
    x0, x1, y0, y1 = map(float, rect)
    Lx, Ly = x1 - x0, y1 - y0
    xs = x0 + Lx * np.arange(n) / n
    ys = y0 + Ly * np.arange(n) / n
    Xp, Yp = np.meshgrid(xs, ys, indexing="ij")
    mu = as_field(mu)
    raw = mu(Xp, Yp)
    sup = float(np.abs(raw).max())
    if sup > NUMERIC_MU_GATE:
        raise MuTooLarge(f"sup |mu| = {sup:.3f} exceeds {NUMERIC_MU_GATE}")
    m_t = raw * taper(Xp, Yp, (x0, x1, y0, y1), width)

    kx = 2 * np.pi * np.fft.fftfreq(n, d=Lx / n)
    ky = 2 * np.pi * np.fft.fftfreq(n, d=Ly / n)
    KX, KY = np.meshgrid(kx, ky, indexing="ij")
    # d/dz <-> (i/2)(kx - i ky), d/dzbar <-> (i/2)(kx + i ky)
    sym_zb = 0.5j * (KX + 1j * KY)
    sym_z = 0.5j * (KX - 1j * KY)
    with np.errstate(divide="ignore", invalid="ignore"):
        S = np.where(sym_zb != 0, sym_z / sym_zb, 0.0)
        inv_zb = np.where(sym_zb != 0, 1.0 / sym_zb, 0.0)

    q = m_t.copy()
    it, step = 0, np.inf
    for it in range(1, max_iter + 1):
        m = q.mean()
        h0 = q - m
        q_new = m_t * (1 + np.fft.ifft2(S * np.fft.fft2(h0)))
        step = float(np.abs(q_new - q).max())
        q = q_new
        if step < tol:
            break
    m = q.mean()
    f = np.fft.ifft2(inv_zb * np.fft.fft2(q - m))

    # close the periodic grid so the samples cover the whole rectangle
    fp = np.pad(f, ((0, 1), (0, 1)), mode="wrap")
    gx = x0 + Lx * np.arange(n + 1) / n
    gy = y0 + Ly * np.arange(n + 1) / n
    GX, GY = np.meshgrid(gx, gy, indexing="ij")
    Zg = GX + 1j * GY
    Phi = GridField(x0, x1, y0, y1, Zg + m * np.conj(Zg) + fp)
    mu_t = GridField(x0, x1, y0, y1, mu(GX, GY) * taper(GX, GY, (x0, x1, y0, y1), width))
    d = Diffeomorphism.from_field(Phi, source=Rectangle(x0, x1, y0, y1))
    inner = (slice(1, -1), slice(1, -1))
    res = np.abs(d.Phi_zbar.values - mu_t.values * d.Phi_z.values)[inner]
    info = {
        "uniformizer": "numeric",
        "iterations": it,
        "last_step": step,
        "converged": bool(step < tol),
        "residual": float(res.max()),
        "mean_dzbar": complex(m),
        "tapered_mu": mu_t,
    }
    # Newton inverse seeded with the inverse of the affine part z + m conj(z)
    D = 1 - abs(m) ** 2
    Xv = as_field(Diffeomorphism.affine(1.0, m).inverse.Phi)
    psi = newton_inverse(d, guess=Xv)
    J = d.jacobian()
    inv = Diffeomorphism(
        psi,
        compose(conj(d.Phi_z) / J, psi),
        compose(-d.Phi_zbar / J, psi),
        None,
        d.source,
        None,
        {"uniformizer": "numeric-inverse", "affine_jacobian": D},
    )
    return Diffeomorphism(d.Phi, d.Phi_z, d.Phi_zbar, d.source, None, inv, info)


# -- reduction ------------------------------------------------------------------------
def _with_source(Phi: Diffeomorphism, domain) -> Diffeomorphism:
    if Phi.source is domain and Phi.target is not None:
        return Phi
    return Phi.with_source(domain)


def _inverse_on_image(Phi: Diffeomorphism, domain):
    """``(Phi anchored on domain, Psi from Phi(domain) back to domain)``."""
    if Phi.inverse is None:
        raise NotAUniformizer("the uniformizer needs an inverse")
    Phi = _with_source(Phi, domain)
    image = ImageDomain(domain, Phi)
    inv = Phi.inverse
    Psi = Diffeomorphism(inv.Phi, inv.Phi_z, inv.Phi_zbar, image, domain, None, inv.info)
    return Phi, Psi


def _is_numeric(Phi):
    return Phi.info.get("uniformizer") == "numeric"


def reduce_to_vekua(bv: BVData, Phi: Diffeomorphism, n=32, tol=UNIFORMIZER_TOL) -> BVData:
    """Vekua data ``(0, conj(Psi_zeta) (A, B, F) o Psi)`` on ``Phi(domain)``.

    ``Psi`` is the inverse of ``Phi``.  On the exact path ``Phi`` must solve
    ``Phi_zbar = mu Phi_z`` to ``tol``; numeric maps carry their own residual.
    """
    if not _is_numeric(Phi):
        r = beltrami_residual(Phi, bv.mu, bv.domain, n)
        if r > tol:
            raise NotAUniformizer(f"Beltrami residual {r:.3e} exceeds {tol:g}")
    _, Psi = _inverse_on_image(Phi, bv.domain)
    w = conj(Psi.Phi_z)
    P = Psi.Phi
    return BVData(
        0.0,
        w * compose(bv.A, P),
        w * compose(bv.B, P),
        w * compose(bv.F, P),
        Psi.source,
    )


def reduction_residuals(bv: BVData, Phi: Diffeomorphism, n=32) -> dict:
    """Compare the Vekua coefficients with the generic pullback by the inverse."""
    _, Psi = _inverse_on_image(Phi, bv.domain)
    vek = reduce_to_vekua(bv, Phi, n, tol=np.inf)
    gen = pullback(bv, Psi, check_n=n, resample_n=None)
    xs, ys = sample_points(Psi.source, n)
    ok = np.isfinite(Psi.Phi(xs, ys))
    xs, ys = xs[ok], ys[ok]

    def mx(f):
        return float(np.abs(f(xs, ys)).max()) if xs.size else 0.0

    return {
        "beltrami": beltrami_residual(Phi, bv.mu, bv.domain, n),
        "mu": mx(gen.mu),
        "A": mx(gen.A - vek.A),
        "B": mx(gen.B - vek.B),
        "F": mx(gen.F - vek.F),
    }


def _constant_mu(bv, n=32, tol=1e-12):
    xs, ys = sample_points(bv.domain, n)
    vals = bv.mu(xs, ys)
    mu0 = complex(vals[0]) if vals.size else 0j
    if vals.size and float(np.abs(vals - mu0).max()) > tol:
        raise ValueError("the constant path needs a constant mu")
    return mu0


def normal_form(bv: BVData, path="constant", n=256, margin=DEFAULT_MARGIN, numeric_n=256) -> NormalFormResult:
    """One Beltrami solve, then one Cauchy transform: data ``(0, ~0, B~, F~)``.

    The gauge on the original domain is ``phi = exp((T A') o Phi)`` where
    ``A'`` is the lower-order coefficient after uniformization.
    """
    if path == "constant":
        Phi = uniformize_constant(_constant_mu(bv))
    elif path == "numeric":
        x0, x1, y0, y1 = bv.domain.bbox()
        px, py = 0.25 * (x1 - x0), 0.25 * (y1 - y0)
        Phi = uniformize_numeric(bv.mu, (x0 - px, x1 + px, y0 - py, y1 + py), numeric_n)
    else:
        raise ValueError(f"unknown path {path!r}")
    Phi, Psi = _inverse_on_image(Phi, bv.domain)
    vek = reduce_to_vekua(bv, Phi)
    checks = reduction_residuals(bv, Phi)
    T = cauchy_transform_grid(vek.A, vek.domain, n)
    normal = apply_gauge(vek, Gauge.from_field(exp(T)))
    phi = Gauge.from_field(exp(compose(T, Phi.Phi)))
    recycled = pullback(apply_gauge(bv, phi), Psi, resample_n=None)
    residuals = {
        "beltrami": checks["beltrami"],
        "mu": checks["mu"],
        "vekua_vs_pullback": max(checks["A"], checks["B"], checks["F"]),
        "A": interior_max(normal.A, vek.domain, n, margin),
        "A_recycled": interior_max(recycled.A, vek.domain, n, margin),
    }
    if _is_numeric(Phi):
        residuals["beltrami"] = Phi.info["residual"]
    return NormalFormResult(Phi, phi, normal, residuals)
