"""The invariant density, the mass, the zero locus of B and two side checks."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy import ndimage

from .elliptic import sample_points
from .errors import FIdenticallyZero, MuNearUnitCircle, PointOutsideDomain, ResolutionTooSmall
from .fields import ComplexField, FunctionField, Point, abs2, as_field
from .pipeline import EPS_MU, BVData
from .quadrature import cell_grid, integrate, masked_sum
from .symmetry import Gauge, apply_gauge

__all__ = [
    "MassReport",
    "ZeroReport",
    "UniquenessReport",
    "theta_density",
    "mass",
    "zero_count",
    "check_density_uniqueness",
    "functional_residual",
    "f_noninvariance_ratio",
]

DEGENERATE = 1e-14


class MassReport(NamedTuple):
    value: float
    resolution: int
    refined_value: float
    error_estimate: float
    blowup_flag: bool


class ZeroReport(NamedTuple):
    count: int
    locations: list
    identically_zero: bool
    max_abs: float


class UniquenessReport(NamedTuple):
    max_residual: float
    witness_residual: float
    samples: int


def theta_density(bv: BVData, check_n=32, eps=EPS_MU) -> ComplexField:
    """``|B|^2 / (1 - |mu|^2)``, the coefficient of ``dx dy``."""
    xs, ys = sample_points(bv.domain, check_n)
    if xs.size:
        gap = float((1 - np.abs(bv.mu(xs, ys)) ** 2).min())
        if gap < eps:
            raise MuNearUnitCircle(f"1 - |mu|^2 reaches {gap:.3e}")
    return abs2(bv.B) / (1 - abs2(bv.mu))


def _truncated_density(bv, eps):
    def g(x, y):
        m = np.abs(bv.mu(x, y)) ** 2
        gap = 1 - m
        out = np.abs(bv.B(x, y)) ** 2 / np.where(gap < eps, 1.0, gap)
        return np.where(gap < eps, 0.0, out)

    return FunctionField(g, name="theta")


def mass(bv: BVData, n=256, domain=None, eps=EPS_MU) -> MassReport:
    """Integral of the density over ``domain`` (default ``bv.domain``) at ``n`` and ``2n``.

    Points with ``1 - |mu|^2 < eps`` are dropped from the integral and raise
    ``blowup_flag``: the value is then a truncated integral.
    """
    domain = domain or bv.domain
    if n < 4:
        raise ResolutionTooSmall(f"quadrature resolution {n} < 4")
    flag = False
    for k in (n, 2 * n):
        X, Y, mask, _, _ = cell_grid(domain, k)
        gap = 1 - np.abs(bv.mu(X[mask], Y[mask])) ** 2
        flag |= bool(np.any(gap < eps))
    q = integrate(domain, _truncated_density(bv, eps), n)
    v, r = float(q.value.real), float(q.refined.real)
    return MassReport(v, int(n), r, abs(v - r), flag)


# cell boundary walk on the doubled lattice: corners and edge midpoints
_WALK = [(0, 0), (1, 0), (2, 0), (2, 1), (2, 2), (1, 2), (0, 2), (0, 1)]


def zero_count(B, domain, n=128, tol_rel=1e-6) -> ZeroReport:
    """Approximate zero set of ``B`` as connected groups of grid cells.

    A cell is flagged when ``|B|`` falls below ``tol_rel * max|B|`` at its
    center or on its boundary, or when ``B`` winds around ``0`` along the
    cell boundary (which catches simple zeros lying between samples).
    Flagged cells are grouped into 4-connected components; each component
    counts once and is located at the centroid of its cell centers.
    """
    if n < 16:
        raise ResolutionTooSmall(f"zero search needs n >= 16, got {n}")
    B = as_field(B)
    X, Y, mask, hx, hy = cell_grid(domain, n)
    x0, _, y0, _ = domain.bbox()
    lx = x0 + 0.5 * hx * np.arange(2 * n + 1)
    ly = y0 + 0.5 * hy * np.arange(2 * n + 1)
    LX, LY = np.meshgrid(lx, ly, indexing="ij")
    # the lattice may leave the domain of B near the bounding box; keep NaN there
    vals = _eval_nan(B, LX, LY)
    inside_vals = vals[1::2, 1::2][mask]
    bmax = float(np.nanmax(np.abs(inside_vals))) if inside_vals.size else 0.0
    if bmax < DEGENERATE:
        return ZeroReport(0, [], True, bmax)
    thr = tol_rel * bmax
    small = np.abs(vals[1::2, 1::2]) < thr
    winding = np.zeros((n, n))
    ring = [vals[a : a + 2 * n : 2, b : b + 2 * n : 2] for a, b in _WALK]
    for k, cur in enumerate(ring):
        small |= np.abs(cur) < thr
        nxt = ring[(k + 1) % len(ring)]
        with np.errstate(invalid="ignore", divide="ignore"):
            winding += np.angle(nxt / cur)
    wound = np.abs(np.rint(winding / (2 * np.pi))) >= 1
    flagged = mask & (small | wound)
    labels, count = ndimage.label(flagged)
    locations = []
    for k in range(1, count + 1):
        sel = labels == k
        locations.append(Point(float(X[sel].mean()), float(Y[sel].mean())))
    locations.sort(key=lambda p: (p.x, p.y))
    return ZeroReport(int(count), locations, False, bmax)


def _eval_nan(f, X, Y):
    try:
        return f(X, Y)
    except PointOutsideDomain:
        out = np.full(X.shape, np.nan + 0j)
        for idx in np.ndindex(X.shape):
            try:
                out[idx] = f(X[idx], Y[idx])
            except PointOutsideDomain:
                pass
        return out


def functional_residual(H, s, r):
    """``|r H(1 - (1 - s) r) - H(s)|`` for a vectorised ``H``."""
    s, r = np.asarray(s, float), np.asarray(r, float)
    return np.abs(r * H(1 - (1 - s) * r) - H(s))


def check_density_uniqueness(sample_count=1000, seed=0) -> UniquenessReport:
    """Residual of ``r H(1 - (1 - s) r) = H(s)`` for ``H(s) = 1/(1 - s)``.

    Samples ``s`` in ``[0, 1)`` and ``r`` in ``(0, 1/(1 - s)]``.  The witness
    is the constant ``H = 1`` at ``s = 1/2, r = 2``, where the residual is 1.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    rng = np.random.default_rng(seed)
    s = rng.random(sample_count)
    r = (1 - rng.random(sample_count)) / (1 - s)

    res = functional_residual(lambda t: 1 / (1 - t), s, r)
    # constant H at the conformal endpoint r = 1/(1 - s), s = 1/2
    witness = functional_residual(np.ones_like, np.array([0.5]), np.array([2.0]))[0]
    return UniquenessReport(float(res.max()), float(witness), int(sample_count))


def f_noninvariance_ratio(bv: BVData, r, n=128) -> float:
    """``int |F'|^2 / int |F|^2`` after the constant gauge ``phi = r``."""
    r = float(r)
    if not r > 0:
        raise ValueError("r must be positive")
    xs, ys = sample_points(bv.domain, 32)
    if xs.size == 0 or float(np.abs(bv.F(xs, ys)).max()) == 0.0:
        raise FIdenticallyZero("F vanishes at every sampled point")
    gauged = apply_gauge(bv, Gauge.constant(r))
    num = masked_sum(bv.domain, abs2(gauged.F), n).real
    den = masked_sum(bv.domain, abs2(bv.F), n).real
    return float(num / den)
