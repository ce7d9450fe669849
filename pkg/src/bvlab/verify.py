"""Verification suites shared by the command line and the test-suite.

A :class:`Check` is one named contract with its measured value and its
tolerance.  Suites return lists of checks; nothing here raises on failure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import corpus
from .fields import compose
from .invariants import mass, theta_density
from .pipeline import (
    bv_residual,
    derive_stages,
    identity_points,
    manufactured_w,
    pipeline_identities,
)
from .symmetry import apply_gauge, closure_residual, conformal_residual, pullback

__all__ = [
    "Check",
    "PROFILES",
    "ORDER_BAND",
    "EXACT_FLOOR",
    "convergence_orders",
    "order_check",
    "identity_checks",
    "manufactured_residual",
    "manufactured_convergence",
    "transport_convergence",
    "gauge_checks",
    "pullback_checks",
    "corpus_suite",
]

# tolerance profiles: algebraic stage identities and the transport identity
PROFILES = {
    "strict": {"identity": 1e-12, "transport": 1e-10, "residual": 1e-10},
    "grid": {"identity": 1e-8, "transport": 1e-2, "residual": 1e-2},
}
ORDER_BAND = (1.7, 2.3)
# errors at or below this level are rounding noise: no order can be measured
EXACT_FLOOR = 1e-12

ALGEBRAIC = (
    "root",
    "cayley_1",
    "cayley_2",
    "matching_U_real",
    "matching_V_real",
    "matching_U_i",
    "matching_V_i",
    "sum_identity",
)


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tolerance: float
    passed: bool
    detail: str = ""

    @classmethod
    def at_most(cls, name, value, tol, detail=""):
        value = float(value)
        return cls(name, value, float(tol), bool(np.isfinite(value) and value <= tol), detail)

    def as_dict(self):
        return {
            "name": self.name,
            "value": self.value,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "detail": self.detail,
        }


def convergence_orders(hs, errors, floor=EXACT_FLOOR):
    """Observed orders ``log(e1/e2) / log(h1/h2)``; ``None`` where both errors are at rounding level."""
    out = []
    for (h1, e1), (h2, e2) in zip(zip(hs, errors), zip(hs[1:], errors[1:])):
        if e1 <= floor and e2 <= floor:
            out.append(None)
        else:
            out.append(float(np.log(e1 / e2) / np.log(h1 / h2)))
    return out


def order_check(name, hs, errors, band=ORDER_BAND, floor=EXACT_FLOOR) -> Check:
    """Every measurable order in ``band``; a sequence entirely at rounding level passes."""
    orders = convergence_orders(hs, errors, floor)
    measured = [o for o in orders if o is not None]
    if not measured:
        return Check(name, 0.0, band[0], True, "exact at every resolution")
    ok = all(band[0] <= o <= band[1] for o in measured) and len(measured) == len(orders)
    worst = min(measured, key=lambda o: -abs(o - 2.0))
    detail = "orders " + ", ".join("exact" if o is None else f"{o:.3f}" for o in orders)
    return Check(name, worst, band[0], ok, detail)


def identity_checks(system, profile="strict", prefix="") -> list:
    st = derive_stages(system)
    xs, ys = identity_points(system)
    ids = pipeline_identities(st, xs, ys)
    tol = PROFILES[profile]
    checks = [Check.at_most(prefix + k, ids[k], tol["identity"]) for k in ALGEBRAIC]
    checks.append(Check.at_most(prefix + "transport", ids["transport"], tol["transport"]))
    checks.append(Check(prefix + "im_lambda_positive", ids["min_im_lambda"], 0.0, ids["min_im_lambda"] > 0))
    checks.append(Check(prefix + "mu_inside_disk", ids["max_abs_mu"], 1.0, ids["max_abs_mu"] < 1))
    return checks


def manufactured_residual(case, n=None) -> float:
    """Max residual of ``U + lambda V`` in the derived BV equation."""
    system = case.system if n is None else case.system.on_grid(n)
    st = derive_stages(system)
    w = manufactured_w(system, st.structure, case.u, case.v)
    xs, ys = identity_points(system)
    return float(np.abs(bv_residual(st.bv, w)(xs, ys)).max())


def _grid_h(system, n):
    x0, x1, _, _ = system.domain.bbox()
    return (x1 - x0) / (n - 1)


def manufactured_convergence(case, ns=(32, 64, 128, 256)):
    """Rows ``(n, h, residual)`` of the grid end-to-end residual."""
    return [(n, _grid_h(case.system, n), manufactured_residual(case, n)) for n in ns]


def transport_convergence(case, ns=(32, 64, 128, 256)):
    rows = []
    for n in ns:
        gs = case.system.on_grid(n)
        st = derive_stages(gs)
        xs, ys = identity_points(gs)
        rows.append((n, _grid_h(case.system, n), pipeline_identities(st, xs, ys)["transport"]))
    return rows


def _max_on(domain, f, n=24):
    from .elliptic import sample_points

    xs, ys = sample_points(domain, n)
    return float(np.abs(f(xs, ys)).max()) if xs.size else 0.0


def gauge_checks(bv, g, tol=1e-12, prefix="") -> list:
    out = apply_gauge(bv, g)
    d = bv.domain
    return [
        Check.at_most(prefix + "mu_unchanged", _max_on(d, out.mu - bv.mu), 0.0),
        Check.at_most(prefix + "abs_B_invariant", _max_on(d, _absdiff(out.B, bv.B)), tol),
        Check.at_most(prefix + "theta_invariant", _max_on(d, theta_density(out) - theta_density(bv)), tol),
    ]


def _absdiff(f, g):
    from .fields import FunctionField

    return FunctionField(lambda x, y: np.abs(f(x, y)) - np.abs(g(x, y)), name="absdiff")


def pullback_checks(bv, d, tol=1e-12, cov_tol=1e-10, prefix="", mass_n=None) -> list:
    src = d.source
    pb = pullback(bv, d)
    cov = theta_density(pb) - d.jacobian() * compose(theta_density(bv), d.Phi)
    checks = [
        Check.at_most(prefix + "closure", _max_on(src, closure_residual(bv, d)), tol),
        Check.at_most(prefix + "conformal", _max_on(src, conformal_residual(bv, d)), tol),
        Check(prefix + "mu_star_inside_disk", _max_on(src, pb.mu), 1.0, _max_on(src, pb.mu) < 1),
        Check.at_most(prefix + "theta_covariance", _max_on(src, cov), cov_tol),
    ]
    if mass_n:
        m1, m2 = mass(bv, mass_n), mass(pb, mass_n, domain=src)
        diff = abs(m1.value - m2.value)
        checks.append(Check.at_most(prefix + "mass_invariance", diff, m1.error_estimate + m2.error_estimate))
    return checks


def corpus_suite(seed=0, profile="strict", draws=10) -> list:
    """Pipeline identities and manufactured residuals on the built-in systems,
    plus gauge and pullback identities on random expression data."""
    tol = PROFILES[profile]
    checks = []
    for case in corpus.manufactured_systems():
        checks += identity_checks(case.system, profile, prefix=f"{case.name}.")
        checks.append(
            Check.at_most(f"{case.name}.manufactured", manufactured_residual(case), tol["residual"])
        )
    g = corpus.rng(seed)
    for k in range(draws):
        bv = corpus.random_bv(g)
        checks += gauge_checks(bv, corpus.random_gauge(g), prefix=f"gauge[{k}].")
        d = corpus.random_affine(g, source=corpus.unit_disk())
        checks += pullback_checks(corpus.random_bv(g, d.target), d, prefix=f"pullback[{k}].")
    return checks
