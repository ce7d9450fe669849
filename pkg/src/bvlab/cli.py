"""Command-line driver: ``bvlab <subcommand> ...``.

Every subcommand writes ``report.json`` (sorted keys, no timestamps),
``summary.txt`` and, where tabular, a CSV file into ``--out-dir``.  The exit
status is 0 when every contract passes, 1 when one fails and 2 on an input
or stage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys

from . import corpus
from .errors import BVLabError, SchemaInvalid
from .fields import Point
from .invariants import check_density_uniqueness, f_noninvariance_ratio, mass, zero_count
from .pipeline import derive_stages, identity_points, pipeline_identities
from .reduction import cauchy_transform, normal_form
from .serialize import (
    bv_from_json,
    bv_to_json,
    domain_from_json,
    dumps,
    field_from_json,
    load_json,
    system_from_json,
    transform_from_json,
)
from .symmetry import Diffeomorphism, Gauge, apply_gauge, pullback
from .verify import (
    ALGEBRAIC,
    PROFILES,
    Check,
    convergence_orders,
    corpus_suite,
    gauge_checks,
    manufactured_convergence,
    order_check,
    pullback_checks,
)

SCENARIO_KINDS = ("derive", "mass", "gauge", "pullback", "reduce", "verify-suite", "convergence")
MASS_REL_TOL = 2e-2


class Report:
    """Collects checks, payload entries and CSV tables for one run."""

    def __init__(self, command):
        self.command = command
        self.checks = []
        self.data = {}
        self.tables = {}

    def add(self, *checks):
        self.checks.extend(checks)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def to_json(self):
        return {
            "command": self.command,
            "passed": self.passed,
            "checks": [c.as_dict() for c in self.checks],
            "failures": [c.name for c in self.checks if not c.passed],
            "data": self.data,
        }

    def summary(self):
        lines = [f"{self.command}: {'PASS' if self.passed else 'FAIL'} ({len(self.checks)} checks)"]
        for c in self.checks:
            tag = "ok  " if c.passed else "FAIL"
            extra = f"  [{c.detail}]" if c.detail else ""
            lines.append(f"  {tag} {c.name}: {c.value:.6g} (tol {c.tolerance:.3g}){extra}")
        return "\n".join(lines) + "\n"


def emit_report(report: Report, out_dir) -> list:
    """Write report.json, summary.txt and one CSV per table; return the paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    p = os.path.join(out_dir, "report.json")
    with open(p, "w") as fh:
        fh.write(dumps(report.to_json()))
    paths.append(p)
    p = os.path.join(out_dir, "summary.txt")
    with open(p, "w") as fh:
        fh.write(report.summary())
    paths.append(p)
    for name, (header, rows) in sorted(report.tables.items()):
        p = os.path.join(out_dir, f"{name}.csv")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
        with open(p, "w") as fh:
            fh.write(buf.getvalue())
        paths.append(p)
    return paths


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def _write_json(out_dir, name, obj):
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, name), "w") as fh:
        fh.write(dumps(obj))


# -- subcommands ------------------------------------------------------------------------
def cmd_derive(args, rep):
    system = system_from_json(load_json(args.system))
    if args.grid:
        system = system.on_grid(args.grid)
    st = derive_stages(system)
    xs, ys = identity_points(system)
    ids = pipeline_identities(st, xs, ys)
    # sampled coefficients only reach the transport identity to O(h^2)
    profile = args.tolerance_profile or ("grid" if args.grid else "strict")
    tol = PROFILES[profile]
    for k in ALGEBRAIC:
        rep.add(Check.at_most(k, ids[k], tol["identity"]))
    rep.add(Check.at_most("transport", ids["transport"], tol["transport"]))
    rep.add(Check("im_lambda_positive", ids["min_im_lambda"], 0.0, ids["min_im_lambda"] > 0))
    rep.add(Check("mu_inside_disk", ids["max_abs_mu"], 1.0, ids["max_abs_mu"] < 1))
    rep.data["identities"] = ids
    _write_json(args.out_dir, "bv.json", bv_to_json(st.bv))


def cmd_mass(args, rep):
    rows = []
    if args.bv:
        bv = bv_from_json(load_json(args.bv))
        m = mass(bv, args.n)
        rep.data["mass"] = m._asdict()
        rep.add(Check("no_blowup", float(m.blowup_flag), 0.0, not m.blowup_flag))
        rows.append(("", m.value, m.error_estimate, ""))
    for t in args.t or []:
        m = mass(corpus.disk_family(t), args.n)
        exact = math.pi * t * t
        err = abs(m.value - exact)
        rep.add(
            Check.at_most(f"mass[t={t:g}]", err / exact, MASS_REL_TOL, f"closed form pi t^2 = {exact:.6f}")
        )
        rows.append((t, m.value, m.error_estimate, err))
    rep.tables["mass"] = (("t", "mass", "estimate", "error"), rows)


def cmd_gauge(args, rep):
    bv = bv_from_json(load_json(args.bv))
    g = transform_from_json(load_json(args.transform))
    if not isinstance(g, Gauge):
        raise SchemaInvalid("gauge needs a transform of type 'gauge'")
    rep.add(*gauge_checks(bv, g))
    _write_json(args.out_dir, "bv.json", bv_to_json(apply_gauge(bv, g)))


def cmd_pullback(args, rep):
    bv = bv_from_json(load_json(args.bv))
    d = transform_from_json(load_json(args.transform))
    if not isinstance(d, Diffeomorphism):
        raise SchemaInvalid("pullback needs a diffeomorphism transform")
    src = domain_from_json(load_json(args.source)) if args.source else None
    if src is None:
        # pull back onto the preimage of the data domain
        inv = d.inverse
        src = (
            Diffeomorphism(inv.Phi, inv.Phi_z, inv.Phi_zbar, None, None, d, inv.info)
            .with_source(bv.domain)
            .target
        )
    d = d.with_source(src)
    rep.add(*pullback_checks(bv, d, mass_n=args.n))
    _write_json(args.out_dir, "bv.json", bv_to_json(pullback(bv, d)))


def cmd_reduce(args, rep):
    bv = bv_from_json(load_json(args.bv))
    res = normal_form(bv, path=args.path, n=args.n)
    r = res.residuals
    rep.data["residuals"] = r
    if args.path == "constant":
        rep.add(Check.at_most("beltrami", r["beltrami"], 1e-12))
        rep.add(Check.at_most("mu", r["mu"], 1e-10))
    rep.add(Check.at_most("A_interior", r["A"], 5e-2))
    rep.add(Check.at_most("A_recycled_interior", r["A_recycled"], 5e-2))
    m0, m1 = mass(bv, args.n), mass(res.bv_normal, args.n)
    rep.data["mass"] = {"original": m0._asdict(), "normal": m1._asdict()}
    rep.add(Check.at_most("mass_preserved", abs(m0.value - m1.value), m0.error_estimate + m1.error_estimate))


def cmd_cauchy(args, rep):
    A = field_from_json(load_json(args.field))
    dom = domain_from_json(load_json(args.domain))
    v = cauchy_transform(A, dom, Point(args.x, args.y), args.n)
    rep.data["cauchy"] = {"value": v.value, "refined": v.refined, "error_estimate": v.error_estimate}


def cmd_zeros(args, rep):
    B = field_from_json(load_json(args.field))
    dom = domain_from_json(load_json(args.domain))
    z = zero_count(B, dom, args.n, args.tol_rel)
    rep.data["zeros"] = {
        "count": z.count,
        "identically_zero": z.identically_zero,
        "locations": [[p.x, p.y] for p in z.locations],
        "max_abs": z.max_abs,
    }
    if args.expect is not None:
        rep.add(Check("zero_count", float(z.count), float(args.expect), z.count == args.expect))


def cmd_uniqueness(args, rep):
    u = check_density_uniqueness(args.samples, args.seed)
    rep.data["uniqueness"] = u._asdict()
    rep.add(Check.at_most("functional_equation", u.max_residual, 1e-12))
    rep.add(Check("constant_witness", u.witness_residual, 0.5, u.witness_residual >= 0.5))


def cmd_f_scaling(args, rep):
    bv = bv_from_json(load_json(args.bv)) if args.bv else corpus.random_bv(corpus.rng(args.seed))
    rows = []
    for r in args.r:
        q = f_noninvariance_ratio(bv, r, args.n)
        rep.add(Check.at_most(f"ratio[r={r:g}]", abs(q - r * r), 1e-10))
        rows.append((r, q, r * r))
    rep.tables["f_scaling"] = (("r", "ratio", "r_squared"), rows)


def cmd_verify(args, rep):
    if args.system:
        system = system_from_json(load_json(args.system))
        from .verify import identity_checks

        rep.add(*identity_checks(system, args.tolerance_profile or "strict"))
    else:
        rep.add(*corpus_suite(args.seed, args.tolerance_profile or "strict"))


def cmd_convergence(args, rep):
    names = args.case or [c.name for c in corpus.manufactured_systems()]
    rows = []
    for name in names:
        case = corpus.manufactured_case(name)
        table = manufactured_convergence(case, args.ns)
        hs = [h for _, h, _ in table]
        errs = [e for _, _, e in table]
        orders = [None] + convergence_orders(hs, errs)
        for (n, h, e), o in zip(table, orders):
            rows.append((name, n, h, e, "" if o is None else o))
        rep.add(order_check(f"{name}.order", hs, errs))
    rep.tables["convergence"] = (("case", "n", "h", "residual", "order"), rows)


# -- scenarios --------------------------------------------------------------------------
def _check_n(n):
    if not (16 <= n <= 2048 and n & (n - 1) == 0):
        raise SchemaInvalid(f"N must be a power of two in [16, 2048], got {n}")


def run_scenario(path, out_dir=None, base=None):
    """Execute a scenario file; returns ``(exit_status, report)``."""
    sc = load_json(path)
    if not isinstance(sc, dict) or sc.get("kind") not in SCENARIO_KINDS:
        raise SchemaInvalid(f"scenario kind must be one of {SCENARIO_KINDS}")
    here = os.path.dirname(os.path.abspath(path))
    inputs = {k: os.path.join(here, v) for k, v in sc.get("inputs", {}).items()}
    for k, p in inputs.items():
        if not os.path.exists(p):
            raise FileNotFoundError(f"scenario input {k!r} not found: {p}")
    params = sc.get("parameters", {})
    argv = {
        "derive": ["derive", inputs.get("system", "")],
        "mass": ["mass"] + ([inputs["bv"]] if "bv" in inputs else []),
        "gauge": ["gauge", inputs.get("bv", ""), inputs.get("transform", "")],
        "pullback": ["pullback", inputs.get("bv", ""), inputs.get("transform", "")],
        "reduce": ["reduce", inputs.get("bv", "")],
        "verify-suite": ["verify"] + ([inputs["system"]] if "system" in inputs else []),
        "convergence": ["convergence"],
    }[sc["kind"]]
    if "N" in params:
        Ns = params["N"] if isinstance(params["N"], list) else [params["N"]]
        for n in Ns:
            _check_n(int(n))
        if sc["kind"] == "convergence":
            argv += ["--ns", *map(str, Ns)]
        else:
            argv += ["--n", str(Ns[0])]
    if "seed" in params:
        argv += ["--seed", str(params["seed"])]
    if "t" in params:
        argv += ["--t", *map(str, params["t"])]
    if "tolerance_profile" in params:
        argv += ["--tolerance-profile", params["tolerance_profile"]]
    if "path" in params:
        argv += ["--path", params["path"]]
    if "cases" in params:
        argv += ["--case", *params["cases"]]
    argv += ["--out-dir", out_dir or params.get("out_dir", "out")]
    return main(argv)


def cmd_run(args, rep):
    status = run_scenario(args.scenario, args.out_dir)
    rep.data["status"] = status
    rep.add(Check("scenario", float(status), 0.0, status == 0))
    return "delegated"


# -- argument parsing -------------------------------------------------------------------
def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, default=256, help="resolution (cells or nodes per axis)")
    common.add_argument("--seed", type=int, default=0, help="seed for random corpora (numpy PCG64)")
    common.add_argument("--out-dir", default="out", help="directory for report files")
    common.add_argument("--tolerance-profile", choices=sorted(PROFILES), default=None)

    p = argparse.ArgumentParser(prog="bvlab", description="Beltrami-Vekua laboratory")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("derive", parents=[common], help="system JSON -> BV data JSON + identity report")
    s.add_argument("system")
    s.add_argument("--grid", type=int, default=None, help="sample the system on an N x N grid first")
    s.set_defaults(func=cmd_derive)

    s = sub.add_parser("mass", parents=[common], help="pseudo-analytic mass")
    s.add_argument("bv", nargs="?")
    s.add_argument("--t", type=float, nargs="*", help="masses of the disk family (0, 0, t, 0)")
    s.set_defaults(func=cmd_mass)

    s = sub.add_parser("gauge", parents=[common], help="apply a gauge to BV data")
    s.add_argument("bv")
    s.add_argument("transform")
    s.set_defaults(func=cmd_gauge)

    s = sub.add_parser("pullback", parents=[common], help="pull BV data back by an affine map")
    s.add_argument("bv")
    s.add_argument("transform")
    s.add_argument("--source", help="source domain JSON (default: preimage of the data domain)")
    s.set_defaults(func=cmd_pullback)

    s = sub.add_parser("reduce", parents=[common], help="Vekua normal form")
    s.add_argument("bv")
    s.add_argument("--path", choices=("constant", "numeric"), default="constant")
    s.set_defaults(func=cmd_reduce)

    s = sub.add_parser("cauchy", parents=[common], help="Cauchy transform at one point")
    s.add_argument("field")
    s.add_argument("domain")
    s.add_argument("--x", type=float, required=True)
    s.add_argument("--y", type=float, required=True)
    s.set_defaults(func=cmd_cauchy)

    s = sub.add_parser("zeros", parents=[common], help="zero set of a field")
    s.add_argument("field")
    s.add_argument("domain")
    s.add_argument("--tol-rel", type=float, default=1e-6)
    s.add_argument("--expect", type=int, default=None)
    s.set_defaults(func=cmd_zeros)

    s = sub.add_parser("check-uniqueness", parents=[common], help="density functional equation")
    s.add_argument("--samples", type=int, default=1000)
    s.set_defaults(func=cmd_uniqueness)

    s = sub.add_parser(
        "check-f-scaling", parents=[common], help="F-based densities scale under constant gauges"
    )
    s.add_argument("bv", nargs="?")
    s.add_argument("--r", type=float, nargs="+", default=[1 / 3, 2.0, 10.0])
    s.set_defaults(func=cmd_f_scaling)

    s = sub.add_parser("verify", parents=[common], help="identity suites")
    s.add_argument("system", nargs="?")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("convergence", parents=[common], help="grid convergence of the manufactured residual")
    s.add_argument("--ns", type=int, nargs="+", default=[32, 64, 128, 256])
    s.add_argument("--case", nargs="*", help="corpus case names (default: all)")
    s.set_defaults(func=cmd_convergence)

    s = sub.add_parser("run", parents=[common], help="execute a scenario JSON file")
    s.add_argument("scenario")
    s.set_defaults(func=cmd_run)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    rep = Report(args.command)
    try:
        outcome = args.func(args, rep)
    except BVLabError as exc:
        stage = exc.stage or args.command
        print(f"error [{stage}]: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, KeyError) as exc:
        print(f"error [{args.command}]: {exc}", file=sys.stderr)
        return 2
    if outcome == "delegated":
        return int(rep.data["status"])
    emit_report(rep, args.out_dir)
    sys.stdout.write(rep.summary())
    return 0 if rep.passed else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
