"""JSON encoding of fields, domains, systems, BV data and transforms.

Fields
    expression nodes ``{"op": name, "args": [...]}`` with leaves
    ``{"const": [re, im]}`` and ``{"var": "x" | "y" | "z" | "zbar"}``;
    integer powers are ``{"op": "pow", "args": [f, {"const": [n, 0]}]}``.
    A grid is ``{"x0", "x1", "y0", "y1", "n", "values"}`` with ``values`` the
    row-major ``[re, im]`` pairs of ``values[i_x][j_y]``; inside an expression
    it appears as ``{"grid": {...}}``.  Trees with shared subtrees are written
    as ``{"dag": [node, ...], "root": k}`` where arguments may be
    ``{"ref": k}`` pointing at an earlier entry.
Domains
    ``{"type": "rectangle", "x0", "x1", "y0", "y1"}``,
    ``{"type": "disk", "center": [x, y], "radius": r}``,
    ``{"type": "image", "base": <domain>, "map": <transform>}``.
Transforms
    ``{"type": "affine", "a": [re, im], "b": [re, im], "c": [re, im]}``,
    ``{"type": "uniformize_constant", "mu0": [re, im]}``,
    ``{"type": "gauge", "phi": <field>}``.
"""

from __future__ import annotations

import json
from collections import Counter

import numpy as np

from .domains import Disk, ImageDomain, Rectangle
from .elliptic import COEFF_NAMES, RealEllipticSystem
from .errors import SchemaInvalid
from .fields import (
    Abs2,
    Add,
    ComplexField,
    Compose,
    Conj,
    Const,
    Div,
    Exp,
    FunctionField,
    GridField,
    Mul,
    Neg,
    Pow,
    Sqrt,
    Sub,
    Var,
    abs2,
    compose,
    conj,
    exp,
    sqrt,
)
from .pipeline import BVData
from .symmetry import Diffeomorphism, Gauge

__all__ = [
    "field_to_json",
    "field_from_json",
    "domain_to_json",
    "domain_from_json",
    "system_to_json",
    "system_from_json",
    "bv_to_json",
    "bv_from_json",
    "transform_to_json",
    "transform_from_json",
    "dumps",
    "load_json",
]

_BINARY = {"add": Add, "sub": Sub, "mul": Mul, "div": Div}
_UNARY = {"neg": Neg, "conj": Conj, "exp": Exp, "abs2": Abs2, "sqrt": Sqrt}
_BUILD_UNARY = {"neg": lambda a: -a, "conj": conj, "exp": exp, "abs2": abs2, "sqrt": sqrt}
_BUILD_BINARY = {
    "add": lambda a, b: a + b,
    "sub": lambda a, b: a - b,
    "mul": lambda a, b: a * b,
    "div": lambda a, b: a / b,
}


def _c(v):
    v = complex(v)
    return [v.real, v.imag]


def _uc(pair, what="complex number"):
    if isinstance(pair, (int, float)):
        return complex(pair)
    if not (isinstance(pair, (list, tuple)) and len(pair) == 2):
        raise SchemaInvalid(f"{what} must be [re, im], got {pair!r}")
    return complex(float(pair[0]), float(pair[1]))


def _op_name(node):
    for name, cls in {**_BINARY, **_UNARY}.items():
        if type(node) is cls:
            return name
    if isinstance(node, Pow):
        return "pow"
    if isinstance(node, Compose):
        return "compose"
    raise SchemaInvalid(f"cannot serialise node {node!r}")


def grid_to_json(g: GridField) -> dict:
    flat = g.values.reshape(-1)
    return {
        "x0": g.x0,
        "x1": g.x1,
        "y0": g.y0,
        "y1": g.y1,
        "n": g.n,
        "values": np.stack([flat.real, flat.imag], axis=1).tolist(),
    }


def grid_from_json(d) -> GridField:
    try:
        n = int(d["n"])
        vals = np.asarray(d["values"], dtype=float)
        if vals.shape != (n * n, 2):
            raise SchemaInvalid(f"grid values must hold {n * n} [re, im] pairs")
        v = (vals[:, 0] + 1j * vals[:, 1]).reshape(n, n)
        return GridField(float(d["x0"]), float(d["x1"]), float(d["y0"]), float(d["y1"]), v)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaInvalid(f"bad grid: {exc}") from exc


def _node_json(node, args):
    if isinstance(node, Const):
        return {"const": _c(node.value)}
    if isinstance(node, Var):
        return {"var": node.name}
    if isinstance(node, GridField):
        return {"grid": grid_to_json(node)}
    if isinstance(node, FunctionField):
        raise SchemaInvalid(f"opaque field {node!r} cannot be serialised")
    name = _op_name(node)
    if name == "pow":
        return {"op": "pow", "args": [args[0], {"const": [node.n, 0]}]}
    return {"op": name, "args": list(args)}


def _counts(f):
    """How often each node is referenced from its parents."""
    refs = Counter()
    order = []
    seen = set()

    def visit(node):
        refs[id(node)] += 1
        if id(node) in seen:
            return
        seen.add(id(node))
        for c in node.children():
            visit(c)
        order.append(node)

    visit(f)
    return refs, order


def field_to_json(f) -> dict:
    """Encode a field; shared subtrees switch to the ``dag`` form."""
    if isinstance(f, (int, float, complex)):
        f = Const(f)
    if isinstance(f, GridField):
        return grid_to_json(f)
    refs, order = _counts(f)
    shared = any(refs[id(n)] > 1 and not isinstance(n, (Const, Var)) for n in order)
    if not shared:

        def tree(node):
            return _node_json(node, [tree(c) for c in node.children()])

        return tree(f)
    index = {}
    nodes = []
    for node in order:
        args = [{"ref": index[id(c)]} for c in node.children()]
        index[id(node)] = len(nodes)
        nodes.append(_node_json(node, args))
    return {"dag": nodes, "root": index[id(f)]}


def _build(d, table=None) -> ComplexField:
    if not isinstance(d, dict):
        raise SchemaInvalid(f"field node must be an object, got {d!r}")
    if "ref" in d:
        if table is None or not (0 <= d["ref"] < len(table)):
            raise SchemaInvalid(f"dangling reference {d!r}")
        return table[d["ref"]]
    if "const" in d:
        return Const(_uc(d["const"], "const"))
    if "var" in d:
        try:
            return Var(d["var"])
        except ValueError as exc:
            raise SchemaInvalid(str(exc)) from exc
    if "grid" in d:
        return grid_from_json(d["grid"])
    if "values" in d:
        return grid_from_json(d)
    op, args = d.get("op"), d.get("args")
    if not isinstance(args, list):
        raise SchemaInvalid(f"node {d!r} needs an args list")
    if op == "pow":
        if len(args) != 2 or "const" not in args[1]:
            raise SchemaInvalid("pow takes [field, {'const': [n, 0]}]")
        n = _uc(args[1]["const"]).real
        if n != int(n):
            raise SchemaInvalid("only integer powers are supported")
        return _build(args[0], table) ** int(n)
    parts = [_build(a, table) for a in args]
    if op in _BUILD_BINARY and len(parts) == 2:
        return _BUILD_BINARY[op](*parts)
    if op in _BUILD_UNARY and len(parts) == 1:
        return _BUILD_UNARY[op](parts[0])
    if op == "compose" and len(parts) == 2:
        return compose(*parts)
    raise SchemaInvalid(f"unknown op {op!r} with {len(parts)} args")


def field_from_json(d) -> ComplexField:
    if isinstance(d, (int, float)):
        return Const(d)
    if isinstance(d, dict) and "dag" in d:
        table = []
        for node in d["dag"]:
            table.append(_build(node, table))
        root = d.get("root", len(table) - 1)
        if not (isinstance(root, int) and 0 <= root < len(table)):
            raise SchemaInvalid("dag root out of range")
        return table[root]
    return _build(d)


def domain_to_json(dom) -> dict:
    if isinstance(dom, Rectangle):
        return {"type": "rectangle", "x0": dom.x0, "x1": dom.x1, "y0": dom.y0, "y1": dom.y1}
    if isinstance(dom, Disk):
        return {"type": "disk", "center": [dom.center.real, dom.center.imag], "radius": dom.radius}
    if isinstance(dom, ImageDomain):
        return {"type": "image", "base": domain_to_json(dom.base), "map": transform_to_json(dom.diffeo)}
    raise SchemaInvalid(f"cannot serialise domain {dom!r}")


def domain_from_json(d):
    try:
        kind = d["type"]
        if kind == "rectangle":
            return Rectangle(d["x0"], d["x1"], d["y0"], d["y1"])
        if kind == "disk":
            cx, cy = d.get("center", [0.0, 0.0])
            return Disk(complex(cx, cy), d["radius"])
        if kind == "image":
            base = domain_from_json(d["base"])
            phi = transform_from_json(d["map"])
            if not isinstance(phi, Diffeomorphism):
                raise SchemaInvalid("image domain needs a diffeomorphism")
            return phi.with_source(base).target
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, SchemaInvalid):
            raise
        raise SchemaInvalid(f"bad domain: {exc}") from exc
    raise SchemaInvalid(f"unknown domain type {d.get('type')!r}")


def system_to_json(sys: RealEllipticSystem) -> dict:
    return {
        "a": {name[1:]: field_to_json(getattr(sys, name)) for name in COEFF_NAMES},
        "f": [field_to_json(sys.f1), field_to_json(sys.f2)],
        "domain": domain_to_json(sys.domain),
    }


def system_from_json(d) -> RealEllipticSystem:
    try:
        a = d["a"]
        kw = {f"a{k}": field_from_json(v) for k, v in a.items()}
        unknown = set(kw) - set(COEFF_NAMES)
        if unknown:
            raise SchemaInvalid(f"unknown coefficients {sorted(unknown)}")
        if "a11" not in kw or "a22" not in kw:
            raise SchemaInvalid("a system needs at least a11 and a22")
        f = d.get("f", [0, 0])
        if len(f) != 2:
            raise SchemaInvalid("forcing must be a pair [f1, f2]")
        return RealEllipticSystem(
            domain_from_json(d["domain"]), f1=field_from_json(f[0]), f2=field_from_json(f[1]), **kw
        )
    except (KeyError, TypeError) as exc:
        raise SchemaInvalid(f"bad system: {exc}") from exc
    except ValueError as exc:
        if isinstance(exc, SchemaInvalid):
            raise
        raise SchemaInvalid(f"bad system: {exc}") from exc


def bv_to_json(bv: BVData) -> dict:
    out = {k: field_to_json(getattr(bv, k)) for k in ("mu", "A", "B", "F")}
    out["domain"] = domain_to_json(bv.domain)
    return out


def bv_from_json(d) -> BVData:
    try:
        return BVData(*(field_from_json(d[k]) for k in ("mu", "A", "B", "F")), domain_from_json(d["domain"]))
    except (KeyError, TypeError) as exc:
        raise SchemaInvalid(f"bad BV data: {exc}") from exc


def transform_to_json(t) -> dict:
    if isinstance(t, Gauge):
        return {"type": "gauge", "phi": field_to_json(t.phi)}
    if isinstance(t, Diffeomorphism) and t.affine_coeffs is not None:
        a, b, c = t.affine_coeffs
        return {"type": "affine", "a": _c(a), "b": _c(b), "c": _c(c)}
    raise SchemaInvalid("only gauges and affine maps can be serialised")


def transform_from_json(d):
    try:
        kind = d["type"]
        if kind == "gauge":
            return Gauge.from_field(field_from_json(d["phi"]))
        if kind == "affine":
            return Diffeomorphism.affine(_uc(d["a"]), _uc(d.get("b", 0)), _uc(d.get("c", 0)))
        if kind == "uniformize_constant":
            from .reduction import uniformize_constant

            return uniformize_constant(_uc(d["mu0"]))
    except (KeyError, TypeError) as exc:
        raise SchemaInvalid(f"bad transform: {exc}") from exc
    raise SchemaInvalid(f"unknown transform type {d.get('type')!r}")


def _default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def dumps(obj) -> str:
    """Deterministic JSON text: sorted keys, fixed indentation."""
    return json.dumps(obj, sort_keys=True, indent=2, default=_default, allow_nan=True) + "\n"


def load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise
    except json.JSONDecodeError as exc:
        raise SchemaInvalid(f"{path}: {exc}") from exc
