"""Complex-valued scalar fields on planar domains.

Two backends share one node type, :class:`ComplexField`:

* expression trees over ``x, y, z, zbar`` and constants, combined with
  ``+ - * /``, conjugation, ``exp``, integer powers, ``|f|^2``, the
  principal square root and composition ``f o Phi``.  Wirtinger derivatives
  are exact (symbolic).
* :class:`GridField` leaves holding uniform samples on a rectangle with
  bilinear interpolation.  Their derivatives are central differences in the
  interior and one-sided first-order differences on the boundary rows.

Trees may mix both: a grid leaf inside an expression differentiates by finite
differences and everything around it by the exact rules.  Evaluation is
vectorised and memoised per call, so shared subtrees are evaluated once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from numbers import Number

import numpy as np

from .errors import DerivativeUnavailable, GridTooCoarse, PointOutsideDomain

__all__ = [
    "Point",
    "ComplexField",
    "Const",
    "Var",
    "GridField",
    "FunctionField",
    "X",
    "Y",
    "Z",
    "ZBAR",
    "as_field",
    "const",
    "conj",
    "exp",
    "abs2",
    "sqrt",
    "compose",
    "wirtinger",
    "dx",
    "dy",
    "eval_field",
    "sample_grid",
    "is_expression",
    "find_grid",
]


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite point ({self.x}, {self.y})")

    @property
    def z(self) -> complex:
        return complex(self.x, self.y)

    @classmethod
    def of(cls, p) -> "Point":
        if isinstance(p, Point):
            return p
        if isinstance(p, Number):
            c = complex(p)
            return cls(c.real, c.imag)
        x, y = p
        return cls(float(x), float(y))


class ComplexField:
    """Immutable node of a field expression.

    Subclasses implement ``_eval(x, y, memo)`` and ``_derivs()`` returning
    ``(d/dz, d/dzbar)``.  Derivatives are cached on the node.
    """

    _cache_d = None

    def __call__(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        out = self._ev(x, y, {})
        return np.array(np.broadcast_to(out, x.shape), dtype=complex)

    def _ev(self, x, y, memo):
        key = id(self)
        hit = memo.get(key)
        if hit is None:
            hit = self._eval(x, y, memo)
            memo[key] = hit
        return hit

    def _eval(self, x, y, memo):  # pragma: no cover - abstract
        raise NotImplementedError

    def _derivs(self):  # pragma: no cover - abstract
        raise NotImplementedError

    def wirtinger(self):
        if self._cache_d is None:
            self._cache_d = self._derivs()
        return self._cache_d

    @property
    def dz(self):
        return self.wirtinger()[0]

    @property
    def dzbar(self):
        return self.wirtinger()[1]

    def children(self):
        return ()

    # arithmetic -----------------------------------------------------------
    def __add__(self, other):
        return _add(self, as_field(other))

    def __radd__(self, other):
        return _add(as_field(other), self)

    def __sub__(self, other):
        return _sub(self, as_field(other))

    def __rsub__(self, other):
        return _sub(as_field(other), self)

    def __mul__(self, other):
        return _mul(self, as_field(other))

    def __rmul__(self, other):
        return _mul(as_field(other), self)

    def __truediv__(self, other):
        return _div(self, as_field(other))

    def __rtruediv__(self, other):
        return _div(as_field(other), self)

    def __neg__(self):
        return _neg(self)

    def __pow__(self, n):
        if not isinstance(n, (int, np.integer)):
            raise TypeError("only integer powers are supported")
        return _pow(self, int(n))

    def conj(self):
        return conj(self)

    def exp(self):
        return exp(self)

    def abs2(self):
        return abs2(self)

    def sqrt(self):
        return sqrt(self)

    def compose(self, phi):
        return compose(self, phi)


def as_field(v) -> ComplexField:
    if isinstance(v, ComplexField):
        return v
    if isinstance(v, Number):
        return Const(v)
    raise TypeError(f"cannot convert {type(v).__name__} to a field")


def const(c) -> "Const":
    return Const(c)


class Const(ComplexField):
    def __init__(self, value):
        self.value = complex(value)

    def _eval(self, x, y, memo):
        return self.value

    def _derivs(self):
        return ZERO, ZERO

    def __repr__(self):
        return f"Const({self.value})"


ZERO = Const(0)
ONE = Const(1)
ZERO._cache_d = (ZERO, ZERO)
ONE._cache_d = (ZERO, ZERO)


def _is_const(f, value=None):
    return isinstance(f, Const) and (value is None or f.value == value)


class Var(ComplexField):
    """One of the coordinate leaves ``x``, ``y``, ``z``, ``zbar``."""

    NAMES = ("x", "y", "z", "zbar")

    def __init__(self, name):
        if name not in self.NAMES:
            raise ValueError(f"unknown variable {name!r}")
        self.name = name

    def _eval(self, x, y, memo):
        if self.name == "x":
            return x.astype(complex)
        if self.name == "y":
            return y.astype(complex)
        if self.name == "z":
            return x + 1j * y
        return x - 1j * y

    def _derivs(self):
        return {
            "x": (Const(0.5), Const(0.5)),
            "y": (Const(-0.5j), Const(0.5j)),
            "z": (ONE, ZERO),
            "zbar": (ZERO, ONE),
        }[self.name]

    def __repr__(self):
        return self.name


X, Y, Z, ZBAR = Var("x"), Var("y"), Var("z"), Var("zbar")


class _Binary(ComplexField):
    op = ""

    def __init__(self, a, b):
        self.a, self.b = a, b

    def children(self):
        return (self.a, self.b)

    def __repr__(self):
        return f"({self.a!r} {self.op} {self.b!r})"


class Add(_Binary):
    op = "+"

    def _eval(self, x, y, memo):
        return self.a._ev(x, y, memo) + self.b._ev(x, y, memo)

    def _derivs(self):
        return _add(self.a.dz, self.b.dz), _add(self.a.dzbar, self.b.dzbar)


class Sub(_Binary):
    op = "-"

    def _eval(self, x, y, memo):
        return self.a._ev(x, y, memo) - self.b._ev(x, y, memo)

    def _derivs(self):
        return _sub(self.a.dz, self.b.dz), _sub(self.a.dzbar, self.b.dzbar)


class Mul(_Binary):
    op = "*"

    def _eval(self, x, y, memo):
        return self.a._ev(x, y, memo) * self.b._ev(x, y, memo)

    def _derivs(self):
        a, b = self.a, self.b
        return (
            _add(_mul(a.dz, b), _mul(a, b.dz)),
            _add(_mul(a.dzbar, b), _mul(a, b.dzbar)),
        )


class Div(_Binary):
    op = "/"

    def _eval(self, x, y, memo):
        return self.a._ev(x, y, memo) / self.b._ev(x, y, memo)

    def _derivs(self):
        # (a/b)' = (a' - (a/b) b') / b
        a, b = self.a, self.b
        return (
            _div(_sub(a.dz, _mul(self, b.dz)), b),
            _div(_sub(a.dzbar, _mul(self, b.dzbar)), b),
        )


class _Unary(ComplexField):
    op = ""

    def __init__(self, a):
        self.a = a

    def children(self):
        return (self.a,)

    def __repr__(self):
        return f"{self.op}({self.a!r})"


class Neg(_Unary):
    op = "neg"

    def _eval(self, x, y, memo):
        return -self.a._ev(x, y, memo)

    def _derivs(self):
        return _neg(self.a.dz), _neg(self.a.dzbar)


class Conj(_Unary):
    op = "conj"

    def _eval(self, x, y, memo):
        return np.conj(self.a._ev(x, y, memo))

    def _derivs(self):
        # d/dz conj(f) = conj(df/dzbar), d/dzbar conj(f) = conj(df/dz)
        return conj(self.a.dzbar), conj(self.a.dz)


class Exp(_Unary):
    op = "exp"

    def _eval(self, x, y, memo):
        return np.exp(self.a._ev(x, y, memo))

    def _derivs(self):
        return _mul(self, self.a.dz), _mul(self, self.a.dzbar)


class Abs2(_Unary):
    op = "abs2"

    def _eval(self, x, y, memo):
        v = np.asarray(self.a._ev(x, y, memo))
        return (v.real**2 + v.imag**2) + 0j

    def _derivs(self):
        a = self.a
        ca = conj(a)
        return (
            _add(_mul(a.dz, ca), _mul(a, conj(a.dzbar))),
            _add(_mul(a.dzbar, ca), _mul(a, conj(a.dz))),
        )


class Sqrt(_Unary):
    """Principal square root; intended for fields bounded away from the cut."""

    op = "sqrt"

    def _eval(self, x, y, memo):
        return np.sqrt(np.asarray(self.a._ev(x, y, memo), dtype=complex))

    def _derivs(self):
        two_root = _mul(Const(2), self)
        return _div(self.a.dz, two_root), _div(self.a.dzbar, two_root)


class Pow(ComplexField):
    def __init__(self, a, n):
        self.a, self.n = a, int(n)

    def children(self):
        return (self.a,)

    def _eval(self, x, y, memo):
        v = self.a._ev(x, y, memo)
        return v**self.n

    def _derivs(self):
        lower = _pow(self.a, self.n - 1)
        k = _mul(Const(self.n), lower)
        return _mul(k, self.a.dz), _mul(k, self.a.dzbar)

    def __repr__(self):
        return f"({self.a!r})**{self.n}"


class Compose(ComplexField):
    """``f o Phi``: evaluate ``f`` at the points ``Phi(x, y)``."""

    def __init__(self, f, phi):
        self.f, self.phi = f, phi

    def children(self):
        return (self.f, self.phi)

    def _eval(self, x, y, memo):
        w = np.broadcast_to(self.phi._ev(x, y, memo), x.shape)
        # the inner field lives at different points: fresh memo
        return self.f._ev(np.ascontiguousarray(w.real), np.ascontiguousarray(w.imag), {})

    def _derivs(self):
        f, phi = self.f, self.phi
        fz = compose(f.dz, phi)
        fzb = compose(f.dzbar, phi)
        pz, pzb = phi.dz, phi.dzbar
        return (
            _add(_mul(fz, pz), _mul(fzb, conj(pzb))),
            _add(_mul(fz, pzb), _mul(fzb, conj(pz))),
        )

    def __repr__(self):
        return f"({self.f!r} o {self.phi!r})"


class FunctionField(ComplexField):
    """Opaque vectorised callable ``fn(x, y) -> complex array``.

    Derivatives exist only if supplied as further fields.
    """

    def __init__(self, fn, dz=None, dzbar=None, name="fn"):
        self.fn = fn
        self.name = name
        self._dz, self._dzbar = dz, dzbar

    def _eval(self, x, y, memo):
        return np.asarray(self.fn(x, y), dtype=complex)

    def _derivs(self):
        if self._dz is None or self._dzbar is None:
            raise DerivativeUnavailable(f"field {self.name!r} carries no derivatives")
        return as_field(self._dz), as_field(self._dzbar)

    def __repr__(self):
        return f"<{self.name}>"


class GridField(ComplexField):
    """Uniform ``n x n`` samples on ``[x0, x1] x [y0, y1]``.

    ``values[i, j]`` is the sample at ``(x0 + i*hx, y0 + j*hy)``.  Bilinear
    interpolation; evaluation up to one spacing outside the rectangle
    extrapolates linearly from the edge cell, anything further raises.
    """

    SNAP = 1e-9  # bounds slack, in cells
    NODE_SNAP = 1e-13  # coordinates this close to a node are read as the node

    def __init__(self, x0, x1, y0, y1, values):
        values = np.asarray(values, dtype=complex)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise ValueError("grid values must be a square n x n array")
        if values.shape[0] < 2:
            raise GridTooCoarse("grid needs at least 2 nodes per axis")
        if not (x0 < x1 and y0 < y1):
            raise ValueError("grid rectangle must have x0 < x1 and y0 < y1")
        self.x0, self.x1, self.y0, self.y1 = float(x0), float(x1), float(y0), float(y1)
        self.values = values
        self.values.setflags(write=False)
        self.n = values.shape[0]
        self.hx = (self.x1 - self.x0) / (self.n - 1)
        self.hy = (self.y1 - self.y0) / (self.n - 1)

    @property
    def rect(self):
        return (self.x0, self.x1, self.y0, self.y1)

    def nodes(self):
        xs = self.x0 + self.hx * np.arange(self.n)
        ys = self.y0 + self.hy * np.arange(self.n)
        return np.meshgrid(xs, ys, indexing="ij")

    def same_grid(self, other) -> bool:
        return isinstance(other, GridField) and self.rect == other.rect and self.n == other.n

    def _coord(self, t, m):
        # m = number of intervals; cell index i in [0, m-1]
        r = np.rint(t)
        t = np.where(np.abs(t - r) < self.NODE_SNAP, r, t)
        if np.any(t < -1 - self.SNAP) or np.any(t > m + 1 + self.SNAP) or np.any(~np.isfinite(t)):
            raise PointOutsideDomain("point outside the grid rectangle")
        i = np.clip(np.floor(t), 0, m - 1).astype(np.intp)
        return i, t - i

    def _eval(self, x, y, memo):
        i, fx = self._coord((x - self.x0) / self.hx, self.n - 1)
        j, fy = self._coord((y - self.y0) / self.hy, self.n - 1)
        v = self.values
        return (
            v[i, j] * (1 - fx) * (1 - fy)
            + v[i + 1, j] * fx * (1 - fy)
            + v[i, j + 1] * (1 - fx) * fy
            + v[i + 1, j + 1] * fx * fy
        )

    def partials(self):
        """Finite-difference ``(d/dx, d/dy)`` sample arrays."""
        if self.n < 3:
            raise GridTooCoarse("finite differences need at least 3 nodes per axis")
        fx = np.gradient(self.values, self.hx, axis=0, edge_order=1)
        fy = np.gradient(self.values, self.hy, axis=1, edge_order=1)
        return fx, fy

    def _derivs(self):
        fx, fy = self.partials()
        return (
            GridField(*self.rect, 0.5 * (fx - 1j * fy)),
            GridField(*self.rect, 0.5 * (fx + 1j * fy)),
        )

    def map_values(self, fn) -> "GridField":
        return GridField(*self.rect, fn(self.values))

    def __repr__(self):
        return f"GridField(n={self.n}, rect={self.rect})"


# -- smart constructors: constant folding only ---------------------------------
def _add(a, b):
    if _is_const(a, 0):
        return b
    if _is_const(b, 0):
        return a
    if _is_const(a) and _is_const(b):
        return Const(a.value + b.value)
    return Add(a, b)


def _sub(a, b):
    if _is_const(b, 0):
        return a
    if _is_const(a, 0):
        return _neg(b)
    if _is_const(a) and _is_const(b):
        return Const(a.value - b.value)
    return Sub(a, b)


def _mul(a, b):
    if _is_const(a, 0) or _is_const(b, 0):
        return ZERO
    if _is_const(a, 1):
        return b
    if _is_const(b, 1):
        return a
    if _is_const(a) and _is_const(b):
        return Const(a.value * b.value)
    return Mul(a, b)


def _div(a, b):
    if _is_const(a, 0):
        return ZERO
    if _is_const(b, 1):
        return a
    if _is_const(a) and _is_const(b):
        return Const(a.value / b.value)
    return Div(a, b)


def _neg(a):
    if _is_const(a):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.a
    return Neg(a)


def _pow(a, n):
    if n == 0:
        return ONE
    if n == 1:
        return a
    if _is_const(a):
        return Const(a.value**n)
    return Pow(a, n)


def conj(f):
    f = as_field(f)
    if _is_const(f):
        return Const(f.value.conjugate())
    if isinstance(f, Conj):
        return f.a
    return Conj(f)


def exp(f):
    f = as_field(f)
    if _is_const(f):
        return Const(complex(np.exp(f.value)))
    return Exp(f)


def abs2(f):
    f = as_field(f)
    if _is_const(f):
        return Const(abs(f.value) ** 2)
    return Abs2(f)


def sqrt(f):
    f = as_field(f)
    if _is_const(f):
        return Const(complex(np.sqrt(f.value)))
    return Sqrt(f)


def compose(f, phi):
    f, phi = as_field(f), as_field(phi)
    if _is_const(f):
        return f
    return Compose(f, phi)


# -- public operations ------------------------------------------------------------
def wirtinger(f):
    """Return ``(df/dz, df/dzbar)`` as fields."""
    return as_field(f).wirtinger()


def dx(f):
    """``d/dx = d/dz + d/dzbar``."""
    fz, fzb = wirtinger(f)
    return fz + fzb


def dy(f):
    """``d/dy = i (d/dz - d/dzbar)``."""
    fz, fzb = wirtinger(f)
    return 1j * (fz - fzb)


def eval_field(f, p, domain=None) -> complex:
    """Value of ``f`` at the point ``p`` (a :class:`Point`, complex or pair)."""
    p = Point.of(p)
    if domain is not None and not domain.contains_point(p):
        raise PointOutsideDomain(f"point ({p.x}, {p.y}) is outside the domain")
    return complex(as_field(f)(p.x, p.y))


def sample_grid(f, rect, n) -> GridField:
    """Sample ``f`` on ``n x n`` uniform nodes of ``rect = (x0, x1, y0, y1)``."""
    if hasattr(rect, "bbox"):
        rect = rect.bbox()
    x0, x1, y0, y1 = rect
    xs = np.linspace(x0, x1, n)
    ys = np.linspace(y0, y1, n)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    return GridField(x0, x1, y0, y1, as_field(f)(gx, gy))


def iter_nodes(f):
    """Yield every node of the DAG below ``f`` once."""
    seen = set()
    stack = [f]
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        yield node
        stack.extend(node.children())


def is_expression(f) -> bool:
    """True when ``f`` has no grid or opaque leaves (exact derivatives)."""
    return not any(isinstance(n, (GridField, FunctionField)) for n in iter_nodes(as_field(f)))


def find_grid(*fields):
    """First grid leaf found among ``fields`` (or ``None``)."""
    for f in fields:
        for node in iter_nodes(as_field(f)):
            if isinstance(node, GridField):
                return node
    return None
