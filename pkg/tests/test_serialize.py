import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bvlab import corpus
from bvlab.domains import Rectangle, unit_disk
from bvlab.elliptic import sample_points
from bvlab.errors import SchemaInvalid
from bvlab.fields import X, Y, Z, ZBAR, abs2, conj, exp, sample_grid
from bvlab.reduction import uniformize_constant
from bvlab.serialize import (
    bv_from_json,
    bv_to_json,
    domain_from_json,
    domain_to_json,
    dumps,
    field_from_json,
    field_to_json,
    load_json,
    system_from_json,
    system_to_json,
    transform_from_json,
    transform_to_json,
)
from bvlab.symmetry import Diffeomorphism, Gauge

PTS = sample_points(unit_disk(), 12)


def same(f, g, tol=0.0):
    return np.abs(f(*PTS) - g(*PTS)).max() <= tol


def test_leaf_schema():
    assert field_to_json(Z) == {"var": "z"}
    assert field_to_json(ZBAR) == {"var": "zbar"}
    assert field_from_json({"const": [1.5, -2.0]})(0.0, 0.0) == 1.5 - 2j


def test_bare_number_is_a_constant():
    assert field_from_json(2.5)(0.3, 0.4) == 2.5


def test_expression_schema():
    d = field_to_json(Z * Z + exp(ZBAR))
    assert d == {
        "op": "add",
        "args": [
            {"op": "mul", "args": [{"var": "z"}, {"var": "z"}]},
            {"op": "exp", "args": [{"var": "zbar"}]},
        ],
    }


@pytest.mark.parametrize(
    "f",
    [X * Y - 3, exp(Z) * conj(Z * Z), abs2(Z) / (2 + Z), (Z - 1j) ** 3, exp(-Y) ** -2],
    ids=range(5),
)
def test_field_roundtrip(f):
    g = field_from_json(json.loads(dumps(field_to_json(f))))
    assert same(f, g)
    fz, fzb = f.dz, f.dzbar
    assert same(fz, g.dz) and same(fzb, g.dzbar)


def test_shared_subtree_is_a_dag():
    e = exp(Z)
    d = field_to_json(e * e)
    assert "dag" in d
    assert same(e * e, field_from_json(d))


def test_grid_schema_roundtrip():
    g = sample_grid(Z, (0, 1, 0, 1), 2)
    d = field_to_json(g)
    assert d == {
        "x0": 0.0,
        "x1": 1.0,
        "y0": 0.0,
        "y1": 1.0,
        "n": 2,
        "values": [[0, 0], [0, 1], [1, 0], [1, 1]],
    }
    h = field_from_json(d)
    assert np.array_equal(h.values, g.values)


def test_grid_inside_expression_roundtrip():
    f = sample_grid(exp(Z), (-1, 1, -1, 1), 17) * ZBAR
    assert same(f, field_from_json(field_to_json(f)))


@pytest.mark.parametrize(
    "bad",
    [
        {"op": "nosuch", "args": []},
        {"var": "w"},
        {"const": [1]},
        {"x0": 0, "x1": 1, "y0": 0, "y1": 1, "n": 3, "values": []},
        "z",
    ],
)
def test_bad_field_rejected(bad):
    with pytest.raises(SchemaInvalid):
        field_from_json(bad)


def test_domain_roundtrip():
    for dom in (Rectangle(0, 2, -1, 1), unit_disk()):
        assert domain_from_json(domain_to_json(dom)) == dom
    img = uniformize_constant(0.3j).with_source(unit_disk()).target
    back = domain_from_json(json.loads(dumps(domain_to_json(img))))
    pts = np.array([0.5, 1.2, 0.0]), np.array([0.5, 0.0, 0.7])
    assert np.array_equal(back.contains(*pts), img.contains(*pts))


@pytest.mark.parametrize("case", corpus.manufactured_systems(), ids=lambda c: c.name)
def test_system_roundtrip(case):
    d = json.loads(dumps(system_to_json(case.system)))
    assert set(d) == {"a", "f", "domain"} and len(d["f"]) == 2
    assert set(d["a"]) == {"11", "12", "13", "14", "21", "22", "23", "24"}
    back = system_from_json(d)
    xs, ys = sample_points(case.system.domain, 8)
    for name in ("a11", "a12", "a22", "a24", "f1", "f2"):
        assert np.array_equal(getattr(back, name)(xs, ys), getattr(case.system, name)(xs, ys))


def test_bv_roundtrip():
    bv = corpus.random_bv(corpus.rng(2))
    back = bv_from_json(json.loads(dumps(bv_to_json(bv))))
    for f, g in zip((bv.mu, bv.A, bv.B, bv.F), (back.mu, back.A, back.B, back.F)):
        assert same(f, g)


def test_transform_roundtrip():
    d = Diffeomorphism.affine(1.2 + 0.1j, 0.3, -0.2j)
    back = transform_from_json(json.loads(dumps(transform_to_json(d))))
    assert same(d.Phi, back.Phi)
    g = Gauge.from_field(exp(Z * ZBAR))
    back = transform_from_json(transform_to_json(g))
    assert same(g.phi, back.phi) and same(g.phi_zbar, back.phi_zbar)


def test_dumps_is_stable():
    bv = corpus.random_bv(corpus.rng(3))
    assert dumps(bv_to_json(bv)) == dumps(bv_to_json(bv))


def test_load_json_rejects_garbage(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(SchemaInvalid):
        load_json(p)


@settings(max_examples=40, deadline=None)
@given(
    st.lists(
        st.complex_numbers(max_magnitude=1e6, allow_nan=False, allow_infinity=False), min_size=3, max_size=3
    )
)
def test_const_roundtrip_exact(cs):
    f = cs[0] * Z + cs[1] * ZBAR + cs[2]
    assert same(f, field_from_json(json.loads(dumps(field_to_json(f)))))
