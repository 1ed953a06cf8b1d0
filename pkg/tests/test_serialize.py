import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from freesub.algebra import FREE_GROUP, pretty
from freesub.errors import ValidationError
from freesub.rewrite import normal_form
from freesub.scalar import FreeParam
from freesub.serialize import AtomTable, expr_from_json, expr_to_json, form_from_json, form_to_json
from freesub.testkit import gen_expr


def test_schema_examples():
    assert pretty(expr_from_json("Q")) == "Q"
    assert pretty(expr_from_json({"atom": "Q", "scale": "1/2"})) == "Q_1/2"
    assert pretty(expr_from_json({"term": ["2", "Q"]})) == "[2]{Q}"
    e = expr_from_json({"fsp": {"base": {"join": ["N", {"lf": "3"}]}, "terms": [["1/2", "Q"]]}})
    assert pretty(e) == "(N * L(F_3)) * [1/2]{Q}"
    assert pretty(expr_from_json({"rescale": "Q", "by": {"q": "1", "sqrt": "2"}})) == "(Q)_(sqrt(2))"
    assert pretty(expr_from_json({"family": "Q", "seq": {"values": ["2"]}})) == "(Q_2 * Q_2 * ...)"


def test_atom_declarations():
    table = AtomTable({"F": {"kind": FREE_GROUP, "param": "3"}})
    assert table.get("F").param == FreeParam(3)
    e = expr_from_json({"join": [{"atom": "A", "absorbs_LFinf": True}, "A"]}, table)
    assert all(x.atom.absorbs for x in e.items)
    with pytest.raises(ValidationError):
        expr_from_json({"join": [{"atom": "A", "absorbs_LFinf": True},
                                 {"atom": "A", "absorbs_LFinf": False}]})


@pytest.mark.parametrize("bad", [
    5, [], {"what": 1}, {"join": "Q"}, {"term": ["2"]}, {"fsp": {"terms": []}},
    {"rescale": "Q"}, {"atom": ""}, {"atom": "Q", "scale": "-1"}, {"atom": "Q", "scale": "0"},
    {"atom": "Q", "absorbs_LFinf": "yes"},
])
def test_rejects_malformed(bad):
    with pytest.raises(ValidationError):
        expr_from_json(bad)


def test_deep_nesting_rejected():
    data = "Q"
    for _ in range(300):
        data = {"join": [data]}
    with pytest.raises(ValidationError):
        expr_from_json(data)


@given(st.integers(0, 10**6), st.booleans())
def test_expr_round_trip(seed, infinite):
    expr = gen_expr(random.Random(seed), flags=True, infinite=infinite)
    table = AtomTable()
    assert expr_from_json(expr_to_json(expr), table) == expr


@given(st.integers(0, 10**6))
def test_form_round_trip(seed):
    form = normal_form(gen_expr(random.Random(seed), flags=True, infinite=seed % 2 == 0),
                       top_level=False)
    assert form_from_json(form_to_json(form)) == form


def test_form_rejects_non_atoms():
    with pytest.raises(ValidationError):
        form_from_json({"atoms": [{"lf": "2"}]})
