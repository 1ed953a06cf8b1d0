from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import fractions, positive_fractions
from freesub.errors import ArithmeticDomainError, ValidationError
from freesub.scalar import INF, FreeParam, Scalar, ScaleSequence


def test_parse_forms():
    assert Scalar("2/6") == Scalar(Fraction(1, 3))
    assert Scalar(3) == Scalar("3")
    assert Scalar("inf").is_inf
    assert Scalar.from_json({"q": "1/2", "sqrt": "3"}) == Scalar.radical("1/2", 3)


def test_negative_scalar_rejected():
    with pytest.raises(ArithmeticDomainError):
        Scalar(-1)


def test_radical_canonical():
    # sqrt(12) = 2 sqrt(3); sqrt(1/3) = sqrt(3)/3
    assert Scalar.sqrt(12) == Scalar.radical(2, 3)
    assert Scalar.sqrt(Fraction(1, 3)) == Scalar.radical(Fraction(1, 3), 3)
    assert Scalar.sqrt(Fraction(4, 9)) == Scalar("2/3")
    assert Scalar.sqrt(Fraction(4, 9)).is_rational


def test_radical_arithmetic():
    r = Scalar.sqrt(3)
    assert r * r == Scalar(3)
    assert (r / 2).square() == Fraction(3, 4)
    assert r + r == Scalar.radical(2, 3)
    assert Scalar(1) / r == Scalar.radical(Fraction(1, 3), 3)


def test_unlike_radicals_cannot_add():
    with pytest.raises(ArithmeticDomainError):
        Scalar.sqrt(2) + Scalar.sqrt(3)
    with pytest.raises(ArithmeticDomainError):
        Scalar(1) + Scalar.sqrt(2)


def test_infinity_rules():
    assert (INF + 1).is_inf
    assert (INF * 2).is_inf
    assert Scalar(2) / INF == Scalar(0)
    with pytest.raises(ArithmeticDomainError):
        INF * 0
    with pytest.raises(ArithmeticDomainError):
        INF / INF
    with pytest.raises(ArithmeticDomainError):
        Scalar(1) - INF
    with pytest.raises(ArithmeticDomainError):
        Scalar(1) / 0


def test_ordering_across_radicals():
    assert Scalar.sqrt(2) < Scalar("3/2") < Scalar.sqrt(3) < INF


def test_json_round_trip_examples():
    for s in (Scalar("5/7"), Scalar.radical("2/3", 5), INF, Scalar(0)):
        assert Scalar.from_json(s.to_json()) == s


def test_bad_json():
    with pytest.raises(ValidationError):
        Scalar.from_json([1, 2])
    with pytest.raises(ValidationError):
        Scalar.from_json({"q": "1"})


@given(positive_fractions, positive_fractions, positive_fractions)
def test_field_laws(a, b, c):
    x, y, z = Scalar(a), Scalar(b), Scalar(c)
    assert (x + y) + z == x + (y + z)
    assert x * (y + z) == x * y + x * z
    assert (x * y) / y == x
    assert x.reciprocal().reciprocal() == x


@given(positive_fractions, st.sampled_from([2, 3, 5, 6]))
def test_radical_square_is_exact(q, d):
    s = Scalar.radical(q, d)
    assert s.square() == q * q * d
    assert (s * s).is_rational


@given(positive_fractions)
def test_sqrt_squares_back(q):
    assert Scalar.sqrt(q).square() == q


def test_free_param():
    assert FreeParam("3") + FreeParam("-1/2") == FreeParam("5/2")
    assert (FreeParam("inf") + FreeParam(-10)).is_inf
    with pytest.raises(ArithmeticDomainError):
        FreeParam("inf") - FreeParam("inf")
    assert FreeParam(-1) < FreeParam(0) < FreeParam("inf")


@given(fractions, fractions)
def test_free_param_json(a, b):
    p = FreeParam(a) + FreeParam(b)
    assert FreeParam.from_json(p.to_json()) == p


def test_scale_sequence():
    const = ScaleSequence.constant(2)
    assert const.is_constant and const.total().is_inf and const.total_of_squares() is None
    geo = ScaleSequence(["1/2"], "1/2")
    assert geo.head(3) == [Scalar("1/2"), Scalar("1/4"), Scalar("1/8")]
    assert geo.total() == Scalar(1)
    assert geo.total_of_squares() == Fraction(1, 3)
    assert geo.reciprocal().term(2) == Scalar(8)
    assert ScaleSequence([1, 1, 1]) == ScaleSequence.constant(1)
    assert ScaleSequence.from_json(geo.to_json()) == geo


def test_scale_sequence_rejects_bad_values():
    with pytest.raises(ValidationError):
        ScaleSequence([])
    with pytest.raises(ValidationError):
        ScaleSequence([0])
    with pytest.raises(ValidationError):
        ScaleSequence([1], 0)
