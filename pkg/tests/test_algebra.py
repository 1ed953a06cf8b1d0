from fractions import Fraction

import pytest

from freesub.algebra import (
    FREE_GROUP,
    FSP,
    LF,
    FactorAtom,
    Family,
    FreeJoin,
    Rescale,
    ScaledAtom,
    exponent_semantics,
    make_form,
    pretty,
    replace_at,
    subterm,
    term,
    validity_check,
    require_valid,
)
from freesub.errors import DomainError, ValidationError, ValidityError
from freesub.scalar import FreeParam, Scalar, ScaleSequence

Q, R = FactorAtom("Q"), FactorAtom("R")


def test_atom_validation():
    with pytest.raises(ValidationError):
        FactorAtom("")
    with pytest.raises(ValidationError):
        FactorAtom("F", FREE_GROUP)
    with pytest.raises(ValidationError):
        FactorAtom("F", FREE_GROUP, FreeParam(1))
    with pytest.raises(ValidationError):
        FactorAtom("Q", param=FreeParam(3))
    with pytest.raises(ValidationError):
        ScaledAtom(Q, 0)


def test_make_form_sorts_and_merges():
    f = make_form([ScaledAtom(R), ScaledAtom(Q, 2), ScaledAtom(Q, "1/2")], (), FreeParam(3))
    assert pretty(f) == "Q_1/2 * Q_2 * R * L(F_3)"
    assert f.k == 3


def test_make_form_absorption():
    a = FactorAtom("A", absorbs_LFinf=True)
    assert make_form([ScaledAtom(a), ScaledAtom(Q)], (), 7).excess == 0
    fam = Family(Q, ScaleSequence.constant(1))
    # a constant family swallows copies of its own member
    f = make_form([ScaledAtom(Q), ScaledAtom(R)], [fam], 5)
    assert pretty(f) == "R * (Q * Q * ...)"


def test_free_group_atoms_fold_into_excess():
    f3 = FactorAtom("F3", FREE_GROUP, FreeParam(3))
    # L(F_3)_2 = L(F_{1 + 2/4})
    assert make_form([ScaledAtom(f3, 2)]).excess == FreeParam(Fraction(3, 2))


def test_fundamental_group_flag_drops_scales():
    u = FactorAtom("U", fundamental_group_all_positive=True)
    assert make_form([ScaledAtom(u, "1/3")]).atoms == (ScaledAtom(u),)


def test_validity_bound():
    assert validity_check(make_form([ScaledAtom(Q)] * 2, (), FreeParam("-1/2"))).ok
    assert not validity_check(make_form([ScaledAtom(Q)] * 2, (), FreeParam(-1))).ok
    # a lone factor with no L(F) part is fine
    assert validity_check(make_form([ScaledAtom(Q)])).ok
    assert not validity_check(make_form([], (), 0)).ok
    # k = 0: L(F_t) needs t > 1
    assert not validity_check(make_form([], (), FreeParam("1/2"))).ok
    assert validity_check(make_form([], (), FreeParam("3/2"))).ok
    assert validity_check(make_form([], [Family(Q, ScaleSequence.constant(1))])).ok
    with pytest.raises(ValidityError):
        require_valid(make_form([ScaledAtom(Q)], (), FreeParam(-3)))


def test_validity_error_is_domain_error():
    assert issubclass(ValidityError, DomainError)
    assert ValidityError.exit_code == 3


def test_semantics_oracle():
    x = {"Q": Fraction(5)}
    assert exponent_semantics(ScaledAtom(Q, 2), x) == 1 + Fraction(4, 4)
    assert exponent_semantics(term(2, ScaledAtom(Q)), x) == 4 * 5
    assert exponent_semantics(Rescale(LF(3), 2), x) == 1 + Fraction(2, 4)
    assert exponent_semantics(FreeJoin((ScaledAtom(Q), LF(-1))), x) == 4
    with pytest.raises(DomainError):
        exponent_semantics(LF(FreeParam("inf")), x)
    with pytest.raises(ValidationError):
        exponent_semantics(ScaledAtom(R), x)


def test_pretty_notation():
    e = FSP(FreeJoin((ScaledAtom(Q), LF(2))), ((Scalar("1/2"), ScaledAtom(R, 3)),))
    assert pretty(e) == "(Q * L(F_2)) * [1/2]{R_3}"
    assert pretty(Rescale(ScaledAtom(Q), Scalar.sqrt(3))) == "(Q)_(sqrt(3))"
    assert pretty(Family(Q, ScaleSequence(["1/2"], "1/2"))) == "(*_k Q_[1/2; x1/2])"


def test_paths():
    e = FreeJoin((ScaledAtom(Q), term(2, ScaledAtom(R))))
    # child 0 of a scaled product is its base
    assert subterm(e, (1, 1)) == ScaledAtom(R)
    e2 = replace_at(e, (1, 1), ScaledAtom(Q))
    assert pretty(e2) == "Q * [2]{Q}"
    assert pretty(e) == "Q * [2]{R}"


def test_semantics_worked_values():
    x = {"Q": Fraction(5)}
    assert exponent_semantics(Rescale(LF(3), "1/2"), x) == 9
    assert exponent_semantics(FSP(ScaledAtom(Q), ((Scalar(3), LF(2)),)), x) == 5 + 18
    assert exponent_semantics(ScaledAtom(Q), x) == 5
