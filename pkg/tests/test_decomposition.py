from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from freesub.algebra import FactorAtom, ScaledAtom, make_form, pretty
from freesub.decomposition import (
    Betas,
    DecompositionReport,
    SubfactorPairReport,
    classify_ambient,
    cor32A_closed_form,
    prop21_decompose,
    prop21_expression,
    prop31_decompose,
    thm_msub,
    thm_subfin,
    thm_subinf,
    thm_univ,
)
from freesub.errors import DomainError, ValidationError
from freesub.rewrite import replay
from freesub.scalar import FreeParam, Scalar, ScaleSequence
from freesub.serialize import AtomTable
from freesub.squares import CommutingSquareData, SquareTail, matrix_square, two_level_square
from freesub.testkit import RandomSquareSpec, gen_square

N, Q, Q1, Q2 = FactorAtom("N"), FactorAtom("Q"), FactorAtom("Q1"), FactorAtom("Q2")
M0, M1 = FactorAtom("M0"), FactorAtom("M-1")
U = FactorAtom("U", fundamental_group_all_positive=True)


def _b(*xs):
    return [Scalar(x) for x in xs]


def _infinite_square(gamma_sq=True, r=None):
    tail = SquareTail(ScaleSequence(["1/4"], "1/2"), gamma_sq or None, r)
    return CommutingSquareData(("1/2",), ("1/4",), ((2,),), tail)


# -- amalgamation over B inside a factor


def test_prop21_frozen():
    rep = prop21_decompose(N, _b(1, 2), [Q1, Q2])
    assert pretty(rep.form) == "N * Q1 * Q2_1/2 * L(F_3)"
    assert pretty(rep.cross_check.actual) == "N_3 * Q1_3 * Q2_3/2 * L(F_-13/9)"
    assert rep.cross_check.passed
    norm = prop21_decompose(N, _b("1/3", "2/3"), [Q1, Q2])
    assert pretty(norm.cross_check.expected) == "N * Q1_3 * Q2_3/2 * L(F_-13/9)"
    assert pretty(prop21_decompose(N, _b(1, 1), [Q1, Q2]).form) == "N * Q1 * Q2"


def test_prop21_routes_agree():
    for betas in (_b("1/3", "2/3"), _b(1, 5, 2), _b("1/7", "3/7", "2/7", "1/7")):
        qs = [FactorAtom(f"Q{i}") for i in range(len(betas))]
        a = prop21_decompose(N, betas, qs)
        b = prop21_decompose(N, betas, qs, route="matrix-units")
        assert a.form == b.form
    with pytest.raises(ValidationError):
        prop21_expression(N, _b(1), [Q], route="sideways")


def test_prop21_trace_replays():
    rep = prop21_decompose(N, _b(1, 3), [Q1, Q2], route="matrix-units")
    assert replay(rep.expression, rep.trace) == rep.form


def test_prop21_infinite_gating():
    flat = Betas(_b(1), ScaleSequence.constant(1))
    rep = prop21_decompose(N, flat, Q)
    assert pretty(rep.form) == "N * (Q * Q * ...)"
    assert rep.conditions == ("sum beta(i)^2 = inf",)
    assert rep.form.excess == 0
    geometric = Betas(_b("1/2"), ScaleSequence(["1/4"], "1/2"))
    with pytest.raises(DomainError):
        prop21_decompose(N, geometric, Q)
    absorbing = FactorAtom("A", absorbs_LFinf=True)
    assert pretty(prop21_decompose(N, geometric, absorbing).form) == "A * N_1/2 * (*_k A_[2; x2])"
    assert prop21_decompose(absorbing, geometric, Q).conditions == ("N absorbs L(F_inf)",)


def test_classify_ambient():
    assert classify_ambient(_b("1/3", "2/3")) == "II_1"
    assert classify_ambient(Betas(_b(1), ScaleSequence.constant(1))) == "II_inf"
    assert classify_ambient(Betas(_b("1/2"), ScaleSequence(["1/4"], "1/2"))) == "II_1"


def test_betas_validation():
    with pytest.raises(ValidationError):
        Betas(())
    with pytest.raises(ValidationError):
        Betas(_b(0, 1))
    with pytest.raises(ValidationError):
        Betas.from_json({"prefix": ["1"]})


# -- amalgamation over B inside a type I algebra


def test_prop31_two_level_frozen():
    rep = prop31_decompose(two_level_square(), [Q1, Q2])
    assert pretty(rep.form) == "Q1 * Q2_1/2 * L(F_2)"
    assert rep.r == FreeParam(2)
    assert pretty(rep.cross_check.actual) == "Q1_3 * Q2_3/2 * L(F_-2/3)"
    assert rep.cross_check.passed


@pytest.mark.parametrize("K", range(2, 7))
def test_prop31_matrix_fixture(K):
    rep = prop31_decompose(matrix_square(K), Q)
    assert rep.form == make_form([ScaledAtom(Q)], (), FreeParam(1 - Fraction(1, K * K)))


def test_prop31_closed_form_frozen():
    closed = cor32A_closed_form(two_level_square(), [Q1, Q2])
    # t = -n + 1 + sum beta^2 - sum alpha^2 = -1 + 5/9 - 2/9
    assert closed.excess == FreeParam(Fraction(-2, 3))


@settings(max_examples=40)
@given(st.integers(0, 10**6))
def test_prop31_matches_closed_form(seed):
    sq = gen_square(RandomSquareSpec(seed))
    rep = prop31_decompose(sq, Q)
    assert rep.cross_check.passed, rep.cross_check.detail


def test_prop31_infinite_gating():
    rep = prop31_decompose(_infinite_square(), Q)
    assert pretty(rep.form) == "Q * (*_k Q_[2; x2])"
    assert rep.conditions == ("sum gamma(i)^2 = inf (declared)",)
    with pytest.raises(DomainError):
        prop31_decompose(_infinite_square(gamma_sq=False), Q)
    r_inf = prop31_decompose(_infinite_square(False, FreeParam("inf")), Q)
    assert r_inf.conditions == ("r = inf (declared)",)


def test_report_round_trip():
    rep = prop31_decompose(two_level_square(), [Q1, Q2])
    back = DecompositionReport.from_json(rep.to_json(), AtomTable())
    assert back.to_json() == rep.to_json()
    pair = thm_subfin(two_level_square(), matrix_square(2), Q)
    assert SubfactorPairReport.from_json(pair.to_json()).to_json() == pair.to_json()


# -- subfactors


def test_subfin_frozen():
    rep = thm_subfin(two_level_square(), matrix_square(2), Q)
    assert pretty(rep.P0) == "Q_3/2 * Q_3 * L(F_-2/3)"
    assert pretty(rep.P_minus1) == "Q * L(F_3/4)"
    assert rep.a == FreeParam(Fraction(-2, 3))
    assert [str(s) for s in rep.s] == ["3/2", "3"]


def test_subfin_zero_excess():
    rep = thm_subfin(two_level_square(), two_level_square(), Q, lam="zero-a")
    assert rep.lam.square() == Fraction(1, 3)
    assert rep.a == 0 and rep.b == 0
    assert pretty(rep.P0) == "Q_(1/2*sqrt(3)) * Q_(sqrt(3))"
    rep_b = thm_subfin(matrix_square(2), two_level_square(), Q, lam="zero-b")
    assert rep_b.b == 0


@given(st.builds(Fraction, st.integers(1, 50), st.integers(1, 50)))
def test_subfin_valid_for_every_lambda(lam):
    # rescaling multiplies excess + k - 1 by lam^-2, so validity never flips
    rep = thm_subfin(two_level_square(), matrix_square(2), Q, lam=lam)
    assert all(v.ok for v in rep.validity)


def test_subfin_rejects_degenerate_lambda():
    with pytest.raises(DomainError) as info:
        thm_subfin(two_level_square(), matrix_square(2), Q, lam=0)
    assert info.value.exit_code == 3
    with pytest.raises(DomainError):
        thm_subfin(two_level_square(), matrix_square(2), Q, lam="inf")


def test_subfin_refuses_infinite_square():
    with pytest.raises(DomainError):
        thm_subfin(_infinite_square(), matrix_square(2), Q)


def test_subinf_finite_depth():
    rep = thm_subinf(two_level_square(), matrix_square(2), Q)
    assert pretty(rep.P0) == "(Q_3/2 * Q_3/2 * ...) * (Q_3 * Q_3 * ...)"
    assert pretty(rep.P_minus1) == "(Q * Q * ...)"
    assert rep.P0.excess == 0


def test_subinf_infinite_depth():
    sq = _infinite_square()
    rep = thm_subinf(sq, sq, Q, depth="infinite")
    assert pretty(rep.P0) == "Q * (*_k Q_[2; x2])"
    with pytest.raises(DomainError):
        thm_subinf(two_level_square(), two_level_square(), Q, depth="infinite")
    with pytest.raises(ValidationError):
        thm_subinf(sq, sq, Q, depth="deep")


def test_msub():
    sq0, sq1 = two_level_square(), matrix_square(2)
    rep = thm_msub(sq0, sq1, M0, M1, Q)
    assert pretty(rep.P0) == "M0 * Q_3/2 * Q_3 * L(F_-13/9)"
    assert pretty(rep.P_minus1) == "M-1 * Q"
    literal = thm_msub(sq0, sq1, M0, M1, Q, include_first_summand=False)
    assert pretty(literal.P0) == "M0 * Q_3/2 * L(F_-5/9)"
    assert pretty(literal.P_minus1) == "M-1"
    inf = thm_msub(sq0, sq1, M0, M1, Q, variant="inf")
    assert pretty(inf.P_minus1) == "M-1 * (Q * Q * ...)"


def test_univ_collapse():
    sq0, sq1 = two_level_square(), matrix_square(2)
    P = "(U * U * ...)"
    rep = thm_univ(sq0, sq1, U)
    assert pretty(rep.P0) == pretty(rep.P_minus1) == P
    nm = thm_univ(sq0, sq1, U, variant="nm", m0=M0, m_m1=M1)
    assert pretty(nm.P0) == f"M0 * {P}"
    assert pretty(thm_univ(_infinite_square(), _infinite_square(), U).P0) == P
    with pytest.raises(DomainError):
        thm_univ(sq0, sq1, Q)
    with pytest.raises(ValidationError):
        thm_univ(sq0, sq1, U, variant="nm")


@settings(max_examples=25)
@given(st.integers(0, 10**6))
def test_subfin_outputs_always_valid(seed):
    rep = thm_subfin(gen_square(RandomSquareSpec(seed)), gen_square(RandomSquareSpec(seed + 1)), Q)
    assert all(v.ok for v in rep.validity)
