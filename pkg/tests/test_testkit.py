import random
from fractions import Fraction
from pathlib import Path

import pytest

from freesub.algebra import FSP, FactorAtom, FreeJoin, LF, ScaledAtom
from freesub.decomposition import prop21_expression
from freesub.errors import ValidationError
from freesub.scalar import Scalar
from freesub.squares import CommutingSquareData, matrix_square, two_level_square, validate
from freesub.testkit import (
    SUITES,
    RandomSquareSpec,
    check_confluence,
    check_gamma_independence,
    check_scale_invariance,
    cross_check_cor22A,
    cross_check_cor32A,
    gen_betas,
    gen_square,
    load_regressions,
    run_suite,
    save_regression,
    semantic_diff,
    shrink_square,
)

REGRESSIONS = Path(__file__).parent / "regressions"
N, Q = FactorAtom("N"), FactorAtom("Q")


def _qs(n):
    return [FactorAtom(f"Q{i + 1}") for i in range(n)]


def test_gen_square_deterministic_and_valid():
    a = gen_square(RandomSquareSpec(0, max_rows=2))
    assert a == gen_square(RandomSquareSpec(0, max_rows=2))
    assert a.n_rows <= 2 and validate(a).ok


def test_gen_betas_normalized():
    rng = random.Random(4)
    for _ in range(50):
        b = gen_betas(rng)
        assert sum(b) == 1 and len(b) <= 6


def test_cor22A_worked_values():
    assert cross_check_cor22A(N, [Fraction(1, 3), Fraction(2, 3)], _qs(2)).value == "-13/9"
    half = cross_check_cor22A(N, [Fraction(1, 2)] * 2, _qs(2))
    assert half.passed and half.value == "-3/2"
    single = cross_check_cor22A(N, [Fraction(1)], _qs(1))
    assert single.passed and single.value == "0"


def test_cor32A_worked_values():
    assert cross_check_cor32A(two_level_square(), _qs(2)).value == "-2/3"
    for K in range(2, 7):
        res = cross_check_cor32A(matrix_square(K), Q)
        assert res.passed and res.value == str(1 - Fraction(1, K * K))


def test_cor32A_seeds_1_to_100():
    for seed in range(1, 101):
        sq = gen_square(RandomSquareSpec(seed))
        assert cross_check_cor32A(sq, _qs(sq.n_rows)).passed, seed


def test_semantic_diff_routes():
    betas = [Scalar(1), Scalar(3)]
    a = prop21_expression(N, betas, _qs(2))
    b = prop21_expression(N, betas, _qs(2), route="matrix-units")
    assert semantic_diff(a, b, seed=1).passed
    assert semantic_diff(a, a).passed
    perturbed = FreeJoin((a, LF(Fraction(1, 100))))
    assert not semantic_diff(a, perturbed).passed


def test_semantic_diff_catches_form_mismatch():
    # equal exponents, different factors
    e1 = FreeJoin((ScaledAtom(Q), LF(2)))
    e2 = FreeJoin((ScaledAtom(FactorAtom("P")), LF(2)))
    res = semantic_diff(e1, e2, trials=3)
    assert not res.passed


def test_single_checks():
    rng = random.Random(0)
    assert check_confluence(FSP(ScaledAtom(Q), ((Scalar(2), ScaledAtom(Q, 3)),)), rng).passed
    assert check_gamma_independence(gen_square(RandomSquareSpec(5)), Q).passed
    assert check_scale_invariance(two_level_square(), Q, Fraction(7, 3)).passed


@pytest.mark.parametrize("suite", SUITES)
def test_suites_small(suite):
    res = run_suite(suite, seed=11, cases=15)
    assert res.ok, res.failures
    assert res.to_json()["passed"] == 15


def test_suite_is_deterministic():
    assert run_suite("cor32A", seed=3, cases=5).to_json() == run_suite("cor32A", seed=3, cases=5).to_json()


def test_unknown_suite():
    with pytest.raises(ValidationError):
        run_suite("everything")


def test_shrinker_reduces_rows_then_values():
    big = gen_square(RandomSquareSpec(17))
    # synthetic failure: any square with a multiplicity >= 2
    fails = lambda s: any(n >= 2 for row in s.mult for n in row)
    if not fails(big):
        big = CommutingSquareData.from_mult(["1/3", "2/5", "1/7"], [[2, 1, 0], [1, 3, 1]]).normalized()
    small = shrink_square(big, fails)
    assert fails(small) and validate(small).ok
    assert small.n_rows == 1
    # alphas simplified to a common value, only one multiplicity left at 2
    assert len(set(small.alphas)) == 1
    assert sorted(small.mult[0])[-2:] in ([1, 2], [2]) and small.mult[0].count(2) == 1
    assert small.total_beta() == Scalar(1)


def test_regression_fixtures_round_trip(tmp_path):
    path = save_regression(two_level_square(), tmp_path, "two")
    assert load_regressions(tmp_path) == [("two", two_level_square())]
    assert path.read_text().endswith("\n")


@pytest.mark.parametrize("name,square", load_regressions(REGRESSIONS))
def test_regression_fixtures(name, square):
    assert cross_check_cor32A(square, _qs(square.n_rows)).passed
    assert check_gamma_independence(square, Q).passed
