"""Walk through the Python API: rewriting, commuting squares and subfactor pairs."""
from fractions import Fraction

from freesub import (
    FactorAtom,
    FreeJoin,
    Rescale,
    ScaledAtom,
    cor32A_closed_form,
    matrix_square,
    normal_form,
    normalize,
    pretty,
    prop31_decompose,
    thm_subfin,
    two_level_square,
)
from freesub.algebra import term

Q = ScaledAtom(FactorAtom("Q"))


def rewriting():
    expr = FreeJoin((term("2", Q), Rescale(Q, Fraction(3))))
    nf, trace = normalize(expr)
    print("input       :", pretty(expr))
    print("normal form :", pretty(nf))
    for step in trace.steps:
        print("   ", step.rule, "at", step.path)
    print("direct call :", pretty(normal_form(expr)))


def squares():
    for k in (2, 3, 4):
        rep = prop31_decompose(matrix_square(k), [Q.atom])
        closed = cor32A_closed_form(matrix_square(k), [Q.atom])
        print(f"C in M_{k}: {pretty(rep.form)}   r = {rep.r}   closed form: {pretty(closed)}")


def subfactors():
    sq = two_level_square()
    for lam in (1, Fraction(1, 2), "zero-a"):
        rep = thm_subfin(sq, sq, Q.atom, lam=lam)
        print(f"lambda={lam!s:7} P0 = {pretty(rep.P0)}   P-1 = {pretty(rep.P_minus1)}")


if __name__ == "__main__":
    rewriting()
    print()
    squares()
    print()
    subfactors()
