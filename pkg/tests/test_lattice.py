import math
import time
from fractions import Fraction

import pytest

from freesub.decomposition import prop31_decompose
from freesub.algebra import FactorAtom, pretty
from freesub.errors import ConvergenceError, ValidationError
from freesub.lattice import (
    BipartiteGraph,
    multi_edge_graph,
    path_graph,
    pf_weights,
    square_from_inclusion,
)
from freesub.scalar import Scalar


@pytest.mark.parametrize("n", range(2, 9))
def test_path_graph_index(n):
    start = time.perf_counter()
    w = pf_weights(path_graph(n))
    assert abs(w.norm_sq - 4 * math.cos(math.pi / (n + 1)) ** 2) < 1e-9
    assert time.perf_counter() - start < 1


def test_a3_weights():
    # A_3: weights 1, sqrt 2, 1 on v0 - v1 - v2; not rational
    w = pf_weights(path_graph(3))
    assert not w.exact
    assert w.even == pytest.approx((1.0, 1.0))
    assert w.odd == pytest.approx((math.sqrt(2),))
    assert w.error_bound < 1e-9


def test_non_convergence():
    with pytest.raises(ConvergenceError) as info:
        pf_weights(path_graph(8), max_iter=2)
    assert info.value.exit_code == 4


def test_multi_edge_is_matrix_algebra():
    for K in range(2, 6):
        w = pf_weights(multi_edge_graph(K))
        assert w.exact and w.exact_norm_sq == K * K
        sq = square_from_inclusion(multi_edge_graph(K), w)
        assert sq.betas == (Scalar(1),) and sq.alphas == (Scalar(Fraction(1, K)),)
        rep = prop31_decompose(sq, FactorAtom("Q"))
        assert pretty(rep.form) == f"Q * L(F_{1 - Fraction(1, K * K)})"


def test_degenerate_inclusion_rejected():
    with pytest.raises(ValidationError):
        square_from_inclusion(multi_edge_graph(1))


def test_inexact_square_is_flagged():
    sq = square_from_inclusion(path_graph(3))
    assert not sq.exact
    assert prop31_decompose(sq, FactorAtom("Q")).cross_check.passed


def test_star_on_odd_side():
    g = path_graph(4, star=1)
    w = pf_weights(g)
    assert w.odd[0] == pytest.approx(1.0)


def test_graph_validation():
    with pytest.raises(ValidationError):
        BipartiteGraph(("a",), ("b", "c"), (("a", "b", 1),), "a")
    with pytest.raises(ValidationError):
        BipartiteGraph(("a",), ("b",), (("a", "b", 0),), "a")
    with pytest.raises(ValidationError):
        BipartiteGraph(("a",), ("b",), (("a", "x", 1),), "a")
    with pytest.raises(ValidationError):
        BipartiteGraph(("a",), ("a",), (("a", "a", 1),), "a")
    with pytest.raises(ValidationError):
        BipartiteGraph.from_json({"even": ["a"]})


def test_graph_round_trip_and_merging():
    g = BipartiteGraph(("a",), ("b",), (("a", "b", 1), (0, 0, 2)), "a")
    assert g.edges == ((0, 0, 3),)
    assert BipartiteGraph.from_json(g.to_json()) == g
