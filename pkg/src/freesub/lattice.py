"""Perron-Frobenius weights of bipartite inclusion graphs.

Convention: ``Gamma`` is the even-by-odd adjacency matrix with multiplicities,
``Gamma Gamma^t s = mu s`` with ``mu = ||Gamma||^2``, odd weights are
``t = Gamma^t s / ||Gamma||`` and everything is scaled so the distinguished
vertex has weight 1.

Numerics stay here: weights that cannot be certified rational are stored as
floats-turned-fractions and the resulting squares carry ``exact=False``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import ConvergenceError, ValidationError
from .scalar import Scalar
from .squares import CommutingSquareData, require_valid_square

_DENOMINATOR_GUESS = 10**6


@dataclass(frozen=True)
class BipartiteGraph:
    even: tuple
    odd: tuple
    edges: tuple
    star: str

    def __post_init__(self):
        object.__setattr__(self, "even", tuple(self.even))
        object.__setattr__(self, "odd", tuple(self.odd))
        names = self.even + self.odd
        if len(set(names)) != len(names):
            raise ValidationError("vertex names must be distinct")
        if not self.even or not self.odd:
            raise ValidationError("both sides of the graph need vertices")
        merged = {}
        for e in self.edges:
            if len(e) != 3:
                raise ValidationError(f"edge must be [even, odd, multiplicity], got {e!r}")
            i, j, m = e
            i = self._index(i, self.even, "even")
            j = self._index(j, self.odd, "odd")
            if isinstance(m, bool) or not isinstance(m, int) or m <= 0:
                raise ValidationError(f"edge multiplicity must be a positive integer, got {m!r}")
            merged[(i, j)] = merged.get((i, j), 0) + m
        object.__setattr__(self, "edges", tuple((i, j, m) for (i, j), m in sorted(merged.items())))
        if self.star not in names:
            raise ValidationError(f"distinguished vertex {self.star!r} is not a vertex")
        if not self.is_connected():
            raise ValidationError("inclusion graph is disconnected")

    @staticmethod
    def _index(v, side, name) -> int:
        if isinstance(v, int) and not isinstance(v, bool):
            if not 0 <= v < len(side):
                raise ValidationError(f"{name} vertex index {v} out of range")
            return v
        if v in side:
            return side.index(v)
        raise ValidationError(f"unknown {name} vertex {v!r}")

    def matrix(self) -> np.ndarray:
        g = np.zeros((len(self.even), len(self.odd)))
        for i, j, m in self.edges:
            g[i, j] = m
        return g

    def mult(self) -> list:
        g = [[0] * len(self.odd) for _ in self.even]
        for i, j, m in self.edges:
            g[i][j] = m
        return g

    def is_connected(self) -> bool:
        n_even = len(self.even)
        adj = {v: set() for v in range(n_even + len(self.odd))}
        for i, j, _ in self.edges:
            adj[i].add(n_even + j)
            adj[n_even + j].add(i)
        seen, stack = {0}, [0]
        while stack:
            for w in adj[stack.pop()] - seen:
                seen.add(w)
                stack.append(w)
        return len(seen) == len(adj)

    def to_json(self):
        return {"even": list(self.even), "odd": list(self.odd),
                "edges": [[self.even[i], self.odd[j], m] for i, j, m in self.edges],
                "star": self.star}

    @classmethod
    def from_json(cls, data) -> "BipartiteGraph":
        if not isinstance(data, dict):
            raise ValidationError("a graph is a JSON object")
        try:
            return cls(tuple(data["even"]), tuple(data["odd"]),
                       tuple(tuple(e) for e in data["edges"]), data["star"])
        except KeyError as exc:
            raise ValidationError(f"graph is missing {exc}") from exc
        except TypeError as exc:
            raise ValidationError(f"bad graph: {exc}") from exc


@dataclass(frozen=True)
class WeightVector:
    even: tuple
    odd: tuple
    norm_sq: float
    error_bound: float
    exact: bool
    iterations: int
    exact_even: Optional[tuple] = None
    exact_odd: Optional[tuple] = None
    exact_norm_sq: Optional[Fraction] = None

    def to_json(self):
        data = {"even": list(self.even), "odd": list(self.odd), "norm_sq": self.norm_sq,
                "error_bound": self.error_bound, "exact": self.exact,
                "iterations": self.iterations}
        if self.exact:
            data["exact_even"] = [str(x) for x in self.exact_even]
            data["exact_odd"] = [str(x) for x in self.exact_odd]
            data["exact_norm_sq"] = str(self.exact_norm_sq)
        return data


def pf_weights(graph: BipartiteGraph, tol: float = 1e-12, max_iter: int = 10**6) -> WeightVector:
    """Power iteration on ``Gamma Gamma^t`` from the all-ones vector.

    Stops when successive unit iterates differ by less than ``tol``; the
    reported error bound is the residual norm, which bounds the eigenvalue
    error for a symmetric matrix.
    """
    if tol <= 0:
        raise ValidationError("tol must be positive")
    g = graph.matrix()
    a = g @ g.T
    s = np.ones(len(graph.even)) / math.sqrt(len(graph.even))
    for it in range(1, max_iter + 1):
        nxt = a @ s
        nxt /= np.linalg.norm(nxt)
        if np.linalg.norm(nxt - s) < tol:
            s = nxt
            break
        s = nxt
    else:
        raise ConvergenceError(f"power iteration did not converge in {max_iter} steps")
    mu = float(s @ a @ s)
    residual = float(np.linalg.norm(a @ s - mu * s))
    t = g.T @ s / math.sqrt(mu)
    scale = _star_weight(graph, s, t)
    even, odd = s / scale, t / scale
    exact = _certify(graph, even, odd, mu)
    if exact is not None:
        ev, od, mu_q = exact
        return WeightVector(tuple(float(x) for x in ev), tuple(float(x) for x in od),
                            float(mu_q), 0.0, True, it, tuple(ev), tuple(od), mu_q)
    return WeightVector(tuple(even.tolist()), tuple(odd.tolist()), mu, residual, False, it)


def _star_weight(graph, s, t) -> float:
    if graph.star in graph.even:
        return float(s[graph.even.index(graph.star)])
    return float(t[graph.odd.index(graph.star)])


def _certify(graph, even, odd, mu):
    """Exact rational weights, if a rational guess satisfies the eigen-equations."""
    guess = lambda x: Fraction(float(x)).limit_denominator(_DENOMINATOR_GUESS)
    mu_q = guess(mu)
    root = _rational_sqrt(mu_q)
    if root is None:
        return None
    ev = [guess(x) for x in even]
    od = [guess(x) for x in odd]
    m = graph.mult()
    for i in range(len(ev)):
        if sum(m[i][j] * od[j] for j in range(len(od))) != root * ev[i]:
            return None
    for j in range(len(od)):
        if sum(m[i][j] * ev[i] for i in range(len(ev))) != root * od[j]:
            return None
    if min(ev + od) <= 0:
        return None
    return ev, od, mu_q


def _rational_sqrt(q: Fraction) -> Optional[Fraction]:
    if q <= 0:
        return None
    n, d = math.isqrt(q.numerator), math.isqrt(q.denominator)
    return Fraction(n, d) if n * n == q.numerator and d * d == q.denominator else None


def square_from_inclusion(graph: BipartiteGraph,
                          weights: Optional[WeightVector] = None) -> CommutingSquareData:
    """Trace data ``(beta, alpha, mult)`` of the inclusion, total trace 1.

    Even vertices are the minimal projections of B (the distinguished vertex
    first when it is even), odd vertices the summands of A, ``alpha`` the odd
    weights and ``beta = mult @ alpha``.  An index-1 inclusion
    (``||Gamma||^2 = 1``) is rejected as degenerate.
    """
    w = weights if weights is not None else pf_weights(graph)
    if (w.exact and w.exact_norm_sq == 1) or (not w.exact and abs(w.norm_sq - 1) < 1e-9):
        raise ValidationError("degenerate inclusion: ||Gamma||^2 = 1 (B = A)")
    order = list(range(len(graph.even)))
    if graph.star in graph.even:
        k = graph.even.index(graph.star)
        order = [k] + [i for i in order if i != k]
    mult = graph.mult()
    rows = [mult[i] for i in order]
    if w.exact:
        alphas = [Scalar(x) for x in w.exact_odd]
    else:
        alphas = [Scalar(Fraction(x)) for x in w.odd]
    data = CommutingSquareData.from_mult(alphas, rows, exact=w.exact).normalized()
    return require_valid_square(data)


# ---------------------------------------------------------------------------
# fixtures


def path_graph(n: int, star: int = 0) -> BipartiteGraph:
    """The Dynkin diagram A_n on vertices v0 - v1 - ... - v(n-1)."""
    if n < 2:
        raise ValidationError("A_n needs n >= 2")
    even = [f"v{k}" for k in range(0, n, 2)]
    odd = [f"v{k}" for k in range(1, n, 2)]
    edges = [(f"v{k}", f"v{k + 1}", 1) if k % 2 == 0 else (f"v{k + 1}", f"v{k}", 1)
             for k in range(n - 1)]
    return BipartiteGraph(tuple(even), tuple(odd), tuple(edges), f"v{star}")


def multi_edge_graph(K: int) -> BipartiteGraph:
    """One even and one odd vertex joined by K edges (C inside M_K)."""
    return BipartiteGraph(("b",), ("a",), (("b", "a", K),), "b")
