"""Inclusion data of a commutative algebra B inside a type I algebra A.

A square is encoded by

* ``betas[i]``  -- trace of the minimal projection ``p_i`` of B,
* ``alphas[j]`` -- trace of a minimal projection under the central projection
  ``q_j`` of A,
* ``mult[i][j]`` -- number of minimal A-projections under ``p_i q_j``,

subject to ``betas[i] == sum_j mult[i][j] * alphas[j]`` and connectivity of the
bipartite graph ``{(i, j) : mult[i][j] > 0}`` (equivalently ``B cap Z(A) = C``).

Indices are 0-based throughout: index 0 is the distinguished projection whose
corner is computed.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional, Union

from .errors import DomainError, ValidationError
from .scalar import FreeParam, Scalar, ScaleSequence

NUMERIC_TOL = 1e-9


@dataclass(frozen=True)
class SquareTail:
    """Closed-form continuation of an infinite index set.

    ``betas`` gives beta(i) for the indices after the prefix.  The remaining
    fields are declared facts; they are never estimated numerically.
    """

    betas: ScaleSequence
    sum_gamma_sq_infinite: Optional[bool] = None
    r: Optional[FreeParam] = None

    @property
    def sum_beta_infinite(self) -> bool:
        return self.betas.ratio >= 1

    @property
    def sum_beta_sq_infinite(self) -> bool:
        return self.betas.total_of_squares() is None

    def to_json(self):
        data = {"betas": self.betas.to_json()}
        if self.sum_gamma_sq_infinite is not None:
            data["sum_gamma_sq"] = "infinite" if self.sum_gamma_sq_infinite else "finite"
        if self.r is not None:
            data["r"] = self.r.to_json()
        return data

    @classmethod
    def from_json(cls, data) -> "SquareTail":
        if not isinstance(data, dict) or "betas" not in data:
            raise ValidationError(f"bad tail {data!r}")
        gsq = data.get("sum_gamma_sq")
        if gsq not in (None, "infinite", "finite"):
            raise ValidationError(f"sum_gamma_sq must be 'infinite' or 'finite', got {gsq!r}")
        r = data.get("r")
        if r is not None and r != "infinite":
            r = FreeParam.from_json(r)
        elif r == "infinite":
            r = FreeParam("inf")
        return cls(ScaleSequence.from_json(data["betas"]),
                   None if gsq is None else gsq == "infinite", r)


@dataclass(frozen=True)
class CommutingSquareData:
    betas: tuple
    alphas: tuple
    mult: tuple
    tail: Optional[SquareTail] = None
    exact: bool = True

    def __post_init__(self):
        object.__setattr__(self, "betas", tuple(_scalar(b) for b in self.betas))
        object.__setattr__(self, "alphas", tuple(_scalar(a) for a in self.alphas))
        object.__setattr__(self, "mult", tuple(tuple(int(x) for x in row) for row in self.mult))

    @classmethod
    def from_mult(cls, alphas, mult, **kw) -> "CommutingSquareData":
        """Build a square with betas derived as ``mult @ alphas``."""
        alphas = [_scalar(a) for a in alphas]
        betas = []
        for row in mult:
            b = Scalar(0)
            for n, a in zip(row, alphas):
                b = b + Scalar(n) * a
            betas.append(b)
        return cls(tuple(betas), tuple(alphas), tuple(tuple(r) for r in mult), **kw)

    @property
    def n_rows(self) -> int:
        return len(self.betas)

    @property
    def n_cols(self) -> int:
        return len(self.alphas)

    @property
    def is_infinite(self) -> bool:
        return self.tail is not None

    def support(self, i: int) -> set:
        return {j for j, n in enumerate(self.mult[i]) if n > 0}

    def total_beta(self) -> Scalar:
        total = Scalar(0)
        for b in self.betas:
            total = total + b
        if self.tail is not None:
            total = total + self.tail.betas.total()
        return total

    def scaled(self, factor) -> "CommutingSquareData":
        """Multiply every trace by ``factor``."""
        factor = _scalar(factor)
        tail = self.tail
        if tail is not None:
            tail = SquareTail(tail.betas.times(factor), tail.sum_gamma_sq_infinite, tail.r)
        return CommutingSquareData(tuple(b * factor for b in self.betas),
                                   tuple(a * factor for a in self.alphas),
                                   self.mult, tail, self.exact)

    def normalized(self) -> "CommutingSquareData":
        """Rescale traces so that the betas sum to 1 (finite squares only)."""
        if self.is_infinite:
            raise DomainError("only finite squares can be normalized to total trace 1")
        return self.scaled(self.total_beta().reciprocal())

    def permuted(self, perm) -> "CommutingSquareData":
        """Reorder the B-projections: new index ``k`` is old index ``perm[k]``."""
        return CommutingSquareData(tuple(self.betas[p] for p in perm), self.alphas,
                                   tuple(self.mult[p] for p in perm), self.tail, self.exact)

    def to_json(self):
        data = {"betas": [b.to_json() for b in self.betas],
                "alphas": [a.to_json() for a in self.alphas],
                "mult": [list(r) for r in self.mult]}
        if self.tail is not None:
            data["tail"] = self.tail.to_json()
        if not self.exact:
            data["exact"] = False
        return data

    @classmethod
    def from_json(cls, data) -> "CommutingSquareData":
        if not isinstance(data, dict) or "alphas" not in data or "mult" not in data:
            raise ValidationError("a square needs 'alphas' and 'mult' (and usually 'betas')")
        mult = data["mult"]
        if not isinstance(mult, list) or not all(isinstance(r, list) for r in mult):
            raise ValidationError("'mult' must be a list of rows")
        for row in mult:
            for x in row:
                if isinstance(x, bool) or not isinstance(x, int) or x < 0:
                    raise ValidationError(f"multiplicities must be nonnegative integers, got {x!r}")
        alphas = [Scalar.from_json(a) for a in data["alphas"]]
        tail = SquareTail.from_json(data["tail"]) if data.get("tail") is not None else None
        exact = bool(data.get("exact", True))
        if "betas" in data:
            return cls(tuple(Scalar.from_json(b) for b in data["betas"]), tuple(alphas),
                       tuple(tuple(r) for r in mult), tail, exact)
        return cls.from_mult(alphas, mult, tail=tail, exact=exact)


def _scalar(x) -> Scalar:
    return x if isinstance(x, Scalar) else Scalar(x)


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class SquareValidity:
    ok: bool
    message: str = "ok"

    def __bool__(self):
        return self.ok


def _close(a: Scalar, b: Scalar) -> bool:
    fa, fb = float(a), float(b)
    return abs(fa - fb) <= NUMERIC_TOL * max(1.0, abs(fa), abs(fb))


def validate(data: CommutingSquareData) -> SquareValidity:
    """Check shape, positivity, the trace identity and connectivity.

    The first failure is reported.  Inexact squares (from numerical
    Perron-Frobenius data) check the trace identity to a relative 1e-9.
    """
    if not data.betas:
        return SquareValidity(False, "no B-projections")
    if any(len(row) != data.n_cols for row in data.mult) or len(data.mult) != data.n_rows:
        return SquareValidity(False, f"mult must be {data.n_rows} x {data.n_cols}")
    for i, b in enumerate(data.betas):
        if b.is_inf:
            return SquareValidity(False, f"beta({i}) is infinite")
        if not b:
            return SquareValidity(False, f"beta({i}) must be positive")
    for j, a in enumerate(data.alphas):
        if a.is_inf or not a:
            return SquareValidity(False, f"alpha({j}) must be finite and positive")
    for i, b in enumerate(data.betas):
        s = Scalar(0)
        for n, a in zip(data.mult[i], data.alphas):
            s = s + Scalar(n) * a
        if not (s == b if data.exact else _close(s, b)):
            return SquareValidity(False, f"consistency fails at i={i}: beta={b}, sum n*alpha={s}")
    for j in range(data.n_cols):
        if not any(data.mult[i][j] for i in range(data.n_rows)):
            return SquareValidity(False, f"summand j={j} meets no B-projection")
    if data.tail is None and not _connected(data):
        return SquareValidity(False, "nondegeneracy fails: inclusion graph is disconnected")
    return SquareValidity(True)


def require_valid_square(data: CommutingSquareData) -> CommutingSquareData:
    report = validate(data)
    if not report:
        raise ValidationError(f"invalid commuting square: {report.message}")
    return data


def _connected(data) -> bool:
    seen_i, seen_j = {0}, set()
    frontier = [("i", 0)]
    while frontier:
        side, x = frontier.pop()
        if side == "i":
            for j in data.support(x) - seen_j:
                seen_j.add(j)
                frontier.append(("j", j))
        else:
            for i in range(data.n_rows):
                if data.mult[i][x] and i not in seen_i:
                    seen_i.add(i)
                    frontier.append(("i", i))
    return len(seen_i) == data.n_rows and len(seen_j) == data.n_cols


def connectivity_order(data: CommutingSquareData) -> list:
    """Stable reordering keeping index 0 first in which every later index
    shares a summand with some earlier one.  Identity if already so."""
    order = [0]
    covered = set(data.support(0))
    remaining = list(range(1, data.n_rows))
    while remaining:
        for idx, i in enumerate(remaining):
            if data.support(i) & covered:
                order.append(i)
                covered |= data.support(i)
                del remaining[idx]
                break
        else:
            raise DomainError("no connectivity-respecting order exists (disconnected data)")
    return order


# ---------------------------------------------------------------------------
# derived combinatorics


@dataclass(frozen=True)
class Partitions:
    """``J[m]`` new summands at level m; ``K[m]`` all summands up to m;
    ``K1[m]`` those of ``K[m]`` meeting ``p_{m+1}``; ``K0[m]`` the rest."""

    J: tuple
    K: tuple
    K1: tuple
    K0: tuple


def compute_partitions(data: CommutingSquareData) -> Partitions:
    J, K, K1, K0 = [], [], [], []
    seen = set()
    for m in range(data.n_rows):
        new = frozenset(data.support(m) - seen)
        seen |= new
        J.append(new)
        K.append(frozenset(seen))
        if m + 1 < data.n_rows:
            nxt = data.support(m + 1)
            K1.append(frozenset(seen & nxt))
            K0.append(frozenset(seen - nxt))
    return Partitions(tuple(J), tuple(K), tuple(K1), tuple(K0))


@dataclass(frozen=True)
class GammaSelection:
    """Chosen summand ``j[m]`` for each level m >= 1 and ``gamma[m] = alpha(j[m])``."""

    j: tuple
    gamma: tuple

    def to_json(self):
        return {"j": list(self.j), "gamma": [g.to_json() for g in self.gamma]}

    @classmethod
    def from_json(cls, data) -> "GammaSelection":
        return cls(tuple(data["j"]), tuple(Scalar.from_json(g) for g in data["gamma"]))


def eligible_gammas(data: CommutingSquareData) -> list:
    """For each level m >= 1, the summands meeting both p_m and some earlier p_i."""
    out = []
    earlier = set(data.support(0))
    for m in range(1, data.n_rows):
        here = data.support(m)
        out.append(sorted(here & earlier))
        earlier |= here
    return out


def select_gamma(data: CommutingSquareData,
                 policy: Union[str, Mapping[int, int]] = "max-alpha") -> GammaSelection:
    """Deterministic choice of ``j(m)`` for every level m >= 1.

    ``"max-alpha"`` takes the eligible summand of largest alpha (ties: smallest
    j); ``"min-alpha"`` the smallest; a mapping ``{m: j}`` fixes the choice.
    """
    chosen = []
    for m, options in enumerate(eligible_gammas(data), start=1):
        if not options:
            raise DomainError(f"no eligible summand at level {m}; reorder the B-projections")
        if isinstance(policy, Mapping):
            if m not in policy:
                raise ValidationError(f"explicit selection is missing level {m}")
            j = policy[m]
            if j not in options:
                raise ValidationError(f"summand {j} is not eligible at level {m} (options {options})")
        elif policy == "max-alpha":
            j = min(options, key=lambda j: (-data.alphas[j].square(), j))
        elif policy == "min-alpha":
            j = min(options, key=lambda j: (data.alphas[j].square(), j))
        else:
            raise ValidationError(f"unknown gamma policy {policy!r}")
        chosen.append(j)
    return GammaSelection(tuple(chosen), tuple(data.alphas[j] for j in chosen))


def all_gamma_selections(data: CommutingSquareData):
    """Every admissible selection, in lexicographic order."""
    for js in itertools.product(*eligible_gammas(data)):
        yield GammaSelection(tuple(js), tuple(data.alphas[j] for j in js))


def free_dimension(data: CommutingSquareData, m: int) -> Fraction:
    """Free dimension of ``p_m A p_m`` in its normalized trace:
    ``1 - sum_{j : mult[m][j] > 0} (alpha(j)/beta(m))^2``."""
    inv = data.betas[m].inverse_square()
    return 1 - sum((data.alphas[j].square() * inv for j in data.support(m)), Fraction(0))


def r_increments(data: CommutingSquareData, selection: GammaSelection) -> list:
    """Per-level contributions to ``r`` (level 0 contributes ``s(1)``)."""
    parts = compute_partitions(data)
    inv = data.betas[0].inverse_square()
    out = []
    for m in range(data.n_rows):
        val = data.betas[m].square()
        if m:
            val -= selection.gamma[m - 1].square()
        val -= sum((data.alphas[j].square() for j in parts.J[m]), Fraction(0))
        out.append(val * inv)
    return out


def compute_r(data: CommutingSquareData, selection: Optional[GammaSelection] = None) -> FreeParam:
    """Total free-group parameter ``r`` of the corner at index 0.

    Infinite squares need a declared value (``tail.r``); nothing is summed
    numerically.
    """
    if data.is_infinite:
        if data.tail.r is None:
            raise DomainError("infinite square without a declared value of r")
        return data.tail.r
    if selection is None:
        selection = select_gamma(data)
    return FreeParam(sum(r_increments(data, selection), Fraction(0)))


# ---------------------------------------------------------------------------
# fixtures


def matrix_square(K: int) -> CommutingSquareData:
    """``C`` inside ``M_K``: beta = (1), alpha = (1/K), mult = (K)."""
    if K < 1:
        raise ValidationError("K must be a positive integer")
    return CommutingSquareData((1,), (Fraction(1, K),), ((K,),))


def two_level_square() -> CommutingSquareData:
    """beta = (1/3, 2/3), alpha = (1/3, 1/3), mult = [[1, 0], [1, 1]]."""
    return CommutingSquareData(("1/3", "2/3"), ("1/3", "1/3"), ((1, 0), (1, 1)))
