"""Corner decompositions of amalgamated free products and subfactor parameters.

Two pipelines build a free scaled product expression for the corner
``p_1 M p_1`` and normalize it:

* :func:`prop21_decompose` -- amalgamation over a commutative B sitting inside a
  II_1 factor ``N``-corner, one factor ``Q(i)`` per minimal projection;
* :func:`prop31_decompose` -- amalgamation over B inside a type I algebra A,
  described by a :class:`~freesub.squares.CommutingSquareData`.

Finite inputs are cross-checked against the closed forms obtained after
normalizing the total trace to 1.  The ``thm_*`` functions combine two corner
computations into the isomorphism classes of a subfactor pair.

Factor arguments (``base``, ``qs``, ``q``) may be :class:`FactorAtom` values
or arbitrary expressions; a single value stands for "the same factor at
every index".
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .algebra import (
    FSP,
    LF,
    FactorAtom,
    Family,
    FreeJoin,
    FreeProductForm,
    Rescale,
    ScaledAtom,
    make_form,
    pretty,
    validity_check,
)
from .errors import DomainError, ValidationError, ValidityError
from .rewrite import DerivationTrace, normal_form, normalize, rescale, solve_lambda_zero_excess
from .scalar import ONE, FreeParam, Scalar, ScaleSequence
from .serialize import AtomTable, expr_from_json, expr_to_json, form_from_json, form_to_json
from .squares import (
    NUMERIC_TOL,
    CommutingSquareData,
    GammaSelection,
    compute_r,
    connectivity_order,
    require_valid_square,
    select_gamma,
)

II_1 = "II_1"
II_INF = "II_inf"

_ORIENTATION_NOTE = ("atom scales are beta(1)/beta(i) relative to the corner projection, "
                     "then multiplied by the level rescaling factor")


# ---------------------------------------------------------------------------
# trace vectors


@dataclass(frozen=True)
class Betas:
    """Traces of the minimal projections of B: a finite prefix and an
    optional closed-form tail for infinite index sets."""

    prefix: tuple
    tail: Optional[ScaleSequence] = None

    def __post_init__(self):
        vals = tuple(b if isinstance(b, Scalar) else Scalar(b) for b in self.prefix)
        if not vals:
            raise ValidationError("need at least one beta")
        for i, b in enumerate(vals):
            if b.is_inf or not b:
                raise ValidationError(f"beta({i}) must be finite and positive, got {b}")
        object.__setattr__(self, "prefix", vals)

    @property
    def is_infinite(self) -> bool:
        return self.tail is not None

    def total(self) -> Scalar:
        s = Scalar(0)
        for b in self.prefix:
            s = s + b
        return s + self.tail.total() if self.tail is not None else s

    @property
    def sum_sq_infinite(self) -> bool:
        return self.tail is not None and self.tail.total_of_squares() is None

    def to_json(self):
        if self.tail is None:
            return [b.to_json() for b in self.prefix]
        return {"prefix": [b.to_json() for b in self.prefix], "tail": self.tail.to_json()}

    @classmethod
    def from_json(cls, data) -> "Betas":
        if isinstance(data, list):
            return cls(tuple(Scalar.from_json(b) for b in data))
        if isinstance(data, dict) and "prefix" in data:
            if data.get("tail") is None:
                raise ValidationError("an infinite beta vector needs a declared 'tail'")
            return cls(tuple(Scalar.from_json(b) for b in data["prefix"]),
                       ScaleSequence.from_json(data["tail"]))
        raise ValidationError(f"bad betas {data!r}")


def _as_betas(betas) -> Betas:
    if isinstance(betas, Betas):
        return betas
    if isinstance(betas, CommutingSquareData):
        return Betas(betas.betas, betas.tail.betas if betas.tail is not None else None)
    return Betas(tuple(betas))


def classify_ambient(betas) -> str:
    """``"II_1"`` iff the traces of the minimal projections of B have finite sum."""
    return II_1 if not _as_betas(betas).total().is_inf else II_INF


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class CrossCheck:
    """Comparison of a pipeline result with an independently built form."""

    name: str
    passed: bool
    expected: FreeProductForm
    actual: FreeProductForm
    tolerance: Optional[float] = None
    detail: str = ""

    def to_json(self):
        data = {"name": self.name, "passed": self.passed,
                "expected": form_to_json(self.expected), "actual": form_to_json(self.actual)}
        if self.tolerance is not None:
            data["tolerance"] = self.tolerance
        if self.detail:
            data["detail"] = self.detail
        return data

    @classmethod
    def from_json(cls, data, atoms: Optional[AtomTable] = None) -> "CrossCheck":
        return cls(data["name"], bool(data["passed"]), form_from_json(data["expected"], atoms),
                   form_from_json(data["actual"], atoms), data.get("tolerance"),
                   data.get("detail", ""))


@dataclass(frozen=True)
class DecompositionReport:
    kind: str
    inputs: dict
    expression: object
    form: FreeProductForm
    trace: DerivationTrace
    ambient: str
    cross_check: Optional[CrossCheck] = None
    permutation: tuple = ()
    gamma: Optional[GammaSelection] = None
    r: Optional[FreeParam] = None
    conditions: tuple = ()
    notes: tuple = ()

    def to_json(self):
        data = {"kind": self.kind, "inputs": self.inputs, "ambient": self.ambient,
                "expression": None if self.expression is None else expr_to_json(self.expression),
                "form": form_to_json(self.form), "text": pretty(self.form),
                "trace": self.trace.to_json()}
        if self.cross_check is not None:
            data["cross_check"] = self.cross_check.to_json()
        if self.permutation:
            data["permutation"] = list(self.permutation)
        if self.gamma is not None:
            data["gamma"] = self.gamma.to_json()
        if self.r is not None:
            data["r"] = self.r.to_json()
        if self.conditions:
            data["conditions"] = list(self.conditions)
        if self.notes:
            data["notes"] = list(self.notes)
        return data

    @classmethod
    def from_json(cls, data, atoms: Optional[AtomTable] = None) -> "DecompositionReport":
        atoms = atoms if atoms is not None else AtomTable()
        try:
            return cls(
                data["kind"], data["inputs"],
                None if data.get("expression") is None else expr_from_json(data["expression"], atoms),
                form_from_json(data["form"], atoms),
                DerivationTrace.from_json(data.get("trace", [])),
                data["ambient"],
                CrossCheck.from_json(data["cross_check"], atoms) if "cross_check" in data else None,
                tuple(data.get("permutation", ())),
                GammaSelection.from_json(data["gamma"]) if "gamma" in data else None,
                FreeParam.from_json(data["r"]) if "r" in data else None,
                tuple(data.get("conditions", ())),
                tuple(data.get("notes", ())),
            )
        except KeyError as exc:
            raise ValidationError(f"report is missing {exc}") from exc


@dataclass(frozen=True)
class SubfactorPairReport:
    """Isomorphism classes of ``P_0`` and ``P_-1`` (or the hatted pair)."""

    kind: str
    P0: FreeProductForm
    P_minus1: FreeProductForm
    lam: Optional[Scalar]
    level_lams: tuple
    levels: tuple
    label: Optional[str] = None
    notes: tuple = ()

    @property
    def validity(self) -> tuple:
        return validity_check(self.P0), validity_check(self.P_minus1)

    @property
    def s(self) -> list:
        return self.P0.scales()

    @property
    def a(self) -> FreeParam:
        return self.P0.excess

    @property
    def t(self) -> list:
        return self.P_minus1.scales()

    @property
    def b(self) -> FreeParam:
        return self.P_minus1.excess

    def to_json(self):
        v0, v1 = self.validity
        data = {"kind": self.kind,
                "P0": form_to_json(self.P0), "P-1": form_to_json(self.P_minus1),
                "text": {"P0": pretty(self.P0), "P-1": pretty(self.P_minus1)},
                "lambda": None if self.lam is None else self.lam.to_json(),
                "lambda_squared": None if self.lam is None else str(self.lam.square()),
                "level_lambdas": [x.to_json() for x in self.level_lams],
                "validity": {"P0": str(v0), "P-1": str(v1)},
                "levels": [r.to_json() for r in self.levels]}
        if self.label is not None:
            data["label"] = self.label
        if self.notes:
            data["notes"] = list(self.notes)
        return data

    @classmethod
    def from_json(cls, data, atoms: Optional[AtomTable] = None) -> "SubfactorPairReport":
        atoms = atoms if atoms is not None else AtomTable()
        try:
            return cls(
                data["kind"], form_from_json(data["P0"], atoms), form_from_json(data["P-1"], atoms),
                None if data.get("lambda") is None else Scalar.from_json(data["lambda"]),
                tuple(Scalar.from_json(x) for x in data["level_lambdas"]),
                tuple(DecompositionReport.from_json(r, atoms) for r in data["levels"]),
                data.get("label"), tuple(data.get("notes", ())),
            )
        except KeyError as exc:
            raise ValidationError(f"report is missing {exc}") from exc


# ---------------------------------------------------------------------------
# helpers


def _expr(x):
    if isinstance(x, FactorAtom):
        return ScaledAtom(x)
    return x


def _scaled(x, s):
    """``x_s`` as an expression, composing atom scales directly."""
    s = s if isinstance(s, Scalar) else Scalar(s)
    if isinstance(x, FactorAtom):
        return ScaledAtom(x, s)
    if isinstance(x, ScaledAtom):
        return ScaledAtom(x.atom, x.scale * s)
    return x if s == ONE else Rescale(x, s)


def _label(x) -> str:
    return x.id if isinstance(x, FactorAtom) else pretty(x)


def _per_index(qs, n: int, what: str = "Q") -> list:
    if isinstance(qs, (list, tuple)):
        if len(qs) != n:
            raise ValidationError(f"need {n} {what}-factors, got {len(qs)}")
        return list(qs)
    return [qs] * n


def _absorbs(x) -> bool:
    """Declared or structural ``X = X * L(F_inf)``."""
    if isinstance(x, FactorAtom):
        return x.absorbs
    form = normal_form(_expr(x), top_level=False)
    return (form.is_infinite or form.excess.is_inf
            or any(a.atom.absorbs for a in form.atoms))


def _tail_families(q, seq: ScaleSequence) -> list:
    """Families ``q_{seq[0]} * q_{seq[1]} * ...`` for a finite factor ``q``."""
    form = normal_form(_expr(q), top_level=False)
    if form.is_infinite:
        raise DomainError("the tail factor must be a finite free product")
    if not form.atoms:
        raise DomainError("the tail factor needs at least one II_1 atom")
    return [Family(a.atom, seq.times(a.scale)) for a in form.atoms]


def _sum_sq(values) -> Fraction:
    return sum((v.square() for v in values), Fraction(0))


def _forms_close(a: FreeProductForm, b: FreeProductForm, tol: float) -> bool:
    if len(a.atoms) != len(b.atoms) or a.families != b.families:
        return False
    for x, y in zip(a.atoms, b.atoms):
        if x.atom != y.atom:
            return False
        fx, fy = float(x.scale), float(y.scale)
        if abs(fx - fy) > tol * max(1.0, abs(fx)):
            return False
    ex, ey = float(a.excess), float(b.excess)
    if math.isinf(ex) or math.isinf(ey):
        return ex == ey
    return abs(ex - ey) <= tol * max(1.0, abs(ex))


def _compare(name, expected, actual, exact: bool) -> CrossCheck:
    if exact:
        ok = expected == actual
        return CrossCheck(name, ok, expected, actual, None,
                          "" if ok else f"expected {pretty(expected)}, got {pretty(actual)}")
    # inexact data: atoms may not sort identically, so match on sorted float keys
    ok = _forms_close(expected, actual, NUMERIC_TOL) or _forms_close(
        _resort(expected), _resort(actual), NUMERIC_TOL)
    return CrossCheck(name, ok, expected, actual, NUMERIC_TOL,
                      "" if ok else f"expected {pretty(expected)}, got {pretty(actual)}")


def _resort(form):
    atoms = tuple(sorted(form.atoms, key=lambda a: (a.atom.id, float(a.scale))))
    return FreeProductForm(atoms, form.families, form.excess)


# ---------------------------------------------------------------------------
# amalgamation over B inside a II_1 factor


def prop21_expression(base, betas: Sequence, qs, *, route: str = "direct",
                      include_first: bool = True):
    """Free scaled product for the corner ``p_1 M p_1`` (finite index set).

    ``route="direct"`` writes ``N_{beta(1)} * [beta(i)/beta(1)]{Q(i)}`` for all
    i.  ``route="matrix-units"`` adds one index at a time, attaching
    ``[beta(n)/(K beta(1))]{Q(n)_{1/K} * L(F_{K^2-1})}`` with ``K`` the least
    integer such that ``beta(n)/K <= beta(1) + ... + beta(n-1)``.
    """
    b = [x if isinstance(x, Scalar) else Scalar(x) for x in betas]
    qs = _per_index(qs, len(b))
    b1 = b[0]
    start = 0 if include_first else 1
    if route == "direct":
        terms = tuple((b[i] / b1, _expr(qs[i])) for i in range(start, len(b)))
        head = _scaled(base, b1)
        return FSP(head, terms) if terms else head
    if route != "matrix-units":
        raise ValidationError(f"unknown route {route!r}")
    expr = _scaled(base, b1)
    if include_first:
        expr = FSP(expr, ((Scalar(1), _expr(qs[0])),))
    running = b1
    for n in range(1, len(b)):
        ratio = b[n] / running
        K = max(1, math.ceil(ratio.as_fraction() if ratio.is_rational else float(ratio)))
        c = b[n] / (Scalar(K) * b1)
        inner = _expr(qs[n]) if K == 1 else FreeJoin((_scaled(qs[n], Fraction(1, K)), LF(K * K - 1)))
        expr = FSP(expr, ((c, inner),))
        running = running + b[n]
    return expr


def prop21_decompose(base, betas, qs, *, route: str = "direct", tail_q=None,
                     include_first: bool = True, check: bool = True) -> DecompositionReport:
    """Corner of ``(M, E_B) *_B (Q, E_B)`` with ``Q = sum_i Q(i) p_i``.

    Finite index sets are normalized through the free scaled product and, when
    ``check`` is set, compared with
    ``N_S * Q(1)_{1/b(1)} * ... * Q(m)_{1/b(m)} * L(F_t)``, ``t = -m + sum b(i)^2``,
    where ``b = beta/S`` and ``S = sum beta``; the corner is amplified by
    ``S/beta(1)`` for the comparison.
    """
    bv = _as_betas(betas)
    if bv.is_infinite:
        return prop21_infinite(base, bv, qs, tail_q=tail_q, include_first=include_first)
    b = list(bv.prefix)
    qs = _per_index(qs, len(b))
    expr = prop21_expression(base, b, qs, route=route, include_first=include_first)
    form, trace = normalize(expr, fidelity=(route == "matrix-units"))
    inputs = {"base": _label(base), "betas": bv.to_json(), "Q": [_label(q) for q in qs],
              "route": route}
    notes = []
    if not include_first:
        notes.append("first summand [1]{Q(1)} omitted")
    cc = None
    if check and include_first:
        S = bv.total()
        nb = [x / S for x in b]
        t = -len(b) + _sum_sq(nb)
        closed = FreeJoin(tuple([_scaled(base, S)] + [_scaled(q, x.reciprocal())
                                                    for q, x in zip(qs, nb)] + [LF(t)]))
        expected = normal_form(closed, top_level=False)
        actual = rescale(form, S / b[0])
        cc = _compare("closed-form t = -m + sum beta^2", expected, actual, True)
    return DecompositionReport("prop21", inputs, expr, form, trace, classify_ambient(bv), cc,
                               notes=tuple(notes))


def prop21_infinite(base, betas: Betas, qs, *, tail_q=None,
                    include_first: bool = True) -> DecompositionReport:
    """Infinite index set: ``N_{beta(1)} * (*_i Q(i)_{beta(1)/beta(i)})``.

    Requires at least one of: some ``Q(i)`` absorbs ``L(F_inf)``; ``N``
    absorbs it; ``sum beta(i)^2 = inf`` (read off the tail).  ``qs`` covers
    the prefix and ``tail_q`` every index after it (default: the last prefix
    factor, or the single factor given).
    """
    if not betas.is_infinite:
        raise ValidationError("prop21_infinite needs an infinite beta vector")
    b = list(betas.prefix)
    qs_list = _per_index(qs, len(b))
    if tail_q is None:
        tail_q = qs if not isinstance(qs, (list, tuple)) else qs_list[-1]
    conditions = []
    if any(_absorbs(q) for q in qs_list + [tail_q]):
        conditions.append("some Q(i) absorbs L(F_inf)")
    if _absorbs(base):
        conditions.append("N absorbs L(F_inf)")
    if betas.sum_sq_infinite:
        conditions.append("sum beta(i)^2 = inf")
    if not conditions:
        raise DomainError("infinite index set not covered: no Q(i) or N absorbs L(F_inf) "
                          "and sum beta(i)^2 < inf")
    b1 = b[0]
    start = 0 if include_first else 1
    items = [_scaled(base, b1)]
    items += [_scaled(qs_list[i], b1 / b[i]) for i in range(start, len(b))]
    items += _tail_families(tail_q, betas.tail.reciprocal().times(b1))
    expr = FreeJoin(tuple(items))
    form, trace = normalize(expr)
    inputs = {"base": _label(base), "betas": betas.to_json(), "Q": [_label(q) for q in qs_list],
              "tail_Q": _label(tail_q)}
    notes = () if include_first else ("first summand Q(1) omitted",)
    return DecompositionReport("prop21-infinite", inputs, expr, form, trace,
                               classify_ambient(betas), conditions=tuple(conditions), notes=notes)


# ---------------------------------------------------------------------------
# amalgamation over B inside a type I algebra A


def prop31_expression(data: CommutingSquareData, qs, selection: GammaSelection, r: FreeParam):
    """``(Q(1) * L(F_r)) * [gamma(i)/beta(1)]{Q(i)_{gamma(i)/beta(i)}}`` for i >= 2."""
    b1 = data.betas[0]
    base = FreeJoin((_expr(qs[0]), LF(r)))
    terms = tuple((g / b1, _scaled(qs[m], g / data.betas[m]))
                  for m, g in enumerate(selection.gamma, start=1))
    return FSP(base, terms) if terms else base


def cor32A_closed_form(data: CommutingSquareData, qs) -> FreeProductForm:
    """``Q(1)_{1/b(1)} * ... * Q(n)_{1/b(n)} * L(F_t)`` with ``b = beta/S``,
    ``a = alpha/S`` and ``t = -n + 1 + sum b^2 - sum a^2``."""
    qs = _per_index(qs, data.n_rows)
    S = data.total_beta()
    nb = [x / S for x in data.betas]
    na = [x / S for x in data.alphas]
    t = -data.n_rows + 1 + _sum_sq(nb) - _sum_sq(na)
    closed = FreeJoin(tuple([_scaled(q, x.reciprocal()) for q, x in zip(qs, nb)] + [LF(t)]))
    return normal_form(closed, top_level=False)


def prop31_corner(data: CommutingSquareData, qs, selection: GammaSelection, *,
                  record: bool = False):
    """Normalized corner for an already ordered, validated square.

    Returns ``(expression, form, trace, r)``.
    """
    r = compute_r(data, selection)
    expr = prop31_expression(data, qs, selection, r)
    form, trace = normalize(expr, record=record)
    return expr, form, trace, r


def prop31_decompose(square: CommutingSquareData, qs, *, policy="max-alpha", tail_q=None,
                     check: bool = True) -> DecompositionReport:
    """Corner of ``(A, E_B) *_B (Q, E_B)`` for the square ``B subset A``.

    The B-projections are first reordered (index 0 fixed) so that every level
    meets an earlier summand; the permutation is recorded.  Finite squares are
    compared with :func:`cor32A_closed_form` after amplifying the corner by
    ``S/beta(1)``.
    """
    require_valid_square(square)
    if square.is_infinite:
        return prop31_infinite(square, qs, tail_q=tail_q)
    qs = _per_index(qs, square.n_rows)
    perm = connectivity_order(square)
    data = square.permuted(perm)
    qs = [qs[p] for p in perm]
    selection = select_gamma(data, policy)
    expr, form, trace, r = prop31_corner(data, qs, selection, record=True)
    inputs = {"square": square.to_json(), "Q": [_label(q) for q in qs],
              "policy": policy if isinstance(policy, str) else {str(k): v for k, v in policy.items()}}
    notes = []
    if list(perm) != list(range(square.n_rows)):
        notes.append(f"B-projections reordered to {list(perm)}")
    cc = None
    if check:
        actual = rescale(form, data.total_beta() / data.betas[0])
        cc = _compare("closed-form t = -n + 1 + sum beta^2 - sum alpha^2",
                      cor32A_closed_form(data, qs), actual, data.exact)
    return DecompositionReport("prop31", inputs, expr, form, trace, classify_ambient(data), cc,
                               tuple(perm), selection, r, notes=tuple(notes))


def prop31_infinite(square: CommutingSquareData, qs, *, tail_q=None) -> DecompositionReport:
    """Infinite index set: ``*_i Q(i)_{beta(1)/beta(i)}``.

    Requires some ``Q(i)`` absorbing ``L(F_inf)``, or the declared facts
    ``sum gamma(i)^2 = inf`` or ``r = inf`` on the square's tail.
    """
    require_valid_square(square)
    if not square.is_infinite:
        raise ValidationError("prop31_infinite needs a square with a tail")
    b = list(square.betas)
    qs_list = _per_index(qs, len(b))
    if tail_q is None:
        tail_q = qs if not isinstance(qs, (list, tuple)) else qs_list[-1]
    tail = square.tail
    conditions = []
    if any(_absorbs(q) for q in qs_list + [tail_q]):
        conditions.append("some Q(i) absorbs L(F_inf)")
    if tail.sum_gamma_sq_infinite:
        conditions.append("sum gamma(i)^2 = inf (declared)")
    if tail.r is not None and tail.r.is_inf:
        conditions.append("r = inf (declared)")
    if not conditions:
        raise DomainError("infinite index set not covered: no Q(i) absorbs L(F_inf), "
                          "and neither sum gamma^2 = inf nor r = inf is declared")
    b1 = b[0]
    items = [_scaled(q, b1 / x) for q, x in zip(qs_list, b)]
    items += _tail_families(tail_q, tail.betas.reciprocal().times(b1))
    expr = FreeJoin(tuple(items))
    form, trace = normalize(expr)
    inputs = {"square": square.to_json(), "Q": [_label(q) for q in qs_list],
              "tail_Q": _label(tail_q)}
    return DecompositionReport("prop31-infinite", inputs, expr, form, trace,
                               classify_ambient(square), r=tail.r, conditions=tuple(conditions))


# ---------------------------------------------------------------------------
# subfactor pairs

ZERO_A = "zero-a"
ZERO_B = "zero-b"
_LAMBDA_ALIASES = {"zero-a": ZERO_A, "auto-zero-a": ZERO_A, "zero-b": ZERO_B, "auto-zero-b": ZERO_B}


def _lambda(lam):
    if isinstance(lam, str) and lam in _LAMBDA_ALIASES:
        return _LAMBDA_ALIASES[lam]
    if not isinstance(lam, Scalar):
        lam = Scalar.from_json(lam) if isinstance(lam, (str, dict)) else Scalar(lam)
    if lam.is_inf or not lam:
        raise DomainError(f"lambda must be finite and positive, got {lam}")
    return lam


def _checked(form: FreeProductForm, name: str) -> FreeProductForm:
    report = validity_check(form)
    if not report.ok:
        raise ValidityError(f"{name} = {pretty(form)} is not a valid II_1 factor ({report})")
    return form


def _level_lambdas(lam, f0: FreeProductForm, f1: FreeProductForm, b0: Scalar, b1: Scalar):
    """Resolve the common trace ``Tr(q)`` and the per-level factors ``Tr(q)/beta(., 1)``."""
    lam = _lambda(lam)
    if lam == ZERO_A:
        lam = solve_lambda_zero_excess(f0) * b0
    elif lam == ZERO_B:
        lam = solve_lambda_zero_excess(f1) * b1
    return lam, lam / b0, lam / b1


def thm_subfin(square0: CommutingSquareData, square_m1: CommutingSquareData, q, *,
               lam=1, policy="max-alpha", policy_m1=None,
               label: Optional[str] = None) -> SubfactorPairReport:
    """Finite-depth subfactor ``P_-1 subset P_0`` built from ``q``.

    Each level's corner ``q_1 P q_1`` comes from :func:`prop31_decompose` with
    ``Q(i) = q``; both corners are then rescaled to a common projection ``q``
    of trace ``lam`` (so level factor ``lam/beta(level, 1)``).  ``lam`` may be
    ``"zero-a"`` or ``"zero-b"`` to make the excess of ``P_0`` resp. ``P_-1``
    vanish.  ``policy_m1`` selects gammas for the lower level (default: the
    same named policy; ``"max-alpha"`` when ``policy`` is an explicit map).
    """
    for name, sq in (("square0", square0), ("square-1", square_m1)):
        if sq.is_infinite:
            raise DomainError(f"{name} is infinite; finite depth needs finite squares")
    r0 = prop31_decompose(square0, q, policy=policy)
    if policy_m1 is None:
        policy_m1 = policy if isinstance(policy, str) else "max-alpha"
    r1 = prop31_decompose(square_m1, q, policy=policy_m1)
    lam, l0, l1 = _level_lambdas(lam, r0.form, r1.form, square0.betas[0], square_m1.betas[0])
    P0 = _checked(rescale(r0.form, l0), "P0")
    P1 = _checked(rescale(r1.form, l1), "P-1")
    return SubfactorPairReport("subfin", P0, P1, lam, (l0, l1), (r0, r1), label,
                               (_ORIENTATION_NOTE,))


def thm_subinf(square0: CommutingSquareData, square_m1: CommutingSquareData, q: FactorAtom, *,
               depth: str = "finite", lam=None, policy="max-alpha",
               label: Optional[str] = None) -> SubfactorPairReport:
    """Subfactor with both levels infinite free products of rescalings of ``q``.

    Finite depth: :func:`thm_subfin` applied to ``q * q * ...`` (default
    ``lam = 1``).  Infinite depth: the corners of the infinite squares with
    ``q * L(F_inf)`` in place of ``q``; by default (``lam=None``) the corners
    themselves are reported, otherwise they are rescaled by ``lam/beta(., 1)``.
    """
    if not isinstance(q, FactorAtom):
        raise ValidationError("thm_subinf needs an atom for Q")
    if depth == "finite":
        if square0.is_infinite or square_m1.is_infinite:
            raise DomainError("finite depth requested but a square is infinite")
        tilde = Family(q, ScaleSequence.constant(ONE))
        rep = thm_subfin(square0, square_m1, tilde, lam=1 if lam is None else lam,
                         policy=policy, label=label)
        return SubfactorPairReport("subinf-finite-depth", rep.P0, rep.P_minus1, rep.lam,
                                   rep.level_lams, rep.levels, label, rep.notes)
    if depth != "infinite":
        raise ValidationError(f"depth must be 'finite' or 'infinite', got {depth!r}")
    if not (square0.is_infinite and square_m1.is_infinite):
        raise DomainError("infinite depth requested but a square is finite")
    tilde = FreeJoin((ScaledAtom(q), LF(FreeParam("inf"))))
    r0 = prop31_infinite(square0, tilde, tail_q=tilde)
    r1 = prop31_infinite(square_m1, tilde, tail_q=tilde)
    if lam is None:
        lam_v, l0, l1 = None, ONE, ONE
    else:
        lam_v = _lambda(lam)
        if isinstance(lam_v, str):
            raise DomainError("infinite forms have excess 0; zero-excess solving does not apply")
        l0, l1 = lam_v / square0.betas[0], lam_v / square_m1.betas[0]
    P0 = _checked(rescale(r0.form, l0), "P0")
    P1 = _checked(rescale(r1.form, l1), "P-1")
    return SubfactorPairReport("subinf-infinite-depth", P0, P1, lam_v, (l0, l1), (r0, r1), label,
                               (_ORIENTATION_NOTE,))


def thm_msub(square0: CommutingSquareData, square_m1: CommutingSquareData, m0, m_m1, q, *,
             variant: str = "fin", lam=1, include_first_summand: bool = True,
             label: Optional[str] = None) -> SubfactorPairReport:
    """Hatted pair ``M^_-1 subset M^_0`` from ``M_-1 subset M_0`` and ``q``.

    Each level's corner is ``(M)_{beta(1)} * [beta(i)/beta(1)]{Q}`` (the
    corner decomposition over B inside a factor), rescaled to a common
    projection of trace ``lam``.  ``variant="inf"`` uses ``q * q * ...`` (or
    ``q * L(F_inf)`` for infinite squares).  ``include_first_summand=False``
    drops the ``[1]{Q}`` term of the first summand.
    """
    if variant not in ("fin", "inf"):
        raise ValidationError(f"variant must be 'fin' or 'inf', got {variant!r}")
    reports = []
    for sq, base, name in ((square0, m0, "square0"), (square_m1, m_m1, "square-1")):
        require_valid_square(sq)
        if variant == "fin":
            if sq.is_infinite:
                raise DomainError(f"{name} is infinite; the finite variant needs finite squares")
            reports.append(prop21_decompose(base, _as_betas(sq), q,
                                            include_first=include_first_summand))
        elif sq.is_infinite:
            if not isinstance(q, FactorAtom):
                raise ValidationError("the infinite variant needs an atom for Q")
            tilde = FreeJoin((ScaledAtom(q), LF(FreeParam("inf"))))
            reports.append(prop21_infinite(base, _as_betas(sq), tilde, tail_q=tilde,
                                           include_first=include_first_summand))
        else:
            if not isinstance(q, FactorAtom):
                raise ValidationError("the infinite variant needs an atom for Q")
            tilde = Family(q, ScaleSequence.constant(ONE))
            reports.append(prop21_decompose(base, _as_betas(sq), tilde,
                                            include_first=include_first_summand))
    r0, r1 = reports
    f0, f1 = r0.form, r1.form
    lam, l0, l1 = _level_lambdas(lam, f0, f1, square0.betas[0], square_m1.betas[0])
    P0 = _checked(rescale(f0, l0), "M^0")
    P1 = _checked(rescale(f1, l1), "M^-1")
    notes = [_ORIENTATION_NOTE]
    if not include_first_summand:
        notes.append("first summand omitted")
    return SubfactorPairReport(f"msub-{variant}", P0, P1, lam, (l0, l1), (r0, r1), label,
                               tuple(notes))


def thm_univ(square0: CommutingSquareData, square_m1: CommutingSquareData, q: FactorAtom, *,
             variant: str = "subfactor", m0=None, m_m1=None,
             label: Optional[str] = None) -> SubfactorPairReport:
    """Universal case: ``Q_s = Q`` for all ``s`` collapses every output to
    ``P = Q * Q * ...`` (resp. ``M * P``); the collapse is asserted."""
    if not isinstance(q, FactorAtom) or not q.fundamental_group_all_positive:
        raise DomainError("Q must be declared with fundamental_group_all_positive")
    depth = "infinite" if square0.is_infinite else "finite"
    P = Family(q, ScaleSequence.constant(ONE))
    if variant == "subfactor":
        rep = thm_subinf(square0, square_m1, q, depth=depth)
        want0 = want1 = make_form((), [P])
    elif variant == "nm":
        if m0 is None or m_m1 is None:
            raise ValidationError("the nm variant needs both M0 and M-1")
        rep = thm_msub(square0, square_m1, m0, m_m1, q, variant="inf")
        want0 = normal_form(FreeJoin((_expr(m0), P)), top_level=False)
        want1 = normal_form(FreeJoin((_expr(m_m1), P)), top_level=False)
    else:
        raise ValidationError(f"variant must be 'subfactor' or 'nm', got {variant!r}")
    for got, want, name in ((rep.P0, want0, "P0"), (rep.P_minus1, want1, "P-1")):
        if got != want:
            raise DomainError(f"{name} = {pretty(got)} did not collapse to {pretty(want)}")
    return SubfactorPairReport(f"univ-{variant}", rep.P0, rep.P_minus1, rep.lam, rep.level_lams,
                               rep.levels, label, rep.notes + ("collapse to Q * Q * ... verified",))
