"""Expression trees for isomorphism classes and their canonical normal form.

Expressions are immutable trees built from

``ScaledAtom``  a factor ``Q`` rescaled to ``Q_s``
``LF``          an interpolated free group factor ``L(F_t)``
``Family``      an infinite free product ``Q_{s_0} * Q_{s_1} * ...``
``FreeJoin``    a free product of expressions
``FSP``         a free scaled product ``base * [c_1]{E_1} * [c_2]{E_2} ...``
``Rescale``     an amplification/compression ``(E)_lam``

A :class:`FreeProductForm` is the normal form: a sorted multiset of scaled
atoms, a sorted tuple of infinite families and one aggregated ``L(F)``
parameter (the *excess*; zero means there is no ``L(F)`` factor).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Union

from .errors import DomainError, ValidationError, ValidityError
from .scalar import ONE, FreeParam, Scalar, ScaleSequence

GENERIC = "generic"
FREE_GROUP = "free-group"


@dataclass(frozen=True)
class FactorAtom:
    """An abstract II_1 factor, or ``L(F_t)`` treated as an atom.

    Property flags are declared by the caller; the engine never infers them.
    """

    id: str
    kind: str = GENERIC
    param: Optional[FreeParam] = None
    absorbs_LFinf: bool = False
    fundamental_group_all_positive: bool = False

    def __post_init__(self):
        if not self.id or not isinstance(self.id, str):
            raise ValidationError(f"atom id must be a nonempty string, got {self.id!r}")
        if self.kind == FREE_GROUP:
            if self.param is None:
                raise ValidationError(f"free-group atom {self.id} needs a parameter")
            if not isinstance(self.param, FreeParam):
                object.__setattr__(self, "param", FreeParam(self.param))
            if not self.param.is_inf and self.param.value <= 1:
                raise ValidationError(f"free-group atom {self.id}: parameter must be > 1")
        elif self.kind != GENERIC:
            raise ValidationError(f"unknown atom kind {self.kind!r}")
        elif self.param is not None:
            raise ValidationError(f"generic atom {self.id} takes no parameter")

    @property
    def absorbs(self) -> bool:
        return self.absorbs_LFinf

    def _key(self):
        return (self.id, self.kind, str(self.param), self.absorbs_LFinf,
                self.fundamental_group_all_positive)

    def __str__(self):
        return self.id


def _as_scalar(x) -> Scalar:
    return x if isinstance(x, Scalar) else Scalar(x)


@dataclass(frozen=True)
class ScaledAtom:
    """``atom`` amplified (scale > 1) or compressed (scale < 1)."""

    atom: FactorAtom
    scale: Scalar = ONE

    def __post_init__(self):
        s = _as_scalar(self.scale)
        if s.is_inf or not s:
            raise ValidationError(f"atom scale must be finite and positive, got {s}")
        object.__setattr__(self, "scale", s)

    def _key(self):
        return (0, self.atom.id, self.scale._key(), self.atom._key())


@dataclass(frozen=True)
class LF:
    """Interpolated free group factor ``L(F_t)``; ``t`` may be negative."""

    param: FreeParam

    def __post_init__(self):
        if not isinstance(self.param, FreeParam):
            object.__setattr__(self, "param", FreeParam(self.param))


@dataclass(frozen=True)
class Family:
    """Infinite free product of ``atom`` at scales given by ``seq``."""

    atom: FactorAtom
    seq: ScaleSequence

    def __post_init__(self):
        if self.atom.kind == FREE_GROUP:
            raise ValidationError("infinite families of free-group atoms are not supported")
        if not isinstance(self.seq, ScaleSequence):
            object.__setattr__(self, "seq", ScaleSequence.constant(self.seq))

    def times(self, factor) -> "Family":
        return Family(self.atom, self.seq.times(factor))

    def _key(self):
        return (1, self.atom.id, self.seq._key(), self.atom._key())


@dataclass(frozen=True)
class FreeJoin:
    items: tuple

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))


@dataclass(frozen=True)
class FSP:
    """Free scaled product: ``base`` with scaled terms ``(c, E)``."""

    base: "Expr"
    terms: tuple

    def __post_init__(self):
        terms = tuple((_as_scalar(c), e) for c, e in self.terms)
        for c, _ in terms:
            if c.is_inf or not c:
                raise ValidationError(f"term coefficient must be finite and positive, got {c}")
        object.__setattr__(self, "terms", terms)


@dataclass(frozen=True)
class Rescale:
    expr: "Expr"
    by: Scalar

    def __post_init__(self):
        s = _as_scalar(self.by)
        if s.is_inf or not s:
            raise ValidationError(f"rescaling factor must be finite and positive, got {s}")
        object.__setattr__(self, "by", s)


Expr = Union[ScaledAtom, LF, Family, FreeJoin, FSP, Rescale]
FLAT = (ScaledAtom, LF, Family)


def term(c, expr) -> FSP:
    """A lone scaled term ``[c]{expr}`` (free scaled product over an empty base)."""
    return FSP(FreeJoin(()), ((c, expr),))


def children(node) -> tuple:
    if isinstance(node, FreeJoin):
        return node.items
    if isinstance(node, FSP):
        return (node.base,) + tuple(e for _, e in node.terms)
    if isinstance(node, Rescale):
        return (node.expr,)
    return ()


def replace_child(node, index: int, new):
    if isinstance(node, FreeJoin):
        items = list(node.items)
        items[index] = new
        return FreeJoin(tuple(items))
    if isinstance(node, FSP):
        if index == 0:
            return FSP(new, node.terms)
        terms = list(node.terms)
        terms[index - 1] = (terms[index - 1][0], new)
        return FSP(node.base, tuple(terms))
    if isinstance(node, Rescale):
        return Rescale(new, node.by)
    raise IndexError(f"{type(node).__name__} has no children")


def subterm(node, path):
    for i in path:
        node = children(node)[i]
    return node


def replace_at(node, path, new):
    if not path:
        return new
    head, rest = path[0], path[1:]
    return replace_child(node, head, replace_at(children(node)[head], rest, new))


def is_finite(expr) -> bool:
    if isinstance(expr, Family):
        return False
    return all(is_finite(c) for c in children(expr))


def atoms_in(expr) -> set:
    """All FactorAtoms occurring in ``expr``."""
    if isinstance(expr, (ScaledAtom, Family)):
        return {expr.atom}
    out = set()
    for c in children(expr):
        out |= atoms_in(c)
    return out


# ---------------------------------------------------------------------------
# normal form


@dataclass(frozen=True)
class FreeProductForm:
    """Canonical normal form ``Q1_{s1} * ... * Qk_{sk} * (families) * L(F_excess)``.

    Build instances with :func:`make_form`, which applies the canonical
    ordering and the absorption conventions.
    """

    atoms: tuple = ()
    families: tuple = ()
    excess: FreeParam = field(default_factory=FreeParam)

    @property
    def k(self) -> int:
        return len(self.atoms)

    @property
    def is_infinite(self) -> bool:
        return bool(self.families)

    @property
    def provisional(self) -> bool:
        """True when the form is not a valid top-level II_1 factor."""
        return not validity_check(self).ok

    def scales(self) -> list:
        return [a.scale for a in self.atoms]

    def to_expr(self):
        items = list(self.atoms) + list(self.families)
        if self.excess or not items:
            items.append(LF(self.excess))
        return items[0] if len(items) == 1 else FreeJoin(tuple(items))

    def __str__(self):
        return pretty(self.to_expr())


def _absorbing(atoms, families) -> bool:
    return bool(families) or any(a.atom.absorbs for a in atoms)


def make_form(atoms=(), families=(), excess=0) -> FreeProductForm:
    """Canonical form: collapse flagged scales, absorb, sort, merge."""
    excess = excess if isinstance(excess, FreeParam) else FreeParam(excess)
    flat_atoms = []
    for a in atoms:
        if a.atom.kind == FREE_GROUP:
            excess = excess + _free_group_value(a)
            continue
        if a.atom.fundamental_group_all_positive and a.scale != ONE:
            a = ScaledAtom(a.atom, ONE)
        flat_atoms.append(a)
    fams = {}
    for f in families:
        if f.atom.fundamental_group_all_positive and not (f.seq.is_constant and f.seq.values[0] == ONE):
            f = Family(f.atom, ScaleSequence.constant(ONE))
        fams.setdefault(f._key(), f)
    constant = {(f.atom, f.seq.values[0]) for f in fams.values() if f.seq.is_constant}
    flat_atoms = [a for a in flat_atoms if (a.atom, a.scale) not in constant]
    if _absorbing(flat_atoms, fams.values()):
        excess = FreeParam(0)
    return FreeProductForm(
        tuple(sorted(flat_atoms, key=lambda a: a._key())),
        tuple(sorted(fams.values(), key=lambda f: f._key())),
        excess,
    )


def _free_group_value(a: ScaledAtom) -> FreeParam:
    """``L(F_x)_s = L(F_{1 + (x-1)/s^2})``."""
    x = a.atom.param
    if x.is_inf:
        return x
    return FreeParam(1 + (x.value - 1) * a.scale.inverse_square())


@dataclass(frozen=True)
class ValidityReport:
    ok: bool
    k: int
    excess: FreeParam
    bound: Fraction

    def __str__(self):
        verdict = "ok" if self.ok else "violation"
        return f"{verdict}: k={self.k}, excess={self.excess}, required > {self.bound}"


def validity_check(form: FreeProductForm) -> ValidityReport:
    """Check the top-level bound ``excess > 1 - k``.

    Infinite forms are always valid.  With ``k >= 1`` an excess of exactly 0
    means "no L(F) factor" and is accepted (``Q`` alone is a II_1 factor).
    """
    bound = Fraction(1 - form.k)
    if form.is_infinite:
        return ValidityReport(True, form.k, form.excess, bound)
    if form.k >= 1 and form.excess == 0:
        return ValidityReport(True, form.k, form.excess, bound)
    ok = form.excess.is_inf or form.excess.value > bound
    return ValidityReport(ok, form.k, form.excess, bound)


def require_valid(form: FreeProductForm) -> FreeProductForm:
    report = validity_check(form)
    if not report.ok:
        raise ValidityError(f"{pretty(form.to_expr())} is not a valid II_1 factor ({report})")
    return form


# ---------------------------------------------------------------------------
# exponent semantics: the independent oracle


def exponent_semantics(expr, assign: Mapping[str, Fraction]) -> Fraction:
    """Evaluate the interpolated exponent of a finite expression.

    Each generic atom ``Q`` is read as ``L(F_x)`` with ``x = assign[Q.id]``;
    then ``Q_u -> 1 + (x-1)/u^2``, free products add, a scaled term ``[c]{E}``
    adds ``c^2 * exponent(E)`` and rescaling by ``lam`` maps ``e`` to
    ``1 + (e-1)/lam^2``.  Property flags are ignored.
    """
    if isinstance(expr, ScaledAtom):
        if expr.atom.kind == FREE_GROUP:
            if expr.atom.param.is_inf:
                raise DomainError("exponent of L(F_inf) is infinite")
            x = expr.atom.param.value
        else:
            try:
                x = Fraction(assign[expr.atom.id])
            except KeyError as exc:
                raise ValidationError(f"no assignment for atom {expr.atom.id}") from exc
        return 1 + (x - 1) * expr.scale.inverse_square()
    if isinstance(expr, LF):
        if expr.param.is_inf:
            raise DomainError("exponent of L(F_inf) is infinite")
        return expr.param.value
    if isinstance(expr, Family):
        raise DomainError("exponent semantics is undefined for infinite expressions")
    if isinstance(expr, FreeJoin):
        return sum((exponent_semantics(e, assign) for e in expr.items), Fraction(0))
    if isinstance(expr, FSP):
        out = exponent_semantics(expr.base, assign)
        for c, e in expr.terms:
            out += c.square() * exponent_semantics(e, assign)
        return out
    if isinstance(expr, Rescale):
        return 1 + (exponent_semantics(expr.expr, assign) - 1) * expr.by.inverse_square()
    raise TypeError(f"not an expression: {expr!r}")


def form_semantics(form: FreeProductForm, assign) -> Fraction:
    return exponent_semantics(form.to_expr(), assign)


# ---------------------------------------------------------------------------
# pretty printing


def _sub(s: Scalar) -> str:
    text = str(s)
    return f"({text})" if "sqrt" in text else text


def pretty(expr) -> str:
    """Text notation: ``Q_3/2``, ``L(F_-2/3)``, ``*`` and ``[c]{...}`` terms."""
    if isinstance(expr, FreeProductForm):
        expr = expr.to_expr()
    if isinstance(expr, ScaledAtom):
        return expr.atom.id if expr.scale == ONE else f"{expr.atom.id}_{_sub(expr.scale)}"
    if isinstance(expr, LF):
        return f"L(F_{expr.param})"
    if isinstance(expr, Family):
        seq = expr.seq
        if seq.is_constant:
            body = expr.atom.id if seq.values[0] == ONE else f"{expr.atom.id}_{_sub(seq.values[0])}"
            return f"({body} * {body} * ...)"
        return f"(*_k {expr.atom.id}_[{seq}])"
    if isinstance(expr, FreeJoin):
        if not expr.items:
            return "()"
        return " * ".join(_paren(e) for e in expr.items)
    if isinstance(expr, FSP):
        parts = [] if expr.base == FreeJoin(()) else [_paren(expr.base)]
        parts += [f"[{c}]{{{pretty(e)}}}" for c, e in expr.terms]
        return " * ".join(parts) if parts else "()"
    if isinstance(expr, Rescale):
        return f"({pretty(expr.expr)})_{_sub(expr.by)}"
    raise TypeError(f"not an expression: {expr!r}")


def _paren(e) -> str:
    text = pretty(e)
    if isinstance(e, (FreeJoin, FSP)) and " * " in text:
        return f"({text})"
    return text
