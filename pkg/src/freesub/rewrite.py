"""Rewrite calculus normalizing expressions to :class:`FreeProductForm`.

Every rule is a local rewrite at one node of the expression tree and, apart
from the three flag-driven rules (``absorb``, ``infinite-rescale`` and
``fundamental-group``), preserves :func:`~freesub.algebra.exponent_semantics`
exactly.  ``normalize`` applies rules until none matches and records each
application in a :class:`DerivationTrace` that :func:`replay` can re-run.

Two strategies are available: ``"innermost"`` (leftmost-innermost redex,
fixed rule priority; the default and fully deterministic) and ``"random"``
(any redex anywhere, chosen by a caller-supplied ``random.Random``).  The
random strategy also enables ``scale-migrate``, which the deterministic one
only uses with ``fidelity=True``.
"""
from __future__ import annotations

import random as _random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

from .algebra import (
    FLAT,
    FREE_GROUP,
    FSP,
    LF,
    Family,
    FreeJoin,
    FreeProductForm,
    Rescale,
    ScaledAtom,
    _free_group_value,
    children,
    make_form,
    pretty,
    replace_at,
    replace_child,
    require_valid,
    subterm,
)
from .errors import DomainError, FreesubError, ValidationError
from .scalar import ONE, FreeParam, Scalar, ScaleSequence


@dataclass(frozen=True)
class Rule:
    name: str
    cite: str
    find: Callable
    apply: Callable


@dataclass(frozen=True)
class Step:
    rule: str
    cite: str
    path: tuple
    arg: Optional[int]
    before: str
    after: str
    note: Optional[str] = None

    def to_json(self):
        data = {"rule": self.rule, "cite": self.cite, "path": list(self.path),
                "arg": self.arg, "before": self.before, "after": self.after}
        if self.note:
            data["note"] = self.note
        return data

    @classmethod
    def from_json(cls, data) -> "Step":
        try:
            return cls(data["rule"], data["cite"], tuple(data["path"]), data.get("arg"),
                       data["before"], data["after"], data.get("note"))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"bad trace step {data!r}") from exc


@dataclass(frozen=True)
class DerivationTrace:
    steps: tuple = ()

    def __len__(self):
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    def rules(self) -> list:
        return [s.rule for s in self.steps]

    def to_json(self):
        return [s.to_json() for s in self.steps]

    @classmethod
    def from_json(cls, data) -> "DerivationTrace":
        if not isinstance(data, list):
            raise ValidationError("a trace is a JSON array of steps")
        return cls(tuple(Step.from_json(s) for s in data))

    def __str__(self):
        lines = []
        for i, s in enumerate(self.steps, 1):
            note = f"   [{s.note}]" if s.note else ""
            lines.append(f"{i:3d}. {s.rule:18s} {s.before}  ->  {s.after}{note}")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# rule bodies


def _join(*items):
    return FreeJoin(tuple(items))


def _is_lf_zero(e) -> bool:
    return isinstance(e, LF) and e.param == 0


def _find_scale_compose(node):
    if isinstance(node, Rescale) and isinstance(node.expr, (ScaledAtom, Rescale)):
        return [None]
    return []


def _apply_scale_compose(node, _):
    inner = node.expr
    if isinstance(inner, ScaledAtom):
        return ScaledAtom(inner.atom, inner.scale * node.by), None
    return Rescale(inner.expr, inner.by * node.by), None


def _finite_flat(e) -> bool:
    return isinstance(e, (ScaledAtom, LF))


def _find_amplify(node):
    if not isinstance(node, Rescale):
        return []
    inner = node.expr
    if isinstance(inner, LF):
        return [None]
    if isinstance(inner, FreeJoin) and all(_finite_flat(e) for e in inner.items):
        return [None]
    return []


def amplify_excess(excess: FreeParam, k: int, lam: Scalar) -> FreeParam:
    """Parameter after rescaling ``Q_{u1} * ... * Q_{uk} * L(F_excess)`` by ``lam``."""
    inv = lam.inverse_square()
    return excess.scaled(inv) + (k - 1) * (inv - 1)


def _apply_amplify(node, _):
    lam = node.by
    items = (node.expr,) if isinstance(node.expr, LF) else node.expr.items
    atoms = [ScaledAtom(e.atom, e.scale * lam) for e in items if isinstance(e, ScaledAtom)]
    excess = sum((e.param for e in items if isinstance(e, LF)), FreeParam(0))
    new = LF(amplify_excess(excess, len(atoms), lam))
    if not atoms:
        return new, None
    return FreeJoin(tuple(atoms) + (new,)), None


def _find_infinite_rescale(node):
    if not isinstance(node, Rescale):
        return []
    inner = node.expr
    if isinstance(inner, Family):
        return [None]
    if (isinstance(inner, FreeJoin) and all(isinstance(e, FLAT) for e in inner.items)
            and any(isinstance(e, Family) for e in inner.items)):
        return [None]
    return []


def _apply_infinite_rescale(node, _):
    lam = node.by
    if isinstance(node.expr, Family):
        return node.expr.times(lam), None
    out = []
    for e in node.expr.items:
        if isinstance(e, ScaledAtom):
            out.append(ScaledAtom(e.atom, e.scale * lam))
        elif isinstance(e, Family):
            out.append(e.times(lam))
    return FreeJoin(tuple(out)), "L(F) part absorbed by the infinite product"


def _fg_collapsible(node) -> bool:
    if isinstance(node, ScaledAtom):
        return node.atom.fundamental_group_all_positive and node.scale != ONE
    if isinstance(node, Family):
        return node.atom.fundamental_group_all_positive and not (
            node.seq.is_constant and node.seq.values[0] == ONE)
    return False


def _find_fundamental_group(node):
    return [None] if _fg_collapsible(node) else []


def _apply_fundamental_group(node, _):
    if isinstance(node, ScaledAtom):
        return ScaledAtom(node.atom, ONE), None
    return Family(node.atom, ScaleSequence.constant(ONE)), None


def _find_free_group_atom(node):
    return [None] if isinstance(node, ScaledAtom) and node.atom.kind == FREE_GROUP else []


def _apply_free_group_atom(node, _):
    return LF(_free_group_value(node)), None


def _find_assoc(node):
    if isinstance(node, FreeJoin):
        return [i for i, e in enumerate(node.items) if isinstance(e, FreeJoin)]
    return []


def _apply_assoc(node, i):
    items = node.items
    return FreeJoin(items[:i] + items[i].items + items[i + 1:]), None


def _find_unit(node):
    return [None] if isinstance(node, FreeJoin) and len(node.items) == 1 else []


def _apply_unit(node, _):
    return node.items[0], None


def _find_excess_merge(node):
    if not isinstance(node, FreeJoin):
        return []
    lfs = [i for i, e in enumerate(node.items) if isinstance(e, LF)]
    out = lfs[1:]
    if lfs and _is_lf_zero(node.items[lfs[0]]) and len(node.items) >= 2:
        out.insert(0, lfs[0])
    return out


def _apply_excess_merge(node, j):
    items = list(node.items)
    first = next(i for i, e in enumerate(items) if isinstance(e, LF))
    if j == first:
        del items[j]
    else:
        items[first] = LF(items[first].param + items[j].param)
        del items[j]
    return FreeJoin(tuple(items)), None


def _find_absorb(node):
    if not isinstance(node, FreeJoin):
        return []
    items = node.items
    fams = [e for e in items if isinstance(e, Family)]
    absorbing = bool(fams) or any(isinstance(e, ScaledAtom) and e.atom.absorbs for e in items)
    if not absorbing:
        return []
    out = [i for i, e in enumerate(items) if isinstance(e, LF)]
    constant = {(f.atom, f.seq.values[0]) for f in fams if f.seq.is_constant}
    seen = set()
    for i, e in enumerate(items):
        if isinstance(e, ScaledAtom) and (e.atom, e.scale) in constant:
            out.append(i)
        elif isinstance(e, Family):
            if e in seen:
                out.append(i)
            seen.add(e)
    return sorted(out)


def _apply_absorb(node, i):
    items = node.items
    return FreeJoin(items[:i] + items[i + 1:]), None


def _sort_key(e):
    return (2,) if isinstance(e, LF) else e._key()


def _find_sort(node):
    if not isinstance(node, FreeJoin) or not all(isinstance(e, FLAT) for e in node.items):
        return []
    keys = [_sort_key(e) for e in node.items]
    return [None] if keys != sorted(keys) else []


def _apply_sort(node, _):
    return FreeJoin(tuple(sorted(node.items, key=_sort_key))), None


def _term_indices(node, predicate):
    if not isinstance(node, FSP):
        return []
    return [i for i, (c, e) in enumerate(node.terms) if predicate(c, e)]


def _without_term(node, i, *extra):
    terms = node.terms[:i] + node.terms[i + 1:]
    base = _join(node.base, *extra) if extra else node.base
    return FSP(base, terms)


def _big_note(c: Scalar):
    return f"term coefficient {c} > 1" if c > ONE else None


def _find_flatten(node):
    return _term_indices(node, lambda c, e: isinstance(e, (ScaledAtom, Family)))


def _apply_flatten(node, i):
    c, e = node.terms[i]
    if isinstance(e, Family):
        return _without_term(node, i, e.times(c.reciprocal())), _big_note(c)
    extra = [ScaledAtom(e.atom, e.scale / c)]
    excess = c.square() - 1
    if excess:
        extra.append(LF(excess))
    return _without_term(node, i, *extra), _big_note(c)


def _find_scale_migrate(node):
    return _term_indices(node, lambda c, e: isinstance(e, ScaledAtom)
                         and e.atom.kind != FREE_GROUP and e.scale != ONE)


def _apply_scale_migrate(node, i):
    c, e = node.terms[i]
    mu = e.scale
    correction = LF(c.square() * (1 - mu.inverse_square()))
    terms = list(node.terms)
    terms[i] = (c / mu, ScaledAtom(e.atom, ONE))
    return FSP(_join(node.base, correction), tuple(terms)), _big_note(c)


def _find_term_on_lf(node):
    return _term_indices(node, lambda c, e: isinstance(e, LF))


def _apply_term_on_lf(node, i):
    c, e = node.terms[i]
    return _without_term(node, i, LF(e.param.scaled(c.square()))), None


def _find_term_distribute(node):
    return _term_indices(node, lambda c, e: isinstance(e, FreeJoin))


def _apply_term_distribute(node, i):
    c, e = node.terms[i]
    terms = node.terms[:i] + tuple((c, item) for item in e.items) + node.terms[i + 1:]
    return FSP(node.base, terms), None


def _find_empty_terms(node):
    return [None] if isinstance(node, FSP) and not node.terms else []


def _apply_empty_terms(node, _):
    return node.base, None


RULES = {
    r.name: r
    for r in [
        Rule("fundamental-group",
             "Q_s = Q for every s > 0 when the fundamental group of Q is all of R_+",
             _find_fundamental_group, _apply_fundamental_group),
        Rule("free-group-atom",
             "L(F_x)_s = L(F_{1+(x-1)/s^2}), merged into the excess",
             _find_free_group_atom, _apply_free_group_atom),
        Rule("scale-compose", "(Q_s)_lam = Q_{s*lam}",
             _find_scale_compose, _apply_scale_compose),
        Rule("amplify",
             "(Q_{u1}*...*Q_{uk}*L(F_a'))_lam = Q_{lam u1}*...*Q_{lam uk}*L(F_a), "
             "a = lam^-2 a' + (k-1)(lam^-2 - 1)",
             _find_amplify, _apply_amplify),
        Rule("infinite-rescale",
             "rescaling an infinite free product rescales each factor",
             _find_infinite_rescale, _apply_infinite_rescale),
        Rule("term-on-lf", "base * [c]{L(F_s)} = base * L(F_{c^2 s})",
             _find_term_on_lf, _apply_term_on_lf),
        Rule("term-distribute", "[c]{A * B} = [c]{A} * [c]{B}",
             _find_term_distribute, _apply_term_distribute),
        Rule("scale-migrate",
             "base * [c]{Q_mu} = base * L(F_{c^2(1-mu^-2)}) * [c/mu]{Q}",
             _find_scale_migrate, _apply_scale_migrate),
        Rule("flatten", "base * [c]{Q} = base * Q_{1/c} * L(F_{c^2-1})",
             _find_flatten, _apply_flatten),
        Rule("empty-terms", "a free scaled product with no terms is its base",
             _find_empty_terms, _apply_empty_terms),
        Rule("assoc", "free products are associative", _find_assoc, _apply_assoc),
        Rule("unit", "a free product of one factor is that factor", _find_unit, _apply_unit),
        Rule("excess-merge", "L(F_x) * L(F_y) = L(F_{x+y}); L(F_0) is no factor",
             _find_excess_merge, _apply_excess_merge),
        Rule("absorb",
             "an infinite free product, or a factor Q = Q * L(F_inf), absorbs L(F) "
             "factors and copies of its own constant-scale members",
             _find_absorb, _apply_absorb),
        Rule("sort", "free products are commutative; canonical order by (id, scale)",
             _find_sort, _apply_sort),
    ]
}

_DETERMINISTIC = [n for n in RULES if n != "scale-migrate"]
_FIDELITY = [n if n != "flatten" else "scale-migrate" for n in _DETERMINISTIC]
_FIDELITY.insert(_FIDELITY.index("scale-migrate") + 1, "flatten")


def _first_redex(node, order, path=()):
    for i, c in enumerate(children(node)):
        hit = _first_redex(c, order, path + (i,))
        if hit is not None:
            return hit
    for name in order:
        args = RULES[name].find(node)
        if args:
            return path, name, args[0]
    return None


def _all_redexes(node, memo=None):
    """Every ``(path, rule, arg)`` in ``node``, children before parents.

    ``memo`` maps ``id(subtree)`` to ``(subtree, redexes)`` so that subtrees
    shared between successive expressions are scanned once.
    """
    if memo is not None:
        hit = memo.get(id(node))
        if hit is not None:
            return hit[1]
    out = []
    for i, c in enumerate(children(node)):
        out.extend(((i,) + p, name, arg) for p, name, arg in _all_redexes(c, memo))
    for name, rule in RULES.items():
        for arg in rule.find(node):
            out.append(((), name, arg))
    if memo is not None:
        memo[id(node)] = (node, out)
    return out


def _apply(expr, path, name, arg, record):
    node = subterm(expr, path)
    rule = RULES[name]
    new, note = rule.apply(node, arg)
    if record is not None:
        record.append(Step(name, rule.cite, tuple(path), arg, pretty(node), pretty(new), note))
    return replace_at(expr, path, new)


def to_form(expr) -> FreeProductForm:
    """Read the FreeProductForm off an expression that no rule rewrites."""
    if isinstance(expr, ScaledAtom):
        return make_form([expr])
    if isinstance(expr, LF):
        return make_form((), (), expr.param)
    if isinstance(expr, Family):
        return make_form((), [expr])
    if isinstance(expr, FreeJoin) and all(isinstance(e, FLAT) for e in expr.items):
        atoms = [e for e in expr.items if isinstance(e, ScaledAtom)]
        fams = [e for e in expr.items if isinstance(e, Family)]
        excess = sum((e.param for e in expr.items if isinstance(e, LF)), FreeParam(0))
        return make_form(atoms, fams, excess)
    raise FreesubError(f"expression is not in normal form: {pretty(expr)}")


def rewrites(expr, *, strategy: str = "innermost", rng: Optional[_random.Random] = None,
             fidelity: bool = False, record: bool = True, max_steps: int = 100_000):
    """Yield ``(step, expression)`` after each single rule application.

    ``step`` is None when ``record`` is off (saves the pretty-printing).
    """
    if strategy not in ("innermost", "random"):
        raise ValidationError(f"unknown strategy {strategy!r}")
    if strategy == "random" and rng is None:
        raise ValidationError("the random strategy needs an explicit rng")
    order = _FIDELITY if fidelity else _DETERMINISTIC
    memo = {}
    for _ in range(max_steps):
        if strategy == "innermost":
            hit = _first_redex(expr, order)
        else:
            redexes = _all_redexes(expr, memo)
            hit = rng.choice(redexes) if redexes else None
        if hit is None:
            return
        steps = [] if record else None
        expr = _apply(expr, *hit, steps)
        yield (steps[0] if steps else None), expr
    raise FreesubError(f"normalization did not terminate in {max_steps} steps")


class _Budget:
    __slots__ = ("left", "normal")

    def __init__(self, n):
        self.left = n
        # id -> node for subtrees already known to be normal; the node is
        # kept alive so its id cannot be reused
        self.normal = {}


def _innermost(node, path, order, steps, budget):
    """Leftmost-innermost normalization of ``node``.

    Equivalent to repeatedly rewriting the first post-order redex from the
    root (the order used by :func:`rewrites`): redexes before ``node`` in
    post-order are already gone and a rewrite here only touches this subtree.
    """
    if id(node) in budget.normal:
        return node
    while True:
        for i, c in enumerate(children(node)):
            new = _innermost(c, path + (i,), order, steps, budget)
            if new is not c:
                node = replace_child(node, i, new)
        for name in order:
            args = RULES[name].find(node)
            if args:
                break
        else:
            budget.normal[id(node)] = node
            return node
        budget.left -= 1
        if budget.left < 0:
            raise FreesubError("normalization did not terminate")
        rule = RULES[name]
        new, note = rule.apply(node, args[0])
        if steps is not None:
            steps.append(Step(name, rule.cite, path, args[0], pretty(node), pretty(new), note))
        node = new


def normalize(expr, *, top_level: bool = True, strategy: str = "innermost",
              rng: Optional[_random.Random] = None, fidelity: bool = False,
              record: bool = True, max_steps: int = 100_000):
    """Normalize ``expr``; return ``(FreeProductForm, DerivationTrace)``.

    With ``top_level=True`` the result must satisfy ``excess > 1 - k`` (or be
    infinite) and a :class:`~freesub.errors.ValidityError` is raised otherwise.
    Intermediate fragments should be normalized with ``top_level=False``;
    their forms may be provisional.
    """
    steps = [] if record else None
    if strategy == "innermost":
        order = _FIDELITY if fidelity else _DETERMINISTIC
        expr = _innermost(expr, (), order, steps, _Budget(max_steps))
    else:
        for step, expr in rewrites(expr, strategy=strategy, rng=rng, fidelity=fidelity,
                                   record=record, max_steps=max_steps):
            if record:
                steps.append(step)
    form = to_form(expr)
    if top_level:
        require_valid(form)
    return form, DerivationTrace(tuple(steps or ()))


def normal_form(expr, **kwargs) -> FreeProductForm:
    return normalize(expr, record=False, **kwargs)[0]


def replay(expr, trace: DerivationTrace) -> FreeProductForm:
    """Re-run a recorded derivation from ``expr`` and return its normal form.

    Every step is checked: the redex text must match ``before``, the rule must
    apply there, and the rewritten text must match ``after``.
    """
    for n, step in enumerate(trace, 1):
        if step.rule not in RULES:
            raise ValidationError(f"step {n}: unknown rule {step.rule!r}")
        try:
            node = subterm(expr, step.path)
        except (IndexError, TypeError) as exc:
            raise ValidationError(f"step {n}: no subterm at {step.path}") from exc
        if pretty(node) != step.before:
            raise ValidationError(f"step {n}: expected {step.before!r}, found {pretty(node)!r}")
        if step.arg not in RULES[step.rule].find(node):
            raise ValidationError(f"step {n}: rule {step.rule} does not apply to {step.before}")
        new, _ = RULES[step.rule].apply(node, step.arg)
        if pretty(new) != step.after:
            raise ValidationError(f"step {n}: rewrite gave {pretty(new)!r}, trace says {step.after!r}")
        expr = replace_at(expr, step.path, new)
    if _first_redex(expr, list(RULES)) is not None:
        raise ValidationError("trace ends before the expression is normal")
    return to_form(expr)


def equivalent(e1, e2) -> bool:
    """True iff both expressions have identical normal forms."""
    return normal_form(e1, top_level=False) == normal_form(e2, top_level=False)


# ---------------------------------------------------------------------------
# operations on forms


def _check_lambda(lam) -> Scalar:
    lam = lam if isinstance(lam, Scalar) else Scalar(lam)
    if lam.is_inf or not lam:
        raise DomainError(f"rescaling factor must be finite and positive, got {lam}")
    return lam


def rescale(form: FreeProductForm, lam) -> FreeProductForm:
    """Amplify/compress a normal form by ``lam``.

    Finite forms use ``a = lam^-2 a' + (k-1)(lam^-2 - 1)``; infinite forms
    rescale every factor and keep excess 0.
    """
    lam = _check_lambda(lam)
    atoms = [ScaledAtom(a.atom, a.scale * lam) for a in form.atoms]
    if form.is_infinite:
        return make_form(atoms, [f.times(lam) for f in form.families], 0)
    return make_form(atoms, (), amplify_excess(form.excess, form.k, lam))


def solve_lambda_zero_excess(form: FreeProductForm) -> Scalar:
    """The ``lam`` with ``rescale(form, lam).excess == 0``.

    ``lam^2 = (a' + k - 1)/(k - 1)``, so ``lam`` is returned as a radical
    Scalar when that ratio is not a rational square.
    """
    if form.is_infinite:
        raise DomainError("infinite forms already have excess 0")
    k = form.k
    if k < 2:
        raise DomainError(f"need at least two atoms to reach excess 0, got k={k}")
    if form.excess.is_inf:
        raise DomainError("excess is infinite; no rescaling removes it")
    num = form.excess.value + k - 1
    if num <= 0:
        raise DomainError(f"excess {form.excess} <= 1-k={1 - k}: lambda^2 would be <= 0")
    return Scalar.sqrt(Fraction(num, k - 1))
