"""JSON interchange for atoms, expressions and normal forms.

Expression schema (all scalars are strings ``"p/q"``, ``"inf"`` or
``{"q": "p/q", "sqrt": "d"}``)::

    "Q"                                   atom Q at scale 1
    {"atom": "Q", "scale": "1/2"}         Q_{1/2}
    {"lf": "3"}                           L(F_3)
    {"join": [E, E, ...]}                 free product
    {"term": ["c", E]}                    lone scaled term [c]{E}
    {"fsp": {"base": E, "terms": [["c", E], ...]}}
    {"rescale": E, "by": "lam"}           (E)_lam
    {"family": "Q", "seq": {"values": [...], "ratio": "r"}}

Atom declarations may be given inline (``"kind"``, ``"param"``,
``"absorbs_LFinf"``, ``"fundamental_group_all_positive"`` next to ``"atom"``)
or in a separate table mapping ids to those fields.  An id must not be
declared twice with different properties.
"""
from __future__ import annotations

from typing import Mapping, Optional

from .algebra import (
    FSP,
    GENERIC,
    LF,
    Family,
    FactorAtom,
    FreeJoin,
    FreeProductForm,
    Rescale,
    ScaledAtom,
    make_form,
)
from .errors import ValidationError
from .scalar import ONE, FreeParam, Scalar, ScaleSequence

_ATOM_FIELDS = ("kind", "param", "absorbs_LFinf", "fundamental_group_all_positive")


def atom_to_json(atom: FactorAtom) -> dict:
    out = {"atom": atom.id}
    if atom.kind != GENERIC:
        out["kind"] = atom.kind
        out["param"] = atom.param.to_json()
    if atom.absorbs_LFinf:
        out["absorbs_LFinf"] = True
    if atom.fundamental_group_all_positive:
        out["fundamental_group_all_positive"] = True
    return out


class AtomTable:
    """Resolves atom ids to FactorAtoms while parsing one payload."""

    def __init__(self, declared: Optional[Mapping] = None):
        self._atoms = {}
        for key, spec in (declared or {}).items():
            if not isinstance(spec, dict):
                raise ValidationError(f"atom declaration for {key!r} must be an object")
            self._define(key, spec)

    def _define(self, ident, spec) -> FactorAtom:
        flags = {k: spec[k] for k in _ATOM_FIELDS if k in spec}
        for k in ("absorbs_LFinf", "fundamental_group_all_positive"):
            if k in flags and not isinstance(flags[k], bool):
                raise ValidationError(f"atom {ident}: {k} must be true or false")
        kind = flags.get("kind", GENERIC)
        param = flags.get("param")
        if param is not None:
            param = FreeParam.from_json(param)
        atom = FactorAtom(ident, kind, param, flags.get("absorbs_LFinf", False),
                          flags.get("fundamental_group_all_positive", False))
        old = self._atoms.get(ident)
        if old is not None and old != atom:
            raise ValidationError(f"atom {ident!r} declared twice with different properties")
        self._atoms[ident] = atom
        return atom

    def get(self, ident, inline: Optional[dict] = None) -> FactorAtom:
        if not isinstance(ident, str) or not ident:
            raise ValidationError(f"atom id must be a nonempty string, got {ident!r}")
        if inline and any(k in inline for k in _ATOM_FIELDS):
            return self._define(ident, inline)
        if ident not in self._atoms:
            self._atoms[ident] = FactorAtom(ident)
        return self._atoms[ident]

    def atom(self, data) -> FactorAtom:
        """Parse an atom reference: ``"Q"`` or ``{"atom": "Q", ...flags}``."""
        if isinstance(data, str):
            return self.get(data)
        if isinstance(data, dict) and "atom" in data:
            return self.get(data["atom"], data)
        raise ValidationError(f"expected an atom reference, got {data!r}")


def expr_to_json(expr):
    if isinstance(expr, FreeProductForm):
        expr = expr.to_expr()
    if isinstance(expr, ScaledAtom):
        out = atom_to_json(expr.atom)
        if expr.scale != ONE:
            out["scale"] = expr.scale.to_json()
        return out
    if isinstance(expr, LF):
        return {"lf": expr.param.to_json()}
    if isinstance(expr, Family):
        out = atom_to_json(expr.atom)
        out["family"] = out.pop("atom")
        out["seq"] = expr.seq.to_json()
        return out
    if isinstance(expr, FreeJoin):
        return {"join": [expr_to_json(e) for e in expr.items]}
    if isinstance(expr, FSP):
        return {"fsp": {"base": expr_to_json(expr.base),
                        "terms": [[c.to_json(), expr_to_json(e)] for c, e in expr.terms]}}
    if isinstance(expr, Rescale):
        return {"rescale": expr_to_json(expr.expr), "by": expr.by.to_json()}
    raise TypeError(f"not an expression: {expr!r}")


def expr_from_json(data, atoms: Optional[AtomTable] = None):
    table = atoms if atoms is not None else AtomTable()
    return _parse(data, table, 0)


_MAX_DEPTH = 200


def _pair(item, table, depth):
    if not isinstance(item, (list, tuple)) or len(item) != 2:
        raise ValidationError(f"a scaled term is [coefficient, expression], got {item!r}")
    return Scalar.from_json(item[0]), _parse(item[1], table, depth + 1)


def _parse(data, table: AtomTable, depth: int):
    if depth > _MAX_DEPTH:
        raise ValidationError("expression nested too deeply")
    if isinstance(data, str):
        return ScaledAtom(table.get(data))
    if not isinstance(data, dict):
        raise ValidationError(f"expected an expression object, got {data!r}")
    if "atom" in data:
        atom = table.get(data["atom"], data)
        return ScaledAtom(atom, Scalar.from_json(data.get("scale", "1")))
    if "lf" in data:
        return LF(FreeParam.from_json(data["lf"]))
    if "join" in data:
        if not isinstance(data["join"], list):
            raise ValidationError("'join' must be a list")
        return FreeJoin(tuple(_parse(e, table, depth + 1) for e in data["join"]))
    if "term" in data:
        c, e = _pair(data["term"], table, depth)
        return FSP(FreeJoin(()), ((c, e),))
    if "fsp" in data:
        body = data["fsp"]
        if not isinstance(body, dict) or "base" not in body:
            raise ValidationError("'fsp' needs a 'base'")
        terms = body.get("terms", [])
        if not isinstance(terms, list):
            raise ValidationError("'terms' must be a list")
        return FSP(_parse(body["base"], table, depth + 1),
                   tuple(_pair(t, table, depth) for t in terms))
    if "rescale" in data:
        if "by" not in data:
            raise ValidationError("'rescale' needs 'by'")
        return Rescale(_parse(data["rescale"], table, depth + 1), Scalar.from_json(data["by"]))
    if "family" in data:
        inline = dict(data)
        atom = table.get(inline.pop("family"), inline)
        return Family(atom, ScaleSequence.from_json(data.get("seq", {"values": ["1"]})))
    raise ValidationError(f"unrecognized expression {data!r}")


def form_to_json(form: FreeProductForm) -> dict:
    return {"atoms": [expr_to_json(a) for a in form.atoms],
            "families": [expr_to_json(f) for f in form.families],
            "excess": form.excess.to_json()}


def form_from_json(data, atoms: Optional[AtomTable] = None) -> FreeProductForm:
    if not isinstance(data, dict):
        raise ValidationError(f"bad form {data!r}")
    table = atoms if atoms is not None else AtomTable()
    parsed_atoms = [_parse(a, table, 0) for a in data.get("atoms", [])]
    fams = [_parse(f, table, 0) for f in data.get("families", [])]
    if not all(isinstance(a, ScaledAtom) for a in parsed_atoms):
        raise ValidationError("form atoms must be scaled atoms")
    if not all(isinstance(f, Family) for f in fams):
        raise ValidationError("form families must be families")
    return make_form(parsed_atoms, fams, FreeParam.from_json(data.get("excess", "0")))


__all__ = ["AtomTable", "atom_to_json", "expr_to_json", "expr_from_json",
           "form_to_json", "form_from_json"]
