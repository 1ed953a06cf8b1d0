"""Exact arithmetic for traces, scales and free-group parameters.

Two value types live here:

* :class:`Scalar` -- a nonnegative exact number, possibly ``+inf``, possibly of
  the form ``q*sqrt(d)`` with ``q`` rational and ``d`` a squarefree integer.
  Traces, amplification factors and coefficients of scaled terms are Scalars.
* :class:`FreeParam` -- a signed rational or ``+inf``; the parameter ``t`` of
  ``L(F_t)``.  Negative values are allowed inside larger free products.

Both are immutable and hashable.  Nothing in this module ever rounds.

:class:`ScaleSequence` describes the scales of an infinite family of atoms in
closed form (periodic values times a geometric ratio per period).
"""
from __future__ import annotations

from fractions import Fraction
from functools import total_ordering
from typing import Union

from .errors import ArithmeticDomainError, ValidationError

Number = Union[int, Fraction, str, "Scalar", "FreeParam"]


def _squarefree_split(n: int) -> tuple[int, int]:
    """Return ``(s, f)`` with ``n == s*s*f`` and ``f`` squarefree."""
    s, f = 1, 1
    p = 2
    while p * p <= n:
        while n % (p * p) == 0:
            n //= p * p
            s *= p
        if n % p == 0:
            n //= p
            f *= p
        p += 1 if p == 2 else 2
    return s, f * n


def to_fraction(value) -> Fraction:
    """Parse an exact rational from int, Fraction, rational Scalar/FreeParam or "p/q"."""
    if isinstance(value, bool):
        raise ValidationError(f"not a rational: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"not a rational: {value!r}") from exc
    if isinstance(value, Scalar):
        return value.as_fraction()
    if isinstance(value, FreeParam):
        if value.is_inf:
            raise ArithmeticDomainError("+inf is not a rational")
        return value.value
    raise ValidationError(f"not an exact rational: {value!r}")


@total_ordering
class Scalar:
    """Nonnegative exact value ``q*sqrt(d)`` or ``+inf``.

    >>> Scalar("1/3") + Scalar("2/3")
    Scalar('1')
    >>> Scalar.radical(1, 3).square()
    Fraction(3, 1)
    """

    __slots__ = ("_q", "_d", "_k")

    def __init__(self, value: Number = 0):
        if isinstance(value, Scalar):
            self._q, self._d = value._q, value._d
            return
        if isinstance(value, FreeParam):
            if value.is_inf:
                self._q, self._d = None, 1
                return
            value = value.value
        if isinstance(value, str) and value.strip().lower() in ("inf", "+inf", "infinity"):
            self._q, self._d = None, 1
            return
        q = to_fraction(value)
        if q < 0:
            raise ArithmeticDomainError(f"Scalar must be nonnegative, got {q}")
        self._q, self._d = q, 1

    @classmethod
    def radical(cls, q, d) -> "Scalar":
        """Build ``q*sqrt(d)`` for rationals ``q >= 0`` and ``d > 0``."""
        q, d = to_fraction(q), to_fraction(d)
        if q < 0 or d <= 0:
            raise ArithmeticDomainError(f"bad radical {q}*sqrt({d})")
        # sqrt(n/m) = sqrt(n*m)/m
        s, f = _squarefree_split(d.numerator * d.denominator)
        out = cls.__new__(cls)
        out._q = q * s / d.denominator
        out._d = f if out._q else 1
        return out

    @classmethod
    def sqrt(cls, square) -> "Scalar":
        """Nonnegative square root of a nonnegative rational."""
        return cls.radical(1, square) if to_fraction(square) else cls(0)

    # -- inspection -------------------------------------------------------
    @property
    def is_inf(self) -> bool:
        return self._q is None

    @property
    def is_rational(self) -> bool:
        return self._q is not None and self._d == 1

    @property
    def coefficient(self) -> Fraction:
        if self._q is None:
            raise ArithmeticDomainError("+inf has no coefficient")
        return self._q

    @property
    def radicand(self) -> int:
        return self._d

    def as_fraction(self) -> Fraction:
        if not self.is_rational:
            raise ArithmeticDomainError(f"{self} is not rational")
        return self._q

    def square(self) -> Fraction:
        """Exact square; always rational for finite values."""
        if self._q is None:
            raise ArithmeticDomainError("square of +inf")
        return self._key()[1]

    def inverse_square(self) -> Fraction:
        sq = self.square()
        if not sq:
            raise ArithmeticDomainError("division by zero")
        return 1 / sq

    def __bool__(self) -> bool:
        return self._q is None or self._q != 0

    def __float__(self) -> float:
        if self._q is None:
            return float("inf")
        return float(self._q) * self._d ** 0.5

    # -- arithmetic -------------------------------------------------------
    def _coerce(self, other) -> "Scalar":
        return other if isinstance(other, Scalar) else Scalar(other)

    def __add__(self, other):
        other = self._coerce(other)
        if self.is_inf or other.is_inf:
            return INF
        if not other._q:
            return self
        if not self._q:
            return other
        if self._d != other._d:
            raise ArithmeticDomainError(f"cannot add {self} and {other}: unlike radicals")
        return Scalar._make(self._q + other._q, self._d)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other.is_inf:
            raise ArithmeticDomainError(f"{self} - inf is undefined")
        if self.is_inf:
            return INF
        if not other._q:
            return self
        if self._d != other._d and self._q:
            raise ArithmeticDomainError(f"cannot subtract {other} from {self}: unlike radicals")
        return Scalar._make(self._q - other._q, other._d)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        if self.is_inf or other.is_inf:
            if not self or not other:
                raise ArithmeticDomainError("0 * inf is undefined")
            return INF
        if self._d == 1 or other._d == 1:
            return Scalar._make(self._q * other._q, self._d * other._d)
        return Scalar.radical(self._q * other._q, self._d * other._d)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if not other:
            raise ArithmeticDomainError(f"{self} / 0 is undefined")
        if other.is_inf:
            if self.is_inf:
                raise ArithmeticDomainError("inf / inf is undefined")
            return Scalar(0)
        if self.is_inf:
            return INF
        # a*sqrt(d) / (b*sqrt(e)) = (a / (b*e)) * sqrt(d*e)
        return Scalar.radical(self._q / (other._q * other._d), self._d * other._d) \
            if other._d != 1 else Scalar._make(self._q / other._q, self._d)

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def reciprocal(self) -> "Scalar":
        return Scalar(1) / self

    @classmethod
    def _make(cls, q: Fraction, d: int) -> "Scalar":
        if q < 0:
            raise ArithmeticDomainError(f"negative Scalar {q}")
        out = cls.__new__(cls)
        out._q = Fraction(q)
        out._d = d if q else 1
        return out

    # -- ordering ---------------------------------------------------------
    def _key(self):
        try:
            return self._k
        except AttributeError:
            self._k = (1, Fraction(0)) if self._q is None else (0, self._q * self._q * self._d)
            return self._k

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, str)) and not isinstance(other, bool):
            try:
                other = Scalar(other)
            except Exception:
                return NotImplemented
        if not isinstance(other, Scalar):
            return NotImplemented
        return self._q == other._q and self._d == other._d

    def __lt__(self, other):
        other = self._coerce(other)
        return self._key() < other._key()

    def __hash__(self):
        if self._d == 1 and self._q is not None:
            return hash(self._q)
        return hash((self._q, self._d))

    # -- text -------------------------------------------------------------
    def __str__(self):
        if self._q is None:
            return "inf"
        if self._d == 1:
            return str(self._q)
        if self._q == 1:
            return f"sqrt({self._d})"
        return f"{self._q}*sqrt({self._d})"

    def __repr__(self):
        return f"Scalar({str(self)!r})"

    def to_json(self):
        if self._q is None:
            return "inf"
        if self._d == 1:
            return str(self._q)
        return {"q": str(self._q), "sqrt": str(self._d)}

    @classmethod
    def from_json(cls, data) -> "Scalar":
        try:
            if isinstance(data, dict):
                return cls.radical(data["q"], data["sqrt"])
            if isinstance(data, (int, str)) and not isinstance(data, bool):
                return cls(data)
        except KeyError as exc:
            raise ValidationError(f"radical scalar needs 'q' and 'sqrt': {data!r}") from exc
        except ArithmeticDomainError as exc:
            # bad input, not a failed computation
            raise ValidationError(str(exc)) from exc
        raise ValidationError(f"bad scalar {data!r}")


@total_ordering
class FreeParam:
    """Parameter of ``L(F_t)``: any rational, or ``+inf``."""

    __slots__ = ("_v",)

    def __init__(self, value: Number = 0):
        if isinstance(value, FreeParam):
            self._v = value._v
        elif isinstance(value, Scalar):
            self._v = None if value.is_inf else value.as_fraction()
        elif isinstance(value, str) and value.strip().lower() in ("inf", "+inf", "infinity"):
            self._v = None
        else:
            self._v = to_fraction(value)

    @property
    def is_inf(self) -> bool:
        return self._v is None

    @property
    def value(self) -> Fraction:
        if self._v is None:
            raise ArithmeticDomainError("+inf has no rational value")
        return self._v

    def __bool__(self):
        return self._v is None or self._v != 0

    def __float__(self):
        return float("inf") if self._v is None else float(self._v)

    def __add__(self, other):
        other = other if isinstance(other, FreeParam) else FreeParam(other)
        if self._v is None or other._v is None:
            return FreeParam("inf")
        return FreeParam(self._v + other._v)

    __radd__ = __add__

    def __sub__(self, other):
        other = other if isinstance(other, FreeParam) else FreeParam(other)
        if other._v is None:
            raise ArithmeticDomainError("subtracting +inf is undefined")
        if self._v is None:
            return self
        return FreeParam(self._v - other._v)

    def __rsub__(self, other):
        return FreeParam(other) - self

    def scaled(self, factor) -> "FreeParam":
        """Multiply by a nonnegative rational factor (such as c**2 or 1/lambda**2)."""
        factor = to_fraction(factor)
        if factor < 0:
            raise ArithmeticDomainError(f"negative scale factor {factor}")
        if self._v is None:
            if not factor:
                raise ArithmeticDomainError("0 * inf is undefined")
            return self
        return FreeParam(self._v * factor)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self._v == other
        if isinstance(other, str):
            try:
                other = FreeParam(other)
            except Exception:
                return NotImplemented
        if not isinstance(other, FreeParam):
            return NotImplemented
        return self._v == other._v

    def __lt__(self, other):
        other = other if isinstance(other, FreeParam) else FreeParam(other)
        if self._v is None:
            return False
        if other._v is None:
            return True
        return self._v < other._v

    def __hash__(self):
        return hash(self._v) if self._v is not None else hash("inf")

    def __str__(self):
        return "inf" if self._v is None else str(self._v)

    def __repr__(self):
        return f"FreeParam({str(self)!r})"

    def to_json(self):
        return str(self)

    @classmethod
    def from_json(cls, data) -> "FreeParam":
        if isinstance(data, bool) or not isinstance(data, (int, str)):
            raise ValidationError(f"bad free-group parameter {data!r}")
        return cls(data)


INF = Scalar("inf")
ONE = Scalar(1)


class ScaleSequence:
    """Closed-form positive sequence ``v[k % p] * ratio**(k // p)``, k = 0, 1, ...

    ``ScaleSequence([s])`` is the constant sequence; ``ScaleSequence([s], r)``
    is geometric.  The family is closed under multiplication by a Scalar and
    under taking reciprocals, which is all the calculus needs.
    """

    __slots__ = ("values", "ratio")

    def __init__(self, values, ratio=1):
        vals = tuple(v if isinstance(v, Scalar) else Scalar(v) for v in values)
        if not vals:
            raise ValidationError("a scale sequence needs at least one value")
        if any(v.is_inf or not v for v in vals):
            raise ValidationError("scale sequence values must be finite and positive")
        ratio = to_fraction(ratio)
        if ratio <= 0:
            raise ValidationError("scale sequence ratio must be positive")
        # canonical: shortest period when the ratio is 1
        if ratio == 1:
            for p in range(1, len(vals) + 1):
                if len(vals) % p == 0 and vals == vals[:p] * (len(vals) // p):
                    vals = vals[:p]
                    break
        self.values = vals
        self.ratio = ratio

    @classmethod
    def constant(cls, value) -> "ScaleSequence":
        return cls([value])

    @property
    def is_constant(self) -> bool:
        return self.ratio == 1 and len(self.values) == 1

    def term(self, k: int) -> Scalar:
        p = len(self.values)
        return self.values[k % p] * Scalar(self.ratio ** (k // p))

    def head(self, n: int) -> list[Scalar]:
        return [self.term(k) for k in range(n)]

    def times(self, factor) -> "ScaleSequence":
        factor = factor if isinstance(factor, Scalar) else Scalar(factor)
        return ScaleSequence([v * factor for v in self.values], self.ratio)

    def reciprocal(self) -> "ScaleSequence":
        return ScaleSequence([v.reciprocal() for v in self.values], 1 / self.ratio)

    def total(self):
        """Exact sum of the sequence, or INF when it diverges."""
        if self.ratio >= 1:
            return INF
        s = Scalar(0)
        for v in self.values:
            s = s + v
        return s * Scalar(1 / (1 - self.ratio))

    def total_of_squares(self):
        """Exact sum of squares (rational), or None when it diverges."""
        if self.ratio >= 1:
            return None
        return sum((v.square() for v in self.values), Fraction(0)) / (1 - self.ratio ** 2)

    def _key(self):
        return (len(self.values), tuple(v._key() for v in self.values), self.ratio)

    def __eq__(self, other):
        if not isinstance(other, ScaleSequence):
            return NotImplemented
        return self.values == other.values and self.ratio == other.ratio

    def __hash__(self):
        return hash((self.values, self.ratio))

    def __str__(self):
        vals = ", ".join(str(v) for v in self.values)
        if self.ratio == 1:
            return vals if len(self.values) == 1 else f"{vals}, ..."
        return f"{vals}; x{self.ratio}"

    def __repr__(self):
        return f"ScaleSequence([{', '.join(str(v) for v in self.values)}], {self.ratio})"

    def to_json(self):
        data = {"values": [v.to_json() for v in self.values]}
        if self.ratio != 1:
            data["ratio"] = str(self.ratio)
        return data

    @classmethod
    def from_json(cls, data) -> "ScaleSequence":
        if not isinstance(data, dict) or "values" not in data:
            raise ValidationError(f"bad scale sequence {data!r}")
        return cls([Scalar.from_json(v) for v in data["values"]], data.get("ratio", 1))
