"""
Exact coefficients: rational numbers and rational functions in formal parameters.

A :class:`Scalar` is either an exact rational or a reduced fraction of two
polynomials over the rationals in the declared parameters (``k``, ``hbar``,
``c``, ``eps`` by default). Denominators are kept monic under graded
lexicographic order on the alphabetically sorted parameter names, so equality
is structural.

Arithmetic and cancellation are delegated to sympy's sparse ``FracField``.
Scalars whose value is a constant skip the field entirely.
"""

from __future__ import annotations

import logging
import math
import re
from collections.abc import Iterable, Mapping
from fractions import Fraction
from typing import Any, Union

import pyparsing as pp
from sympy import QQ, Symbol
from sympy.polys.fields import FracElement, FracField
from sympy.polys.orderings import grlex

from .errors import ParseError, PoleAtSubstitution, UnknownParam, ZeroDenominator

logger = logging.getLogger(__name__)

RESERVED_NAMES = frozenset({"lam", "mu", "nu", "lambda", "T"})
DEFAULT_PARAMS = ("c", "eps", "hbar", "k")

_IDENT = re.compile(r"^[A-Za-z][A-Za-z0-9_]*$")

_names: tuple[str, ...] = ()
_field: FracField | None = None


def _rebuild(names: Iterable[str]) -> None:
    global _names, _field
    _names = tuple(sorted(set(names)))
    _field = FracField(tuple(Symbol(n) for n in _names), QQ, grlex)
    logger.debug("parameter field rebuilt over %s", ", ".join(_names))


def declare_params(*names: str) -> tuple[str, ...]:
    """Add formal parameters to the session; returns the full sorted list."""
    fresh = []
    for name in names:
        if not _IDENT.match(name) or name in RESERVED_NAMES:
            raise ValueError(f"invalid parameter name {name!r}")
        if name not in _names:
            fresh.append(name)
    if fresh:
        _rebuild(_names + tuple(fresh))
    return _names


def params() -> tuple[str, ...]:
    return _names


def is_param(name: str) -> bool:
    return name in _names


def _current_field() -> FracField:
    assert _field is not None
    return _field


_rebuild(DEFAULT_PARAMS)

ScalarLike = Union["Scalar", int, Fraction]


class Scalar:
    """Immutable exact coefficient in canonical form."""

    __slots__ = ("_q", "_f", "_hash")

    def __init__(self, value: ScalarLike = 0) -> None:
        if isinstance(value, Scalar):
            self._q, self._f = value._q, value._f
        elif isinstance(value, bool):
            raise TypeError("bool is not a scalar")
        elif isinstance(value, int):
            self._q, self._f = QQ(value), None
        elif isinstance(value, Fraction):
            self._q, self._f = QQ(value.numerator, value.denominator), None
        else:
            raise TypeError(f"cannot build a Scalar from {type(value).__name__}")
        self._hash: int | None = None

    # construction helpers

    @classmethod
    def _from_q(cls, q: Any) -> Scalar:
        s = cls.__new__(cls)
        s._q, s._f, s._hash = q, None, None
        return s

    @classmethod
    def _from_frac(cls, fe: FracElement) -> Scalar:
        numer, denom = fe.numer, fe.denom
        if not numer:
            return cls._from_q(QQ(0))
        lc = denom.LC
        if lc != 1:
            numer = numer.quo_ground(lc)
            denom = denom.quo_ground(lc)
        if denom.is_ground and numer.is_ground:
            return cls._from_q(numer.LC)
        s = cls.__new__(cls)
        s._q, s._f, s._hash = None, fe.field.raw_new(numer, denom), None
        return s

    @classmethod
    def param(cls, name: str) -> Scalar:
        """The Scalar equal to a single formal parameter."""
        if name not in _names:
            raise UnknownParam(f"unknown parameter {name!r}")
        field = _current_field()
        return cls._from_frac(field.gens[_names.index(name)])

    @classmethod
    def parse(cls, text: str) -> Scalar:
        return parse_scalar(text)

    def _as_frac(self) -> FracElement:
        field = _current_field()
        if self._q is not None:
            return field.raw_new(field.ring.ground_new(self._q))
        assert self._f is not None
        if self._f.field != field:
            return self._f.set_field(field)
        return self._f

    # predicates

    @property
    def is_zero(self) -> bool:
        return self._q is not None and not self._q

    @property
    def is_constant(self) -> bool:
        return self._q is not None

    @property
    def is_compound(self) -> bool:
        """True when the printed form needs parentheses as a factor."""
        if self._q is not None:
            return False
        assert self._f is not None
        return not (self._f.denom.is_ground and len(self._f.numer) == 1)

    def to_fraction(self) -> Fraction:
        if self._q is None:
            raise ValueError(f"{self} is not a constant")
        return Fraction(int(self._q.numerator), int(self._q.denominator))

    def __bool__(self) -> bool:
        return not self.is_zero

    # arithmetic

    @staticmethod
    def _coerce(other: Any) -> Scalar | None:
        if isinstance(other, Scalar):
            return other
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return Scalar(other)
        return None

    def __add__(self, other: Any) -> Scalar:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if self._q is not None and o._q is not None:
            return Scalar._from_q(self._q + o._q)
        if self.is_zero:
            return o
        if o.is_zero:
            return self
        return Scalar._from_frac(self._as_frac() + o._as_frac())

    __radd__ = __add__

    def __neg__(self) -> Scalar:
        if self._q is not None:
            return Scalar._from_q(-self._q)
        return Scalar._from_frac(-self._as_frac())

    def __sub__(self, other: Any) -> Scalar:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other: Any) -> Scalar:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other: Any) -> Scalar:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if self._q is not None and o._q is not None:
            return Scalar._from_q(self._q * o._q)
        if self.is_zero or o.is_zero:
            return Scalar._from_q(QQ(0))
        return Scalar._from_frac(self._as_frac() * o._as_frac())

    __rmul__ = __mul__

    def __truediv__(self, other: Any) -> Scalar:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if o.is_zero:
            raise ZeroDenominator(f"division of {self} by zero")
        if self._q is not None and o._q is not None:
            return Scalar._from_q(self._q / o._q)
        return Scalar._from_frac(self._as_frac() / o._as_frac())

    def __rtruediv__(self, other: Any) -> Scalar:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o / self

    def __pow__(self, exponent: int) -> Scalar:
        if not isinstance(exponent, int):
            return NotImplemented
        if exponent < 0:
            return Scalar(1) / (self ** (-exponent))
        if self._q is not None:
            return Scalar._from_q(self._q**exponent)
        return Scalar._from_frac(self._as_frac() ** exponent)

    # equality and hashing

    def __eq__(self, other: object) -> bool:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if self._q is not None or o._q is not None:
            return self._q is not None and o._q is not None and self._q == o._q
        a, b = self._as_frac(), o._as_frac()
        return bool(a.numer == b.numer and a.denom == b.denom)

    def __hash__(self) -> int:
        if self._hash is None:
            if self._q is not None:
                self._hash = hash(Fraction(int(self._q.numerator), int(self._q.denominator)))
            else:
                f = self._as_frac()
                self._hash = hash((_named_terms(f.numer), _named_terms(f.denom)))
        return self._hash

    # evaluation

    def substitute(self, assignment: Mapping[str, ScalarLike]) -> Scalar:
        """Replace parameters by Scalars; raises PoleAtSubstitution on a vanishing denominator."""
        for name in assignment:
            if name not in _names:
                raise UnknownParam(f"unknown parameter {name!r}")
        if self._q is not None:
            return self
        f = self._as_frac()
        values = [
            Scalar(assignment[n]) if n in assignment else Scalar.param(n) for n in _names
        ]
        num = _evaluate_poly(f.numer, values)
        den = _evaluate_poly(f.denom, values)
        if den.is_zero:
            raise PoleAtSubstitution(f"denominator of {self} vanishes under {dict(assignment)}")
        return num / den

    def degree_in(self, name: str) -> int:
        """Degree of the numerator in one parameter (0 for constants)."""
        if self._q is not None:
            return 0
        f = self._as_frac()
        idx = _names.index(name)
        return max((m[idx] for m, _ in f.numer.terms()), default=0)

    # printing

    def __str__(self) -> str:
        if self._q is not None:
            return _format_rational(self._q)
        f = self._as_frac()
        num = _format_poly(f.numer)
        if f.denom.is_ground:
            return num
        if len(f.numer) > 1:
            num = f"({num})"
        den = _format_poly(f.denom)
        simple_den = len(f.denom) == 1 and "*" not in den and "/" not in den
        return f"{num}/{den}" if simple_den else f"{num}/({den})"

    def __repr__(self) -> str:
        return f"Scalar({str(self)!r})"


ONE = Scalar(1)
ZERO = Scalar(0)


def normalize(num: Scalar, den: Scalar) -> Scalar:
    """Canonical reduced form of num/den; raises ZeroDenominator if den is zero."""
    if den.is_zero:
        raise ZeroDenominator("zero denominator")
    field = _current_field()
    a, b = num._as_frac(), den._as_frac()
    numer = a.numer * b.denom
    denom = a.denom * b.numer
    return Scalar._from_frac(field.new(numer, denom))


def binom(x: ScalarLike, j: int) -> Scalar:
    """Generalized binomial coefficient x(x-1)...(x-j+1)/j!."""
    if j < 0:
        raise ValueError("binom needs j >= 0")
    x = Scalar(x)
    result = ONE
    for i in range(j):
        result = result * (x - i)
    return result / math.factorial(j)


def _evaluate_poly(poly: Any, values: list[Scalar]) -> Scalar:
    total = ZERO
    for monom, coeff in poly.terms():
        term = Scalar._from_q(coeff)
        for value, exp in zip(values, monom):
            if exp:
                term = term * value**exp
        total = total + term
    return total


def _named_terms(poly: Any) -> frozenset[Any]:
    # keyed by parameter names so hashes survive declare_params
    return frozenset(
        (
            tuple((n, e) for n, e in zip(_names, monom) if e),
            Fraction(int(c.numerator), int(c.denominator)),
        )
        for monom, c in poly.terms()
    )


def _format_rational(q: Any) -> str:
    n, d = int(q.numerator), int(q.denominator)
    return str(n) if d == 1 else f"{n}/{d}"


def _format_poly(poly: Any) -> str:
    parts: list[str] = []
    for monom, coeff in poly.terms():
        factors = [
            name if e == 1 else f"{name}^{e}" for name, e in zip(_names, monom) if e
        ]
        negative = coeff < 0
        mag = -coeff if negative else coeff
        if not factors:
            body = _format_rational(mag)
        elif mag == 1:
            body = "*".join(factors)
        else:
            body = _format_rational(mag) + "*" + "*".join(factors)
        if not parts:
            parts.append(f"-{body}" if negative else body)
        else:
            parts.append(f" - {body}" if negative else f" + {body}")
    return "".join(parts) if parts else "0"


# grammar: integers, names, + - * / ^, parentheses

_integer = pp.Word(pp.nums)
_name = pp.Word(pp.alphas, pp.alphanums + "_")
SCALAR_GRAMMAR = pp.infix_notation(
    _integer | _name,
    [
        ("^", 2, pp.OpAssoc.RIGHT),
        (pp.one_of("+ -"), 1, pp.OpAssoc.RIGHT),
        (pp.one_of("* /"), 2, pp.OpAssoc.LEFT),
        (pp.one_of("+ -"), 2, pp.OpAssoc.LEFT),
    ],
)


def evaluate_scalar_tree(node: Any) -> Scalar:
    """Evaluate a parse tree produced by ``SCALAR_GRAMMAR``."""
    if isinstance(node, str):
        if node.isdigit():
            return Scalar(int(node))
        return Scalar.param(node)
    items = list(node)
    if len(items) == 1:
        return evaluate_scalar_tree(items[0])
    if len(items) == 2 and items[0] in ("+", "-"):
        value = evaluate_scalar_tree(items[1])
        return -value if items[0] == "-" else value
    if items[1] == "^":
        result = evaluate_scalar_tree(items[-1])
        for base in reversed(items[:-1:2]):
            if not result.is_constant or result.to_fraction().denominator != 1:
                raise ValueError(f"exponent {result} is not an integer")
            result = evaluate_scalar_tree(base) ** int(result.to_fraction())
        return result
    result = evaluate_scalar_tree(items[0])
    for op, operand in zip(items[1::2], items[2::2]):
        value = evaluate_scalar_tree(operand)
        if op == "+":
            result = result + value
        elif op == "-":
            result = result - value
        elif op == "*":
            result = result * value
        else:
            result = result / value
    return result


def parse_scalar(text: str) -> Scalar:
    """Parse the textual scalar syntax; inverse of ``str``."""
    try:
        tree = SCALAR_GRAMMAR.parse_string(text, parse_all=True)
    except pp.ParseException as e:
        raise ParseError(f"bad scalar {text!r}: {e.msg}", e.lineno, e.col) from e
    return evaluate_scalar_tree(tree[0])


def as_scalar(value: ScalarLike | str) -> Scalar:
    if isinstance(value, str):
        return parse_scalar(value)
    return Scalar(value)
