"""
Expression grammar for elements and lambda-polynomials.

Syntax::

    |0>                vacuum
    e                  generator
    T(x), T^n(x)       divided powers T^(n) x
    :x y z:            right-nested normally ordered product :x :y z::
    lam^n, mu^n        formal variables
    3/2*x, (k/(k + 2))*x, x - y

A bare scalar in element position denotes that multiple of ``|0>``.
Parsing yields an unevaluated tree (:class:`Product`, :class:`Derivative`,
:class:`Combination` over :class:`~lambda_forge.terms.Expr` leaves). The Wick
engine evaluates trees in the vertex algebra; :func:`to_tensor` flattens them
into tensor-algebra words for bracket tables.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from typing import Any, Union

import pyparsing as pp

from .errors import ParseError, UnknownGenerator
from .scalar import ONE, Scalar, is_param
from .terms import Accumulator, Exponents, Expr, GeneratorSet, apply_T_divided


@dataclass(frozen=True)
class Product:
    """Unevaluated normally ordered product :left right:."""

    left: Raw
    right: Raw


@dataclass(frozen=True)
class Derivative:
    """Unevaluated divided power T^(order) arg."""

    order: int
    arg: Raw


@dataclass(frozen=True)
class Combination:
    parts: tuple[tuple[Scalar, Raw], ...]


Raw = Union[Expr, Product, Derivative, Combination]


def to_tensor(raw: Raw) -> Expr:
    """Flatten a tree into words of the tensor algebra (nesting is associative there)."""
    if isinstance(raw, Expr):
        return raw
    if isinstance(raw, Combination):
        acc = Accumulator()
        for c, part in raw.parts:
            acc.add(to_tensor(part), c)
        return acc.result()
    if isinstance(raw, Derivative):
        return apply_T_divided(to_tensor(raw.arg), raw.order)
    left, right = to_tensor(raw.left), to_tensor(raw.right)
    acc = Accumulator()
    for m1, c1 in left.items():
        for m2, c2 in right.items():
            acc.add_term(m1 + m2, c1 * c2)
    return acc.result()


@dataclass(frozen=True)
class _Vacuum:
    pass


@dataclass(frozen=True)
class _TCall:
    order: int
    arg: Any


@dataclass(frozen=True)
class _Colon:
    factors: tuple[Any, ...]


def _build_grammar() -> pp.ParserElement:
    expr = pp.Forward()
    integer = pp.Word(pp.nums)
    name = pp.Word(pp.alphas, pp.alphanums + "_")
    vacuum = pp.Literal("|0>").set_parse_action(lambda: _Vacuum())
    tcall = (
        pp.Keyword("T").suppress()
        + pp.Optional(pp.Suppress("^") + integer, default="1")
        + pp.Suppress("(")
        + pp.Group(expr)
        + pp.Suppress(")")
    ).set_parse_action(lambda t: _TCall(int(t[0]), t[1]))
    colon = pp.Forward()
    factor = vacuum | colon | tcall | name | pp.Group(pp.Suppress("(") + expr + pp.Suppress(")"))
    colon <<= (pp.Suppress(":") + pp.OneOrMore(factor) + pp.Suppress(":")).set_parse_action(
        lambda t: _Colon(tuple(t))
    )
    operand = vacuum | colon | tcall | integer | name
    expr <<= pp.infix_notation(
        operand,
        [
            ("^", 2, pp.OpAssoc.RIGHT),
            (pp.one_of("+ -"), 1, pp.OpAssoc.RIGHT),
            (pp.one_of("* /"), 2, pp.OpAssoc.LEFT),
            (pp.one_of("+ -"), 2, pp.OpAssoc.LEFT),
        ],
    )
    return expr


EXPRESSION_GRAMMAR = _build_grammar()

# one summand: coefficient, variable exponents, element (None for a pure scalar)
_Part = tuple[Scalar, Exponents, Union[Raw, None]]


class _Evaluator:
    def __init__(self, gens: GeneratorSet, variables: Sequence[str]) -> None:
        self.gens = gens
        self.variables = tuple(variables)
        self.zero_exps: Exponents = (0,) * len(self.variables)

    def element(self, node: Any) -> Raw:
        """Evaluate a node that must be a variable-free element."""
        parts = self.value(node)
        out = []
        for c, e, raw in parts:
            if any(e):
                raise ValueError("formal variables are not allowed here")
            out.append((c, raw if raw is not None else Expr.vacuum()))
        if len(out) == 1 and out[0][0] == ONE:
            return out[0][1]
        return Combination(tuple(out))

    def value(self, node: Any) -> list[_Part]:
        if isinstance(node, _Vacuum):
            return [(ONE, self.zero_exps, Expr.vacuum())]
        if isinstance(node, _TCall):
            return [(ONE, self.zero_exps, Derivative(node.order, self.element(node.arg)))]
        if isinstance(node, _Colon):
            factors = [self.element(f) for f in node.factors]
            raw = factors[-1]
            for f in reversed(factors[:-1]):
                raw = Product(f, raw)
            return [(ONE, self.zero_exps, raw)]
        if isinstance(node, str):
            return self.atom(node)
        items = list(node)
        if len(items) == 1:
            return self.value(items[0])
        if len(items) == 2 and items[0] in ("+", "-"):
            inner = self.value(items[1])
            return inner if items[0] == "+" else [(-c, e, r) for c, e, r in inner]
        if items[1] == "^":
            exponent = self.value(items[-1])
            result = None
            for base in reversed(items[:-1:2]):
                n = self._integer(exponent)
                result = self._power(self.value(base), n)
                exponent = result
            assert result is not None
            return result
        result = self.value(items[0])
        for op, operand in zip(items[1::2], items[2::2]):
            rhs = self.value(operand)
            if op == "+":
                result = result + rhs
            elif op == "-":
                result = result + [(-c, e, r) for c, e, r in rhs]
            elif op == "*":
                result = self._multiply(result, rhs)
            else:
                divisor = self._scalar(rhs)
                result = [(c / divisor, e, r) for c, e, r in result]
        return result

    def atom(self, token: str) -> list[_Part]:
        if token.isdigit():
            return [(Scalar(int(token)), self.zero_exps, None)]
        if token in self.gens.index:
            return [(ONE, self.zero_exps, Expr.gen(self.gens.index[token]))]
        if token in self.variables:
            i = self.variables.index(token)
            exps = tuple(1 if j == i else 0 for j in range(len(self.variables)))
            return [(ONE, exps, None)]
        if is_param(token):
            return [(Scalar.param(token), self.zero_exps, None)]
        raise UnknownGenerator(f"unknown name {token!r}")

    def _scalar(self, parts: list[_Part]) -> Scalar:
        total = Scalar(0)
        for c, e, raw in parts:
            if raw is not None or any(e):
                raise ValueError("expected a scalar")
            total = total + c
        return total

    def _integer(self, parts: list[_Part]) -> int:
        s = self._scalar(parts)
        if not s.is_constant or s.to_fraction().denominator != 1:
            raise ValueError(f"exponent {s} is not an integer")
        return int(s.to_fraction())

    def _power(self, base: list[_Part], n: int) -> list[_Part]:
        if len(base) == 1 and base[0][2] is None and base[0][0] == ONE and any(base[0][1]):
            return [(ONE, tuple(x * n for x in base[0][1]), None)]
        return [(self._scalar(base) ** n, self.zero_exps, None)]

    def _multiply(self, a: list[_Part], b: list[_Part]) -> list[_Part]:
        out: list[_Part] = []
        for c1, e1, r1 in a:
            for c2, e2, r2 in b:
                if r1 is not None and r2 is not None:
                    raise ValueError("use :x y: for products of elements")
                exps = tuple(x + y for x, y in zip(e1, e2))
                out.append((c1 * c2, exps, r1 if r1 is not None else r2))
        return out


def _parse_tree(text: str) -> Any:
    try:
        return EXPRESSION_GRAMMAR.parse_string(text, parse_all=True)[0]
    except pp.ParseException as e:
        raise ParseError(f"cannot parse {text!r}: {e.msg}", e.lineno, e.col) from e


def parse_element(text: str, gens: GeneratorSet) -> Raw:
    """Parse an element expression (no formal variables)."""
    try:
        return _Evaluator(gens, ()).element(_parse_tree(text))
    except (ValueError, UnknownGenerator) as e:
        if isinstance(e, ParseError):
            raise
        raise ParseError(f"{text!r}: {e}") from e


def parse_lambda(
    text: str, gens: GeneratorSet, variables: Sequence[str] = ("lam",)
) -> dict[Exponents, Raw]:
    """Parse a polynomial in ``variables`` with element coefficients."""
    ev = _Evaluator(gens, variables)
    try:
        parts = ev.value(_parse_tree(text))
    except (ValueError, UnknownGenerator) as e:
        if isinstance(e, ParseError):
            raise
        raise ParseError(f"{text!r}: {e}") from e
    grouped: dict[Exponents, list[tuple[Scalar, Raw]]] = {}
    for c, e, raw in parts:
        grouped.setdefault(e, []).append((c, raw if raw is not None else Expr.vacuum()))
    return {e: Combination(tuple(p)) for e, p in grouped.items()}
