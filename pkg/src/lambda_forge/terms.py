"""
Elements of freely generated vertex algebras.

Generators carry graded metadata (:class:`GeneratorDecl`). A :class:`Term`
is a divided power ``T^(n) e``; a monomial is a tuple of Terms read as the
right-nested normally ordered product ``:t1 :t2 ... ts::``; an
:class:`Expr` is a Scalar-linear combination of monomials and a
:class:`LambdaExpr` is a polynomial in formal variables with Expr
coefficients.

Words are not required to be ordered. An unordered word is still a valid
element (it is an element of the tensor algebra); the Wick engine brings it to
normal form.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Iterator, Mapping, Sequence
from fractions import Fraction
from typing import Any, Literal, NamedTuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .errors import UnknownGenerator
from .scalar import ONE, ZERO, Scalar, ScalarLike

LAMBDA_VARS = ("lam", "mu", "nu")


def to_fraction(value: Any) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, Scalar):
        return value.to_fraction()
    if isinstance(value, (int, str)):
        return Fraction(value)
    raise TypeError(f"expected a rational, got {value!r}")


class GeneratorDecl(BaseModel):
    """A generator with its parity and grades."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    id: str = Field(pattern=r"^[A-Za-z_][A-Za-z0-9_]*$")
    parity: Literal["even", "odd"] = "even"
    delta: Fraction = Fraction(1)
    zeta: Fraction = Fraction(1)
    charge: int = 0
    coset: Fraction = Fraction(0)
    bigrade: tuple[Fraction, Fraction] | None = None

    @model_validator(mode="before")
    @classmethod
    def _fill_defaults(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        data = dict(data)
        delta = to_fraction(data.get("delta", 1))
        data["delta"] = delta
        if data.get("zeta") is None:
            data["zeta"] = delta
        if data.get("coset") is None:
            data["coset"] = delta - math.floor(delta)
        return data

    @field_validator("zeta", "coset", mode="before")
    @classmethod
    def _rational(cls, value: Any) -> Fraction:
        return to_fraction(value)

    @field_validator("bigrade", mode="before")
    @classmethod
    def _pair(cls, value: Any) -> Any:
        if value is None:
            return None
        p, q = value
        return (to_fraction(p), to_fraction(q))

    @field_validator("zeta")
    @classmethod
    def _positive_zeta(cls, value: Fraction) -> Fraction:
        if value <= 0:
            raise ValueError("zeta must be positive")
        return value

    @field_validator("coset")
    @classmethod
    def _reduce_coset(cls, value: Fraction) -> Fraction:
        return value - math.floor(value)

    @property
    def odd(self) -> bool:
        return self.parity == "odd"


class Term(NamedTuple):
    """Divided power T^(tpow) of generator number ``gen``; tuple order is the global order."""

    gen: int
    tpow: int


Monomial = tuple[Term, ...]
VACUUM: Monomial = ()


class Grades(NamedTuple):
    delta: Fraction
    zeta: Fraction
    charge: int
    odd: bool


def compare_index(t1: Term, t2: Term) -> int:
    """-1, 0 or 1: declaration order first, then T-power."""
    if t1 == t2:
        return 0
    return -1 if t1 < t2 else 1


class GeneratorSet:
    """Ordered, frozen collection of generator declarations."""

    def __init__(self, decls: Iterable[GeneratorDecl]) -> None:
        self.decls: tuple[GeneratorDecl, ...] = tuple(decls)
        self.index: dict[str, int] = {}
        for i, d in enumerate(self.decls):
            if d.id in self.index:
                raise ValueError(f"duplicate generator {d.id!r}")
            self.index[d.id] = i
        self._grades: dict[Monomial, Grades] = {}

    def __len__(self) -> int:
        return len(self.decls)

    def __iter__(self) -> Iterator[GeneratorDecl]:
        return iter(self.decls)

    def __getitem__(self, i: int) -> GeneratorDecl:
        return self.decls[i]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, GeneratorSet) and self.decls == other.decls

    def __hash__(self) -> int:
        return hash(self.decls)

    def lookup(self, name: str) -> int:
        try:
            return self.index[name]
        except KeyError:
            raise UnknownGenerator(f"unknown generator {name!r}") from None

    def names(self) -> list[str]:
        return [d.id for d in self.decls]

    def make_monomial(self, terms: Sequence[Term | tuple[int, int]]) -> Monomial:
        word = tuple(Term(*t) for t in terms)
        for t in word:
            if not 0 <= t.gen < len(self.decls):
                raise UnknownGenerator(f"generator index {t.gen} is not declared")
            if t.tpow < 0:
                raise ValueError("negative T-power")
        self.grades(word)
        return word

    def grades(self, mono: Monomial) -> Grades:
        cached = self._grades.get(mono)
        if cached is not None:
            return cached
        delta, zeta, charge, odd = Fraction(0), Fraction(0), 0, False
        for t in mono:
            d = self.decls[t.gen]
            delta += d.delta + t.tpow
            zeta += d.zeta
            charge += d.charge
            odd ^= d.odd
        g = Grades(delta, zeta, charge, odd)
        self._grades[mono] = g
        return g

    def is_odd(self, mono: Monomial) -> bool:
        return self.grades(mono).odd

    def term_odd(self, t: Term) -> bool:
        return self.decls[t.gen].odd

    def sign(self, a: Monomial, b: Monomial) -> int:
        """Koszul sign p(a, b)."""
        return -1 if self.grades(a).odd and self.grades(b).odd else 1

    def is_ordered(self, mono: Monomial) -> bool:
        for x, y in zip(mono, mono[1:]):
            if x > y or (x == y and self.term_odd(x)):
                return False
        return True

    def extended(self, extra: Iterable[GeneratorDecl]) -> GeneratorSet:
        return GeneratorSet(self.decls + tuple(extra))

    def term_name(self, t: Term) -> str:
        name = self.decls[t.gen].id
        if t.tpow == 0:
            return name
        if t.tpow == 1:
            return f"T({name})"
        return f"T^{t.tpow}({name})"

    def format_monomial(self, mono: Monomial) -> str:
        if not mono:
            return "|0>"
        if len(mono) == 1:
            return self.term_name(mono[0])
        return ":" + " ".join(self.term_name(t) for t in mono) + ":"

    def format(self, x: Expr) -> str:
        return format_expr(x, self)


def _coeff_prefix(c: Scalar) -> tuple[bool, str]:
    """Sign flag and printed coefficient prefix for a term."""
    if c.is_constant:
        negative = c.to_fraction() < 0
        mag = -c if negative else c
        return negative, "" if mag == ONE else f"{mag}*"
    return False, f"({c})*"


def format_expr(x: Expr, gens: GeneratorSet) -> str:
    if not x:
        return "0"
    parts: list[str] = []
    for mono, c in x.sorted_items():
        negative, prefix = _coeff_prefix(c)
        body = prefix + gens.format_monomial(mono)
        if not parts:
            parts.append(f"-{body}" if negative else body)
        else:
            parts.append(f" - {body}" if negative else f" + {body}")
    return "".join(parts)


def expr_tree(x: Expr, gens: GeneratorSet) -> list[list[Any]]:
    """Machine form: ``[[scalar, [[generator, order], ...]], ...]`` in canonical order."""
    return [
        [str(c), [[gens[t.gen].id, t.tpow] for t in mono]] for mono, c in x.sorted_items()
    ]


def lambda_tree(poly: LambdaExpr, gens: GeneratorSet) -> dict[str, Any]:
    return {
        "vars": list(poly.vars),
        "terms": [[list(e), expr_tree(x, gens)] for e, x in poly.sorted_items()],
    }


class Expr:
    """Finite Scalar-linear combination of monomials; zero coefficients are dropped."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[Monomial, ScalarLike] | None = None) -> None:
        self._terms: dict[Monomial, Scalar] = {}
        if terms:
            for m, c in terms.items():
                s = Scalar(c)
                if not s.is_zero:
                    self._terms[tuple(m)] = s

    @classmethod
    def _raw(cls, terms: dict[Monomial, Scalar]) -> Expr:
        x = cls.__new__(cls)
        x._terms = terms
        return x

    @classmethod
    def vacuum(cls, coeff: ScalarLike = 1) -> Expr:
        return cls({VACUUM: coeff})

    @classmethod
    def gen(cls, g: int, tpow: int = 0, coeff: ScalarLike = 1) -> Expr:
        return cls({(Term(g, tpow),): coeff})

    @classmethod
    def mono(cls, mono: Monomial, coeff: ScalarLike = 1) -> Expr:
        return cls({mono: coeff})

    @classmethod
    def sum(cls, parts: Iterable[Expr]) -> Expr:
        acc = Accumulator()
        for p in parts:
            acc.add(p)
        return acc.result()

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self) -> Iterator[Monomial]:
        return iter(self._terms)

    def items(self) -> Iterable[tuple[Monomial, Scalar]]:
        return self._terms.items()

    def sorted_items(self) -> list[tuple[Monomial, Scalar]]:
        return sorted(self._terms.items(), key=lambda kv: (len(kv[0]), kv[0]))

    def coeff(self, mono: Monomial) -> Scalar:
        return self._terms.get(mono, ZERO)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, int) and other == 0:
            return not self._terms
        return isinstance(other, Expr) and self._terms == other._terms

    def __hash__(self) -> int:
        return hash(frozenset(self._terms.items()))

    def __add__(self, other: Expr) -> Expr:
        if not isinstance(other, Expr):
            return NotImplemented
        if not other._terms:
            return self
        if not self._terms:
            return other
        out = dict(self._terms)
        for m, c in other._terms.items():
            s = out.get(m)
            s = c if s is None else s + c
            if s.is_zero:
                out.pop(m, None)
            else:
                out[m] = s
        return Expr._raw(out)

    def __neg__(self) -> Expr:
        return Expr._raw({m: -c for m, c in self._terms.items()})

    def __sub__(self, other: Expr) -> Expr:
        if not isinstance(other, Expr):
            return NotImplemented
        return self + (-other)

    def scale(self, c: ScalarLike) -> Expr:
        s = Scalar(c)
        if s.is_zero:
            return Expr()
        if s == ONE:
            return self
        return Expr._raw({m: v * s for m, v in self._terms.items()})

    def __rmul__(self, c: ScalarLike) -> Expr:
        if not isinstance(c, (Scalar, int, Fraction)):
            return NotImplemented
        return self.scale(c)

    __mul__ = __rmul__

    def map_coeffs(self, fn: Any) -> Expr:
        return Expr({m: fn(c) for m, c in self._terms.items()})

    def substitute(self, assignment: Mapping[str, ScalarLike]) -> Expr:
        return self.map_coeffs(lambda c: c.substitute(assignment))

    def max_length(self) -> int:
        return max((len(m) for m in self._terms), default=0)

    def constant(self) -> Scalar:
        """Coefficient of the vacuum."""
        return self.coeff(VACUUM)

    def __repr__(self) -> str:
        body = ", ".join(f"{m!r}: {c}" for m, c in self.sorted_items())
        return f"Expr({{{body}}})"


class Accumulator:
    """Mutable sum used inside hot loops."""

    __slots__ = ("_terms",)

    def __init__(self) -> None:
        self._terms: dict[Monomial, Scalar] = {}

    def add_term(self, mono: Monomial, c: Scalar) -> None:
        if c.is_zero:
            return
        s = self._terms.get(mono)
        s = c if s is None else s + c
        if s.is_zero:
            self._terms.pop(mono, None)
        else:
            self._terms[mono] = s

    def add(self, x: Expr, c: ScalarLike = 1) -> None:
        s = c if isinstance(c, Scalar) else Scalar(c)
        if s.is_zero:
            return
        unit = s == ONE
        for m, v in x.items():
            self.add_term(m, v if unit else v * s)

    def result(self) -> Expr:
        return Expr._raw(dict(self._terms))


def compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    """All tuples of ``parts`` non-negative integers summing to ``total``."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in compositions(total - first, parts - 1):
            yield (first, *rest)


def ordered_monomials(
    gens: GeneratorSet,
    weight: Fraction,
    allowed: Iterable[int] | None = None,
    max_tpow: int | None = None,
) -> list[Monomial]:
    """All ordered monomials of conformal weight ``weight`` in the ``allowed`` generators."""
    terms = []
    for g in sorted(allowed) if allowed is not None else range(len(gens)):
        delta = gens[g].delta
        if delta <= 0:
            raise ValueError(f"generator {gens[g].id} has non-positive weight")
        t = 0
        while delta + t <= weight and (max_tpow is None or t <= max_tpow):
            terms.append(Term(g, t))
            t += 1
    terms.sort()
    out: list[Monomial] = []

    def rec(start: int, left: Fraction, acc: list[Term]) -> None:
        if left == 0:
            out.append(tuple(acc))
            return
        for k in range(start, len(terms)):
            t = terms[k]
            w = gens[t.gen].delta + t.tpow
            if w > left:
                continue
            acc.append(t)
            rec(k + 1 if gens.term_odd(t) else k, left - w, acc)
            acc.pop()

    if weight >= 0:
        rec(0, Fraction(weight), [])
    return out


def apply_T_divided_mono(mono: Monomial, r: int) -> Expr:
    """T^(r) of a word, by the divided-power Leibniz rule."""
    if r == 0:
        return Expr.mono(mono)
    if not mono:
        return Expr()
    acc = Accumulator()
    for split in compositions(r, len(mono)):
        coeff = 1
        for t, ri in zip(mono, split):
            coeff *= math.comb(t.tpow + ri, ri)
        word = tuple(Term(t.gen, t.tpow + ri) for t, ri in zip(mono, split))
        acc.add_term(word, Scalar(coeff))
    return acc.result()


def apply_T_divided(x: Expr, r: int) -> Expr:
    if r == 0:
        return x
    acc = Accumulator()
    for m, c in x.items():
        acc.add(apply_T_divided_mono(m, r), c)
    return acc.result()


def apply_T(x: Expr) -> Expr:
    """T as an even derivation of words; T|0> = 0 and T T^(n)e = (n+1) T^(n+1)e.

    The output may contain unordered words (a repeated odd term, or an even
    term overtaking its right neighbour); ``WickEngine.normal_form`` orders them.
    """
    return apply_T_divided(x, 1)


Exponents = tuple[int, ...]


class LambdaExpr:
    """Polynomial in formal variables with Expr coefficients (ordinary powers)."""

    __slots__ = ("vars", "_coeffs")

    def __init__(
        self, vars: Sequence[str] = ("lam",), coeffs: Mapping[Exponents, Expr] | None = None
    ) -> None:
        self.vars: tuple[str, ...] = tuple(vars)
        self._coeffs: dict[Exponents, Expr] = {}
        for e, x in (coeffs or {}).items():
            e = tuple(e)
            if len(e) != len(self.vars):
                raise ValueError("exponent arity does not match variables")
            if x:
                self._coeffs[e] = x

    @classmethod
    def from_expr(cls, x: Expr, vars: Sequence[str] = ("lam",)) -> LambdaExpr:
        return cls(vars, {(0,) * len(vars): x})

    @classmethod
    def from_products(cls, products: Mapping[int, Expr], var: str = "lam") -> LambdaExpr:
        """Build sum_n lam^n/n! a_(n)b from the map n -> a_(n)b."""
        return cls((var,), {(n,): x.scale(Scalar(1) / math.factorial(n)) for n, x in products.items()})

    def to_products(self) -> dict[int, Expr]:
        """Inverse of ``from_products`` for one variable."""
        if len(self.vars) != 1:
            raise ValueError("to_products needs a single variable")
        return {e[0]: x.scale(math.factorial(e[0])) for e, x in self._coeffs.items()}

    def __bool__(self) -> bool:
        return bool(self._coeffs)

    def items(self) -> Iterable[tuple[Exponents, Expr]]:
        return self._coeffs.items()

    def sorted_items(self) -> list[tuple[Exponents, Expr]]:
        return sorted(self._coeffs.items())

    def coeff(self, *exps: int) -> Expr:
        return self._coeffs.get(tuple(exps), Expr())

    def degree(self, var: str | None = None) -> int:
        i = 0 if var is None else self.vars.index(var)
        return max((e[i] for e in self._coeffs), default=-1)

    def constant(self) -> Expr:
        return self.coeff(*((0,) * len(self.vars)))

    def __eq__(self, other: object) -> bool:
        if isinstance(other, int) and other == 0:
            return not self._coeffs
        return (
            isinstance(other, LambdaExpr)
            and self.vars == other.vars
            and self._coeffs == other._coeffs
        )

    def __hash__(self) -> int:
        return hash((self.vars, frozenset(self._coeffs.items())))

    def _check(self, other: LambdaExpr) -> None:
        if self.vars != other.vars:
            raise ValueError(f"variable mismatch {self.vars} vs {other.vars}")

    def __add__(self, other: LambdaExpr) -> LambdaExpr:
        if not isinstance(other, LambdaExpr):
            return NotImplemented
        self._check(other)
        out = dict(self._coeffs)
        for e, x in other._coeffs.items():
            out[e] = out[e] + x if e in out else x
        return LambdaExpr(self.vars, out)

    def __neg__(self) -> LambdaExpr:
        return LambdaExpr(self.vars, {e: -x for e, x in self._coeffs.items()})

    def __sub__(self, other: LambdaExpr) -> LambdaExpr:
        return self + (-other)

    def scale(self, c: ScalarLike) -> LambdaExpr:
        return LambdaExpr(self.vars, {e: x.scale(c) for e, x in self._coeffs.items()})

    def shift(self, exps: Exponents) -> LambdaExpr:
        """Multiply by a monomial in the variables."""
        return LambdaExpr(
            self.vars,
            {tuple(a + b for a, b in zip(e, exps)): x for e, x in self._coeffs.items()},
        )

    def map_exprs(self, fn: Any) -> LambdaExpr:
        return LambdaExpr(self.vars, {e: fn(x) for e, x in self._coeffs.items()})

    def substitute(self, assignment: Mapping[str, ScalarLike]) -> LambdaExpr:
        return self.map_exprs(lambda x: x.substitute(assignment))

    def derivative(self, var: str | None = None) -> LambdaExpr:
        i = 0 if var is None else self.vars.index(var)
        out: dict[Exponents, Expr] = {}
        for e, x in self._coeffs.items():
            if e[i] > 0:
                ne = e[:i] + (e[i] - 1,) + e[i + 1 :]
                out[ne] = x.scale(e[i])
        return LambdaExpr(self.vars, out)

    def with_vars(self, vars: Sequence[str]) -> LambdaExpr:
        """Re-embed in a superset of variables (missing ones get exponent 0)."""
        vars = tuple(vars)
        idx = [self.vars.index(v) if v in self.vars else None for v in vars]
        out = {}
        for e, x in self._coeffs.items():
            out[tuple(e[i] if i is not None else 0 for i in idx)] = x
        return LambdaExpr(vars, out)

    def format(self, gens: GeneratorSet) -> str:
        if not self._coeffs:
            return "0"
        parts = []
        for e, x in self.sorted_items():
            powers = [
                v if n == 1 else f"{v}^{n}" for v, n in zip(self.vars, e) if n
            ]
            body = gens.format(x)
            if not powers:
                parts.append(body if len(x) == 1 else f"({body})")
            else:
                lead = "*".join(powers)
                parts.append(f"{lead}*{body}" if len(x) == 1 and not body.startswith("-") else f"{lead}*({body})")
        return " + ".join(parts)

    def __repr__(self) -> str:
        return f"LambdaExpr({self.vars}, {self._coeffs!r})"


ExprLike = Union[Expr, LambdaExpr]
