"""
The Wick engine: lambda-brackets, normal forms and n-th products.

A :class:`LcaSpec` presents a (non-linear) Lie conformal algebra by a table of
generator brackets. :class:`WickEngine` extends that table to the enveloping
vertex algebra with sesquilinearity, skewsymmetry, the left and right Wick
formulas, quasicommutativity and quasi-associativity, and brings every
element to a combination of ordered monomials.

All n-th products are handled in divided-power form: the engine works with
the maps ``n -> a_(n)b`` and converts to lambda-polynomials only at the
surface.
"""

from __future__ import annotations

import logging
import math
import sys
from collections.abc import Callable, Iterable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from typing import Any, TypeVar, Union

from .errors import GradingViolation, UnsupportedBound
from .reports import CheckReport
from .scalar import ONE, ZERO, Scalar, ScalarLike, binom
from .syntax import Combination, Derivative, Product, Raw, parse_element, parse_lambda, to_tensor
from .terms import (
    Accumulator,
    Exponents,
    Expr,
    GeneratorDecl,
    GeneratorSet,
    LambdaExpr,
    Monomial,
    Term,
    apply_T_divided_mono,
)

logger = logging.getLogger(__name__)

# right-nested rewriting recurses roughly once per factor and correction
sys.setrecursionlimit(max(sys.getrecursionlimit(), 20000))

Products = dict[int, Expr]
T = TypeVar("T")


class LcaSpec:
    """Generators plus a table of generator lambda-brackets.

    ``table[(i, j)]`` is a LambdaExpr in ``lam`` whose coefficients are
    tensor-algebra words; pairs missing in one order are obtained by
    skewsymmetry from the other order, and pairs missing in both are zero.
    """

    def __init__(
        self,
        generators: GeneratorSet | Iterable[GeneratorDecl],
        table: Mapping[tuple[int, int], LambdaExpr],
        hamiltonian: bool = True,
        name: str = "",
    ) -> None:
        self.gens = generators if isinstance(generators, GeneratorSet) else GeneratorSet(generators)
        self.table: dict[tuple[int, int], LambdaExpr] = {k: v for k, v in table.items() if v}
        self.hamiltonian = hamiltonian
        self.name = name
        self.validate()

    @classmethod
    def from_text(
        cls,
        generators: Sequence[GeneratorDecl],
        entries: Mapping[tuple[str, str], str],
        hamiltonian: bool = True,
        name: str = "",
    ) -> LcaSpec:
        """Build a spec from bracket strings such as ``{("L", "L"): "T(L) + 2*lam*L + c/12*lam^3"}``."""
        gens = GeneratorSet(generators)
        table: dict[tuple[int, int], LambdaExpr] = {}
        for (a, b), text in entries.items():
            parsed = parse_lambda(text, gens, ("lam",))
            table[(gens.lookup(a), gens.lookup(b))] = LambdaExpr(
                ("lam",), {e: to_tensor(raw) for e, raw in parsed.items()}
            )
        return cls(gens, table, hamiltonian, name)

    def validate(self) -> None:
        """Check the grading condition and, for Hamiltonian specs, weight homogeneity."""
        gens = self.gens
        for (i, j), entry in self.table.items():
            a, b = gens[i], gens[j]
            if entry.vars != ("lam",):
                raise GradingViolation(f"[{a.id} {b.id}] must be a polynomial in lam")
            for (n,), x in entry.items():
                for mono in x:
                    gens.make_monomial(mono)
                    g = gens.grades(mono)
                    where = f"[{a.id}_lam {b.id}] term {gens.format_monomial(mono)}"
                    if mono and g.zeta >= a.zeta + b.zeta:
                        raise GradingViolation(f"{where} has zeta {g.zeta} >= {a.zeta + b.zeta}")
                    if g.odd != (a.odd ^ b.odd):
                        raise GradingViolation(f"{where} has the wrong parity")
                    if self.hamiltonian:
                        expected = a.delta + b.delta - n - 1
                        weight = g.delta if mono else 0
                        if weight != expected:
                            raise GradingViolation(
                                f"{where} at lam^{n} has weight {weight}, expected {expected}"
                            )

    def entry(self, i: int, j: int) -> LambdaExpr | None:
        return self.table.get((i, j))

    def generator(self, name: str) -> Expr:
        return Expr.gen(self.gens.lookup(name))

    def element(self, text: str) -> Raw:
        return parse_element(text, self.gens)

    def __repr__(self) -> str:
        return f"LcaSpec({self.name or '?'}, {len(self.gens)} generators)"


Bound = Union[int, str, Mapping[str, ScalarLike]]


def _linear_form(bound: Bound, vars: Sequence[str]) -> dict[str, Scalar] | str:
    if isinstance(bound, int):
        if bound != 0:
            raise UnsupportedBound(f"numeric bound {bound}")
        return {}
    if isinstance(bound, str):
        text = bound.replace(" ", "")
        if text in ("T", "-T", "+T"):
            return "-T" if text == "-T" else "T"
        if text in vars:
            return {text: ONE}
        if text.startswith("-") and text[1:] in vars:
            return {text[1:]: -ONE}
        raise UnsupportedBound(f"bound {bound!r}")
    form = {}
    for v, c in bound.items():
        if v not in vars:
            raise UnsupportedBound(f"bound variable {v!r}")
        form[v] = Scalar(c)
    return form


def _power_of_form(form: Mapping[str, Scalar], e: int, vars: Sequence[str]) -> dict[Exponents, Scalar]:
    """Expand (sum c_v v)^e into monomials over ``vars``."""
    items = [(vars.index(v), c) for v, c in form.items() if not c.is_zero]
    out: dict[Exponents, Scalar] = {}
    if not items:
        if e == 0:
            out[(0,) * len(vars)] = ONE
        return out

    def rec(k: int, left: int, exps: list[int], coeff: Scalar) -> None:
        if k == len(items) - 1:
            idx, c = items[k]
            exps = exps.copy()
            exps[idx] += left
            key = tuple(exps)
            out[key] = out.get(key, ZERO) + coeff * c**left
            return
        idx, c = items[k]
        for m in range(left + 1):
            nxt = exps.copy()
            nxt[idx] += m
            rec(k + 1, left - m, nxt, coeff * math.comb(left, m) * c**m)

    rec(0, e, [0] * len(vars), ONE)
    return {k: v for k, v in out.items() if not v.is_zero}


class WickEngine:
    """Rewrite engine for the vertex algebra freely generated by an LcaSpec."""

    def __init__(self, spec: LcaSpec) -> None:
        self.spec = spec
        self.gens = spec.gens
        self._gen_cache: dict[tuple[int, int], Products] = {}
        self._bracket_cache: dict[tuple[Monomial, Monomial], Products] = {}
        self._product_cache: dict[tuple[Monomial, Monomial], Expr] = {}
        self._insert_cache: dict[tuple[Term, Monomial], Expr] = {}
        self._nf_cache: dict[Monomial, Expr] = {}
        self._deriv_cache: dict[tuple[Monomial, int], Expr] = {}

    # surface API

    def normal_form(self, raw: Raw) -> Expr:
        """Combination of ordered monomials equal to ``raw`` in the vertex algebra."""
        return self._guard(lambda: self._evaluate(raw))

    def lambda_bracket(self, a: Raw, b: Raw, var: str = "lam") -> LambdaExpr:
        return LambdaExpr.from_products(self.products(a, b), var)

    def products(self, a: Raw, b: Raw) -> Products:
        """The map n -> a_(n)b for n >= 0 (zero products omitted)."""

        def run() -> Products:
            return self._bracket_expr(self._evaluate(a), self._evaluate(b))

        return self._guard(run)

    def nth_product(self, a: Raw, n: int, b: Raw) -> Expr:
        """a_(n)b; for n = -m-1 this is :(T^(m)a) b:."""

        def run() -> Expr:
            x, y = self._evaluate(a), self._evaluate(b)
            if n >= 0:
                return self._bracket_expr(x, y).get(n, Expr())
            return self._product(self.derivative(x, -n - 1), y)

        return self._guard(run)

    def product(self, a: Raw, b: Raw) -> Expr:
        """Normal form of :ab:."""
        return self.nth_product(a, -1, b)

    def derivative(self, x: Expr, r: int = 1) -> Expr:
        """Normal form of T^(r) x for x in normal form."""
        if r == 0:
            return x
        acc = Accumulator()
        for m, c in x.items():
            acc.add(self._derivative_mono(m, r), c)
        return acc.result()

    def generator(self, name: str) -> Expr:
        return self.spec.generator(name)

    def parse(self, text: str) -> Expr:
        return self.normal_form(parse_element(text, self.gens))

    def format(self, x: Expr | LambdaExpr) -> str:
        if isinstance(x, LambdaExpr):
            return x.format(self.gens)
        return self.gens.format(x)

    def sign(self, a: Expr, b: Expr) -> int:
        """Koszul sign for homogeneous-parity elements."""
        return -1 if self.is_odd(a) and self.is_odd(b) else 1

    def is_odd(self, x: Expr) -> bool:
        parities = {self.gens.grades(m).odd for m in x}
        if len(parities) > 1:
            raise ValueError("element has mixed parity")
        return parities == {True}

    def weight(self, x: Expr) -> Any:
        weights = {self.gens.grades(m).delta for m in x}
        if len(weights) != 1:
            raise ValueError("element is not homogeneous")
        return weights.pop()

    def cache_sizes(self) -> dict[str, int]:
        return {
            "generators": len(self._gen_cache),
            "brackets": len(self._bracket_cache),
            "products": len(self._product_cache),
            "inserts": len(self._insert_cache),
        }

    @staticmethod
    def _guard(fn: Callable[[], T]) -> T:
        try:
            return fn()
        except RecursionError as e:
            raise GradingViolation("rewriting did not terminate; the table violates the grading") from e

    # evaluation of raw trees

    def _evaluate(self, raw: Raw) -> Expr:
        if isinstance(raw, Expr):
            return self._normal_form_expr(raw)
        if isinstance(raw, Combination):
            acc = Accumulator()
            for c, part in raw.parts:
                acc.add(self._evaluate(part), c)
            return acc.result()
        if isinstance(raw, Derivative):
            return self.derivative(self._evaluate(raw.arg), raw.order)
        if isinstance(raw, Product):
            return self._product(self._evaluate(raw.left), self._evaluate(raw.right))
        raise TypeError(f"cannot evaluate {raw!r}")

    def _normal_form_expr(self, x: Expr) -> Expr:
        if all(self.gens.is_ordered(m) for m in x):
            return x
        acc = Accumulator()
        for m, c in x.items():
            acc.add(self._normal_form_mono(m), c)
        return acc.result()

    def _normal_form_mono(self, word: Monomial) -> Expr:
        if self.gens.is_ordered(word):
            return Expr.mono(word)
        cached = self._nf_cache.get(word)
        if cached is None:
            cached = self._insert_expr(word[0], self._normal_form_mono(word[1:]))
            self._nf_cache[word] = cached
        return cached

    def _derivative_mono(self, mono: Monomial, r: int) -> Expr:
        key = (mono, r)
        cached = self._deriv_cache.get(key)
        if cached is None:
            cached = self._normal_form_expr(apply_T_divided_mono(mono, r))
            self._deriv_cache[key] = cached
        return cached

    # generator table

    def generator_products(self, i: int, j: int) -> Products:
        """n -> g_i (n) g_j in normal form."""
        key = (i, j)
        cached = self._gen_cache.get(key)
        if cached is not None:
            return cached
        entry = self.spec.entry(i, j)
        if entry is not None:
            result = {
                n: x
                for n, x in ((n, self._normal_form_expr(x)) for n, x in entry.to_products().items())
                if x
            }
        elif self.spec.entry(j, i) is not None:
            p = -1 if self.gens[i].odd and self.gens[j].odd else 1
            result = self._skew(self.generator_products(j, i), p)
        else:
            result = {}
        self._gen_cache[key] = result
        return result

    def _skew(self, reverse: Products, p: int) -> Products:
        """a_(n)b = p sum_j (-1)^(n+j+1) T^(j)(b_(n+j)a)."""
        out: dict[int, Accumulator] = {}
        for m, x in reverse.items():
            for n in range(m + 1):
                sign = p * (-1 if (m + 1) % 2 else 1)
                out.setdefault(n, Accumulator()).add(self.derivative(x, m - n), sign)
        return _collect(out)

    # brackets

    def _bracket_terms(self, t1: Term, t2: Term) -> Products:
        gen = self.generator_products(t1.gen, t2.gen)
        if not gen:
            return {}
        r, l = t1.tpow, t2.tpow
        right: Products = gen
        if l:
            acc: dict[int, Accumulator] = {}
            top = max(gen) + l
            for n in range(top + 1):
                for i in range(min(n, l) + 1):
                    x = gen.get(n - i)
                    if x:
                        acc.setdefault(n, Accumulator()).add(
                            self.derivative(x, l - i), math.comb(n, i)
                        )
            right = _collect(acc)
        if not r:
            return right
        out: Products = {}
        for m, x in right.items():
            n = m + r
            out[n] = x.scale((-1) ** r * math.comb(n, r))
        return out

    def _bracket_mono(self, a: Monomial, b: Monomial) -> Products:
        if not a or not b:
            return {}
        key = (a, b)
        cached = self._bracket_cache.get(key)
        if cached is not None:
            return cached
        if len(a) == 1 and len(b) == 1:
            result = self._bracket_terms(a[0], b[0])
        elif len(a) == 1:
            result = self._left_wick(a[0], b)
        else:
            result = self._right_wick(a, b)
        self._bracket_cache[key] = result
        return result

    def _left_wick(self, a: Term, word: Monomial) -> Products:
        """a_(n):bC: = :(a_(n)b)C: + p(a,b):b(a_(n)C): + sum_j binom(n,j)(a_(j)b)_(n-1-j)C."""
        b, rest = word[0], word[1:]
        p = -1 if self.gens.term_odd(a) and self.gens.term_odd(b) else 1
        rest_expr = Expr.mono(rest)
        ab = self._bracket_terms(a, b)
        a_rest = self._bracket_mono((a,), rest)
        out: dict[int, Accumulator] = {}
        for n, x in ab.items():
            out.setdefault(n, Accumulator()).add(self._product(x, rest_expr))
        for n, y in a_rest.items():
            out.setdefault(n, Accumulator()).add(self._insert_expr(b, y), p)
        for j, x in ab.items():
            for k, z in self._bracket_expr(x, rest_expr).items():
                n = j + k + 1
                out.setdefault(n, Accumulator()).add(z, math.comb(n, j))
        return _collect(out)

    def _right_wick(self, left: Monomial, c: Monomial) -> Products:
        """(:aB:)_(n)C from the right Wick formula, B the rest of the word."""
        a, rest = left[0], left[1:]
        gens = self.gens
        p = -1 if gens.term_odd(a) and gens.grades(rest).odd else 1
        a_c = self._bracket_mono((a,), c)
        rest_c = self._bracket_mono(rest, c)
        out: dict[int, Accumulator] = {}
        # sum_j :(T^(j)a)(B_(n+j)C):
        for m, x in rest_c.items():
            for j in range(m + 1):
                t = Term(a.gen, a.tpow + j)
                out.setdefault(m - j, Accumulator()).add(
                    self._insert_expr(t, x), math.comb(a.tpow + j, j)
                )
        # p sum_j :(T^(j)B)(a_(n+j)C):
        for m, y in a_c.items():
            for j in range(m + 1):
                out.setdefault(m - j, Accumulator()).add(
                    self._product(self._derivative_mono(rest, j), y), p
                )
        # p sum_i B_(n-1-i)(a_(i)C)
        rest_expr = Expr.mono(rest)
        for i, y in a_c.items():
            for k, z in self._bracket_expr(rest_expr, y).items():
                out.setdefault(i + k + 1, Accumulator()).add(z, p)
        return _collect(out)

    def _bracket_expr(self, x: Expr, y: Expr) -> Products:
        out: dict[int, Accumulator] = {}
        for m1, c1 in x.items():
            for m2, c2 in y.items():
                coeff = c1 * c2
                for n, z in self._bracket_mono(m1, m2).items():
                    out.setdefault(n, Accumulator()).add(z, coeff)
        return _collect(out)

    # products

    def _product(self, x: Expr, y: Expr) -> Expr:
        acc = Accumulator()
        for m1, c1 in x.items():
            for m2, c2 in y.items():
                acc.add(self._product_mono(m1, m2), c1 * c2)
        return acc.result()

    def _product_mono(self, m: Monomial, n: Monomial) -> Expr:
        if not m:
            return Expr.mono(n)
        if not n:
            return Expr.mono(m)
        if len(m) == 1:
            return self._insert(m[0], n)
        key = (m, n)
        cached = self._product_cache.get(key)
        if cached is not None:
            return cached
        first, rest = m[0], m[1:]
        p = -1 if self.gens.term_odd(first) and self.gens.grades(rest).odd else 1
        acc = Accumulator()
        acc.add(self._insert_expr(first, self._product_mono(rest, n)))
        # quasi-associativity corrections
        for j, z in self._bracket_mono(rest, n).items():
            t = Term(first.gen, first.tpow + j + 1)
            acc.add(self._insert_expr(t, z), math.comb(first.tpow + j + 1, j + 1))
        for j, z in self._bracket_mono((first,), n).items():
            acc.add(self._product(self._derivative_mono(rest, j + 1), z), p)
        result = acc.result()
        self._product_cache[key] = result
        return result

    def _insert_expr(self, t: Term, x: Expr) -> Expr:
        acc = Accumulator()
        for m, c in x.items():
            acc.add(self._insert(t, m), c)
        return acc.result()

    def _insert(self, t: Term, word: Monomial) -> Expr:
        """Normal form of :t N: for an ordered word N."""
        if not word:
            return Expr.mono((t,))
        first = word[0]
        odd = self.gens.term_odd(t)
        if t < first or (t == first and not odd):
            return Expr.mono((t,) + word)
        key = (t, word)
        cached = self._insert_cache.get(key)
        if cached is not None:
            return cached
        tail = Expr.mono(word[1:])
        acc = Accumulator()
        if t == first:
            # :t:t N:: = :(:tt:) N: and 2:tt: = sum_j (-1)^j T^(j+1)(t_(j)t)
            square = Accumulator()
            for j, z in self._bracket_terms(t, t).items():
                square.add(self.derivative(z, j + 1), Scalar((-1) ** j))
            acc.add(self._product(square.result(), tail), Scalar(1) / 2)
        else:
            p = -1 if odd and self.gens.term_odd(first) else 1
            acc.add(self._insert_expr(first, self._insert(t, word[1:])), p)
            for j, z in self._bracket_terms(t, first).items():
                acc.add(self._product(self.derivative(z, j + 1), tail), (-1) ** j)
        result = acc.result()
        self._insert_cache[key] = result
        return result

    # integration

    def integrate(
        self,
        poly: LambdaExpr,
        var: str,
        lower: Bound,
        upper: Bound,
        left: Expr | None = None,
    ) -> LambdaExpr | Expr:
        """Definite integral of a lambda-polynomial in ``var``.

        Bounds are 0, variables, linear forms in variables, or +-T. With a T
        bound the other bound must be 0, the integrand must involve ``var``
        only, and the result is an element: the T-powers act on the
        coefficients, or on ``left`` when given (then the result is
        :(T-powers of left)(coefficient):).
        """
        if var not in poly.vars:
            raise UnsupportedBound(f"{var} is not a variable of the integrand")
        lo = _linear_form(lower, poly.vars)
        hi = _linear_form(upper, poly.vars)
        if lo == hi:
            return LambdaExpr(poly.vars) if not isinstance(lo, str) else Expr()
        if isinstance(lo, str) or isinstance(hi, str):
            return self._integrate_T(poly, var, lo, hi, left)
        idx = poly.vars.index(var)
        out: dict[Exponents, Accumulator] = {}
        for e, x in poly.items():
            n = e[idx]
            base = e[:idx] + (0,) + e[idx + 1 :]
            for form, sign in ((hi, 1), (lo, -1)):
                for pe, c in _power_of_form(form, n + 1, poly.vars).items():
                    key = tuple(a + b for a, b in zip(base, pe))
                    out.setdefault(key, Accumulator()).add(x, c * sign / (n + 1))
        return LambdaExpr(poly.vars, {k: a.result() for k, a in out.items()})

    def _integrate_T(
        self,
        poly: LambdaExpr,
        var: str,
        lo: dict[str, Scalar] | str,
        hi: dict[str, Scalar] | str,
        left: Expr | None,
    ) -> Expr:
        if isinstance(lo, str) and isinstance(hi, str):
            raise UnsupportedBound("both bounds involve T")
        other = hi if isinstance(lo, str) else lo
        if other:
            raise UnsupportedBound("a T bound can only be paired with 0")
        idx = poly.vars.index(var)
        acc = Accumulator()
        for e, x in poly.items():
            if any(k for i, k in enumerate(e) if i != idx):
                raise UnsupportedBound("T bounds need an integrand in the integration variable only")
            n = e[idx]
            # int_0^T l^n = n! T^(n+1); int_-T^0 l^n = (-1)^n n! T^(n+1)
            if hi == "T" or lo == "T":
                coeff = math.factorial(n) * (1 if hi == "T" else -1)
            else:
                coeff = math.factorial(n) * (-1) ** n * (1 if lo == "-T" else -1)
            if left is None:
                acc.add(self.derivative(x, n + 1), coeff)
            else:
                acc.add(self._product(self.derivative(left, n + 1), x), coeff)
        return acc.result()

    # substitutions in lambda-polynomials

    def minus_var_minus_T(self, poly: LambdaExpr, var: str, target: str | None = None) -> LambdaExpr:
        """Substitute var -> -target - T, T acting on the coefficients."""
        target = target or var
        vars = poly.vars if target in poly.vars else poly.vars + (target,)
        poly = poly.with_vars(vars)
        i, t = vars.index(var), vars.index(target)
        out: dict[Exponents, Accumulator] = {}
        for e, x in poly.items():
            n = e[i]
            for r in range(n + 1):
                key = list(e)
                key[i] = 0
                key[t] += n - r
                coeff = math.comb(n, r) * (-1) ** n * math.factorial(r)
                out.setdefault(tuple(key), Accumulator()).add(self.derivative(x, r), coeff)
        return LambdaExpr(vars, {k: a.result() for k, a in out.items()})

    def apply_T(self, poly: LambdaExpr) -> LambdaExpr:
        return poly.map_exprs(lambda x: self.derivative(x, 1))

    def normalize_lambda(self, poly: LambdaExpr) -> LambdaExpr:
        return poly.map_exprs(self._normal_form_expr)

    # integral bracket

    def integral_bracket(
        self, a: Raw, b: Raw, var: str = "lam", form: Mapping[str, ScalarLike] | None = None,
        vars: Sequence[str] | None = None,
    ) -> LambdaExpr:
        """I(a,b) = :ab: + sum_n nu^(n+1)/(n+1)! a_(n)b with nu = ``form`` (default ``var``)."""
        x, y = self.normal_form(a), self.normal_form(b)
        vars = tuple(vars) if vars is not None else (var,)
        form = dict(form) if form is not None else {var: 1}
        return self._integral(x, y, {v: Scalar(c) for v, c in form.items()}, vars)

    def _integral(self, x: Expr, y: Expr, form: dict[str, Scalar], vars: tuple[str, ...]) -> LambdaExpr:
        out: dict[Exponents, Accumulator] = {(0,) * len(vars): Accumulator()}
        out[(0,) * len(vars)].add(self._product(x, y))
        for n, z in self._bracket_expr(x, y).items():
            for e, c in _power_of_form(form, n + 1, vars).items():
                out.setdefault(e, Accumulator()).add(z, c / math.factorial(n + 1))
        return LambdaExpr(vars, {e: a.result() for e, a in out.items()})

    def integral_of_poly(
        self, x: LambdaExpr, y: LambdaExpr, form: dict[str, Scalar], vars: tuple[str, ...]
    ) -> LambdaExpr:
        """Bilinear extension of I_form to lambda-polynomial arguments."""
        x, y = x.with_vars(vars), y.with_vars(vars)
        total = LambdaExpr(vars)
        for e1, xa in x.items():
            for e2, yb in y.items():
                shift = tuple(p + q for p, q in zip(e1, e2))
                total = total + self._integral(xa, yb, form, vars).shift(shift)
        return total


def _collect(out: Mapping[int, Accumulator]) -> Products:
    result = {}
    for n, acc in out.items():
        x = acc.result()
        if x:
            result[n] = x
    return result


# checkers


def _pairs(n: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(n) for j in range(n)]


def parallel_map(fn: Callable[[Any], T], items: Sequence[Any], threads: int) -> list[T]:
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _format_products(engine: WickEngine, residual: Mapping[Any, Expr]) -> str | None:
    parts = [f"{k}: {engine.format(x)}" for k, x in sorted(residual.items()) if x]
    return "; ".join(parts) if parts else None


def check_skewsymmetry(spec: LcaSpec, engine: WickEngine | None = None) -> CheckReport:
    """[a_lam b] + p(a,b)[b_{-lam-T} a] = 0 for every generator pair."""
    engine = engine or WickEngine(spec)
    gens = spec.gens
    report = CheckReport("skewsymmetry")
    for i, j in _pairs(len(gens)):
        if j < i:
            continue
        direct = engine.generator_products(i, j)
        p = -1 if gens[i].odd and gens[j].odd else 1
        derived = engine._skew(engine.generator_products(j, i), p)
        residual = {n: direct.get(n, Expr()) - derived.get(n, Expr()) for n in set(direct) | set(derived)}
        report.record(f"({gens[i].id}, {gens[j].id})", _format_products(engine, residual))
    if not report.passed:
        logger.warning("skewsymmetry fails on %s", ", ".join(report.failed_subjects()))
    return report


def jacobi_residual(engine: WickEngine, a: Expr, b: Expr, c: Expr) -> dict[tuple[int, int], Expr]:
    """Coefficients of lam^(m) mu^(n) (divided powers) of J(a,b,c; lam, mu)."""
    p = engine.sign(a, b)
    out: dict[tuple[int, int], Accumulator] = {}
    for n, bc in engine.products(b, c).items():
        for m, z in engine.products(a, bc).items():
            out.setdefault((m, n), Accumulator()).add(z)
    for m, ac in engine.products(a, c).items():
        for n, z in engine.products(b, ac).items():
            out.setdefault((m, n), Accumulator()).add(z, -p)
    for j, ab in engine.products(a, b).items():
        for k, z in engine.products(ab, c).items():
            for m in range(j, j + k + 1):
                n = k - (m - j)
                out.setdefault((m, n), Accumulator()).add(z, -math.comb(m, j))
    return {key: x for key, x in ((k, a.result()) for k, a in out.items()) if x}


def check_jacobi(
    spec: LcaSpec,
    engine: WickEngine | None = None,
    exhaustive: bool = False,
    threads: int = 1,
) -> CheckReport:
    """Jacobi identity on generator triples (a <= b unless ``exhaustive``)."""
    engine = engine or WickEngine(spec)
    gens = spec.gens
    n = len(gens)
    triples = [
        (i, j, k)
        for i in range(n)
        for j in range(n)
        for k in range(n)
        if exhaustive or i <= j
    ]

    def run(triple: tuple[int, int, int]) -> str | None:
        i, j, k = triple
        residual = jacobi_residual(engine, Expr.gen(i), Expr.gen(j), Expr.gen(k))
        return _format_products(engine, residual)

    report = CheckReport("jacobi")
    for triple, residual in zip(triples, parallel_map(run, triples, threads)):
        i, j, k = triple
        report.record(f"({gens[i].id}, {gens[j].id}, {gens[k].id})", residual)
    if not report.passed:
        logger.warning("jacobi fails on %d triples", len(report.failures))
    return report


def _max_key(products: Mapping[int, Expr]) -> int:
    return max(products, default=-1)


NthProduct = Callable[[Expr, int, Expr], Expr]
AllProducts = Callable[[Expr, Expr], Mapping[int, Expr]]


def borcherds_sides(
    nth: NthProduct, products: AllProducts, p: int, a: Expr, b: Expr, c: Expr, m: int, n: int, k: int
) -> tuple[Expr, Expr]:
    """Both sides of the Borcherds identity for (m, n, k) under a given n-th product."""
    lhs = Accumulator()
    top = _max_key(products(a, b)) - n
    for j in range(top + 1):
        ab = nth(a, n + j, b)
        if ab:
            lhs.add(nth(ab, m + k - j, c), binom(m, j))
    rhs = Accumulator()
    top1 = _max_key(products(b, c)) - k
    top2 = _max_key(products(a, c)) - m
    for j in range(max(top1, top2, -1) + 1):
        coeff = binom(n, j) * (-1) ** j
        bc = nth(b, k + j, c)
        if bc:
            rhs.add(nth(a, m + n - j, bc), coeff)
        ac = nth(a, m + j, c)
        if ac:
            rhs.add(nth(b, n + k - j, ac), coeff * (-p) * (-1) ** (n % 2))
    return lhs.result(), rhs.result()


def check_borcherds(
    engine: WickEngine, a: Raw, b: Raw, c: Raw, m: int, n: int, k: int, oracle: bool = False
) -> bool:
    """Whether the Borcherds identity holds for the given elements and integers.

    With ``oracle`` both sides are also computed in the mode model of
    :mod:`lambda_forge.modes` (linear specs only) and all four must agree.
    """
    x, y, z = engine.normal_form(a), engine.normal_form(b), engine.normal_form(c)
    p = engine.sign(x, y)
    lhs, rhs = borcherds_sides(engine.nth_product, engine.products, p, x, y, z, m, n, k)
    if lhs != rhs:
        logger.warning("borcherds fails at (%d, %d, %d)", m, n, k)
        return False
    if not oracle:
        return True
    from .modes import ModeAlgebra

    modes = ModeAlgebra(engine.spec)
    olhs, orhs = borcherds_sides(modes.nth_product, modes.products, p, x, y, z, m, n, k)
    return olhs == orhs == lhs


def quasicommutativity_residual(engine: WickEngine, a: Expr, b: Expr) -> Expr:
    """:ab: - p(a,b):ba: - int_{-T}^0 [a_lam b] dlam."""
    p = engine.sign(a, b)
    integral = engine.integrate(engine.lambda_bracket(a, b), "lam", "-T", 0)
    assert isinstance(integral, Expr)
    return engine.product(a, b) - engine.product(b, a).scale(p) - integral


def weak_quasi_associativity_residual(engine: WickEngine, a: Expr, b: Expr, c: Expr) -> Expr:
    """:a:bc:: - p:b:ac:: - (::ab:c: - p::ba:c:)."""
    p = engine.sign(a, b)
    lhs = engine.product(a, engine.product(b, c)) - engine.product(b, engine.product(a, c)).scale(p)
    rhs = engine.product(engine.product(a, b), c) - engine.product(engine.product(b, a), c).scale(p)
    return lhs - rhs


def left_wick_residual(engine: WickEngine, a: Expr, b: Expr, c: Expr) -> dict[int, Expr]:
    """[a_lam :bc:] against :[a_lam b]c: + p:b[a_lam c]: + int_0^lam [[a_lam b]_mu c] dmu."""
    p = engine.sign(a, b)
    direct = engine.products(a, engine.product(b, c))
    out: dict[int, Accumulator] = {}
    for n, x in engine.products(a, b).items():
        out.setdefault(n, Accumulator()).add(engine.product(x, c))
        for k, z in engine.products(x, c).items():
            out.setdefault(n + k + 1, Accumulator()).add(z, math.comb(n + k + 1, n))
    for n, y in engine.products(a, c).items():
        out.setdefault(n, Accumulator()).add(engine.product(b, y), p)
    assembled = _collect(out)
    keys = set(direct) | set(assembled)
    residual = {n: direct.get(n, Expr()) - assembled.get(n, Expr()) for n in keys}
    return {n: x for n, x in residual.items() if x}


def _generator_exprs(spec: LcaSpec) -> list[tuple[str, Expr]]:
    return [(d.id, Expr.gen(i)) for i, d in enumerate(spec.gens)]


def check_quasicommutativity(
    spec: LcaSpec, engine: WickEngine | None = None, elements: Sequence[tuple[str, Expr]] | None = None
) -> CheckReport:
    engine = engine or WickEngine(spec)
    elements = elements or _generator_exprs(spec)
    report = CheckReport("quasicommutativity")
    for name_a, a in elements:
        for name_b, b in elements:
            r = quasicommutativity_residual(engine, a, b)
            report.record(f"({name_a}, {name_b})", engine.format(r) if r else None)
    return report


def check_weak_quasi_associativity(spec: LcaSpec, engine: WickEngine | None = None) -> CheckReport:
    engine = engine or WickEngine(spec)
    elements = _generator_exprs(spec)
    report = CheckReport("weak quasi-associativity")
    for na, a in elements:
        for nb, b in elements:
            for nc, c in elements:
                r = weak_quasi_associativity_residual(engine, a, b, c)
                report.record(f"({na}, {nb}, {nc})", engine.format(r) if r else None)
    return report


def check_left_wick(spec: LcaSpec, engine: WickEngine | None = None) -> CheckReport:
    engine = engine or WickEngine(spec)
    elements = _generator_exprs(spec)
    report = CheckReport("left wick")
    for na, a in elements:
        for nb, b in elements:
            for nc, c in elements:
                r = left_wick_residual(engine, a, b, c)
                report.record(f"({na}, {nb}, {nc})", _format_products(engine, r))
    return report


def check_integral_bracket(spec: LcaSpec, engine: WickEngine | None = None) -> CheckReport:
    """Sesquilinearity, skewsymmetry and Jacobi of the integral lambda-bracket."""
    engine = engine or WickEngine(spec)
    elements = _generator_exprs(spec)
    report = CheckReport("integral bracket")
    one = ("lam",)
    for na, a in elements:
        ta = engine.derivative(a)
        for nb, b in elements:
            tb = engine.derivative(b)
            p = engine.sign(a, b)
            i_ab = engine.integral_bracket(a, b)
            i_ta_b = engine.integral_bracket(ta, b)
            lhs = i_ta_b.derivative("lam")
            rhs = i_ab.derivative("lam").shift((1,)).scale(-1)
            report.record(f"d/dlam I(T{na},{nb})", _residual(engine, lhs - rhs))
            lhs = engine.apply_T(i_ab)
            rhs = i_ta_b + engine.integral_bracket(a, tb)
            report.record(f"T I({na},{nb})", _residual(engine, lhs - rhs))
            lhs = engine.integral_bracket(b, a)
            rhs = engine.minus_var_minus_T(i_ab, "lam").scale(p)
            report.record(f"I({nb},{na}) skew", _residual(engine, lhs - rhs.with_vars(one)))
    two = ("lam", "mu")
    lam = {"lam": ONE}
    mu = {"mu": ONE}
    both = {"lam": ONE, "mu": ONE}
    for na, a in elements:
        ea = LambdaExpr.from_expr(a, two)
        for nb, b in elements:
            eb = LambdaExpr.from_expr(b, two)
            p = engine.sign(a, b)
            i_ab = engine.integral_bracket(a, b)
            inner = i_ab.with_vars(two) - engine.minus_var_minus_T(i_ab, "lam", "mu").with_vars(two)
            for nc, c in elements:
                ec = LambdaExpr.from_expr(c, two)
                bc = engine.integral_of_poly(eb, ec, mu, two)
                ac = engine.integral_of_poly(ea, ec, lam, two)
                lhs = engine.integral_of_poly(ea, bc, lam, two) - engine.integral_of_poly(
                    eb, ac, mu, two
                ).scale(p)
                rhs = engine.integral_of_poly(inner, ec, both, two)
                report.record(f"jacobi ({na}, {nb}, {nc})", _residual(engine, lhs - rhs))
    return report


def _residual(engine: WickEngine, poly: LambdaExpr) -> str | None:
    return None if not poly else engine.format(poly)
