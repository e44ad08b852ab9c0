"""
Poisson vertex algebras of differential polynomials.

A PVA element is an :class:`~lambda_forge.terms.Expr` whose monomials are
sorted tuples of Terms, read as commutative (super)products; here
``Term(i, n)`` is the ordinary derivative ``u_i^(n) = T^n u_i``, not the
divided power used by vertex-algebra words. Lambda-polynomials are plain
maps ``{power of lam: PvaExpr}``.

Brackets come from the master formula; an independent evaluation by the
Leibniz rules is kept for cross-checks and for odd generators. Local
functionals are canonical representatives modulo total derivatives.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import NotDivisibleByEpsilon, PoleAtSubstitution, SpecValidationError
from .linear import rref
from .reports import CheckReport
from .scalar import ONE, ZERO, Scalar, ScalarLike, binom
from .syntax import parse_lambda, to_tensor
from .terms import Accumulator, Expr, GeneratorDecl, GeneratorSet, LambdaExpr, Monomial, Term
from .wick import LcaSpec

logger = logging.getLogger(__name__)

LamPoly = dict[int, Expr]
Lam2Poly = dict[tuple[int, int], Expr]

EPS = "eps"


# commutative differential polynomials


def _sort_sign(gens: GeneratorSet, terms: Sequence[Term]) -> tuple[int, Monomial] | None:
    """Sorted monomial and Koszul sign, or None when an odd factor repeats."""
    word = list(terms)
    sign = 1
    for i in range(1, len(word)):
        j = i
        while j > 0 and word[j - 1] > word[j]:
            if gens.term_odd(word[j - 1]) and gens.term_odd(word[j]):
                sign = -sign
            word[j - 1], word[j] = word[j], word[j - 1]
            j -= 1
    for a, b in zip(word, word[1:]):
        if a == b and gens.term_odd(a):
            return None
    return sign, tuple(word)


class DiffPolynomials:
    """The algebra C[u_i^(n)] over a generator set."""

    def __init__(self, gens: GeneratorSet) -> None:
        self.gens = gens

    def u(self, i: int, n: int = 0, coeff: ScalarLike = 1) -> Expr:
        return Expr.gen(i, n, coeff)

    def parse(self, text: str) -> Expr:
        """Parse with the element syntax; ``T^n(x)`` is the divided power, ``:x y:`` the product."""
        parsed = parse_lambda(text, self.gens, ())
        return self.from_words(to_tensor(parsed[()])) if parsed else Expr()

    def from_words(self, x: Expr) -> Expr:
        """Read tensor words of divided-power terms as commutative products."""
        acc = Accumulator()
        for word, c in x.items():
            scale = 1
            for t in word:
                scale *= math.factorial(t.tpow)
            sorted_word = _sort_sign(self.gens, word)
            if sorted_word is None:
                continue
            sign, mono = sorted_word
            acc.add_term(mono, c * Scalar(Fraction(sign, scale)))
        return acc.result()

    def is_odd(self, mono: Monomial) -> bool:
        return self.gens.is_odd(mono)

    def sign(self, a: Monomial, b: Monomial) -> int:
        return -1 if self.is_odd(a) and self.is_odd(b) else 1

    def multiply(self, x: Expr, y: Expr) -> Expr:
        acc = Accumulator()
        for m1, c1 in x.items():
            for m2, c2 in y.items():
                merged = _sort_sign(self.gens, m1 + m2)
                if merged is not None:
                    sign, mono = merged
                    acc.add_term(mono, c1 * c2 * sign)
        return acc.result()

    def derivative(self, x: Expr, r: int = 1) -> Expr:
        """T^r x (ordinary power)."""
        for _ in range(r):
            acc = Accumulator()
            for mono, c in x.items():
                for k, t in enumerate(mono):
                    word = mono[:k] + (Term(t.gen, t.tpow + 1),) + mono[k + 1 :]
                    merged = _sort_sign(self.gens, word)
                    if merged is not None:
                        sign, m = merged
                        acc.add_term(m, c * sign)
            x = acc.result()
        return x

    def partial(self, x: Expr, t: Term) -> Expr:
        """Left partial derivative by u_i^(n)."""
        acc = Accumulator()
        for mono, c in x.items():
            sign = 1
            for k, s in enumerate(mono):
                if s == t:
                    acc.add_term(mono[:k] + mono[k + 1 :], c * sign)
                if self.gens.term_odd(s) and self.gens.term_odd(t):
                    sign = -sign
        return acc.result()

    def variables(self, x: Expr) -> list[Term]:
        return sorted({t for mono in x for t in mono})

    def variational_derivative(self, x: Expr, i: int) -> Expr:
        """delta x / delta u_i = sum_n (-T)^n d x / d u_i^(n)."""
        acc = Accumulator()
        for t in self.variables(x):
            if t.gen == i:
                acc.add(self.derivative(self.partial(x, t), t.tpow), (-1) ** t.tpow)
        return acc.result()

    def format(self, x: Expr) -> str:
        return format_pva(x, self.gens)


def _term_text(gens: GeneratorSet, t: Term) -> str:
    name = gens[t.gen].id
    if t.tpow <= 3:
        return name + "'" * t.tpow
    return f"{name}^({t.tpow})"


def format_pva(x: Expr, gens: GeneratorSet) -> str:
    if not x:
        return "0"
    parts = []
    for mono, c in sorted(x.items(), key=lambda kv: (-len(kv[0]), kv[0])):
        body = "*".join(_term_text(gens, t) for t in mono)
        if not mono:
            parts.append(str(c))
        elif c == ONE:
            parts.append(body)
        elif c == -ONE:
            parts.append(f"-{body}")
        else:
            parts.append(f"({c})*{body}" if c.is_compound else f"{c}*{body}")
    return " + ".join(parts).replace("+ -", "- ")


def format_lam(poly: Mapping[int, Expr], gens: GeneratorSet, var: str = "lam") -> str:
    parts = []
    for n, x in sorted(poly.items()):
        if not x:
            continue
        body = format_pva(x, gens)
        if n == 0:
            parts.append(body)
        else:
            power = var if n == 1 else f"{var}^{n}"
            parts.append(f"{power}*({body})" if len(x) > 1 else f"{body}*{power}")
    return " + ".join(parts) if parts else "0"


# lambda-polynomial helpers


def _add(out: dict[int, Accumulator], n: int, x: Expr, c: ScalarLike = 1) -> None:
    if x:
        out.setdefault(n, Accumulator()).add(x, c)


def _collect(out: Mapping[int, Accumulator]) -> LamPoly:
    return {n: x for n, x in ((n, acc.result()) for n, acc in out.items()) if x}


def _collect2(out: Mapping[tuple[int, int], Accumulator]) -> Lam2Poly:
    return {k: x for k, x in ((k, acc.result()) for k, acc in out.items()) if x}


def poly_sub(a: Mapping[int, Expr], b: Mapping[int, Expr]) -> LamPoly:
    out: dict[int, Accumulator] = {}
    for n, x in a.items():
        _add(out, n, x)
    for n, x in b.items():
        _add(out, n, x, -1)
    return _collect(out)


@dataclass
class PvaSpec:
    """Generators and the table {u_i lam u_j} (ordinary lam powers); missing orders follow by skewsymmetry."""

    gens: GeneratorSet
    table: dict[tuple[int, int], LamPoly]
    name: str = ""
    _full: dict[tuple[int, int], LamPoly] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        self.algebra = DiffPolynomials(self.gens)
        self.table = {k: {n: x for n, x in v.items() if x} for k, v in self.table.items()}
        self.table = {k: v for k, v in self.table.items() if v}

    @classmethod
    def from_text(
        cls,
        generators: Sequence[GeneratorDecl],
        entries: Mapping[tuple[str, str], str],
        name: str = "",
    ) -> PvaSpec:
        gens = GeneratorSet(generators)
        algebra = DiffPolynomials(gens)
        table: dict[tuple[int, int], LamPoly] = {}
        for (a, b), text in entries.items():
            parsed = parse_lambda(text, gens, ("lam",))
            table[(gens.lookup(a), gens.lookup(b))] = {
                e[0]: algebra.from_words(to_tensor(raw)) for e, raw in parsed.items()
            }
        return cls(gens, table, name)

    def generator_bracket(self, i: int, j: int) -> LamPoly:
        """{u_i lam u_j}."""
        key = (i, j)
        cached = self._full.get(key)
        if cached is not None:
            return cached
        if key in self.table:
            result = self.table[key]
        elif (j, i) in self.table:
            p = -1 if self.gens[i].odd and self.gens[j].odd else 1
            result = skew(self.algebra, self.table[(j, i)], p)
        else:
            result = {}
        self._full[key] = result
        return result

    def format(self, x: Expr) -> str:
        return format_pva(x, self.gens)

    def format_lam(self, poly: Mapping[int, Expr], var: str = "lam") -> str:
        return format_lam(poly, self.gens, var)


def skew(algebra: DiffPolynomials, poly: Mapping[int, Expr], p: int) -> LamPoly:
    """-p {a_{-lam-T} b} from {a_lam b}."""
    out: dict[int, Accumulator] = {}
    for m, c in poly.items():
        for r in range(m + 1):
            coeff = -p * math.comb(m, r) * (-1) ** m
            _add(out, m - r, algebra.derivative(c, r), coeff)
    return _collect(out)


def _apply_lam_plus_T(algebra: DiffPolynomials, q: int, poly: Mapping[int, Expr]) -> LamPoly:
    """(lam + T)^q applied to a lam-polynomial."""
    if q == 0:
        return dict(poly)
    out: dict[int, Accumulator] = {}
    for s in range(q + 1):
        coeff = math.comb(q, s)
        for n, x in poly.items():
            _add(out, n + q - s, algebra.derivative(x, s), coeff)
    return _collect(out)


def _arrow(algebra: DiffPolynomials, bracket: Mapping[int, Expr], right: Mapping[int, Expr]) -> LamPoly:
    """{a_{lam+T} b}_-> X: powers of lam + T act on X, coefficients multiply on the left."""
    out: dict[int, Accumulator] = {}
    for m, c in bracket.items():
        for n, shifted in _apply_lam_plus_T(algebra, m, right).items():
            _add(out, n, algebra.multiply(c, shifted))
    return _collect(out)


def _arrow_right(algebra: DiffPolynomials, bracket: Mapping[int, Expr], right: Expr) -> LamPoly:
    """Same as :func:`_arrow` with the product taken as c * X."""
    out: dict[int, Accumulator] = {}
    for m, c in bracket.items():
        for s in range(m + 1):
            _add(out, m - s, algebra.multiply(c, algebra.derivative(right, s)), math.comb(m, s))
    return _collect(out)


def _minus_lam_minus_T(algebra: DiffPolynomials, p: int, x: Expr) -> LamPoly:
    """(-lam - T)^p x."""
    out: dict[int, Accumulator] = {}
    for k in range(p + 1):
        _add(out, p - k, algebra.derivative(x, k), math.comb(p, k) * (-1) ** p)
    return _collect(out)


def pva_bracket(P: Expr, Q: Expr, spec: PvaSpec) -> LamPoly:
    """{P_lam Q} by the master formula (even generators)."""
    if any(d.odd for d in spec.gens):
        return leibniz_bracket(P, Q, spec)
    algebra = spec.algebra
    out: dict[int, Accumulator] = {}
    p_vars = algebra.variables(P)
    q_vars = algebra.variables(Q)
    for ti in p_vars:
        dp = algebra.partial(P, ti)
        right = _minus_lam_minus_T(algebra, ti.tpow, dp)
        for tj in q_vars:
            base = spec.generator_bracket(ti.gen, tj.gen)
            if not base:
                continue
            inner = _arrow(algebra, base, right)
            outer = _apply_lam_plus_T(algebra, tj.tpow, inner)
            dq = algebra.partial(Q, tj)
            for n, x in outer.items():
                _add(out, n, algebra.multiply(dq, x))
    return _collect(out)


def leibniz_bracket(P: Expr, Q: Expr, spec: PvaSpec) -> LamPoly:
    """{P_lam Q} from the generator table by sesquilinearity and both Leibniz rules."""
    out: dict[int, Accumulator] = {}
    for m1, c1 in P.items():
        for m2, c2 in Q.items():
            for n, x in _leibniz_mono(m1, m2, spec).items():
                _add(out, n, x, c1 * c2)
    return _collect(out)


def _leibniz_mono(a: Monomial, b: Monomial, spec: PvaSpec) -> LamPoly:
    algebra = spec.algebra
    if not a or not b:
        return {}
    if len(b) > 1:
        # {A_lam t B'} = {A_lam t} B' + p(A, t) t {A_lam B'}
        t, rest = b[:1], b[1:]
        out: dict[int, Accumulator] = {}
        for n, x in _leibniz_mono(a, t, spec).items():
            _add(out, n, algebra.multiply(x, Expr.mono(rest)))
        sign = algebra.sign(a, t)
        for n, x in _leibniz_mono(a, rest, spec).items():
            _add(out, n, algebra.multiply(Expr.mono(t), x), sign)
        return _collect(out)
    if len(a) > 1:
        # {s A'_lam t} = p(s,A')p(s,t) {A'_{lam+T} t}_-> s + p(A',t) {s_{lam+T} t}_-> A'
        s, rest = a[:1], a[1:]
        out = {}
        sign1 = algebra.sign(s, rest) * algebra.sign(s, b)
        for n, x in _arrow_right(algebra, _leibniz_mono(rest, b, spec), Expr.mono(s)).items():
            _add(out, n, x, sign1)
        sign2 = algebra.sign(rest, b)
        for n, x in _arrow_right(algebra, _leibniz_mono(s, b, spec), Expr.mono(rest)).items():
            _add(out, n, x, sign2)
        return _collect(out)
    # {u_i^(p) lam u_j^(q)} = (-lam)^p (lam + T)^q {u_i lam u_j}
    ti, tj = a[0], b[0]
    base = spec.generator_bracket(ti.gen, tj.gen)
    shifted = _apply_lam_plus_T(algebra, tj.tpow, base)
    sign = (-1) ** ti.tpow
    return {n + ti.tpow: x.scale(sign) for n, x in shifted.items()}


def evaluate_at_zero(poly: Mapping[int, Expr]) -> Expr:
    return poly.get(0, Expr())


def nth_product(P: Expr, n: int, Q: Expr, spec: PvaSpec) -> Expr:
    """P_(n) Q = d^n/dlam^n {P_lam Q} at lam = 0 for n >= 0, (T^(m) P) Q for n = -m-1."""
    algebra = spec.algebra
    if n < 0:
        m = -n - 1
        return algebra.multiply(algebra.derivative(P, m), Q).scale(Scalar(1) / math.factorial(m))
    return pva_bracket(P, Q, spec).get(n, Expr()).scale(math.factorial(n))


# local functionals


def _multidegree(mono: Monomial) -> tuple[tuple[int, int], ...]:
    counts: dict[int, int] = {}
    for t in mono:
        counts[t.gen] = counts.get(t.gen, 0) + 1
    return tuple(sorted(counts.items()))


def _distributions(count: int, total: int, odd: bool, low: int = 0) -> Iterator[tuple[int, ...]]:
    """Nondecreasing (strictly increasing if odd) tuples of ``count`` orders >= low with the given sum."""
    if count == 0:
        if total == 0:
            yield ()
        return
    for first in range(low, total + 1):
        if first * count > total:
            break
        for rest in _distributions(count - 1, total - first, odd, first + 1 if odd else first):
            yield (first, *rest)


def slice_monomials(
    gens: GeneratorSet, multidegree: Sequence[tuple[int, int]], order: int
) -> list[Monomial]:
    """Ordered monomials with the given generator counts and total derivative order."""
    out: list[Monomial] = []

    def rec(k: int, left: int, acc: tuple[Term, ...]) -> None:
        if k == len(multidegree):
            if left == 0:
                out.append(acc)
            return
        g, count = multidegree[k]
        for part in range(left + 1):
            for orders in _distributions(count, part, gens[g].odd):
                rec(k + 1, left - part, acc + tuple(Term(g, n) for n in orders))

    rec(0, order, ())
    return [tuple(sorted(m)) for m in out]


def reduce_mod_T(P: Expr, spec: PvaSpec | GeneratorSet) -> Expr:
    """Canonical representative of P in V / TV: in every graded slice the pivot monomials of T(V) are eliminated."""
    gens = spec.gens if isinstance(spec, PvaSpec) else spec
    algebra = DiffPolynomials(gens)
    slices: dict[tuple[tuple[tuple[int, int], ...], int], Accumulator] = {}
    for mono, c in P.items():
        key = (_multidegree(mono), sum(t.tpow for t in mono))
        slices.setdefault(key, Accumulator()).add_term(mono, c)
    acc = Accumulator()
    for (multidegree, order), part in sorted(slices.items()):
        x = part.result()
        if order == 0 or not multidegree:
            acc.add(x)
            continue
        columns = slice_monomials(gens, multidegree, order)
        index = {m: i for i, m in enumerate(columns)}
        images = [algebra.derivative(Expr.mono(m)) for m in slice_monomials(gens, multidegree, order - 1)]
        rows = [{index[m]: c for m, c in y.items()} for y in images if y]
        reduced, pivots = rref(rows, len(columns))
        coords = {index[m]: c for m, c in x.items()}
        for row, p in zip(reduced, pivots):
            c = coords.get(p, ZERO)
            if c.is_zero:
                continue
            for col, v in row.items():
                coords[col] = coords.get(col, ZERO) - c * v
        acc.add(Expr({columns[i]: c for i, c in coords.items()}))
    return acc.result()


@dataclass(frozen=True)
class LocalFunctional:
    """A class in V / TV, stored by its canonical representative."""

    density: Expr
    spec: PvaSpec

    @classmethod
    def of(cls, P: Expr, spec: PvaSpec) -> LocalFunctional:
        return cls(reduce_mod_T(P, spec), spec)

    def __bool__(self) -> bool:
        return bool(self.density)

    def __str__(self) -> str:
        return f"int {self.spec.format(self.density)}"


def hamiltonian_flow(h: Expr | LocalFunctional, P: Expr, spec: PvaSpec) -> Expr:
    """{h, P} = {h_lam P} at lam = 0."""
    density = h.density if isinstance(h, LocalFunctional) else h
    return evaluate_at_zero(pva_bracket(density, P, spec))


def involution_bracket(h1: Expr | LocalFunctional, h2: Expr | LocalFunctional, spec: PvaSpec) -> Expr:
    """Canonical representative of {h1, h2} in V / TV."""
    d2 = h2.density if isinstance(h2, LocalFunctional) else h2
    return reduce_mod_T(hamiltonian_flow(h1, d2, spec), spec)


def involution_check(h1: Expr | LocalFunctional, h2: Expr | LocalFunctional, spec: PvaSpec) -> bool:
    return not involution_bracket(h1, h2, spec)


# checks


def check_skewsymmetry(spec: PvaSpec, samples: Iterable[tuple[Expr, Expr]] = ()) -> CheckReport:
    """{a_lam b} + p(a,b){b_{-lam-T} a} = 0 on generator pairs and on samples."""
    algebra = spec.algebra
    report = CheckReport("pva skewsymmetry")
    pairs = [
        (Expr.gen(i), Expr.gen(j), f"({spec.gens[i].id}, {spec.gens[j].id})")
        for i in range(len(spec.gens))
        for j in range(i, len(spec.gens))
    ]
    pairs += [(a, b, f"sample {n}") for n, (a, b) in enumerate(samples)]
    for a, b, label in pairs:
        p = _parity_sign(algebra, a, b)
        direct = pva_bracket(a, b, spec)
        derived = skew(algebra, pva_bracket(b, a, spec), p)
        diff = poly_sub(direct, derived)
        report.record(label, spec.format_lam(diff) if diff else None)
    return report


def _parity_sign(algebra: DiffPolynomials, a: Expr, b: Expr) -> int:
    odd_a = any(algebra.is_odd(m) for m in a)
    odd_b = any(algebra.is_odd(m) for m in b)
    return -1 if odd_a and odd_b else 1


def _bracket_poly(spec: PvaSpec, a: Expr, poly: Mapping[int, Expr]) -> Lam2Poly:
    """{a_lam (sum mu^n x_n)} as {(lam power, mu power): coefficient}."""
    out: dict[tuple[int, int], Accumulator] = {}
    for n, x in poly.items():
        for m, y in pva_bracket(a, x, spec).items():
            out.setdefault((m, n), Accumulator()).add(y)
    return _collect2(out)


def jacobi_residual(spec: PvaSpec, a: Expr, b: Expr, c: Expr) -> Lam2Poly:
    """{a_lam {b_mu c}} - p(a,b){b_mu {a_lam c}} - {{a_lam b}_{lam+mu} c} by powers (lam, mu)."""
    algebra = spec.algebra
    p = _parity_sign(algebra, a, b)
    out: dict[tuple[int, int], Accumulator] = {}
    for key, x in _bracket_poly(spec, a, pva_bracket(b, c, spec)).items():
        out.setdefault(key, Accumulator()).add(x)
    for (m, n), x in _bracket_poly(spec, b, pva_bracket(a, c, spec)).items():
        out.setdefault((n, m), Accumulator()).add(x, -p)
    for j, ab in pva_bracket(a, b, spec).items():
        for r, y in pva_bracket(ab, c, spec).items():
            # lam^j (lam + mu)^r
            for s in range(r + 1):
                out.setdefault((j + s, r - s), Accumulator()).add(y, -math.comb(r, s))
    return _collect2(out)


def check_jacobi(spec: PvaSpec, samples: Iterable[tuple[Expr, Expr, Expr]] = ()) -> CheckReport:
    gens = spec.gens
    n = len(gens)
    report = CheckReport("pva jacobi")
    triples = [
        (Expr.gen(i), Expr.gen(j), Expr.gen(k), f"({gens[i].id}, {gens[j].id}, {gens[k].id})")
        for i in range(n)
        for j in range(n)
        for k in range(n)
    ]
    triples += [(a, b, c, f"sample {m}") for m, (a, b, c) in enumerate(samples)]
    for a, b, c, label in triples:
        residual = jacobi_residual(spec, a, b, c)
        text = "; ".join(f"{k}: {spec.format(x)}" for k, x in sorted(residual.items()))
        report.record(label, text or None)
    return report


def check_leibniz(spec: PvaSpec, triples: Iterable[tuple[Expr, Expr, Expr]]) -> CheckReport:
    """Master formula against both Leibniz rules and the independent Leibniz evaluation."""
    algebra = spec.algebra
    report = CheckReport("pva leibniz")
    for k, (a, b, c) in enumerate(triples):
        bc = algebra.multiply(b, c)
        lhs = pva_bracket(a, bc, spec)
        rhs: dict[int, Accumulator] = {}
        for n, x in pva_bracket(a, b, spec).items():
            _add(rhs, n, algebra.multiply(x, c))
        p = _parity_sign(algebra, a, b)
        for n, x in pva_bracket(a, c, spec).items():
            _add(rhs, n, algebra.multiply(b, x), p)
        diff = poly_sub(lhs, _collect(rhs))
        report.record(f"right rule {k}", spec.format_lam(diff) if diff else None)

        ab = algebra.multiply(a, b)
        lhs = pva_bracket(ab, c, spec)
        rhs = {}
        # (e^{T d/dlam} a){b_lam c} = sum_r T^(r) a * d^r/dlam^r {b_lam c}
        for left, right, sign in ((a, b, 1), (b, a, p)):
            for n, x in pva_bracket(right, c, spec).items():
                for r in range(n + 1):
                    shifted = algebra.derivative(left, r).scale(Scalar(math.comb(n, r)))
                    _add(rhs, n - r, algebra.multiply(shifted, x), sign)
        diff = poly_sub(lhs, _collect(rhs))
        report.record(f"left rule {k}", spec.format_lam(diff) if diff else None)

        diff = poly_sub(pva_bracket(a, bc, spec), leibniz_bracket(a, bc, spec))
        report.record(f"leibniz oracle {k}", spec.format_lam(diff) if diff else None)
    return report


# Zhu Poisson algebra


class PvaZhu:
    """Zhu_{hbar=1} of a graded PVA: the polynomial algebra on the generators with the induced bracket.

    u_i^(n) projects to n! binom(-Delta_i, n) u_i; the bracket on generators is
    sum_j binom(Delta_i - 1, j) (u_i)_(j) u_j, extended by the Leibniz rule.
    """

    def __init__(self, spec: PvaSpec) -> None:
        self.spec = spec
        self.gens = spec.gens
        self.algebra = spec.algebra
        self._generator: dict[tuple[int, int], Expr] = {}

    def project(self, x: Expr) -> Expr:
        acc = Accumulator()
        for mono, c in x.items():
            coeff = c
            letters = []
            for t in mono:
                delta = self.gens[t.gen].delta
                coeff = coeff * binom(-delta, t.tpow) * math.factorial(t.tpow)
                letters.append(Term(t.gen, 0))
            if coeff.is_zero:
                continue
            merged = _sort_sign(self.gens, letters)
            if merged is not None:
                sign, word = merged
                acc.add_term(word, coeff * sign)
        return acc.result()

    def hbar_bracket(self, a: Expr, b: Expr) -> Expr:
        """{a, b}_hbar at hbar = 1 for homogeneous a, before projection."""
        weights = {self.gens.grades(m).delta for m in a if m}
        if len(weights) != 1:
            raise ValueError("the hbar-bracket needs a homogeneous first argument")
        delta = weights.pop()
        acc = Accumulator()
        for j, x in pva_bracket(a, b, self.spec).items():
            acc.add(x, binom(delta - 1, j) * math.factorial(j))
        return acc.result()

    def generator_bracket(self, i: int, j: int) -> Expr:
        key = (i, j)
        cached = self._generator.get(key)
        if cached is None:
            cached = self.project(self.hbar_bracket(Expr.gen(i), Expr.gen(j)))
            self._generator[key] = cached
        return cached

    def bracket(self, x: Expr, y: Expr) -> Expr:
        """Poisson bracket of projected elements, by the Leibniz rule in each slot."""
        acc = Accumulator()
        for w1, c1 in x.items():
            for w2, c2 in y.items():
                acc.add(self._bracket_words(w1, w2), c1 * c2)
        return acc.result()

    def _bracket_words(self, a: Monomial, b: Monomial) -> Expr:
        algebra = self.algebra
        if not a or not b:
            return Expr()
        if len(a) > 1:
            # {x A, b} = x {A, b} + p(A, b) {x, b} A
            x, rest = a[:1], a[1:]
            out = algebra.multiply(Expr.mono(x), self._bracket_words(rest, b))
            tail = algebra.multiply(self._bracket_words(x, b), Expr.mono(rest))
            return out + tail.scale(algebra.sign(rest, b))
        if len(b) > 1:
            # {a, y B} = {a, y} B + p(a, y) y {a, B}
            y, rest = b[:1], b[1:]
            out = algebra.multiply(self._bracket_words(a, y), Expr.mono(rest))
            tail = algebra.multiply(Expr.mono(y), self._bracket_words(a, rest))
            return out + tail.scale(algebra.sign(a, y))
        return self.generator_bracket(a[0].gen, b[0].gen)

    def format(self, x: Expr) -> str:
        return format_pva(x, self.gens)

    def check(self, samples: Iterable[tuple[Expr, Expr]] = ()) -> CheckReport:
        """Skewsymmetry and Jacobi on generators, and pi({a,b}_hbar) = {pi a, pi b} on samples."""
        report = CheckReport("pva zhu")
        n = len(self.gens)
        letters = [Expr.gen(i) for i in range(n)]
        for i in range(n):
            for j in range(n):
                p = -1 if self.gens[i].odd and self.gens[j].odd else 1
                diff = self.generator_bracket(i, j) + self.generator_bracket(j, i).scale(p)
                label = f"skew ({self.gens[i].id}, {self.gens[j].id})"
                report.record(label, self.format(diff) if diff else None)
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    a, b, c = letters[i], letters[j], letters[k]
                    p = -1 if self.gens[i].odd and self.gens[j].odd else 1
                    lhs = self.bracket(a, self.bracket(b, c))
                    rhs = self.bracket(self.bracket(a, b), c) + self.bracket(b, self.bracket(a, c)).scale(p)
                    diff = lhs - rhs
                    label = f"jacobi ({self.gens[i].id}, {self.gens[j].id}, {self.gens[k].id})"
                    report.record(label, self.format(diff) if diff else None)
        for m, (a, b) in enumerate(samples):
            diff = self.project(self.hbar_bracket(a, b)) - self.bracket(self.project(a), self.project(b))
            report.record(f"projection {m}", self.format(diff) if diff else None)
        return report


def pva_zhu(spec: PvaSpec) -> PvaZhu:
    return PvaZhu(spec)


# from Lie conformal algebras


def _table_from_lca(
    spec: LcaSpec,
    transform: Callable[[Scalar], Scalar],
) -> dict[tuple[int, int], LamPoly]:
    algebra = DiffPolynomials(spec.gens)
    table: dict[tuple[int, int], LamPoly] = {}
    for key, entry in spec.table.items():
        poly: LamPoly = {}
        for (n,), x in entry.items():
            y = algebra.from_words(x.map_coeffs(transform))
            if y:
                poly[n] = y
        table[key] = poly
    return table


def from_lca(spec: LcaSpec, name: str = "") -> PvaSpec:
    """The PVA on the same generators with the table of ``spec`` read commutatively."""
    return PvaSpec(spec.gens, _table_from_lca(spec, lambda c: c), name or spec.name)


def quasiclassical_limit(family: LcaSpec, eps: str = EPS, name: str = "") -> PvaSpec:
    """{a_lam b} = eps^-1 [a_lam b] at eps = 0, extended by the Leibniz rules."""
    e = Scalar.param(eps)

    def divide(c: Scalar) -> Scalar:
        try:
            return (c / e).substitute({eps: 0})
        except PoleAtSubstitution as err:
            raise NotDivisibleByEpsilon(f"coefficient {c} is not divisible by {eps}") from err

    table = _table_from_lca(family, divide)
    logger.debug("quasiclassical limit of %s: %d table entries", family.name, len(table))
    return PvaSpec(family.gens, table, name or f"{family.name}-classical")


def _decl(name: str, delta: ScalarLike = 1, odd: bool = False) -> GeneratorDecl:
    return GeneratorDecl(id=name, parity="odd" if odd else "even", delta=Scalar(delta).to_fraction(), zeta=1)


def boson_family(eps: str = EPS) -> LcaSpec:
    """B_eps: [u_lam u] = eps lam."""
    entry = LambdaExpr(("lam",), {(1,): Expr.vacuum(Scalar.param(eps))})
    return LcaSpec([_decl("u")], {(0, 0): entry}, name="boson-eps")


def current_family(spec: LcaSpec, eps: str = EPS) -> LcaSpec:
    """The family [a_lam b]_eps = eps [a_lam b] over the same generators."""
    e = Scalar.param(eps)
    table = {k: v.map_exprs(lambda x: x.scale(e)) for k, v in spec.table.items()}
    return LcaSpec(spec.gens, table, spec.hamiltonian, name=f"{spec.name}-eps")


def gfz() -> PvaSpec:
    """The Gardner-Faddeev-Zakharov bracket {u_lam u} = lam."""
    return PvaSpec(GeneratorSet([_decl("u")]), {(0, 0): {1: Expr.vacuum()}}, name="gfz")


def kdv_hamiltonians(spec: PvaSpec | None = None) -> dict[str, Expr]:
    """h0 = u, h1 = u^2/2, h2 = (u^3 - u'^2)/2 on a one-generator spec."""
    spec = spec or gfz()
    algebra = spec.algebra
    u, du = algebra.u(0), algebra.u(0, 1)
    half = Scalar(1) / 2
    return {
        "h0": u,
        "h1": algebra.multiply(u, u).scale(half),
        "h2": (algebra.multiply(u, algebra.multiply(u, u)) - algebra.multiply(du, du)).scale(half),
    }


def kdv_flow(spec: PvaSpec | None = None) -> Expr:
    """u-dot = {h2, u}; 3uu' + u''' for GFZ."""
    spec = spec or gfz()
    return hamiltonian_flow(kdv_hamiltonians(spec)["h2"], spec.algebra.u(0), spec)


def validate(spec: PvaSpec) -> None:
    """Raise SpecValidationError when the table breaks skewsymmetry or Jacobi on generators."""
    for report, invariant in ((check_skewsymmetry(spec), "skewsymmetry"), (check_jacobi(spec), "jacobi")):
        if not report.passed:
            raise SpecValidationError(invariant, ValueError("; ".join(report.failed_subjects())))
