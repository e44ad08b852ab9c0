"""
Classical-style construction of W-algebras W^k(g, f) from a good grading.

:func:`build_complex` assembles the complex C_k = V(Cur_k g + F_ch + F_ne)
with its odd differential ``d``; :func:`reduced_spec` gives the subalgebra
V(R) generated by the building blocks J_a, phi^a and Phi_a, where the
differential acts by a derivation. :func:`solve_generators` finds the free
generators E_i = J_{u_i} + (higher terms) of H(V(R), d) by exact linear
algebra, and the helpers below express their brackets, pass to the finite
W-algebra and check the shift isomorphism at level 0.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

from .constructions import EMField, check_energy_momentum, current_table, sugawara, vec_expr
from .errors import InsufficientGenerators, NoSolution
from .liealg import DualBases, GoodGrading, LieAlgData, Vec, dual_bases, dual_coxeter
from .linear import solve
from .reports import CheckReport
from .scalar import ZERO, Scalar, ScalarLike, binom
from .syntax import Product
from .terms import (
    Accumulator,
    Expr,
    GeneratorDecl,
    GeneratorSet,
    LambdaExpr,
    Monomial,
    Term,
    ordered_monomials,
)
from .wick import LcaSpec, WickEngine, parallel_map
from .zhu import ZhuAlgebra

logger = logging.getLogger(__name__)

HALF = Fraction(1, 2)


def _generator(
    name: str,
    delta: Fraction,
    odd: bool,
    charge: int = 0,
    p: Fraction | None = None,
) -> GeneratorDecl:
    bigrade = None if p is None else (p, delta - p)
    return GeneratorDecl(
        id=name,
        parity="odd" if odd else "even",
        delta=delta,
        zeta=1,
        charge=charge,
        bigrade=bigrade,
    )


def express(target: Expr, basis: Sequence[Expr]) -> list[Scalar] | None:
    """Coefficients c with sum c_i basis_i = target (free variables zero), or None."""
    rows: dict[Monomial, dict[int, Scalar]] = {}
    for col, x in enumerate(basis):
        for m, c in x.items():
            rows.setdefault(m, {})[col] = c
    for m in target:
        rows.setdefault(m, {})
    keys = list(rows)
    return solve([rows[m] for m in keys], [target.coeff(m) for m in keys], len(basis))


def _combination(coeffs: Sequence[Scalar], exprs: Sequence[Expr]) -> Expr:
    acc = Accumulator()
    for c, x in zip(coeffs, exprs):
        if not c.is_zero:
            acc.add(x, c)
    return acc.result()


def _fmt_products(engine: WickEngine, products: Mapping[int, Expr]) -> str | None:
    parts = [f"{n}: {engine.format(x)}" for n, x in sorted(products.items()) if x]
    return "; ".join(parts) if parts else None


class WComplex:
    """The complex C_k with generators u_a, phi_a, phi^a (a in S_+) and Phi_a (a in S_1/2).

    Generator order is currents, then phi_a, then phi^a, then Phi_a, each
    group in basis order.
    """

    def __init__(self, data: LieAlgData, grading: GoodGrading, level: ScalarLike | None = None) -> None:
        self.data = data
        self.grading = grading
        self.level = Scalar.param("k") if level is None else Scalar(level)
        self.duals: DualBases = dual_bases(data, grading)
        self.plus = grading.plus
        self.half = grading.half
        n, p = data.dim, len(self.plus)
        self.lower = {a: n + i for i, a in enumerate(self.plus)}
        self.upper = {a: n + p + i for i, a in enumerate(self.plus)}
        self.neutral = {a: n + 2 * p + i for i, a in enumerate(self.half)}
        self.spec = self._build_spec()
        self.engine = WickEngine(self.spec)
        logger.info(
            "complex for %s: %d generators, %d in S_+, %d in S_1/2",
            data.name,
            len(self.spec.gens),
            p,
            len(self.half),
        )

    def _build_spec(self) -> LcaSpec:
        data, degrees = self.data, self.grading.degrees
        decls = [_generator(name, 1 - degrees[i], data.odd[i]) for i, name in enumerate(data.names)]
        for a in self.plus:
            decls.append(_generator(f"phi_{data.names[a]}", 1 - degrees[a], not data.odd[a], -1))
        for a in self.plus:
            decls.append(_generator(f"phistar_{data.names[a]}", degrees[a], not data.odd[a], 1))
        for a in self.half:
            decls.append(_generator(f"Phi_{data.names[a]}", HALF, data.odd[a]))
        table = current_table(data, self.level)
        for a in self.plus:
            table[(self.lower[a], self.upper[a])] = LambdaExpr.from_products({0: Expr.vacuum()})
        for a in self.half:
            for b in self.half:
                value = self.neutral_pairing(a, b)
                if not value.is_zero:
                    table[(self.neutral[a], self.neutral[b])] = LambdaExpr.from_products(
                        {0: Expr.vacuum(value)}
                    )
        return LcaSpec(decls, table, name=f"complex-{data.name}")

    # building blocks

    def s(self, a: int) -> int:
        return -1 if self.data.odd[a] else 1

    def neutral_pairing(self, a: int, b: int) -> Scalar:
        """<Phi_a | Phi_b> = (f | [u_a, u_b])."""
        return self.data.pair(self.grading.f, self.data.basis_bracket(a, b))

    def current(self, v: Mapping[int, Scalar]) -> Expr:
        return vec_expr(v)

    def phi(self, v: Mapping[int, Scalar]) -> Expr:
        """phi_v = sum (v | u^a) phi_a over a in S_+."""
        return Expr(
            {(Term(self.lower[a], 0),): self.data.pair(v, self.duals.upper[a]) for a in self.plus}
        )

    def phistar(self, v: Mapping[int, Scalar]) -> Expr:
        """phi^v = sum (u_a | v) phi^a over a in S_+."""
        return Expr(
            {(Term(self.upper[a], 0),): self.data.pair(self.data.basis(a), v) for a in self.plus}
        )

    def Phi(self, v: Mapping[int, Scalar]) -> Expr:
        return Expr({(Term(self.neutral[a], 0),): c for a, c in v.items() if a in self.neutral})

    def _nf(self, *factors: Expr) -> Expr:
        raw: Expr | Product = factors[-1]
        for x in reversed(factors[:-1]):
            raw = Product(x, raw)
        return self.engine.normal_form(raw)

    def J(self, a: Mapping[int, Scalar]) -> Expr:
        """J_a = a + sum_{S_+} :phi^alpha phi_[u_alpha, a]:."""
        data = self.data
        acc = Accumulator()
        acc.add(self.current(a))
        for alpha in self.plus:
            inner = self.phi(data.bracket(data.basis(alpha), a))
            if inner:
                acc.add(self._nf(Expr.gen(self.upper[alpha]), inner))
        return acc.result()

    def psi(self, a: Mapping[int, Scalar], b: Mapping[int, Scalar]) -> Scalar:
        """psi_k(a|b) = k(a|b) + sum_{S_+} s(alpha) coefficient of u_alpha in pi_+[a, pi_+[b, u_alpha]]."""
        data, g = self.data, self.grading
        value = self.level * data.pair(a, b)
        for alpha in self.plus:
            inner = g.pi_plus(data.bracket(b, data.basis(alpha)))
            outer = g.pi_plus(data.bracket(a, inner))
            value = value + outer.get(alpha, ZERO) * self.s(alpha)
        return value

    # differential and energy-momentum field

    @cached_property
    def d(self) -> Expr:
        data = self.data
        acc = Accumulator()
        for alpha in self.plus:
            acc.add(self._nf(Expr.gen(self.upper[alpha]), Expr.gen(alpha)), self.s(alpha))
        for alpha in self.half:
            acc.add(self._nf(Expr.gen(self.upper[alpha]), Expr.gen(self.neutral[alpha])))
        acc.add(self.phistar(self.grading.f))
        for alpha in self.plus:
            for beta in self.plus:
                inner = self.phi(data.basis_bracket(beta, alpha))
                if not inner:
                    continue
                x = self._nf(Expr.gen(self.upper[alpha]), Expr.gen(self.upper[beta]), inner)
                acc.add(x, Scalar(self.s(alpha)) / 2)
        d = acc.result()
        logger.debug("differential has %d terms", len(d))
        return d

    def differential(self, x: Expr) -> Expr:
        """d_(0) x in normal form."""
        return self.engine.products(self.d, x).get(0, Expr())

    @cached_property
    def central_charge(self) -> Scalar:
        """c_k = k sdim/(k + h) - 12k(x|x) - sum s(alpha)(12 j^2 - 12 j + 2) - sdim(g_1/2)/2."""
        data, g = self.data, self.grading
        k = self.level
        c = k * data.sdim / (k + dual_coxeter(data)) - k * 12 * data.pair(g.x, g.x)
        for alpha in self.plus:
            j = Scalar(g.degrees[alpha])
            c = c - (j * j * 12 - j * 12 + 2) * self.s(alpha)
        c = c - Scalar(sum(self.s(a) for a in self.half)) / 2
        return c

    @cached_property
    def L(self) -> EMField:
        """L = L^g + T x + L^ne + L^ch."""
        data, g = self.data, self.grading
        engine = self.engine
        acc = Accumulator()
        acc.add(sugawara(data, self.level, engine).L)
        acc.add(engine.derivative(self.current(g.x)))
        for alpha in self.half:
            upper = engine.derivative(self.Phi(self.duals.v[alpha]))
            acc.add(self._nf(upper, Expr.gen(self.neutral[alpha])), HALF)
        for alpha in self.plus:
            j = Scalar(g.degrees[alpha])
            up, lo = self.upper[alpha], self.lower[alpha]
            acc.add(self._nf(Expr.gen(up), Expr.gen(lo, 1)), -j)
            acc.add(self._nf(Expr.gen(up, 1), Expr.gen(lo)), 1 - j)
        return EMField(engine, acc.result(), self.central_charge)

    # closed forms for [d_lam generator]

    def generator_brackets(self, i: int) -> dict[int, Expr]:
        """Closed-form n -> d_(n) of generator ``i``."""
        data, g = self.data, self.grading
        k = self.level
        out: dict[int, Accumulator] = {0: Accumulator(), 1: Accumulator()}
        kind, a = self._kind(i)
        u = data.basis(a)
        if kind == "current":
            for alpha in self.plus:
                inner = self.current(data.basis_bracket(alpha, a))
                if inner:
                    out[0].add(self._nf(Expr.gen(self.upper[alpha]), inner), self.s(alpha))
            phistar = self.phistar(u)
            out[0].add(self.engine.derivative(phistar), k * self.s(a))
            out[1].add(phistar, k * self.s(a))
        elif kind == "lower":
            plus = g.pi_plus(u)
            out[0].add(self.current(plus))
            out[0].add(Expr.vacuum(data.pair(u, g.f)))
            out[0].add(self.Phi(u), self.s(a))
            for beta in self.plus:
                inner = self.phi(data.bracket(data.basis(beta), plus))
                if inner:
                    out[0].add(self._nf(Expr.gen(self.upper[beta]), inner))
        elif kind == "upper":
            upper = self.duals.upper[a]
            for beta in self.plus:
                inner = self.phistar(data.bracket(data.basis(beta), upper))
                if inner:
                    out[0].add(self._nf(Expr.gen(self.upper[beta]), inner), Scalar(self.s(beta)) / 2)
        else:
            out[0].add(self.phistar(data.bracket(g.pi_half(u), g.f)))
        return {n: x for n, x in ((n, acc.result()) for n, acc in out.items()) if x}

    def _kind(self, i: int) -> tuple[str, int]:
        if i < self.data.dim:
            return "current", i
        for kind, table in (("lower", self.lower), ("upper", self.upper), ("neutral", self.neutral)):
            for a, g in table.items():
                if g == i:
                    return kind, a
        raise IndexError(i)

    def check_differential(self) -> CheckReport:
        """[d_lam d] = 0, d is odd of charge 1 and weight 1, and the closed forms of [d_lam g]."""
        engine = self.engine
        report = CheckReport("differential")
        report.record("[d_lam d]", _fmt_products(engine, engine.products(self.d, self.d)))
        for m in self.d:
            grades = self.spec.gens.grades(m)
            bad = not grades.odd or grades.charge != 1 or grades.delta != 1
            report.record(
                f"grades of {self.spec.gens.format_monomial(m)}", str(grades) if bad else None
            )
        for i, decl in enumerate(self.spec.gens):
            got = engine.products(self.d, Expr.gen(i))
            expected = self.generator_brackets(i)
            diff = {
                n: got.get(n, Expr()) - expected.get(n, Expr()) for n in set(got) | set(expected)
            }
            report.record(f"[d_lam {decl.id}]", _fmt_products(engine, diff))
        if not report.passed:
            logger.warning("differential check failed on %s", report.failed_subjects())
        return report

    def check_energy_momentum(self) -> CheckReport:
        """L is an energy-momentum field of central charge c_k and d_(0) L = 0."""
        report = check_energy_momentum(self.engine, self.L.L, self.central_charge)
        dl = self.differential(self.L.L)
        report.record("d_(0) L", self.engine.format(dl) if dl else None)
        return report

    def check_current_brackets(
        self,
        pairs: Iterable[tuple[int, int]] | None = None,
    ) -> CheckReport:
        """[J_a lam J_b] against J_[a,b] + lam psi_k(a|b) + ghost corrections.

        The ghost part is sum :phi^alpha (phi_[pi<=[u_alpha,a], b] - p(a,b) phi_[pi<=[u_alpha,b], a]):;
        mismatches are reported rather than assumed away.
        """
        data, g, engine = self.data, self.grading, self.engine
        report = CheckReport("current brackets")
        if pairs is None:
            pairs = [(a, b) for a in range(data.dim) for b in range(data.dim)]
        for a, b in pairs:
            ua, ub = data.basis(a), data.basis(b)
            got = engine.products(self.J(ua), self.J(ub))
            zero = Accumulator()
            zero.add(self.J(data.basis_bracket(a, b)))
            for alpha in self.plus:
                ualpha = data.basis(alpha)
                first = data.bracket(g.pi_leq(data.bracket(ualpha, ua)), ub)
                second = data.bracket(g.pi_leq(data.bracket(ualpha, ub)), ua)
                inner = Accumulator()
                inner.add(self.phi(first))
                inner.add(self.phi(second), -data.sign(a, b))
                ghost = inner.result()
                if ghost:
                    zero.add(self._nf(Expr.gen(self.upper[alpha]), ghost))
            expected = {0: zero.result(), 1: Expr.vacuum(self.psi(ua, ub))}
            diff = {n: got.get(n, Expr()) - expected.get(n, Expr()) for n in set(got) | set(expected)}
            report.record(f"[J_{data.names[a]} lam J_{data.names[b]}]", _fmt_products(engine, diff))
        return report


def build_complex(data: LieAlgData, grading: GoodGrading, level: ScalarLike | None = None) -> WComplex:
    return WComplex(data, grading, level)


class ReducedComplex:
    """V(R): J_a (a in S_<=0), phi^a (a in S_+) and Phi_a (a in S_1/2), with d acting by derivation."""

    def __init__(self, complex: WComplex) -> None:
        self.complex = complex
        data, g = complex.data, complex.grading
        self.leq = g.indices(lambda d: d <= 0)
        self.plus = complex.plus
        self.half = complex.half
        m, p = len(self.leq), len(self.plus)
        self.jindex = {a: i for i, a in enumerate(self.leq)}
        self.upper = {a: m + i for i, a in enumerate(self.plus)}
        self.neutral = {a: m + p + i for i, a in enumerate(self.half)}
        self.spec = self._build_spec()
        self.gens = self.spec.gens
        self.engine = WickEngine(self.spec)
        self._generator_d: dict[int, Expr] = {}
        self._mono_d: dict[Monomial, Expr] = {}
        self._embedded: dict[Monomial, Expr] = {}

    def _build_spec(self) -> LcaSpec:
        cx = self.complex
        data, degrees = cx.data, cx.grading.degrees
        decls = [
            _generator(f"J_{data.names[a]}", 1 - degrees[a], data.odd[a], 0, degrees[a] - HALF)
            for a in self.leq
        ]
        for a in self.plus:
            decls.append(
                _generator(f"phistar_{data.names[a]}", degrees[a], not data.odd[a], 1, HALF - degrees[a])
            )
        for a in self.half:
            decls.append(_generator(f"Phi_{data.names[a]}", HALF, data.odd[a], 0, Fraction(0)))
        table: dict[tuple[int, int], LambdaExpr] = {}
        for a in self.leq:
            ua = data.basis(a)
            for b in self.leq:
                products = {
                    0: self.J(data.basis_bracket(a, b)),
                    1: Expr.vacuum(cx.psi(ua, data.basis(b))),
                }
                entry = LambdaExpr.from_products({n: x for n, x in products.items() if x})
                if entry:
                    table[(self.jindex[a], self.jindex[b])] = entry
            for beta in self.plus:
                x = self.phistar(data.bracket(ua, cx.duals.upper[beta]))
                if x:
                    table[(self.jindex[a], self.upper[beta])] = LambdaExpr.from_products({0: x})
        for a in self.half:
            for b in self.half:
                value = cx.neutral_pairing(a, b)
                if not value.is_zero:
                    table[(self.neutral[a], self.neutral[b])] = LambdaExpr.from_products(
                        {0: Expr.vacuum(value)}
                    )
        return LcaSpec(decls, table, name=f"reduced-{data.name}")

    def J(self, v: Mapping[int, Scalar]) -> Expr:
        """J_v for v in g_<=0."""
        return Expr({(Term(self.jindex[a], 0),): c for a, c in v.items() if a in self.jindex})

    def phistar(self, v: Mapping[int, Scalar]) -> Expr:
        data = self.complex.data
        return Expr(
            {(Term(self.upper[a], 0),): data.pair(data.basis(a), v) for a in self.plus}
        )

    def Phi(self, v: Mapping[int, Scalar]) -> Expr:
        return Expr({(Term(self.neutral[a], 0),): c for a, c in v.items() if a in self.neutral})

    def _basis_vector(self, i: int) -> tuple[str, int]:
        for kind, table in (("J", self.jindex), ("upper", self.upper), ("neutral", self.neutral)):
            for a, g in table.items():
                if g == i:
                    return kind, a
        raise IndexError(i)

    # embedding into the complex

    def embed_generator(self, i: int) -> Expr:
        cx = self.complex
        kind, a = self._basis_vector(i)
        if kind == "J":
            return cx.J(cx.data.basis(a))
        if kind == "upper":
            return Expr.gen(cx.upper[a])
        return Expr.gen(cx.neutral[a])

    def embed(self, x: Expr) -> Expr:
        """Image of an element of V(R) in the complex."""
        acc = Accumulator()
        for m, c in x.items():
            acc.add(self._embed_mono(m), c)
        return acc.result()

    def _embed_mono(self, mono: Monomial) -> Expr:
        if not mono:
            return Expr.vacuum()
        cached = self._embedded.get(mono)
        if cached is None:
            full = self.complex.engine
            first = full.derivative(self.embed_generator(mono[0].gen), mono[0].tpow)
            cached = first if len(mono) == 1 else full.product(first, self._embed_mono(mono[1:]))
            self._embedded[mono] = cached
        return cached

    # the differential

    def generator_differential(self, i: int) -> Expr:
        """d(g_i) in V(R), read off from d_(0) of its image in the complex."""
        cached = self._generator_d.get(i)
        if cached is not None:
            return cached
        decl = self.gens[i]
        target = self.complex.differential(self.embed_generator(i))
        monos = [
            m
            for m in ordered_monomials(self.gens, decl.delta)
            if self.gens.grades(m).charge == decl.charge + 1
        ]
        coeffs = express(target, [self._embed_mono(m) for m in monos])
        if coeffs is None:
            raise NoSolution(f"d({decl.id}) leaves the reduced complex")
        result = _combination(coeffs, [Expr.mono(m) for m in monos])
        logger.debug("d(%s) = %s", decl.id, self.engine.format(result))
        self._generator_d[i] = result
        return result

    def closed_form_differential(self, i: int) -> Expr:
        """d on generators from the explicit formulas in J, phi^ and Phi."""
        cx = self.complex
        data, g = cx.data, cx.grading
        kind, a = self._basis_vector(i)
        u = data.basis(a)
        acc = Accumulator()
        if kind == "J":
            for alpha in self.plus:
                ualpha = data.basis(alpha)
                j = self.J(g.pi_leq(data.bracket(ualpha, u)))
                if j:
                    acc.add(self.engine.product(Expr.gen(self.upper[alpha]), j), cx.s(alpha))
                phi = self.Phi(data.bracket(ualpha, u))
                if phi and alpha in self.neutral:
                    acc.add(self.engine.product(Expr.gen(self.upper[alpha]), phi), -cx.s(a))
                value = cx.psi(u, ualpha)
                if not value.is_zero:
                    acc.add(Expr.gen(self.upper[alpha], 1), value)
            acc.add(self.phistar(data.bracket(u, g.f)), -cx.s(a))
        elif kind == "upper":
            upper = cx.duals.upper[a]
            for beta in self.plus:
                x = self.phistar(data.bracket(data.basis(beta), upper))
                if x:
                    acc.add(self.engine.product(Expr.gen(self.upper[beta]), x), Scalar(cx.s(beta)) / 2)
        else:
            acc.add(self.phistar(data.bracket(u, g.f)))
        return acc.result()

    def check_closed_forms(self) -> CheckReport:
        report = CheckReport("reduced differential")
        for i, decl in enumerate(self.gens):
            diff = self.generator_differential(i) - self.closed_form_differential(i)
            report.record(f"d({decl.id})", self.engine.format(diff) if diff else None)
        return report

    def check_brackets(self) -> CheckReport:
        """Embedded generator brackets agree with the reduced table."""
        full = self.complex.engine
        report = CheckReport("reduced brackets")
        n = len(self.gens)
        for i in range(n):
            for j in range(n):
                got = full.products(self.embed_generator(i), self.embed_generator(j))
                expected = {m: self.embed(x) for m, x in self.engine.generator_products(i, j).items()}
                diff = {m: got.get(m, Expr()) - expected.get(m, Expr()) for m in set(got) | set(expected)}
                report.record(f"[{self.gens[i].id}_lam {self.gens[j].id}]", _fmt_products(full, diff))
        return report

    def differential(self, x: Expr) -> Expr:
        """d(x) for x in V(R): odd derivation of normally ordered products commuting with T."""
        acc = Accumulator()
        for m, c in x.items():
            acc.add(self._differential_mono(m), c)
        return acc.result()

    def _differential_mono(self, mono: Monomial) -> Expr:
        if not mono:
            return Expr()
        cached = self._mono_d.get(mono)
        if cached is not None:
            return cached
        engine = self.engine
        first, rest = mono[0], mono[1:]
        head = engine.derivative(self.generator_differential(first.gen), first.tpow)
        if not rest:
            result = head
        else:
            acc = Accumulator()
            if head:
                acc.add(engine.product(head, Expr.mono(rest)))
            tail = self._differential_mono(rest)
            if tail:
                sign = -1 if self.gens.term_odd(first) else 1
                acc.add(engine.product(Expr.gen(first.gen, first.tpow), tail), sign)
            result = acc.result()
        self._mono_d[mono] = result
        return result

    def p_degree(self, mono: Monomial) -> Fraction:
        total = Fraction(0)
        for t in mono:
            bigrade = self.gens[t.gen].bigrade
            assert bigrade is not None
            total += bigrade[0]
        return total


def reduced_spec(complex: WComplex) -> ReducedComplex:
    return ReducedComplex(complex)


# free generators of the W-algebra


@dataclass(frozen=True)
class WGenerator:
    name: str
    u: Vec
    degree: Fraction
    delta: Fraction
    odd: bool
    element: Expr


@dataclass
class WGenerators:
    """Free generators E_i of W^k(g, f) inside V(R), with a generator set for expressing brackets."""

    complex: WComplex
    reduced: ReducedComplex
    entries: list[WGenerator]
    max_delta: Fraction | None = None
    _realized: dict[Monomial, Expr] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        self.gens = GeneratorSet(
            _generator(e.name, e.delta, e.odd) for e in self.entries
        )

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, i: int) -> WGenerator:
        return self.entries[i]

    def lookup(self, name: str) -> int:
        return self.gens.lookup(name)

    def format(self, x: Expr | LambdaExpr) -> str:
        if isinstance(x, LambdaExpr):
            return x.format(self.gens)
        return self.gens.format(x)

    def realize(self, mono: Monomial) -> Expr:
        """Normally ordered word in the E_i as an element of V(R)."""
        if not mono:
            return Expr.vacuum()
        cached = self._realized.get(mono)
        if cached is None:
            engine = self.reduced.engine
            first = engine.derivative(self.entries[mono[0].gen].element, mono[0].tpow)
            cached = first if len(mono) == 1 else engine.product(first, self.realize(mono[1:]))
            self._realized[mono] = cached
        return cached

    def missing_weights(self, weight: Fraction) -> list[Fraction]:
        """Weights of generators not solved for that could contribute at ``weight``."""
        if self.max_delta is None:
            return []
        g = self.complex.grading
        out = []
        for u in g.centralizer:
            delta = 1 - g.degrees[next(iter(u))]
            if self.max_delta < delta <= weight:
                out.append(delta)
        return out


def solve_generators(
    complex: WComplex,
    max_delta: ScalarLike | Fraction | None = None,
    threads: int = 1,
    reduced: ReducedComplex | None = None,
) -> WGenerators:
    """E_i = J_{u_i} + (p-degree > j_i - 1/2) with d(E_i) = 0, for a homogeneous basis u_i of g^f."""
    reduced = reduced or ReducedComplex(complex)
    g = complex.grading
    limit = None
    if max_delta is not None:
        limit = max_delta.to_fraction() if isinstance(max_delta, Scalar) else Fraction(max_delta)
    targets = []
    for u in g.centralizer:
        j = g.degrees[next(iter(u))]
        if limit is None or 1 - j <= limit:
            targets.append((u, j))
    targets.sort(key=lambda t: -t[1])
    allowed = [reduced.jindex[a] for a in reduced.leq] + [reduced.neutral[a] for a in reduced.half]

    def run(target: tuple[Vec, Fraction]) -> Expr:
        u, j = target
        return _solve_one(reduced, u, j, allowed)

    # the shared caches are filled by the first generator before fanning out
    elements: list[Expr] = []
    if targets:
        elements.append(run(targets[0]))
        elements.extend(parallel_map(run, targets[1:], threads))
    entries = []
    for i, ((u, j), element) in enumerate(zip(targets, elements)):
        odd = complex.data.parity(u)
        entries.append(WGenerator(f"E{i + 1}", dict(u), j, 1 - j, odd, element))
        logger.info("E%d (weight %s) has %d terms", i + 1, 1 - j, len(element))
    return WGenerators(complex, reduced, entries, limit)


def _solve_one(reduced: ReducedComplex, u: Vec, j: Fraction, allowed: Sequence[int]) -> Expr:
    gens = reduced.gens
    delta = 1 - j
    odd = reduced.complex.data.parity(u)
    lead = reduced.J(u)
    monos = [
        m
        for m in ordered_monomials(gens, delta, allowed)
        if gens.grades(m).odd == odd and reduced.p_degree(m) > j - HALF
    ]
    columns = [reduced.differential(Expr.mono(m)) for m in monos]
    rhs = -reduced.differential(lead)
    coeffs = express(rhs, columns)
    if coeffs is None:
        raise NoSolution(f"no closed extension of {reduced.complex.data.format_vec(u)}")
    element = lead + _combination(coeffs, [Expr.mono(m) for m in monos])
    residual = reduced.differential(element)
    if residual:
        raise NoSolution(f"d(E) = {reduced.engine.format(residual)} is not zero")
    return element


def express_in_generators(x: Expr, wgens: WGenerators) -> Expr:
    """Write x in V(R) as a combination of ordered words in the E_i."""
    gens = wgens.reduced.gens
    by_weight: dict[Fraction, Accumulator] = {}
    for m, c in x.items():
        by_weight.setdefault(gens.grades(m).delta if m else Fraction(0), Accumulator()).add_term(m, c)
    acc = Accumulator()
    for weight, part in sorted(by_weight.items()):
        target = part.result()
        missing = wgens.missing_weights(weight)
        if missing:
            raise InsufficientGenerators(
                f"weight {weight} needs generators of weight {sorted(set(missing))} beyond {wgens.max_delta}"
            )
        monos = ordered_monomials(wgens.gens, weight)
        coeffs = express(target, [wgens.realize(m) for m in monos])
        if coeffs is None:
            raise InsufficientGenerators(f"weight {weight} part is not generated by the E_i")
        acc.add(_combination(coeffs, [Expr.mono(m) for m in monos]))
    return acc.result()


def w_bracket(wgens: WGenerators, i: int, j: int) -> LambdaExpr:
    """[E_i lam E_j] written in the E's."""
    products = wgens.reduced.engine.products(wgens[i].element, wgens[j].element)
    return LambdaExpr.from_products({n: express_in_generators(x, wgens) for n, x in products.items()})


def w_bracket_table(wgens: WGenerators) -> dict[tuple[str, str], LambdaExpr]:
    n = len(wgens)
    return {
        (wgens[i].name, wgens[j].name): w_bracket(wgens, i, j) for i in range(n) for j in range(i, n)
    }


def virasoro_normalization(wgens: WGenerators, i: int = 0) -> tuple[Scalar, Scalar]:
    """(s, c) with E_i = s L for a Virasoro field L of central charge c."""
    element = wgens[i].element
    products = wgens.reduced.engine.products(element, element)
    mono, coeff = next(iter(element.items()))
    scale = products.get(1, Expr()).coeff(mono) / (coeff * 2)
    if scale.is_zero or products.get(1, Expr()) != element.scale(scale * 2):
        raise InsufficientGenerators(f"{wgens[i].name} is not a multiple of a Virasoro field")
    c = products.get(3, Expr()).constant() * 2 / (scale * scale)
    return scale, c


# finite W-algebras


class FiniteW:
    """Zhu images of the E_i: brackets via Zhu of V(R) and via PBW products in Zhu C_k."""

    def __init__(self, wgens: WGenerators) -> None:
        self.wgens = wgens
        self.reduced = wgens.reduced
        self.complex = wgens.complex
        self.zhu_reduced = ZhuAlgebra(self.reduced.engine)
        self.zhu_full = ZhuAlgebra(self.complex.engine)
        self._letters: dict[int, Expr] = {}

    @cached_property
    def generators(self) -> list[Expr]:
        """E_i-bar in Zhu V(R)."""
        return [self.zhu_reduced.project(e.element) for e in self.wgens.entries]

    @cached_property
    def images(self) -> list[Expr]:
        """E_i-bar in Zhu C_k."""
        return [self.zhu_full.project(self.reduced.embed(e.element)) for e in self.wgens.entries]

    @cached_property
    def d_bar(self) -> Expr:
        return self.zhu_full.project(self.complex.d)

    def to_full(self, z: Expr) -> Expr:
        """Map Zhu V(R) -> Zhu C_k induced by the embedding."""
        acc = Accumulator()
        for word, c in z.items():
            image = Expr.vacuum()
            for t in word:
                image = self.zhu_full.multiply(image, self._letter(t.gen))
            acc.add(image, c)
        return acc.result()

    def _letter(self, g: int) -> Expr:
        cached = self._letters.get(g)
        if cached is None:
            cached = self.zhu_full.project(self.reduced.embed_generator(g))
            self._letters[g] = cached
        return cached

    def commutator(self, i: int, j: int) -> Expr:
        """[E_i-bar, E_j-bar] = pi_Z(sum_n binom(Delta_i - 1, n) E_i(n) E_j) in Zhu V(R)."""
        wg = self.wgens
        acc = Accumulator()
        for n, x in self.reduced.engine.products(wg[i].element, wg[j].element).items():
            acc.add(self.zhu_reduced.project(x), binom(wg[i].delta - 1, n))
        return acc.result()

    def pbw_commutator(self, i: int, j: int) -> Expr:
        """The same bracket from PBW products of the images in Zhu C_k."""
        x, y = self.images[i], self.images[j]
        p = -1 if self.wgens[i].odd and self.wgens[j].odd else 1
        return self.zhu_full.multiply(x, y) - self.zhu_full.multiply(y, x).scale(p)

    def d_bar_closed_form(self) -> Expr:
        """The differential formula with every field replaced by its Zhu letter."""
        cx, zhu = self.complex, self.zhu_full
        data = cx.data

        def letters(x: Expr) -> Expr:
            return Expr({tuple(Term(t.gen, 0) for t in m): c for m, c in x.items()})

        def word(*xs: Expr) -> Expr:
            out = Expr.vacuum()
            for x in xs:
                out = zhu.multiply(out, letters(x))
            return out

        acc = Accumulator()
        for alpha in cx.plus:
            acc.add(word(Expr.gen(cx.upper[alpha]), Expr.gen(alpha)), cx.s(alpha))
        for alpha in cx.half:
            acc.add(word(Expr.gen(cx.upper[alpha]), Expr.gen(cx.neutral[alpha])))
        acc.add(letters(cx.phistar(cx.grading.f)))
        for alpha in cx.plus:
            for beta in cx.plus:
                inner = cx.phi(data.basis_bracket(beta, alpha))
                if inner:
                    x = word(Expr.gen(cx.upper[alpha]), Expr.gen(cx.upper[beta]), inner)
                    acc.add(x, Scalar(cx.s(alpha)) / 2)
        return acc.result()

    def check(self) -> CheckReport:
        report = CheckReport("finite W")
        zhu = self.zhu_full
        n = len(self.wgens)
        for i in range(n):
            for j in range(i, n):
                diff = self.to_full(self.commutator(i, j)) - self.pbw_commutator(i, j)
                label = f"[{self.wgens[i].name}, {self.wgens[j].name}]"
                report.record(label, zhu.format(diff) if diff else None)
        for i, image in enumerate(self.images):
            closed = zhu.multiply(self.d_bar, image) - zhu.multiply(image, self.d_bar).scale(
                -1 if self.wgens[i].odd else 1
            )
            report.record(f"[d-bar, {self.wgens[i].name}]", zhu.format(closed) if closed else None)
        diff = self.d_bar - self.d_bar_closed_form()
        report.record("d-bar closed form", zhu.format(diff) if diff else None)
        return report


def finite_w(wgens: WGenerators) -> FiniteW:
    return FiniteW(wgens)


def check_zhu_differential(complex: WComplex) -> CheckReport:
    """[d-bar, pi_Z(g)] = pi_Z(d_(0) g) on every generator of the complex."""
    zhu = ZhuAlgebra(complex.engine)
    d_bar = zhu.project(complex.d)
    report = CheckReport("zhu differential")
    for i, decl in enumerate(complex.spec.gens):
        letter = Expr.mono((Term(i, 0),))
        sign = 1 if decl.odd else -1
        lhs = zhu.multiply(d_bar, letter) + zhu.multiply(letter, d_bar).scale(sign)
        rhs = zhu.project(complex.differential(Expr.gen(i)))
        diff = lhs - rhs
        report.record(decl.id, zhu.format(diff) if diff else None)
    return report


def sigma_shift(complex: WComplex) -> CheckReport:
    """a-bar -> a-bar + k(x|a) maps Zhu C_k onto Zhu C_0 and fixes the differential."""
    data, g = complex.data, complex.grading
    k = complex.level
    level0 = WComplex(data, g, 0)
    zhu_k, zhu_0 = ZhuAlgebra(complex.engine), ZhuAlgebra(level0.engine)
    shifts = {i: k * data.pair(g.x, data.basis(i)) for i in range(data.dim)}

    def sigma(z: Expr) -> Expr:
        acc = Accumulator()
        for word, c in z.items():
            image = Expr.vacuum()
            for t in word:
                letter = Expr.mono((Term(t.gen, 0),))
                shift = shifts.get(t.gen, ZERO)
                if not shift.is_zero:
                    letter = letter + Expr.vacuum(shift)
                image = zhu_0.multiply(image, letter)
            acc.add(image, c)
        return acc.result()

    report = CheckReport("sigma shift")
    names = complex.spec.gens.names()
    n = len(names)
    for i in range(n):
        for j in range(i, n):
            diff = sigma(zhu_k.commutator(i, j)) - zhu_0.commutator(i, j)
            report.record(f"[{names[i]}, {names[j]}]", zhu_0.format(diff) if diff else None)
    diff = sigma(zhu_k.project(complex.d)) - zhu_0.project(level0.d)
    report.record("d-bar", zhu_0.format(diff) if diff else None)
    return report


def read_virasoro(wgens: WGenerators) -> tuple[Scalar, Scalar] | None:
    """Normalization of the first generator when it is a Virasoro field, else None."""
    try:
        return virasoro_normalization(wgens, 0)
    except InsufficientGenerators:
        return None


__all__ = [
    "FiniteW",
    "ReducedComplex",
    "WComplex",
    "WGenerator",
    "WGenerators",
    "build_complex",
    "check_zhu_differential",
    "express",
    "express_in_generators",
    "finite_w",
    "read_virasoro",
    "reduced_spec",
    "sigma_shift",
    "solve_generators",
    "virasoro_normalization",
    "w_bracket",
    "w_bracket_table",
]
