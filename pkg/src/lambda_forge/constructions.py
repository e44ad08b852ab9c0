"""
Standard Lie conformal algebras and their energy-momentum fields.

Factories here return :class:`~lambda_forge.wick.LcaSpec` objects for the
Virasoro algebra, current algebras Cur_k g, charged and neutral free
fermions, and the Kac-Todorov superalgebra on g + odd g, together with the
Sugawara, fermionic and Neveu-Schwarz fields built inside their enveloping
vertex algebras.
"""

from __future__ import annotations

import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import BadPolarization, CriticalLevel, DegenerateForm, DegeneratePairing
from .liealg import LieAlgData, Vec, dual_basis, dual_coxeter
from .linear import inverse, rank
from .reports import CheckReport
from .scalar import ONE, ZERO, Scalar, ScalarLike
from .syntax import Product
from .terms import Expr, GeneratorDecl, LambdaExpr, Term, apply_T
from .wick import LcaSpec, WickEngine
from .zhu import ClassicalZhu, ZhuAlgebra

logger = logging.getLogger(__name__)

Table = dict[tuple[int, int], LambdaExpr]


def _level(level: ScalarLike | None) -> Scalar:
    return Scalar.param("k") if level is None else Scalar(level)


def _entry(products: Mapping[int, Expr]) -> LambdaExpr:
    return LambdaExpr.from_products({n: x for n, x in products.items() if x})


def vec_expr(vec: Mapping[int, Scalar], offset: int = 0) -> Expr:
    """Lie algebra vector as a combination of generators starting at ``offset``."""
    return Expr({(Term(offset + i, 0),): c for i, c in vec.items()})


def decl(
    name: str,
    delta: ScalarLike | Fraction = 1,
    odd: bool = False,
    charge: int = 0,
) -> GeneratorDecl:
    """Declaration of a generator of a linear Lie conformal algebra (zeta = 1)."""
    if isinstance(delta, Scalar):
        delta = delta.to_fraction()
    return GeneratorDecl(
        id=name, parity="odd" if odd else "even", delta=Fraction(delta), zeta=1, charge=charge
    )


def virasoro(central_charge: ScalarLike | None = None) -> LcaSpec:
    """[L_lam L] = (T + 2 lam) L + lam^3/12 c."""
    c = Scalar.param("c") if central_charge is None else Scalar(central_charge)
    products = {0: Expr.gen(0, 1), 1: Expr.gen(0).scale(2), 3: Expr.vacuum(c / 2)}
    return LcaSpec([decl("L", 2)], {(0, 0): _entry(products)}, name="virasoro")


def cur(data: LieAlgData, level: ScalarLike | None = None, name: str = "") -> LcaSpec:
    """Cur_k g: [a_lam b] = [a, b] + lam k (a|b)."""
    k = _level(level)
    decls = [decl(n, 1, data.odd[i]) for i, n in enumerate(data.names)]
    return LcaSpec(decls, current_table(data, k), name=name or f"cur-{data.name}")


def current_table(data: LieAlgData, level: Scalar, offset: int = 0) -> Table:
    table: Table = {}
    for i in range(data.dim):
        for j in range(data.dim):
            products = {
                0: vec_expr(data.basis_bracket(i, j), offset),
                1: Expr.vacuum(level * data.form[i][j]),
            }
            entry = _entry(products)
            if entry:
                table[(offset + i, offset + j)] = entry
    return table


def fermion_charged(
    pairs: Sequence[tuple[str, str]],
    odd: bool = True,
    weights: Sequence[ScalarLike] | None = None,
    name: str = "charged-fermion",
) -> LcaSpec:
    """Pairs (phi_i, phi^i) with [phi_i lam phi^j] = delta_ij; phi^i has weight m_i and charge 1."""
    weights = list(weights) if weights is not None else [1] * len(pairs)
    decls = []
    table: Table = {}
    for i, ((lower, upper), m) in enumerate(zip(pairs, weights)):
        m = Scalar(m).to_fraction()
        decls.append(decl(lower, 1 - m, odd, charge=-1))
        decls.append(decl(upper, m, odd, charge=1))
        table[(2 * i, 2 * i + 1)] = _entry({0: Expr.vacuum()})
    return LcaSpec(decls, table, name=name)


def fermion_neutral(
    names: Sequence[str],
    pairing: Mapping[tuple[str, str], ScalarLike],
    odd: bool = True,
    name: str = "neutral-fermion",
) -> LcaSpec:
    """[a_lam b] = <a|b> for a skew-supersymmetric non-degenerate pairing; weights 1/2."""
    index = {n: i for i, n in enumerate(names)}
    n = len(names)
    matrix = [[ZERO] * n for _ in range(n)]
    sign = 1 if odd else -1
    for (a, b), value in pairing.items():
        i, j = index[a], index[b]
        matrix[i][j] = Scalar(value)
        if (b, a) not in pairing:
            matrix[j][i] = Scalar(value) * sign
    for i in range(n):
        for j in range(n):
            if matrix[i][j] != matrix[j][i] * sign:
                raise DegeneratePairing(f"<{names[i]}|{names[j]}> breaks skew-supersymmetry")
    rows = [{j: v for j, v in enumerate(r) if not v.is_zero} for r in matrix]
    if rank(rows, n) < n:
        raise DegeneratePairing("the pairing is degenerate")
    decls = [decl(x, Fraction(1, 2), odd) for x in names]
    table = {
        (i, j): _entry({0: Expr.vacuum(matrix[i][j])})
        for i in range(n)
        for j in range(n)
        if not matrix[i][j].is_zero
    }
    return LcaSpec(decls, table, name=name)


# energy-momentum fields


def read_central_charge(engine: WickEngine, L: Expr) -> Scalar:
    """c from the lam^3 coefficient of [L_lam L]."""
    return engine.products(L, L).get(3, Expr()).constant() * 2


def check_energy_momentum(
    engine: WickEngine,
    L: Expr,
    central_charge: ScalarLike | None = None,
    primary: bool = False,
) -> CheckReport:
    """Virasoro shape of [L_lam L] and [L_lam a] = (T + Delta_a lam) a + O(lam^2) on generators."""
    report = CheckReport("energy-momentum")
    products = engine.products(L, L)
    c = products.get(3, Expr()).constant() * 2
    expected = {0: engine.derivative(L), 1: L.scale(2), 3: Expr.vacuum(c / 2)}
    for n in sorted(set(products) | set(expected)):
        diff = products.get(n, Expr()) - expected.get(n, Expr())
        report.record(f"[L_lam L] product {n}", engine.format(diff) if diff else None)
    if central_charge is not None and c != Scalar(central_charge):
        report.record("central charge", f"{c} != {central_charge}")
    for i, d in enumerate(engine.gens):
        a = Expr.gen(i)
        got = engine.products(L, a)
        diff0 = got.get(0, Expr()) - engine.derivative(a)
        report.record(f"[L_lam {d.id}] product 0", engine.format(diff0) if diff0 else None)
        diff1 = got.get(1, Expr()) - a.scale(Scalar(d.delta))
        report.record(f"[L_lam {d.id}] product 1", engine.format(diff1) if diff1 else None)
        if primary:
            higher = Expr.sum(x for n, x in got.items() if n >= 2)
            report.record(f"{d.id} primary", engine.format(higher) if higher else None)
    if not report.passed:
        logger.warning("energy-momentum check failed on %s", report.failed_subjects())
    return report


@dataclass
class EMField:
    """An energy-momentum element L of the vertex algebra of ``engine`` with its central charge."""

    engine: WickEngine
    L: Expr
    central_charge: Scalar

    @property
    def spec(self) -> LcaSpec:
        return self.engine.spec

    def check(self, primary: bool = False) -> CheckReport:
        return check_energy_momentum(self.engine, self.L, self.central_charge, primary)


def _sum_products(engine: WickEngine, terms: Sequence[tuple[ScalarLike, Expr, Expr]]) -> Expr:
    return Expr.sum(engine.normal_form(Product(x, y)).scale(c) for c, x, y in terms)


def sugawara(data: LieAlgData, level: ScalarLike | None = None, engine: WickEngine | None = None) -> EMField:
    """L = 1/(2(k + h)) sum :a^i a_i: with c = k sdim g / (k + h)."""
    k = _level(level)
    kappa = k + dual_coxeter(data)
    if kappa.is_zero:
        raise CriticalLevel("k + h_dual vanishes")
    engine = engine or WickEngine(cur(data, k))
    upper = dual_basis(data)
    L = _sum_products(engine, [(ONE, vec_expr(upper[i]), Expr.gen(i)) for i in range(data.dim)])
    L = L.scale(ONE / (kappa * 2))
    c = k * data.sdim / kappa
    logger.debug("sugawara field for %s has %d terms", data.name, len(L))
    return EMField(engine, L, c)


def _pairing_matrix(engine: WickEngine) -> list[list[Scalar]]:
    n = len(engine.gens)
    return [
        [engine.generator_products(i, j).get(0, Expr()).constant() for j in range(n)] for i in range(n)
    ]


def fermionic_em(
    spec: LcaSpec,
    pairs: Sequence[tuple[str, str]] | None = None,
    weights: Sequence[ScalarLike] | None = None,
    engine: WickEngine | None = None,
) -> EMField:
    """L^A = 1/2 sum :(T phi^i) phi_i: or, for a polarization, the family L^{A,m}."""
    engine = engine or WickEngine(spec)
    gens = spec.gens
    matrix = _pairing_matrix(engine)
    if pairs is None:
        try:
            inv = inverse(matrix)
        except DegenerateForm as e:
            raise DegeneratePairing("the fermion pairing is degenerate") from e
        n = len(gens)
        terms = []
        for i in range(n):
            upper = Expr({(Term(g, 0),): inv[g][i] for g in range(n)})
            terms.append((Fraction(1, 2), apply_T(upper), Expr.gen(i)))
        sdim = sum(-1 if d.odd else 1 for d in gens)
        return EMField(engine, _sum_products(engine, terms), Scalar(-sdim) / 2)
    lowers = [gens.lookup(lo) for lo, _ in pairs]
    uppers = [gens.lookup(up) for _, up in pairs]
    for a, i in enumerate(lowers):
        for b, j in enumerate(uppers):
            expected = ONE if a == b else ZERO
            if matrix[i][j] != expected:
                raise BadPolarization(f"<{gens[i].id}|{gens[j].id}> = {matrix[i][j]}")
    for group in (lowers, uppers):
        for i in group:
            for j in group:
                if not matrix[i][j].is_zero:
                    raise BadPolarization(f"<{gens[i].id}|{gens[j].id}> != 0: not isotropic")
    ms = [Scalar(m) for m in weights] if weights is not None else [Scalar(gens[j].delta) for j in uppers]
    terms = []
    c = ZERO
    for lo, up, m in zip(lowers, uppers, ms):
        terms.append((-m, Expr.gen(up), Expr.gen(lo, 1)))
        terms.append((1 - m, Expr.gen(up, 1), Expr.gen(lo)))
        s = -1 if gens[lo].odd else 1
        c = c + (m * m * 12 - m * 12 + 2) * s
    return EMField(engine, _sum_products(engine, terms), c)


# Kac-Todorov superalgebra and the cubic Dirac operator


def bar_name(name: str) -> str:
    return f"{name}_bar"


@dataclass
class KacTodorov:
    """The superalgebra g + odd g at kappa = k + h_dual, with fields G and L."""

    data: LieAlgData
    kappa: Scalar
    engine: WickEngine
    G: Expr
    L: Expr
    central_charge: Scalar

    @property
    def spec(self) -> LcaSpec:
        return self.engine.spec

    def even(self, vec: Mapping[int, Scalar]) -> Expr:
        return vec_expr(vec)

    def odd(self, vec: Mapping[int, Scalar]) -> Expr:
        return vec_expr(vec, self.data.dim)

    def check(self) -> CheckReport:
        """Neveu-Schwarz relations, weights, and [a_lam G] = lam a_bar, [a_bar lam G] = a."""
        engine = self.engine
        report = check_energy_momentum(engine, self.L, self.central_charge, primary=True)
        report.check = "neveu-schwarz"
        gg = engine.products(self.G, self.G)
        expected = {0: self.L.scale(2), 2: Expr.vacuum(self.central_charge * 2 / 3)}
        for n in sorted(set(gg) | set(expected)):
            diff = gg.get(n, Expr()) - expected.get(n, Expr())
            report.record(f"[G_lam G] product {n}", engine.format(diff) if diff else None)
        lg = engine.products(self.L, self.G)
        diff = lg.get(0, Expr()) - engine.derivative(self.G)
        report.record("[L_lam G] product 0", engine.format(diff) if diff else None)
        diff = lg.get(1, Expr()) - self.G.scale(Fraction(3, 2))
        report.record("[L_lam G] product 1", engine.format(diff) if diff else None)
        higher = Expr.sum(x for n, x in lg.items() if n >= 2)
        report.record("G primary", engine.format(higher) if higher else None)
        for i in range(self.data.dim):
            a, abar = Expr.gen(i), Expr.gen(self.data.dim + i)
            name = self.data.names[i]
            got = engine.products(a, self.G)
            diff = Expr.sum(x for n, x in got.items() if n != 1) + (got.get(1, Expr()) - abar)
            report.record(f"[{name}_lam G]", engine.format(diff) if diff else None)
            got = engine.products(abar, self.G)
            diff = Expr.sum(x for n, x in got.items() if n != 0) + (got.get(0, Expr()) - a)
            report.record(f"[{bar_name(name)}_lam G]", engine.format(diff) if diff else None)
        return report


def kac_todorov_spec(data: LieAlgData, kappa: Scalar) -> LcaSpec:
    n = data.dim
    decls = [decl(x, 1, data.odd[i]) for i, x in enumerate(data.names)]
    decls += [decl(bar_name(x), Fraction(1, 2), not data.odd[i]) for i, x in enumerate(data.names)]
    table = current_table(data, kappa)
    for i in range(n):
        for j in range(n):
            ab = data.basis_bracket(i, j)
            if ab:
                table[(i, n + j)] = _entry({0: vec_expr(ab, n)})
            if not data.form[i][j].is_zero:
                table[(n + i, n + j)] = _entry({0: Expr.vacuum(kappa * data.form[i][j])})
    return LcaSpec(decls, table, name=f"kac-todorov-{data.name}")


def kac_todorov(data: LieAlgData, level: ScalarLike | None = None) -> KacTodorov:
    """G and L of the Kac-Todorov construction; c = k dim g/(k + h) + dim g/2."""
    h = dual_coxeter(data)
    k = _level(level)
    kappa = k + h
    if kappa.is_zero:
        raise CriticalLevel("k + h_dual vanishes")
    engine = WickEngine(kac_todorov_spec(data, kappa))
    n = data.dim
    upper = dual_basis(data)

    def odd(vec: Vec) -> Expr:
        return vec_expr(vec, n)

    g_terms: list[tuple[ScalarLike, Expr, Expr]] = []
    l_terms: list[tuple[ScalarLike, Expr, Expr]] = []
    for i in range(n):
        a_i = Expr.gen(i)
        g_terms.append((ONE / kappa, a_i, odd(upper[i])))
        l_terms.append((ONE / (kappa * 2), a_i, vec_expr(upper[i])))
        l_terms.append((ONE / (kappa * 2), Expr.gen(n + i, 1), odd(upper[i])))
    G = _sum_products(engine, g_terms)
    L = _sum_products(engine, l_terms)
    cubic = Expr()
    quadratic = Expr()
    for i in range(n):
        for j in range(n):
            ab = data.bracket(data.basis(i), data.basis(j))
            if ab:
                inner = Product(odd(upper[i]), odd(upper[j]))
                cubic = cubic + engine.normal_form(Product(odd(ab), inner))
            mixed = data.bracket(upper[i], data.basis(j))
            if mixed:
                inner = Product(vec_expr(mixed), odd(upper[j]))
                quadratic = quadratic + engine.normal_form(Product(Expr.gen(n + i), inner))
    G = G + cubic.scale(ONE / (kappa * kappa * 3))
    L = L + quadratic.scale(ONE / (kappa * kappa * 2))
    c = k * n / kappa + Scalar(n) / 2
    return KacTodorov(data, kappa, engine, G, L, c)


@dataclass
class DiracOperator:
    """D = pi_Z(G) and C = pi_Z(L) in the Zhu algebra at k + h_dual = 1."""

    kt: KacTodorov
    zhu: ZhuAlgebra
    D: Expr
    C: Expr
    shift: Scalar = field(default=ZERO)

    def check(self) -> CheckReport:
        zhu, data = self.zhu, self.kt.data
        report = CheckReport("cubic dirac")
        square = zhu.multiply(self.D, self.D) - self.C - Expr.vacuum(self.shift)
        report.record("D^2 - C", zhu.format(square) if square else None)
        n = data.dim
        for i, name in enumerate(data.names):
            a, abar = zhu.generator(name), zhu.generator(bar_name(name))
            r = zhu.multiply(self.D, a) - zhu.multiply(a, self.D)
            report.record(f"[D, {name}]", zhu.format(r) if r else None)
            r = zhu.multiply(self.D, abar) + zhu.multiply(abar, self.D) - a
            report.record(f"[D, {bar_name(name)}]", zhu.format(r) if r else None)
        for i in range(2 * n):
            x = Expr.mono((Term(i, 0),))
            r = zhu.multiply(self.C, x) - zhu.multiply(x, self.C)
            report.record(f"[C, {zhu.gens[i].id}]", zhu.format(r) if r else None)
        return report

    def classical_check(self) -> CheckReport:
        """{D, D} = 2 C in the Poisson algebra at hbar = 0."""
        classical = ClassicalZhu(self.kt.engine)
        d_cl, c_cl = classical.project(self.kt.G), classical.project(self.kt.L)
        report = CheckReport("classical cubic dirac")
        r = classical.bracket(d_cl, d_cl) - c_cl.scale(2)
        report.record("{D, D} - 2 C", classical.format(r) if r else None)
        return report


def dirac(data: LieAlgData) -> DiracOperator:
    """Cubic Dirac operator; D^2 = C + (h_dual/24 - 1/16) dim g."""
    h = dual_coxeter(data)
    kt = kac_todorov(data, 1 - h)
    zhu = ZhuAlgebra(kt.engine)
    D, C = zhu.project(kt.G), zhu.project(kt.L)
    shift = (h / 24 - Scalar(Fraction(1, 16))) * data.dim
    logger.debug("dirac operator for %s: %d terms", data.name, len(D))
    return DiracOperator(kt, zhu, D, C, shift)
