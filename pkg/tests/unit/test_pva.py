"""
Tests for Poisson vertex algebras, local functionals and integrable flows.
"""

import pytest

from lambda_forge.constructions import cur, virasoro
from lambda_forge.errors import NotDivisibleByEpsilon, SpecValidationError
from lambda_forge.pva import (
    LocalFunctional,
    PvaSpec,
    PvaZhu,
    boson_family,
    check_jacobi,
    check_leibniz,
    check_skewsymmetry,
    from_lca,
    gfz,
    hamiltonian_flow,
    involution_bracket,
    involution_check,
    kdv_flow,
    kdv_hamiltonians,
    leibniz_bracket,
    nth_product,
    pva_bracket,
    quasiclassical_limit,
    reduce_mod_T,
    validate,
)
from lambda_forge.scalar import Scalar
from lambda_forge.terms import Expr, GeneratorDecl, GeneratorSet, LambdaExpr
from lambda_forge.wick import LcaSpec


def random_poly(rng, algebra, ngens):
    """One or two monomials of one to three factors u_i^(r), r <= 2."""
    total = Expr()
    for _ in range(rng.randint(1, 2)):
        mono = Expr.vacuum(rng.choice([-2, -1, 1, 2, 3]))
        for _ in range(rng.randint(1, 3)):
            mono = algebra.multiply(mono, algebra.u(rng.randrange(ngens), rng.randint(0, 2)))
        total = total + mono
    return total


@pytest.fixture
def spec():
    """GFZ: {u_lam u} = lam."""
    return gfz()


@pytest.fixture
def algebra(spec):
    """Differential polynomials in u."""
    return spec.algebra


class TestDiffPolynomials:
    """Commutative products, T and partial derivatives."""

    def test_derivative(self, spec, algebra):
        """T(u^2) = 2 u u'."""
        u = algebra.u(0)
        assert spec.format(algebra.derivative(algebra.multiply(u, u))) == "2*u*u'"

    def test_parse_reads_divided_powers(self, spec, algebra):
        """T^2(u) in the element syntax is u''/2."""
        assert algebra.parse("T^2(u)") == algebra.u(0, 2, Scalar(1) / 2)
        assert spec.format(algebra.parse(":u T(u):")) == "u*u'"

    def test_variational_derivative(self, spec, algebra):
        """delta/delta u of (u^3 - u'^2)/2 is 3u^2/2 + u''."""
        h2 = kdv_hamiltonians(spec)["h2"]
        expected = algebra.multiply(algebra.u(0), algebra.u(0)).scale(Scalar(3) / 2)
        assert algebra.variational_derivative(h2, 0) == expected + algebra.u(0, 2)

    def test_high_derivatives_format(self, spec, algebra):
        """Orders above three use u^(n)."""
        assert spec.format(algebra.u(0, 4)) == "u^(4)"


class TestBrackets:
    """Master formula against the Leibniz evaluation."""

    def test_generator(self, spec, algebra):
        """{u_lam u} = lam."""
        assert pva_bracket(algebra.u(0), algebra.u(0), spec) == {1: Expr.vacuum()}

    def test_sesquilinearity(self, spec, algebra):
        """{u'_lam u} = -lam^2 and {u_lam u'} = lam^2."""
        u, du = algebra.u(0), algebra.u(0, 1)
        assert pva_bracket(du, u, spec) == {2: Expr.vacuum(-1)}
        assert pva_bracket(u, du, spec) == {2: Expr.vacuum()}

    def test_master_matches_leibniz(self, spec, algebra):
        """Both evaluations agree on a nonlinear pair."""
        u, du = algebra.u(0), algebra.u(0, 1)
        P = algebra.multiply(u, du)
        Q = algebra.multiply(u, algebra.multiply(u, u))
        assert pva_bracket(P, Q, spec) == leibniz_bracket(P, Q, spec)

    def test_nth_product(self, spec, algebra):
        """u_(1) u = 1 and u_(-2) u = u' u."""
        u = algebra.u(0)
        assert nth_product(u, 1, u, spec) == Expr.vacuum()
        assert nth_product(u, -2, u, spec) == algebra.multiply(algebra.u(0, 1), u)

    def test_axioms(self, spec, algebra):
        """Skewsymmetry, Jacobi and both Leibniz rules on polynomial samples."""
        u, du = algebra.u(0), algebra.u(0, 1)
        uu = algebra.multiply(u, u)
        assert check_skewsymmetry(spec, [(uu, du)]).passed
        assert check_jacobi(spec, [(uu, du, u)]).passed
        assert check_leibniz(spec, [(u, du, uu), (du, u, u)]).passed

    def test_leibniz_random(self, spec, algebra, rng):
        """Both Leibniz rules on thirty random differential polynomials."""
        triples = [tuple(random_poly(rng, algebra, 1) for _ in range(3)) for _ in range(30)]
        report = check_leibniz(spec, triples)
        assert report.passed, report.failures[:1]

    def test_leibniz_random_currents(self, sl2_data, rng):
        """The same on the commutative reading of Cur_k sl2."""
        currents = from_lca(cur(sl2_data))
        algebra = currents.algebra
        triples = [tuple(random_poly(rng, algebra, 3) for _ in range(3)) for _ in range(30)]
        assert check_leibniz(currents, triples).passed

    def test_virasoro_jacobi(self):
        """The Virasoro table read commutatively is a PVA."""
        assert check_jacobi(from_lca(virasoro())).passed

    def test_validate_rejects_broken_table(self):
        """{u_lam u} = 1 is not skewsymmetric."""
        gens = GeneratorSet([GeneratorDecl(id="u", delta=1, zeta=1)])
        broken = PvaSpec(gens, {(0, 0): {0: Expr.vacuum()}}, name="broken")
        with pytest.raises(SpecValidationError) as err:
            validate(broken)
        assert err.value.invariant == "skewsymmetry"


class TestLocalFunctionals:
    """V / TV and integrable hierarchies."""

    def test_total_derivative_vanishes(self, spec, algebra):
        """int u u' = 0."""
        u, du = algebra.u(0), algebra.u(0, 1)
        assert not LocalFunctional.of(algebra.multiply(u, du), spec)

    def test_integration_by_parts(self, spec, algebra):
        """u u'' and -u'^2 have the same class."""
        u, du, ddu = algebra.u(0), algebra.u(0, 1), algebra.u(0, 2)
        left = reduce_mod_T(algebra.multiply(u, ddu), spec)
        right = reduce_mod_T(algebra.multiply(du, du).scale(-1), spec)
        assert left == right

    def test_kdv_flow(self, spec):
        """u-dot = 3 u u' + u'''."""
        assert spec.format(kdv_flow(spec)) == "3*u*u' + u'''"

    def test_involution(self, spec):
        """h0, h1 and h2 pairwise commute."""
        hs = kdv_hamiltonians(spec)
        for a in hs.values():
            for b in hs.values():
                assert involution_check(a, b, spec)

    def test_flow_of_h1(self, spec):
        """{h1, u} = u'."""
        h1 = LocalFunctional.of(kdv_hamiltonians(spec)["h1"], spec)
        assert hamiltonian_flow(h1, spec.algebra.u(0), spec) == spec.algebra.u(0, 1)

    def test_trivial_classes(self, spec, algebra):
        """int u commutes with int u^3 and int u' is zero."""
        u = algebra.u(0)
        cube = algebra.multiply(u, algebra.multiply(u, u))
        assert not involution_bracket(u, cube, spec)
        assert str(LocalFunctional.of(algebra.u(0, 1), spec)) == "int 0"


class TestQuasiclassical:
    """PVAs as limits of Lie conformal families."""

    def test_boson_limit_is_gfz(self):
        """eps^-1 [u_lam u]_eps at eps = 0 gives lam."""
        limit = quasiclassical_limit(boson_family())
        assert limit.table == gfz().table

    def test_not_divisible(self):
        """A table entry without a factor of eps has no limit."""
        entry = LambdaExpr(("lam",), {(1,): Expr.vacuum()})
        family = LcaSpec([GeneratorDecl(id="u", delta=1, zeta=1)], {(0, 0): entry})
        with pytest.raises(NotDivisibleByEpsilon):
            quasiclassical_limit(family)


class TestPvaZhu:
    """The Zhu Poisson algebra of a graded PVA."""

    def test_currents(self, sl2_data):
        """{e, f} = h in Zhu of the classical currents."""
        spec = from_lca(cur(sl2_data))
        zhu = PvaZhu(spec)
        assert zhu.generator_bracket(0, 2) == Expr.gen(1)
        assert zhu.check().passed

    def test_virasoro_commutative(self):
        """pi(T L) + 2 pi(L) = 0, so {L, L} = 0."""
        zhu = PvaZhu(from_lca(virasoro()))
        assert not zhu.generator_bracket(0, 0)
        assert zhu.project(zhu.algebra.u(0, 1)) == Expr.gen(0, 0, -2)

    def test_projection_sample(self, sl2_data):
        """pi({a, b}_hbar) = {pi a, pi b} on a quadratic sample."""
        spec = from_lca(cur(sl2_data))
        algebra = spec.algebra
        ee = algebra.multiply(algebra.u(0), algebra.u(0))
        zhu = PvaZhu(spec)
        assert zhu.check([(algebra.u(1), ee)]).passed
