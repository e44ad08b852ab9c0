"""
Tests for the Wick engine: brackets, normal forms and the identity checkers.
"""

import pytest

from lambda_forge.builtins import builtin
from lambda_forge.errors import GradingViolation, UnsupportedBound
from lambda_forge.scalar import Scalar
from lambda_forge.terms import Expr, GeneratorDecl, LambdaExpr, Term
from lambda_forge.wick import (
    LcaSpec,
    WickEngine,
    check_borcherds,
    check_integral_bracket,
    check_jacobi,
    check_left_wick,
    check_quasicommutativity,
    check_skewsymmetry,
    check_weak_quasi_associativity,
)

E, H, F = 0, 1, 2


class TestSpec:
    """Construction and validation of bracket tables."""

    def test_from_text(self, virasoro_spec):
        """The textual Virasoro table matches the factory."""
        spec = LcaSpec.from_text(
            [GeneratorDecl(id="L", delta=2, zeta=1)],
            {("L", "L"): "T(L) + 2*lam*L + c/12*lam^3"},
        )
        assert spec.table == virasoro_spec.table

    def test_weight_violation(self):
        """A bracket term of the wrong conformal weight is rejected."""
        with pytest.raises(GradingViolation):
            LcaSpec.from_text(
                [GeneratorDecl(id="L", delta=2, zeta=1)], {("L", "L"): "lam^2*L"}
            )

    def test_zeta_violation(self):
        """Quadratic terms must lower the filtration degree."""
        with pytest.raises(GradingViolation):
            LcaSpec.from_text(
                [GeneratorDecl(id="a", delta=1, zeta=1)], {("a", "a"): ":a a:"},
                hamiltonian=False,
            )

    def test_parity_violation(self):
        """An odd result for two even generators is rejected."""
        with pytest.raises(GradingViolation):
            LcaSpec.from_text(
                [
                    GeneratorDecl(id="a", delta=1, zeta=1),
                    GeneratorDecl(id="b", parity="odd", delta=1, zeta=1),
                ],
                {("a", "a"): "b"},
            )


class TestBrackets:
    """Generator and composite brackets."""

    def test_virasoro(self, virasoro_engine):
        """[L_lam L] = T(L) + 2 lam L + c/12 lam^3."""
        c = Scalar.param("c")
        L = virasoro_engine.generator("L")
        poly = virasoro_engine.lambda_bracket(L, L)
        assert poly.coeff(0) == Expr.gen(0, 1)
        assert poly.coeff(1) == Expr.gen(0, 0, 2)
        assert poly.coeff(2) == Expr()
        assert poly.coeff(3) == Expr.vacuum(c / 12)

    def test_currents(self, sl2_engine):
        """[e_lam f] = h + k lam."""
        k = Scalar.param("k")
        poly = sl2_engine.lambda_bracket(sl2_engine.parse("e"), sl2_engine.parse("f"))
        assert poly == LambdaExpr(("lam",), {(0,): Expr.gen(H), (1,): Expr.vacuum(k)})

    def test_reverse_pair_by_skewsymmetry(self, sl2_engine):
        """[f_lam e] = -h + k lam from the stored [e_lam f]."""
        k = Scalar.param("k")
        products = sl2_engine.products(Expr.gen(F), Expr.gen(E))
        assert products == {0: Expr.gen(H, 0, -1), 1: Expr.vacuum(k)}

    def test_sesquilinearity(self, sl2_engine):
        """[T a_lam b] = -lam [a_lam b]."""
        ta = sl2_engine.parse("T(e)")
        direct = sl2_engine.lambda_bracket(ta, sl2_engine.parse("f"))
        base = sl2_engine.lambda_bracket(sl2_engine.parse("e"), sl2_engine.parse("f"))
        assert direct == base.shift((1,)).scale(-1)

    def test_left_wick_on_composite(self, sl2_engine):
        """[h_lam :e e:] = 4 :e e: since h acts on e with eigenvalue 2."""
        products = sl2_engine.products(sl2_engine.parse("h"), sl2_engine.parse(":e e:"))
        assert products == {0: Expr.mono((Term(E, 0), Term(E, 0)), 4)}


class TestNormalForm:
    """Reordering by quasicommutativity."""

    def test_ordered_word_unchanged(self, sl2_engine):
        """:e f: is already ordered."""
        assert sl2_engine.parse(":e f:") == Expr.mono((Term(E, 0), Term(F, 0)))

    def test_swap_currents(self, sl2_engine):
        """:f e: = :e f: - T(h)."""
        expected = Expr({(Term(E, 0), Term(F, 0)): 1, (Term(H, 1),): -1})
        assert sl2_engine.parse(":f e:") == expected

    def test_odd_square_vanishes(self, neutral_pair):
        """:psi psi: = 0 when <psi|psi> = 0."""
        engine = WickEngine(neutral_pair)
        assert engine.parse(":psi psi:") == 0

    def test_odd_swap(self, neutral_pair):
        """:psibar psi: = -:psi psibar: for a constant pairing."""
        engine = WickEngine(neutral_pair)
        assert engine.parse(":psibar psi:") == engine.parse(":psi psibar:").scale(-1)

    def test_product_of_derivative(self, virasoro_engine):
        """T acts as a derivation on :L L:."""
        x = virasoro_engine.parse("T(:L L:)")
        y = virasoro_engine.parse(":T(L) L: + :L T(L):")
        assert x == y


class TestIntegration:
    """Definite integrals of lambda-polynomials."""

    def test_variable_bounds(self, virasoro_engine):
        """int_0^lam mu^2 dmu = lam^3/3 after renaming."""
        poly = LambdaExpr(("lam", "mu"), {(0, 2): Expr.gen(0)})
        result = virasoro_engine.integrate(poly, "mu", 0, "lam")
        assert result == LambdaExpr(("lam", "mu"), {(3, 0): Expr.gen(0, 0, Scalar(1) / 3)})

    def test_T_bound(self, virasoro_engine):
        """int_{-T}^0 lam dlam applied to L is -T^(2) L."""
        poly = LambdaExpr(("lam",), {(1,): Expr.gen(0)})
        result = virasoro_engine.integrate(poly, "lam", "-T", 0)
        assert result == Expr.gen(0, 2, -1)

    def test_two_T_bounds(self, virasoro_engine):
        """Both bounds cannot involve T."""
        poly = LambdaExpr(("lam",), {(0,): Expr.gen(0)})
        with pytest.raises(UnsupportedBound):
            virasoro_engine.integrate(poly, "lam", "-T", "T")


class TestCheckers:
    """Skewsymmetry, Jacobi and the auxiliary identities."""

    def test_virasoro_passes(self, virasoro_spec, virasoro_engine):
        """Virasoro satisfies skewsymmetry and Jacobi."""
        assert check_skewsymmetry(virasoro_spec, virasoro_engine).passed
        assert check_jacobi(virasoro_spec, virasoro_engine, exhaustive=True).passed

    def test_currents_pass(self, sl2_currents, sl2_engine):
        """Cur_k sl2 satisfies Jacobi, also in threads."""
        assert check_jacobi(sl2_currents, sl2_engine).passed
        assert check_jacobi(sl2_currents, WickEngine(sl2_currents), threads=4).passed

    @pytest.mark.slow
    def test_sl3_currents_pass(self):
        """Cur_k sl3 satisfies skewsymmetry and Jacobi."""
        spec = builtin("cur-sl3")
        engine = WickEngine(spec)
        assert check_skewsymmetry(spec, engine).passed
        assert check_jacobi(spec, engine, threads=4).passed

    def test_corrupted_jacobi(self, sl2_data):
        """Changing [h_lam e] to e breaks Jacobi and nothing else."""
        spec = LcaSpec.from_text(
            [GeneratorDecl(id=n, delta=1, zeta=1) for n in sl2_data.names],
            {
                ("e", "f"): "h + k*lam",
                ("h", "e"): "e",
                ("h", "f"): "-2*f",
                ("h", "h"): "2*k*lam",
            },
        )
        assert check_skewsymmetry(spec).passed
        report = check_jacobi(spec, exhaustive=True)
        assert not report.passed
        assert "(h, e, f)" in report.failed_subjects()
        assert report.failures[0].residual

    def test_identity_battery(self, sl2_currents, sl2_engine):
        """Quasicommutativity, weak quasi-associativity and the left Wick formula."""
        assert check_quasicommutativity(sl2_currents, sl2_engine).passed
        assert check_weak_quasi_associativity(sl2_currents, sl2_engine).passed
        assert check_left_wick(sl2_currents, sl2_engine).passed

    def test_fermion_battery(self, charged_pair):
        """The odd identities hold for a charged fermion pair."""
        engine = WickEngine(charged_pair)
        assert check_skewsymmetry(charged_pair, engine).passed
        assert check_jacobi(charged_pair, engine, exhaustive=True).passed
        assert check_quasicommutativity(charged_pair, engine).passed

    @pytest.mark.slow
    def test_integral_bracket(self, virasoro_spec, virasoro_engine):
        """The integral bracket is sesquilinear, skewsymmetric and Jacobi."""
        assert check_integral_bracket(virasoro_spec, virasoro_engine).passed


class TestBorcherds:
    """The Borcherds identity against the mode-operator model."""

    @pytest.mark.parametrize("m,n,k", [(0, 0, 0), (1, -1, 0), (-1, -1, 1), (0, -2, 0)])
    def test_currents(self, sl2_engine, m, n, k):
        """Wick results agree with modes for generators and a composite."""
        e, f, eh = sl2_engine.parse("e"), sl2_engine.parse("f"), sl2_engine.parse(":e h:")
        assert check_borcherds(sl2_engine, e, f, eh, m, n, k, oracle=True)

    def test_virasoro(self, virasoro_engine):
        """Borcherds at (1, 0, 1) on L, L, :L L:."""
        L = virasoro_engine.generator("L")
        LL = virasoro_engine.parse(":L L:")
        assert check_borcherds(virasoro_engine, L, L, LL, 1, 0, 1, oracle=True)

    @pytest.mark.parametrize(
        "name",
        [
            "virasoro",
            "cur-sl2",
            "charged-fermion",
            "neutral-fermion",
            pytest.param("cur-sl3", marks=pytest.mark.slow),
        ],
    )
    def test_random_instances(self, rng, name):
        """Fifty random (a, b, c, m, n, k) with m, n, k in [-3, 3], checked against modes."""
        engine = WickEngine(builtin(name))
        names = engine.gens.names()
        elements = names + [f"T({x})" for x in names]
        for _ in range(50):
            a, b = (engine.parse(rng.choice(elements)) for _ in range(2))
            if rng.random() < 0.3:
                c = engine.parse(f":{rng.choice(names)} {rng.choice(names)}:")
            else:
                c = engine.parse(rng.choice(elements))
            m, n, k = (rng.randint(-3, 3) for _ in range(3))
            assert check_borcherds(engine, a, b, c, m, n, k, oracle=True), (a, b, c, m, n, k)
