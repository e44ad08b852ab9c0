"""
Tests for generators, words, expressions and lambda-polynomials.
"""

from fractions import Fraction

import pytest
from pydantic import ValidationError

from lambda_forge.errors import UnknownGenerator
from lambda_forge.scalar import Scalar
from lambda_forge.terms import (
    Expr,
    GeneratorDecl,
    GeneratorSet,
    LambdaExpr,
    Term,
    apply_T,
    apply_T_divided,
    compositions,
    expr_tree,
    lambda_tree,
    ordered_monomials,
)


@pytest.fixture
def gens():
    """An even weight-1 generator a and an odd weight-1/2 generator b."""
    return GeneratorSet(
        [
            GeneratorDecl(id="a", delta=1),
            GeneratorDecl(id="b", parity="odd", delta=Fraction(1, 2)),
        ]
    )


class TestGeneratorDecl:
    """Declaration defaults and validation."""

    def test_defaults_follow_delta(self):
        """zeta defaults to delta and coset to its fractional part."""
        d = GeneratorDecl(id="G", delta=Fraction(3, 2))
        assert d.zeta == Fraction(3, 2)
        assert d.coset == Fraction(1, 2)
        assert not d.odd

    def test_zeta_must_be_positive(self):
        """A non-positive zeta is rejected."""
        with pytest.raises(ValidationError):
            GeneratorDecl(id="x", delta=1, zeta=0)

    def test_bad_name(self):
        """Identifiers must be names."""
        with pytest.raises(ValidationError):
            GeneratorDecl(id="1x")

    def test_duplicate_generator(self):
        """A set cannot declare the same name twice."""
        with pytest.raises(ValueError):
            GeneratorSet([GeneratorDecl(id="a"), GeneratorDecl(id="a")])


class TestGeneratorSet:
    """Grades, signs and ordering of words."""

    def test_grades_of_word(self, gens):
        """Weights add, T-powers add one each, parity is the xor."""
        word = gens.make_monomial([(0, 2), (1, 0)])
        g = gens.grades(word)
        assert g.delta == Fraction(7, 2)
        assert g.odd

    def test_sign(self, gens):
        """Two odd words anticommute."""
        b = (Term(1, 0),)
        a = (Term(0, 0),)
        assert gens.sign(b, b) == -1
        assert gens.sign(a, b) == 1

    def test_repeated_odd_term_is_unordered(self, gens):
        """:b b: is not an ordered word, :a a: is."""
        assert not gens.is_ordered((Term(1, 0), Term(1, 0)))
        assert gens.is_ordered((Term(0, 0), Term(0, 0)))
        assert not gens.is_ordered((Term(1, 0), Term(0, 0)))

    def test_lookup_unknown(self, gens):
        """Unknown names raise UnknownGenerator."""
        with pytest.raises(UnknownGenerator):
            gens.lookup("zz")

    def test_format(self, gens):
        """Words print in the expression syntax."""
        x = Expr.mono((Term(0, 1), Term(1, 2)), 3) - Expr.gen(0)
        assert gens.format(x) == "-a + 3*:T(a) T^2(b):"


class TestExpr:
    """Linear structure of expressions."""

    def test_zero_coefficients_dropped(self):
        """x - x is the empty expression."""
        x = Expr.gen(0, 1, 5)
        assert not (x - x)
        assert (x - x) == 0

    def test_scaling(self):
        """Scalars act on the left."""
        k = Scalar.param("k")
        x = k * Expr.gen(0)
        assert x.coeff((Term(0, 0),)) == k

    def test_tree(self, gens):
        """Machine form lists scalars and (name, order) pairs."""
        x = Expr.gen(0, 1, Fraction(1, 2))
        assert expr_tree(x, gens) == [["1/2", [["a", 1]]]]


class TestDerivation:
    """The translation operator on words."""

    def test_T_of_divided_power(self):
        """T T^(n) e = (n + 1) T^(n + 1) e."""
        assert apply_T(Expr.gen(0, 2)) == Expr.gen(0, 3, 3)

    def test_T_kills_vacuum(self):
        """T|0> = 0."""
        assert not apply_T(Expr.vacuum())

    def test_leibniz(self):
        """T^(2) of a two-letter word distributes over the letters."""
        word = (Term(0, 0), Term(1, 0))
        expected = Expr(
            {
                (Term(0, 2), Term(1, 0)): 1,
                (Term(0, 1), Term(1, 1)): 1,
                (Term(0, 0), Term(1, 2)): 1,
            }
        )
        assert apply_T_divided(Expr.mono(word), 2) == expected

    def test_compositions(self):
        """Weak compositions of 2 into 2 parts."""
        assert list(compositions(2, 2)) == [(0, 2), (1, 1), (2, 0)]


class TestOrderedMonomials:
    """PBW basis enumeration."""

    def test_weight_two_single_even(self):
        """For one weight-1 even generator: T a and :a a:."""
        gens = GeneratorSet([GeneratorDecl(id="a", delta=1)])
        words = ordered_monomials(gens, Fraction(2))
        assert sorted(words) == sorted([(Term(0, 1),), (Term(0, 0), Term(0, 0))])

    def test_odd_generators_do_not_repeat(self, gens):
        """At weight 1 an odd weight-1/2 generator gives no :b b:."""
        words = ordered_monomials(gens, Fraction(1), allowed=[1])
        assert words == []

    def test_weight_zero_is_vacuum(self, gens):
        """Weight 0 contains only the vacuum."""
        assert ordered_monomials(gens, Fraction(0)) == [()]


class TestLambdaExpr:
    """Polynomials in the formal variables."""

    def test_products_round_trip(self):
        """from_products divides by n! and to_products restores."""
        products = {0: Expr.gen(0), 3: Expr.vacuum(2)}
        poly = LambdaExpr.from_products(products)
        assert poly.coeff(3) == Expr.vacuum(Fraction(1, 3))
        assert poly.to_products() == products
        assert poly.degree() == 3

    def test_derivative(self):
        """d/dlam lam^2 x = 2 lam x."""
        poly = LambdaExpr(("lam",), {(2,): Expr.gen(0)})
        assert poly.derivative() == LambdaExpr(("lam",), {(1,): Expr.gen(0, 0, 2)})

    def test_variable_mismatch(self):
        """Adding polynomials in different variables fails."""
        a = LambdaExpr(("lam",), {(1,): Expr.gen(0)})
        b = LambdaExpr(("mu",), {(1,): Expr.gen(0)})
        with pytest.raises(ValueError):
            a + b

    def test_format_and_tree(self, gens):
        """lam*a + lam^2*|0> prints and serializes in exponent order."""
        poly = LambdaExpr(("lam",), {(1,): Expr.gen(0), (2,): Expr.vacuum()})
        assert poly.format(gens) == "lam*a + lam^2*|0>"
        assert lambda_tree(poly, gens) == {
            "vars": ["lam"],
            "terms": [[[1], [["1", [["a", 0]]]]], [[2], [["1", []]]]],
        }
