"""
Tests for the W-algebra complex, its generators and the finite W-algebra.
"""

from fractions import Fraction

import pytest

from lambda_forge.errors import InsufficientGenerators
from lambda_forge.liealg import sl3_principal
from lambda_forge.scalar import Scalar
from lambda_forge.walgebra import (
    FiniteW,
    WComplex,
    check_zhu_differential,
    read_virasoro,
    sigma_shift,
    solve_generators,
    w_bracket,
    w_bracket_table,
)
from lambda_forge.wick import check_jacobi, check_skewsymmetry


@pytest.fixture(scope="module")
def sl2_complex():
    """C_k for sl2 with the principal grading and formal k."""
    from lambda_forge.liealg import sl2, sl2_grading

    data = sl2()
    return WComplex(data, sl2_grading(data))


@pytest.fixture(scope="module")
def sl2_wgens(sl2_complex):
    """The single weight-2 generator of W^k(sl2, f)."""
    return solve_generators(sl2_complex)


class TestComplex:
    """The complex C_k and its differential."""

    def test_generators(self, sl2_complex):
        """Currents, one charged ghost pair and no neutral fermions."""
        names = sl2_complex.spec.gens.names()
        assert names == ["e", "h", "f", "phi_e", "phistar_e"]

    def test_differential(self, sl2_complex):
        """[d_lam d] = 0 and [d_lam g] matches the closed forms."""
        assert sl2_complex.check_differential().passed

    def test_lca_axioms(self, sl2_complex):
        """The complex itself satisfies skewsymmetry and Jacobi."""
        assert check_skewsymmetry(sl2_complex.spec, sl2_complex.engine).passed
        assert check_jacobi(sl2_complex.spec, sl2_complex.engine).passed

    def test_central_charge(self, sl2_complex):
        """c = 1 - 6(k + 1)^2/(k + 2)."""
        k = Scalar.param("k")
        assert sl2_complex.central_charge == 1 - 6 * (k + 1) ** 2 / (k + 2)

    def test_energy_momentum(self, sl2_complex):
        """L is energy-momentum of central charge c_k and d-closed."""
        assert sl2_complex.check_energy_momentum().passed

    def test_zhu_differential(self, sl2_complex):
        """d-bar acts on Zhu C_k as the zero-mode of d."""
        assert check_zhu_differential(sl2_complex).passed

    def test_level_shift(self, sl2_complex):
        """Zhu C_k is isomorphic to Zhu C_0 by the shift by k(x|.)."""
        assert sigma_shift(sl2_complex).passed


class TestGenerators:
    """Free generators E_i with d(E_i) = 0."""

    def test_one_generator_of_weight_two(self, sl2_wgens):
        """g^f of sl2 is spanned by f, giving one generator of weight 2."""
        assert len(sl2_wgens) == 1
        entry = sl2_wgens[0]
        assert entry.name == "E1"
        assert entry.delta == 2
        assert not entry.odd

    def test_closed(self, sl2_wgens):
        """d(E1) = 0 in V(R)."""
        reduced = sl2_wgens.reduced
        assert not reduced.differential(sl2_wgens[0].element)

    def test_reduced_complex(self, sl2_wgens):
        """The differential on V(R) agrees with the closed forms and the brackets."""
        reduced = sl2_wgens.reduced
        assert reduced.check_closed_forms().passed
        assert reduced.check_brackets().passed

    def test_virasoro(self, sl2_wgens):
        """E1 is a multiple of a Virasoro field of central charge c_k."""
        k = Scalar.param("k")
        scale, c = read_virasoro(sl2_wgens)
        assert not scale.is_zero
        assert c == 1 - 6 * (k + 1) ** 2 / (k + 2)

    def test_bracket_in_generators(self, sl2_wgens):
        """[E1_lam E1] is written in E1 alone and has a lam^3 central term."""
        table = w_bracket_table(sl2_wgens)
        poly = table[("E1", "E1")]
        assert poly.degree() == 3
        assert poly.coeff(3).max_length() == 0
        assert poly == w_bracket(sl2_wgens, 0, 0)


class TestFiniteW:
    """Zhu images of the generators."""

    def test_sl2(self, sl2_wgens):
        """Both routes to the finite W-algebra agree and d-bar is closed."""
        finite = FiniteW(sl2_wgens)
        assert finite.check().passed
        assert not finite.commutator(0, 0)


@pytest.mark.slow
class TestSl3:
    """W^k(sl3, f_principal): generators of weights 2 and 3."""

    @pytest.fixture(scope="class")
    def complex(self):
        """C_k for sl3 principal."""
        from lambda_forge.liealg import sl3

        data = sl3()
        return WComplex(data, sl3_principal(data))

    def test_generators(self, complex):
        """Two even generators of weights 2 and 3, solved in threads."""
        wgens = solve_generators(complex, threads=2)
        assert [e.delta for e in wgens.entries] == [2, 3]
        for e in wgens.entries:
            assert not wgens.reduced.differential(e.element)

    def test_central_charge(self, complex):
        """c = 2 - 24(k + 2)^2/(k + 3)."""
        k = Scalar.param("k")
        assert complex.central_charge == 2 - 24 * (k + 2) ** 2 / (k + 3)

    def test_truncation(self, complex):
        """Brackets needing an unsolved weight-3 generator fail loudly."""
        wgens = solve_generators(complex, max_delta=Fraction(2))
        assert len(wgens) == 1
        with pytest.raises(InsufficientGenerators):
            w_bracket(wgens, 0, 0)

    def test_differential(self, complex):
        """[d_lam d] = 0 and the closed forms of [d_lam g]."""
        assert complex.check_differential().passed

    def test_lca_axioms(self, complex):
        """Skewsymmetry and Jacobi of the complex, Jacobi in threads."""
        assert check_skewsymmetry(complex.spec, complex.engine).passed
        assert check_jacobi(complex.spec, complex.engine, threads=4).passed

    def test_energy_momentum(self, complex):
        """L is energy-momentum of central charge c_k and d-closed."""
        assert complex.check_energy_momentum().passed
