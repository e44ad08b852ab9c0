"""
Tests for Whittaker models of finite W-algebras.
"""

from fractions import Fraction

import pytest

from lambda_forge.errors import NotGood
from lambda_forge.liealg import sl3_minimal, sl3_principal
from lambda_forge.whittaker import WhittakerModel, slodowy_dims, whittaker_invariants


class TestSl2:
    """W^fin(sl2, f) is a polynomial ring in the Casimir."""

    def test_dims(self, sl2_data, sl2_principal):
        """One invariant in each even Kazhdan degree up to 4."""
        dims = whittaker_invariants(sl2_data, sl2_principal, 4)
        assert dims == {0: 1, 1: 0, 2: 1, 3: 0, 4: 1}
        assert dims == slodowy_dims(sl2_principal, 4)

    def test_casimir(self, sl2_data, sl2_principal):
        """The degree-2 invariant involves h^2."""
        model = WhittakerModel(sl2_data, sl2_principal)
        invariants = model.invariants(2)
        assert len(invariants) == 2
        assert any("h*h" in model.format(x) for x in invariants)


class TestSl3:
    """sl3 with the principal and minimal gradings."""

    @pytest.mark.slow
    def test_principal(self, sl3_data):
        """Generators in degrees 2 and 3."""
        g = sl3_principal(sl3_data)
        dims = whittaker_invariants(sl3_data, g, 3)
        assert dims == {0: 1, 1: 0, 2: 1, 3: 1}
        assert dims == slodowy_dims(g, 3)

    @pytest.mark.slow
    @pytest.mark.parametrize("l", [(), ("e12",)])
    def test_minimal_independent_of_l(self, sl3_data, l):
        """Any isotropic l gives the graded dimensions of S(g^f)."""
        g = sl3_minimal(sl3_data)
        indices = [sl3_data.lookup(n) for n in l]
        dims = whittaker_invariants(sl3_data, g, Fraction(3, 2), indices)
        assert dims == slodowy_dims(g, Fraction(3, 2))

    def test_slodowy_minimal(self, sl3_data):
        """S(g^f) for the minimal nilpotent: weights 1, 3/2, 3/2 and 2."""
        g = sl3_minimal(sl3_data)
        dims = slodowy_dims(g, 2)
        assert dims == {
            Fraction(0): 1,
            Fraction(1, 2): 0,
            Fraction(1): 1,
            Fraction(3, 2): 2,
            Fraction(2): 2,
        }

    def test_l_outside_half(self, sl3_data):
        """l must lie in g_1/2."""
        g = sl3_minimal(sl3_data)
        with pytest.raises(NotGood):
            WhittakerModel(sl3_data, g, [sl3_data.lookup("e13")])

    def test_l_not_isotropic(self, sl3_data):
        """e12 and e23 pair non-trivially against f."""
        g = sl3_minimal(sl3_data)
        l = [sl3_data.lookup("e12"), sl3_data.lookup("e23")]
        with pytest.raises(NotGood):
            WhittakerModel(sl3_data, g, l)
