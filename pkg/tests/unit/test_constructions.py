"""
Tests for the standard algebras and their energy-momentum fields.
"""

from fractions import Fraction

import pytest

from lambda_forge.constructions import (
    check_energy_momentum,
    cur,
    dirac,
    fermion_neutral,
    fermionic_em,
    kac_todorov,
    read_central_charge,
    sugawara,
)
from lambda_forge.errors import BadPolarization, CriticalLevel, DegeneratePairing
from lambda_forge.scalar import Scalar
from lambda_forge.wick import WickEngine, check_jacobi


class TestVirasoro:
    """The Virasoro spec itself."""

    def test_energy_momentum(self, virasoro_engine):
        """L is an energy-momentum field of central charge c."""
        L = virasoro_engine.generator("L")
        report = check_energy_momentum(virasoro_engine, L, Scalar.param("c"))
        assert report.passed
        assert read_central_charge(virasoro_engine, L) == Scalar.param("c")


class TestSugawara:
    """L = 1/(2(k + h)) sum :a^i a_i:."""

    def test_sl2(self, sl2_data, sl2_engine):
        """c = 3k/(k + 2) and every current is primary of weight 1."""
        k = Scalar.param("k")
        em = sugawara(sl2_data, engine=sl2_engine)
        assert em.central_charge == 3 * k / (k + 2)
        assert read_central_charge(sl2_engine, em.L) == em.central_charge
        assert em.check(primary=True).passed

    def test_numeric_level(self, sl2_data):
        """At k = 1 the central charge is 1."""
        em = sugawara(sl2_data, 1)
        assert em.central_charge == Scalar(1)
        assert em.check().passed

    def test_critical_level(self, sl2_data):
        """k = -h_dual has no Sugawara field."""
        with pytest.raises(CriticalLevel):
            sugawara(sl2_data, -2)

    @pytest.mark.slow
    def test_sl3(self, sl3_data):
        """c = 8k/(k + 3) for sl3."""
        k = Scalar.param("k")
        em = sugawara(sl3_data)
        assert em.central_charge == 8 * k / (k + 3)
        assert em.check(primary=True).passed


class TestFermions:
    """Free fermions and their energy-momentum fields."""

    def test_charged_polarization(self, charged_pair):
        """The bc system of weights (0, 1) has c = -2."""
        em = fermionic_em(charged_pair, pairs=[("phi", "phistar")])
        assert em.central_charge == Scalar(-2)
        assert em.check().passed

    def test_charged_weight_family(self, charged_pair):
        """Weight m gives c = -(12m^2 - 12m + 2)."""
        em = fermionic_em(charged_pair, pairs=[("phi", "phistar")], weights=[Fraction(1, 2)])
        assert em.central_charge == Scalar(1)

    def test_neutral(self, neutral_pair):
        """Two neutral fermions give c = 1."""
        em = fermionic_em(neutral_pair)
        assert em.central_charge == Scalar(1)
        assert em.check(primary=True).passed

    def test_bad_polarization(self, neutral_pair):
        """Pairs must be dual: <psi|psi> = 0 is not 1."""
        with pytest.raises(BadPolarization):
            fermionic_em(neutral_pair, pairs=[("psi", "psi")])

    def test_degenerate_pairing(self):
        """A rank-deficient pairing is rejected."""
        with pytest.raises(DegeneratePairing):
            fermion_neutral(["a", "b"], {("a", "a"): 1})

    def test_jacobi(self, neutral_pair):
        """Fermion specs satisfy Jacobi."""
        assert check_jacobi(neutral_pair, exhaustive=True).passed


class TestKacTodorov:
    """g + odd g with the Neveu-Schwarz fields G and L."""

    def test_sl2(self, sl2_data):
        """c = 3k/(k + 2) + 3/2 and the Neveu-Schwarz relations hold."""
        k = Scalar.param("k")
        kt = kac_todorov(sl2_data)
        assert kt.central_charge == 3 * k / (k + 2) + Scalar(Fraction(3, 2))
        assert kt.check().passed

    def test_spec_is_consistent(self, sl2_data):
        """The superalgebra table passes Jacobi."""
        kt = kac_todorov(sl2_data)
        assert check_jacobi(kt.spec, kt.engine).passed


class TestDirac:
    """The cubic Dirac operator in the Zhu algebra."""

    def test_sl2_square(self, sl2_data):
        """D^2 = C + 1/16 and D supercommutes as expected."""
        op = dirac(sl2_data)
        assert op.shift == Scalar(Fraction(1, 16))
        assert op.check().passed

    def test_sl2_classical(self, sl2_data):
        """{D, D} = 2C at hbar = 0."""
        assert dirac(sl2_data).classical_check().passed


class TestCurrents:
    """Cur_k g."""

    def test_level_specialization(self, sl2_data):
        """A numeric level replaces k in the table."""
        spec = cur(sl2_data, 3)
        engine = WickEngine(spec)
        products = engine.products(engine.parse("h"), engine.parse("h"))
        assert products[1].constant() == Scalar(6)
