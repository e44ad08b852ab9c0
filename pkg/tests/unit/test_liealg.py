"""
Tests for finite-dimensional Lie superalgebra data and good gradings.
"""

from fractions import Fraction

import pytest

from lambda_forge.errors import NotAdapted, NotGood, UnknownGenerator
from lambda_forge.liealg import (
    LieAlgData,
    casimir,
    check_dual_bases,
    dual_bases,
    dual_basis,
    dual_coxeter,
    grading_from_pair,
    sl3_minimal,
    sl3_principal,
    validate,
)
from lambda_forge.scalar import ONE, Scalar


class TestStructure:
    """Brackets and forms of the matrix algebras."""

    def test_sl2_table(self, sl2_data):
        """[e, f] = h, [h, e] = 2e, (e|f) = 1, (h|h) = 2."""
        e, h, f = (sl2_data.lookup(n) for n in "ehf")
        assert sl2_data.basis_bracket(e, f) == {h: ONE}
        assert sl2_data.basis_bracket(h, e) == {e: Scalar(2)}
        assert sl2_data.basis_bracket(f, e) == {h: Scalar(-1)}
        assert sl2_data.form[e][f] == ONE
        assert sl2_data.form[h][h] == Scalar(2)

    def test_validate(self, sl2_data, sl3_data):
        """Both matrix algebras pass every structural check."""
        assert validate(sl2_data).passed
        assert validate(sl3_data).passed

    def test_corrupted_jacobi(self):
        """[h, e] = 3e breaks Jacobi."""
        data = LieAlgData.build(
            ["e", "h", "f"],
            {("e", "f"): {"h": 1}, ("h", "e"): {"e": 3}, ("h", "f"): {"f": -2}},
            {("e", "f"): 1, ("h", "h"): 2},
            name="broken",
        )
        report = validate(data)
        assert not report.passed
        assert any(s.startswith("jacobi") for s in report.failed_subjects())

    def test_unknown_basis_element(self):
        """Tables may only name declared elements."""
        with pytest.raises(UnknownGenerator):
            LieAlgData.build(["a"], {("a", "b"): {"a": 1}}, {})

    def test_dual_coxeter(self, sl2_data, sl3_data):
        """h_dual is 2 for sl2 and 3 for sl3 with the trace form."""
        assert dual_coxeter(sl2_data) == Scalar(2)
        assert dual_coxeter(sl3_data) == Scalar(3)

    def test_casimir_on_adjoint(self, sl2_data):
        """The Casimir acts on the adjoint representation by 2 h_dual."""
        e = sl2_data.basis(sl2_data.lookup("e"))
        assert casimir(sl2_data, e) == {sl2_data.lookup("e"): Scalar(4)}

    def test_dual_basis(self, sl2_data):
        """u^e = f and u^h = h/2."""
        upper = dual_basis(sl2_data)
        e, h, f = (sl2_data.lookup(n) for n in "ehf")
        assert upper[e] == {f: ONE}
        assert upper[h] == {h: Scalar(Fraction(1, 2))}


class TestGradings:
    """Good gradings from an element x and a nilpotent f."""

    def test_sl2_principal(self, sl2_data, sl2_principal):
        """Degrees 1, 0, -1 and g^f spanned by f."""
        assert sl2_principal.degrees == (1, 0, -1)
        assert sl2_principal.centralizer == ({sl2_data.lookup("f"): ONE},)
        assert sl2_principal.integral

    def test_sl3_principal(self, sl3_data):
        """Principal grading: g^f has dimension 2 in degrees -1 and -2."""
        g = sl3_principal(sl3_data)
        assert sorted(g.degrees) == [-2, -1, -1, 0, 0, 1, 1, 2]
        degrees = sorted(max(g.degrees[i] for i in v) for v in g.centralizer)
        assert degrees == [-2, -1]

    def test_sl3_minimal(self, sl3_data):
        """The minimal grading is half-integral with g_1/2 = <e12, e23>."""
        g = sl3_minimal(sl3_data)
        assert not g.integral
        assert [sl3_data.names[i] for i in g.half] == ["e12", "e23"]
        assert len(g.centralizer) == 4

    def test_not_adapted(self, sl2_data):
        """x must act diagonally on the basis."""
        with pytest.raises(NotAdapted):
            grading_from_pair(sl2_data, sl2_data.vec({"e": 1}), sl2_data.vec({"f": 1}))

    def test_not_good(self, sl2_data):
        """[x, f] must be -f."""
        with pytest.raises(NotGood):
            grading_from_pair(
                sl2_data, sl2_data.vec({"h": Fraction(1, 2)}), sl2_data.vec({"e": 1})
            )

    def test_dual_bases_minimal(self, sl3_data):
        """Pairing deltas and resolutions of identity on random samples."""
        g = sl3_minimal(sl3_data)
        duals = dual_bases(sl3_data, g)
        samples = [
            sl3_data.vec({"e12": 1, "h1": 2, "f31": -1}),
            sl3_data.vec({"e23": Fraction(3, 2), "f21": 1}),
        ]
        assert check_dual_bases(sl3_data, g, duals, samples).passed

    @pytest.mark.parametrize("name", ["principal", "minimal"])
    def test_dual_bases_random(self, sl3_data, rng, name):
        """Resolutions of identity on twenty random vectors with rational coordinates."""
        g = sl3_principal(sl3_data) if name == "principal" else sl3_minimal(sl3_data)
        duals = dual_bases(sl3_data, g)
        samples = [
            sl3_data.vec(
                {n: Fraction(rng.randint(-5, 5), rng.randint(1, 4)) for n in sl3_data.names}
            )
            for _ in range(20)
        ]
        assert check_dual_bases(sl3_data, g, duals, samples).passed
