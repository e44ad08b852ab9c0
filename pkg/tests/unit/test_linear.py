"""
Tests for exact linear algebra over parameter fields.
"""

import pytest

from lambda_forge import linear
from lambda_forge.errors import DegenerateForm
from lambda_forge.scalar import ONE, ZERO, Scalar


class TestLinear:
    """rref, kernels, solutions and inverses."""

    def test_nullspace(self):
        """x + y = 0 has kernel spanned by (-1, 1)."""
        basis = linear.nullspace([{0: ONE, 1: ONE}], 2)
        assert basis == [[Scalar(-1), ONE]]

    def test_solve_sets_free_variables_to_zero(self):
        """x + y = 3 solves with y = 0."""
        assert linear.solve([{0: ONE, 1: ONE}], [Scalar(3)], 2) == [Scalar(3), ZERO]

    def test_inconsistent(self):
        """x = 1 and x = 2 has no solution."""
        rows = [{0: ONE}, {0: ONE}]
        assert linear.solve(rows, [ONE, Scalar(2)], 1) is None

    def test_parametric_inverse(self):
        """The inverse of diag(k, 2) is diag(1/k, 1/2)."""
        k = Scalar.param("k")
        inv = linear.inverse([[k, ZERO], [ZERO, Scalar(2)]])
        assert inv == [[1 / k, ZERO], [ZERO, Scalar(1) / 2]]

    def test_singular(self):
        """Singular matrices raise DegenerateForm."""
        with pytest.raises(DegenerateForm):
            linear.inverse([[ONE, ONE], [ONE, ONE]])

    def test_rank(self):
        """Rank of a parametric matrix generically."""
        k = Scalar.param("k")
        assert linear.rank([{0: k, 1: ONE}, {0: ONE, 1: k}], 2) == 2
