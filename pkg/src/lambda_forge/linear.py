"""
Exact linear algebra over Scalars.

Thin adapters between Scalar rows and sympy ``DomainMatrix``. Systems whose
entries are all rational use the ``QQ`` domain; anything involving formal
parameters uses the fraction field of the parameter ring.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from typing import Any

from sympy import QQ
from sympy.polys.matrices import DomainMatrix
from sympy.polys.matrices.exceptions import DMNonInvertibleMatrixError

from .errors import DegenerateForm
from .scalar import ZERO, Scalar, _current_field

logger = logging.getLogger(__name__)

SparseRow = dict[int, Scalar]


def _domain(entries: Sequence[Scalar]) -> tuple[Any, bool]:
    if all(s.is_constant for s in entries):
        return QQ, True
    return _current_field().to_domain(), False


def _to_element(s: Scalar, rational: bool) -> Any:
    return s._q if rational else s._as_frac()


def _from_element(e: Any, rational: bool) -> Scalar:
    return Scalar._from_q(e) if rational else Scalar._from_frac(e)


def _to_domain_matrix(rows: Sequence[SparseRow], ncols: int) -> tuple[DomainMatrix, bool]:
    domain, rational = _domain([v for row in rows for v in row.values()])
    dod = {
        i: {j: _to_element(v, rational) for j, v in row.items() if not v.is_zero}
        for i, row in enumerate(rows)
    }
    dod = {i: r for i, r in dod.items() if r}
    return DomainMatrix.from_dod(dod, (len(rows), ncols), domain), rational


def _rows_from(matrix: DomainMatrix, rational: bool) -> list[SparseRow]:
    nrows = matrix.shape[0]
    dod = matrix.to_dod()
    return [
        {j: _from_element(v, rational) for j, v in sorted(dod.get(i, {}).items())}
        for i in range(nrows)
    ]


def rref(rows: Sequence[SparseRow], ncols: int) -> tuple[list[SparseRow], tuple[int, ...]]:
    """Reduced row echelon form and pivot columns; zero rows are dropped."""
    if not rows or ncols == 0:
        return [], ()
    matrix, rational = _to_domain_matrix(rows, ncols)
    reduced, pivots = matrix.rref()
    out = [r for r in _rows_from(reduced, rational) if r]
    logger.debug("rref %dx%d -> rank %d", len(rows), ncols, len(pivots))
    return out, tuple(pivots)


def nullspace(rows: Sequence[SparseRow], ncols: int) -> list[list[Scalar]]:
    """Basis of the right kernel, one dense vector per basis element."""
    if ncols == 0:
        return []
    if not any(rows):
        return [[Scalar(1) if i == j else ZERO for j in range(ncols)] for i in range(ncols)]
    reduced, pivots = rref(rows, ncols)
    basis = []
    for free in (c for c in range(ncols) if c not in pivots):
        vec = [ZERO] * ncols
        vec[free] = Scalar(1)
        for row, p in zip(reduced, pivots):
            vec[p] = -row.get(free, ZERO)
        basis.append(vec)
    return basis


def solve(rows: Sequence[SparseRow], rhs: Sequence[Scalar], ncols: int) -> list[Scalar] | None:
    """Particular solution with free variables set to zero, or None if inconsistent."""
    augmented = [dict(row) for row in rows]
    for row, b in zip(augmented, rhs):
        if not b.is_zero:
            row[ncols] = b
    reduced, pivots = rref(augmented, ncols + 1)
    if ncols in pivots:
        return None
    solution = [ZERO] * ncols
    for row, p in zip(reduced, pivots):
        solution[p] = row.get(ncols, ZERO)
    return solution


def inverse(matrix: Sequence[Sequence[Scalar]]) -> list[list[Scalar]]:
    """Inverse of a square matrix; raises DegenerateForm if singular."""
    n = len(matrix)
    if n == 0:
        return []
    rows = [{j: v for j, v in enumerate(r) if not v.is_zero} for r in matrix]
    dm, rational = _to_domain_matrix(rows, n)
    try:
        inv = dm.to_dense().inv()
    except DMNonInvertibleMatrixError as e:
        raise DegenerateForm("matrix is singular") from e
    sparse = _rows_from(inv, rational)
    return [[r.get(j, ZERO) for j in range(n)] for r in sparse]


def rank(rows: Sequence[SparseRow], ncols: int) -> int:
    return len(rref(rows, ncols)[1])
