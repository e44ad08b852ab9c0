"""
Mode-operator model of linear Lie conformal algebras.

States are PBW words ``g1_(n1) g2_(n2) ... |0>`` in creation modes (``n <= -1``)
stored as ordered monomials: ``g_(-m-1)`` corresponds to the term ``T^(m) g``.
Annihilation modes are commuted to the right with the commutator formula,
and n-th products of states come from the Borcherds identity. Nothing here
uses the Wick formulas, so results can be compared with :mod:`lambda_forge.wick`.
"""

from __future__ import annotations

import logging
import math
from fractions import Fraction

from .scalar import ONE, Scalar, binom
from .terms import Accumulator, Expr, Monomial, Term
from .wick import LcaSpec

logger = logging.getLogger(__name__)

# (generator or None for the vacuum, mode, coefficient)
ModeTerm = tuple[int | None, int, Scalar]


class ModeAlgebra:
    """Creation/annihilation calculus for a linear, positively graded LcaSpec."""

    def __init__(self, spec: LcaSpec) -> None:
        if not spec.hamiltonian:
            raise ValueError("the mode model needs conformal weights")
        for d in spec.gens:
            if d.delta <= 0:
                raise ValueError(f"generator {d.id} has non-positive weight")
        self.spec = spec
        self.gens = spec.gens
        self._table: dict[tuple[int, int], dict[int, list[tuple[Term | None, Scalar]]]] = {}
        self._act_cache: dict[tuple[int, int, Monomial], Expr] = {}
        for (i, j), entry in spec.table.items():
            products: dict[int, list[tuple[Term | None, Scalar]]] = {}
            for n, x in entry.to_products().items():
                products[n] = [(self._single(m), c) for m, c in x.items()]
            self._table[(i, j)] = products

    def _single(self, mono: Monomial) -> Term | None:
        if len(mono) > 1:
            raise ValueError("the mode model only handles linear brackets")
        return mono[0] if mono else None

    def _odd(self, g: int) -> bool:
        return self.gens[g].odd

    def generator_products(self, i: int, j: int) -> dict[int, list[tuple[Term | None, Scalar]]]:
        """g_i (n) g_j as lists of (term or vacuum, coefficient)."""
        if (i, j) in self._table:
            return self._table[(i, j)]
        reverse = self._table.get((j, i))
        if reverse is None:
            return {}
        p = -1 if self._odd(i) and self._odd(j) else 1
        out: dict[int, list[tuple[Term | None, Scalar]]] = {}
        for m, parts in reverse.items():
            for n in range(m + 1):
                r = m - n
                sign = p * (-1 if (m + 1) % 2 else 1)
                for t, c in parts:
                    if t is None:
                        if r == 0:
                            out.setdefault(n, []).append((None, c * sign))
                        continue
                    coeff = c * sign * math.comb(t.tpow + r, r)
                    out.setdefault(n, []).append((Term(t.gen, t.tpow + r), coeff))
        self._table[(i, j)] = out
        return out

    def commutator(self, g: int, n: int, h: int, k: int) -> list[ModeTerm]:
        """[g_(n), h_(k)] = sum_j binom(n, j) (g_(j) h)_(n + k - j)."""
        out: list[ModeTerm] = []
        for j, parts in self.generator_products(g, h).items():
            coeff = binom(n, j)
            if coeff.is_zero:
                continue
            for t, c in parts:
                out.extend(self._term_mode(t, n + k - j, coeff * c))
        return out

    @staticmethod
    def _term_mode(t: Term | None, q: int, c: Scalar) -> list[ModeTerm]:
        """(T^(r) x)_(q) = (-1)^r binom(q, r) x_(q - r); |0>_(q) = delta_{q,-1}."""
        if t is None:
            return [(None, q, c)] if q == -1 else []
        coeff = binom(q, t.tpow) * (-1) ** t.tpow * c
        return [] if coeff.is_zero else [(t.gen, q - t.tpow, coeff)]

    def act(self, g: int, n: int, state: Expr) -> Expr:
        """g_(n) applied to a state given in ordered monomials."""
        acc = Accumulator()
        for mono, c in state.items():
            acc.add(self._act_mono(g, n, mono), c)
        return acc.result()

    def _act_mode_term(self, mt: ModeTerm, state: Expr) -> Expr:
        g, q, c = mt
        if g is None:
            return state.scale(c)
        return self.act(g, q, state).scale(c)

    def _act_mono(self, g: int, n: int, word: Monomial) -> Expr:
        key = (g, n, word)
        cached = self._act_cache.get(key)
        if cached is not None:
            return cached
        result = self._act_uncached(g, n, word)
        self._act_cache[key] = result
        return result

    def _act_uncached(self, g: int, n: int, word: Monomial) -> Expr:
        if n >= 0 and self._weight(word) - n - 1 + self.gens[g].delta < 0:
            return Expr()
        if not word:
            return Expr() if n >= 0 else Expr.gen(g, -n - 1)
        first, rest = word[0], word[1:]
        h, k = first.gen, -first.tpow - 1
        rest_expr = Expr.mono(rest)
        p = -1 if self._odd(g) and self._odd(h) else 1
        if n < 0:
            t = Term(g, -n - 1)
            if t < first or (t == first and not self._odd(g)):
                return Expr.mono((t,) + word)
            if t == first:
                # g_(n) g_(n) = 1/2 [g_(n), g_(n)] for odd g
                acc = Accumulator()
                for mt in self.commutator(g, n, g, n):
                    acc.add(self._act_mode_term(mt, rest_expr), Scalar(1) / 2)
                return acc.result()
        acc = Accumulator()
        acc.add(self.act(h, k, self._act_mono(g, n, rest)), p)
        for mt in self.commutator(g, n, h, k):
            acc.add(self._act_mode_term(mt, rest_expr))
        return acc.result()

    def _weight(self, mono: Monomial) -> Fraction:
        return self.gens.grades(mono).delta

    def term_mode(self, t: Term, q: int, state: Expr) -> Expr:
        """(T^(r) g)_(q) on a state."""
        acc = Accumulator()
        for mt in self._term_mode(t, q, ONE):
            acc.add(self._act_mode_term(mt, state))
        return acc.result()

    def nth_product(self, a: Expr, n: int, b: Expr) -> Expr:
        """a_(n) b for states a, b, by the Borcherds identity."""
        acc = Accumulator()
        for m1, c1 in a.items():
            for m2, c2 in b.items():
                acc.add(self._product_mono(m1, n, m2), c1 * c2)
        return acc.result()

    def _product_mono(self, a: Monomial, n: int, b: Monomial) -> Expr:
        if not a:
            return Expr.mono(b) if n == -1 else Expr()
        state_b = Expr.mono(b)
        first = a[0]
        if len(a) == 1:
            return self.term_mode(first, n, state_b)
        rest = a[1:]
        # (x_(-1) A)_(n) B = sum_j x_(-1-j) A_(n+j) B + p(x, A) A_(n-1-j) x_(j) B
        p = -1 if self._odd(first.gen) and self.gens.grades(rest).odd else 1
        wb = self._weight(b)
        acc = Accumulator()
        top = int(math.floor(self._weight(rest) + wb - n - 1))
        for j in range(max(top, -1) + 1):
            inner = self._product_mono(rest, n + j, b)
            if inner:
                acc.add(self.term_mode(first, -1 - j, inner))
        top = int(math.floor(self.gens[first.gen].delta + first.tpow + wb - 1))
        for j in range(max(top, -1) + 1):
            inner = self.term_mode(first, j, state_b)
            if inner:
                acc.add(self.nth_product(Expr.mono(rest), n - 1 - j, inner), p)
        return acc.result()

    def products(self, a: Expr, b: Expr) -> dict[int, Expr]:
        """All non-zero a_(n) b with n >= 0, bounded by conformal weight."""
        out = {}
        top = max((self._weight(m) for m in a), default=Fraction(0)) + max(
            (self._weight(m) for m in b), default=Fraction(0)
        )
        for n in range(int(math.floor(top))):
            x = self.nth_product(a, n, b)
            if x:
                out[n] = x
        return out
