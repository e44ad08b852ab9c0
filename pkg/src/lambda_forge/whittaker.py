"""
Whittaker models of finite W-algebras.

For an isotropic subspace l of g_1/2 spanned by basis vectors, put
m_l = l + g_>=1 and n_l = l^perp + g_>=1. The generalized Whittaker module
M_l = U(g) (x)_{U(m_l)} C_{-chi}, with m.1 = -(f|m), is spanned by PBW
words in a complement of m_l; its ad n_l-invariants form W^fin(g, f).
Invariants are computed exactly inside each piece of the Kazhdan
filtration, where a basis vector of g_j has degree 1 - j.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Mapping, Sequence
from fractions import Fraction

from .errors import NotGood
from .liealg import GoodGrading, LieAlgData, Vec
from .linear import nullspace
from .scalar import ONE, Scalar
from .terms import Accumulator, Expr, GeneratorDecl, GeneratorSet, Monomial, Term, ordered_monomials

logger = logging.getLogger(__name__)


class Enveloping:
    """U(g) in PBW form for a basis order given by ``order`` (a permutation of basis indices).

    Words store positions in ``order``, so ordered words are nondecreasing.
    """

    def __init__(self, data: LieAlgData, order: Sequence[int], degrees: Sequence[Fraction]) -> None:
        self.data = data
        self.order = list(order)
        self.position = {g: r for r, g in enumerate(self.order)}
        self.gens = GeneratorSet(
            GeneratorDecl(
                id=data.names[g],
                parity="odd" if data.odd[g] else "even",
                delta=1 - degrees[g],
                zeta=1,
            )
            for g in self.order
        )
        self._words: dict[Monomial, Expr] = {}

    def letters(self, v: Mapping[int, Scalar]) -> Expr:
        return Expr({(Term(self.position[g], 0),): c for g, c in v.items()})

    def _bracket(self, r: int, s: int) -> Expr:
        return self.letters(self.data.basis_bracket(self.order[r], self.order[s]))

    def multiply(self, x: Expr, y: Expr) -> Expr:
        acc = Accumulator()
        for w1, c1 in x.items():
            for w2, c2 in y.items():
                acc.add(self.word(w1 + w2), c1 * c2)
        return acc.result()

    def supercommutator(self, x: Expr, y: Expr, odd: bool = False) -> Expr:
        """xy - (-1)^(p(x)p(y)) yx for homogeneous x, y; ``odd`` is p(x)p(y)."""
        return self.multiply(x, y) - self.multiply(y, x).scale(-1 if odd else 1)

    def word(self, word: Monomial) -> Expr:
        gens = self.gens
        if gens.is_ordered(word):
            return Expr.mono(word)
        cached = self._words.get(word)
        if cached is not None:
            return cached
        i = next(
            i
            for i in range(len(word) - 1)
            if word[i] > word[i + 1] or (word[i] == word[i + 1] and gens.term_odd(word[i]))
        )
        x, y = word[i], word[i + 1]
        left, right = word[:i], word[i + 2 :]
        acc = Accumulator()
        if x == y:
            for w, c in self._bracket(x.gen, x.gen).items():
                acc.add(self.word(left + w + right), c / 2)
        else:
            p = -1 if gens.term_odd(x) and gens.term_odd(y) else 1
            acc.add(self.word(left + (y, x) + right), p)
            for w, c in self._bracket(x.gen, y.gen).items():
                acc.add(self.word(left + w + right), c)
        result = acc.result()
        self._words[word] = result
        return result


class WhittakerModel:
    """M_l with the adjoint action of n_l, truncated by the Kazhdan filtration."""

    def __init__(self, data: LieAlgData, grading: GoodGrading, l: Iterable[int] = ()) -> None:
        self.data = data
        self.grading = grading
        self.l = sorted(set(l))
        half = set(grading.half)
        for a in self.l:
            if a not in half:
                raise NotGood(f"{data.names[a]} is not in g_1/2")
        for a in self.l:
            for b in self.l:
                if not self.chi(data.basis_bracket(a, b)).is_zero:
                    raise NotGood("l is not isotropic for (f|[.,.])")
        degrees = grading.degrees
        self.m = self.l + grading.indices(lambda d: d >= 1)
        complement = [i for i in range(data.dim) if i not in set(self.m)]
        self.complement = complement
        self.U = Enveloping(data, complement + self.m, degrees)
        self.n = self._n_basis()
        logger.debug(
            "whittaker model: %d complement letters, dim m = %d, dim n = %d",
            len(complement),
            len(self.m),
            len(self.n),
        )

    def chi(self, v: Mapping[int, Scalar]) -> Scalar:
        return self.data.pair(self.grading.f, v)

    def _n_basis(self) -> list[Vec]:
        """A basis of l^perp + g_>=1."""
        data, half = self.data, self.grading.half
        rows = [
            {col: self.chi(data.basis_bracket(a, b)) for col, a in enumerate(half)} for b in self.l
        ]
        rows = [{c: v for c, v in r.items() if not v.is_zero} for r in rows]
        perp = [{half[c]: v for c, v in enumerate(vec) if not v.is_zero} for vec in nullspace(rows, len(half))]
        return perp + [self.data.basis(i) for i in self.grading.indices(lambda d: d >= 1)]

    def reduce(self, x: Expr) -> Expr:
        """Image of a PBW combination in M_l: trailing m-letters act by -chi."""
        size = len(self.complement)
        acc = Accumulator()
        for word, c in x.items():
            cut = next((i for i, t in enumerate(word) if t.gen >= size), len(word))
            coeff = c
            for t in word[cut:]:
                coeff = coeff * -self.chi(self.data.basis(self.U.order[t.gen]))
                if coeff.is_zero:
                    break
            if not coeff.is_zero:
                acc.add_term(word[:cut], coeff)
        return acc.result()

    def ad(self, v: Vec, x: Expr) -> Expr:
        """ad v on a combination of module words (v homogeneous in parity)."""
        odd_v = self.data.parity(v)
        a = self.U.letters(v)
        acc = Accumulator()
        for word, c in x.items():
            odd = odd_v and self.U.gens.is_odd(word)
            acc.add(self.reduce(self.U.supercommutator(a, Expr.mono(word), odd)), c)
        return acc.result()

    def step(self) -> Fraction:
        return Fraction(1) if self.grading.integral else Fraction(1, 2)

    def filtration_words(self, cutoff: Fraction) -> list[Monomial]:
        """PBW words in the complement of Kazhdan degree <= cutoff."""
        out: list[Monomial] = []
        allowed = range(len(self.complement))
        w = Fraction(0)
        while w <= cutoff:
            out.extend(ordered_monomials(self.U.gens, w, allowed, max_tpow=0))
            w += Fraction(1, 2)
        return out

    def invariants(self, cutoff: Fraction | int) -> list[Expr]:
        """Basis of the ad n_l-invariants of Kazhdan degree <= cutoff."""
        words = self.filtration_words(Fraction(cutoff))
        rows: dict[tuple[int, Monomial], dict[int, Scalar]] = {}
        for col, word in enumerate(words):
            for k, v in enumerate(self.n):
                for out, c in self.ad(v, Expr.mono(word)).items():
                    rows.setdefault((k, out), {})[col] = c
        basis = nullspace(list(rows.values()), len(words))
        return [Expr({words[i]: c for i, c in enumerate(vec)}) for vec in basis]

    def graded_dims(self, cutoff: Fraction | int) -> dict[Fraction, int]:
        """dim of invariants in F_d / F_{d-step} for d up to cutoff."""
        step = self.step()
        out: dict[Fraction, int] = {}
        previous = 0
        d = Fraction(0)
        while d <= cutoff:
            total = len(self.invariants(d))
            out[d] = total - previous
            previous = total
            d += step
        return out

    def format(self, x: Expr) -> str:
        if not x:
            return "0"
        parts = []
        for word, c in x.sorted_items():
            body = "*".join(self.U.gens[t.gen].id for t in word) if word else "1"
            parts.append(body if c == ONE else f"({c})*{body}")
        return " + ".join(parts)


def slodowy_dims(grading: GoodGrading, cutoff: Fraction | int) -> dict[Fraction, int]:
    """Graded dimensions of S(g^f) with u in g^f_(-j) in degree 1 + j."""
    weights = [1 - grading.degrees[next(iter(u))] for u in grading.centralizer]
    odd = [grading.data.parity(u) for u in grading.centralizer]
    gens = GeneratorSet(
        GeneratorDecl(id=f"u{i}", parity="odd" if o else "even", delta=w, zeta=1)
        for i, (w, o) in enumerate(zip(weights, odd))
    )
    step = Fraction(1) if grading.integral else Fraction(1, 2)
    out: dict[Fraction, int] = {}
    d = Fraction(0)
    while d <= cutoff:
        out[d] = len(ordered_monomials(gens, d, max_tpow=0))
        d += step
    return out


def whittaker_invariants(
    data: LieAlgData,
    grading: GoodGrading,
    cutoff: Fraction | int,
    l: Iterable[int] = (),
) -> dict[Fraction, int]:
    """Graded dimensions of W^fin computed in the Whittaker model M_l."""
    return WhittakerModel(data, grading, l).graded_dims(cutoff)
