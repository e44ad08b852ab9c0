"""
Finite-dimensional Lie (super)algebra data.

A :class:`LieAlgData` holds structure constants and an invariant form on a
fixed basis. On top of it this module computes the dual Coxeter number,
good gradings from a pair (x, f), the centraliser of f, and the dual bases
used by the W-algebra complex.

Elements are sparse coordinate vectors ``{basis index: Scalar}``.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import DegenerateForm, NotAdapted, NotGood, NotSemisimpleAmbiguity, UnknownGenerator
from .linear import inverse, nullspace, rank, solve
from .reports import CheckReport
from .scalar import ONE, ZERO, Scalar, ScalarLike

logger = logging.getLogger(__name__)

Vec = dict[int, Scalar]


def vec_add(*vecs: Mapping[int, Scalar]) -> Vec:
    out: Vec = {}
    for v in vecs:
        for i, c in v.items():
            s = out.get(i, ZERO) + c
            if s.is_zero:
                out.pop(i, None)
            else:
                out[i] = s
    return out


def vec_scale(v: Mapping[int, Scalar], c: ScalarLike) -> Vec:
    s = Scalar(c)
    if s.is_zero:
        return {}
    return {i: x * s for i, x in v.items()}


def vec_sub(a: Mapping[int, Scalar], b: Mapping[int, Scalar]) -> Vec:
    return vec_add(a, vec_scale(b, -1))


def combine(terms: Iterable[tuple[ScalarLike, Mapping[int, Scalar]]]) -> Vec:
    """Linear combination sum c * v."""
    return vec_add(*(vec_scale(v, c) for c, v in terms))


@dataclass(frozen=True)
class LieAlgData:
    """Basis, parities, structure constants and invariant form."""

    names: tuple[str, ...]
    odd: tuple[bool, ...]
    brackets: Mapping[tuple[int, int], Vec]
    form: tuple[tuple[Scalar, ...], ...]
    name: str = ""
    index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "index", {n: i for i, n in enumerate(self.names)})
        if len(self.index) != len(self.names):
            raise ValueError("duplicate basis names")

    @classmethod
    def build(
        cls,
        names: Sequence[str],
        brackets: Mapping[tuple[str, str], Mapping[str, ScalarLike]],
        form: Mapping[tuple[str, str], ScalarLike],
        odd: Iterable[str] = (),
        name: str = "",
    ) -> LieAlgData:
        """Complete partial tables by super-antisymmetry and supersymmetry."""
        index = {n: i for i, n in enumerate(names)}
        odd_set = set(odd)
        parity = tuple(n in odd_set for n in names)

        def idx(n: str) -> int:
            if n not in index:
                raise UnknownGenerator(f"unknown basis element {n!r}")
            return index[n]

        table: dict[tuple[int, int], Vec] = {}
        for (a, b), value in brackets.items():
            i, j = idx(a), idx(b)
            vec = {idx(k): Scalar(c) for k, c in value.items() if not Scalar(c).is_zero}
            table[(i, j)] = vec
        for (i, j), vec in list(table.items()):
            if (j, i) not in table:
                sign = -1 if parity[i] and parity[j] else 1
                table[(j, i)] = vec_scale(vec, -sign)
        n = len(names)
        matrix = [[ZERO] * n for _ in range(n)]
        for (a, b), value in form.items():
            i, j = idx(a), idx(b)
            matrix[i][j] = Scalar(value)
        for i in range(n):
            for j in range(n):
                if matrix[i][j].is_zero and not matrix[j][i].is_zero:
                    sign = -1 if parity[i] and parity[j] else 1
                    matrix[i][j] = matrix[j][i] * sign
        return cls(
            tuple(names),
            parity,
            {k: v for k, v in table.items() if v},
            tuple(tuple(r) for r in matrix),
            name,
        )

    @property
    def dim(self) -> int:
        return len(self.names)

    @property
    def sdim(self) -> int:
        return sum(-1 if o else 1 for o in self.odd)

    def lookup(self, name: str) -> int:
        try:
            return self.index[name]
        except KeyError:
            raise UnknownGenerator(f"unknown basis element {name!r}") from None

    def basis(self, i: int) -> Vec:
        return {i: ONE}

    def vec(self, coords: Mapping[str, ScalarLike]) -> Vec:
        return {self.lookup(n): Scalar(c) for n, c in coords.items() if not Scalar(c).is_zero}

    def basis_bracket(self, i: int, j: int) -> Vec:
        return self.brackets.get((i, j), {})

    def bracket(self, x: Mapping[int, Scalar], y: Mapping[int, Scalar]) -> Vec:
        acc: Vec = {}
        for i, a in x.items():
            for j, b in y.items():
                v = self.brackets.get((i, j))
                if v:
                    acc = vec_add(acc, vec_scale(v, a * b))
        return acc

    def pair(self, x: Mapping[int, Scalar], y: Mapping[int, Scalar]) -> Scalar:
        total = ZERO
        for i, a in x.items():
            row = self.form[i]
            for j, b in y.items():
                if not row[j].is_zero:
                    total = total + a * b * row[j]
        return total

    def parity(self, x: Mapping[int, Scalar]) -> bool:
        parities = {self.odd[i] for i in x}
        if len(parities) > 1:
            raise ValueError("element has mixed parity")
        return parities == {True}

    def sign(self, i: int, j: int) -> int:
        return -1 if self.odd[i] and self.odd[j] else 1

    def format_vec(self, v: Mapping[int, Scalar]) -> str:
        if not v:
            return "0"
        parts = []
        for i in sorted(v):
            c = v[i]
            if c == ONE:
                parts.append(self.names[i])
            elif c == -ONE:
                parts.append(f"-{self.names[i]}")
            else:
                parts.append(f"{c}*{self.names[i]}" if c.is_constant else f"({c})*{self.names[i]}")
        return " + ".join(parts).replace("+ -", "- ")


def validate(data: LieAlgData) -> CheckReport:
    """Antisymmetry, Jacobi, supersymmetry, invariance and non-degeneracy."""
    report = CheckReport(f"lie algebra {data.name}".strip())
    n = data.dim
    names = data.names
    for i in range(n):
        for j in range(n):
            lhs = data.basis_bracket(i, j)
            rhs = vec_scale(data.basis_bracket(j, i), -data.sign(i, j))
            diff = vec_sub(lhs, rhs)
            report.record(f"antisymmetry ({names[i]}, {names[j]})", data.format_vec(diff) if diff else None)
            bad = [k for k in lhs if data.odd[k] != (data.odd[i] ^ data.odd[j])]
            report.record(
                f"parity [{names[i]}, {names[j]}]",
                ", ".join(names[k] for k in bad) if bad else None,
            )
            sym = data.form[i][j] - data.form[j][i] * data.sign(i, j)
            report.record(f"supersymmetry ({names[i]}|{names[j]})", str(sym) if not sym.is_zero else None)
            even = data.odd[i] == data.odd[j] or data.form[i][j].is_zero
            report.record(f"even form ({names[i]}|{names[j]})", None if even else str(data.form[i][j]))
    for i in range(n):
        a = data.basis(i)
        for j in range(n):
            b = data.basis(j)
            ab = data.basis_bracket(i, j)
            for k in range(n):
                c = data.basis(k)
                subject = f"({names[i]}, {names[j]}, {names[k]})"
                lhs = data.bracket(a, data.bracket(b, c))
                rhs = vec_add(
                    data.bracket(ab, c),
                    vec_scale(data.bracket(b, data.bracket(a, c)), data.sign(i, j)),
                )
                diff = vec_sub(lhs, rhs)
                report.record(f"jacobi {subject}", data.format_vec(diff) if diff else None)
                inv = data.pair(ab, c) - data.pair(a, data.basis_bracket(j, k))
                report.record(f"invariance {subject}", str(inv) if not inv.is_zero else None)
    rows = [{j: v for j, v in enumerate(r) if not v.is_zero} for r in data.form]
    r = rank(rows, n)
    report.record("non-degenerate form", None if r == n else f"rank {r} < {n}")
    if not report.passed:
        logger.warning("lie algebra %s fails %d checks", data.name, len(report.failures))
    return report


def dual_basis(data: LieAlgData) -> list[Vec]:
    """u^b with (u_a | u^b) = delta; raises DegenerateForm."""
    inv = inverse([list(r) for r in data.form])
    return [{g: inv[g][b] for g in range(data.dim) if not inv[g][b].is_zero} for b in range(data.dim)]


def casimir(data: LieAlgData, v: Mapping[int, Scalar]) -> Vec:
    """sum_a [u^a, [u_a, v]]."""
    upper = dual_basis(data)
    acc: Vec = {}
    for a in range(data.dim):
        acc = vec_add(acc, data.bracket(upper[a], data.bracket(data.basis(a), v)))
    return acc


def dual_coxeter(data: LieAlgData) -> Scalar:
    """Half the eigenvalue of the Casimir operator on the adjoint representation."""
    value: Scalar | None = None
    for i in range(data.dim):
        image = casimir(data, data.basis(i))
        scale = image.get(i, ZERO)
        if vec_sub(image, {i: scale} if not scale.is_zero else {}):
            raise NotSemisimpleAmbiguity(f"Casimir is not diagonal on {data.names[i]}")
        if value is None:
            value = scale
        elif value != scale:
            raise NotSemisimpleAmbiguity(
                f"Casimir eigenvalues differ: {value} on {data.names[0]}, {scale} on {data.names[i]}"
            )
    return (value or ZERO) / 2


@dataclass(frozen=True)
class GoodGrading:
    """ad x eigenvalues on the basis, the element f and the centraliser g^f."""

    data: LieAlgData
    x: Vec
    f: Vec
    degrees: tuple[Fraction, ...]
    centralizer: tuple[Vec, ...]

    def indices(self, pred: Callable[[Fraction], bool]) -> list[int]:
        return [i for i, d in enumerate(self.degrees) if pred(d)]

    def S(self, j: Fraction | int) -> list[int]:
        return self.indices(lambda d: d == j)

    @property
    def plus(self) -> list[int]:
        return self.indices(lambda d: d > 0)

    @property
    def minus(self) -> list[int]:
        return self.indices(lambda d: d < 0)

    @property
    def half(self) -> list[int]:
        return self.S(Fraction(1, 2))

    def project(self, v: Mapping[int, Scalar], pred: Callable[[Fraction], bool]) -> Vec:
        return {i: c for i, c in v.items() if pred(self.degrees[i])}

    def pi_plus(self, v: Mapping[int, Scalar]) -> Vec:
        return self.project(v, lambda d: d > 0)

    def pi_minus(self, v: Mapping[int, Scalar]) -> Vec:
        return self.project(v, lambda d: d < 0)

    def pi_geq(self, v: Mapping[int, Scalar]) -> Vec:
        return self.project(v, lambda d: d >= 0)

    def pi_leq(self, v: Mapping[int, Scalar]) -> Vec:
        return self.project(v, lambda d: d <= 0)

    def pi_half(self, v: Mapping[int, Scalar]) -> Vec:
        return self.project(v, lambda d: d == Fraction(1, 2))

    @property
    def integral(self) -> bool:
        return all(d.denominator == 1 for d in self.degrees)


def centralizer(
    data: LieAlgData,
    f: Mapping[int, Scalar],
    degrees: Sequence[Fraction] | None = None,
) -> list[Vec]:
    """Basis of g^f from the exact nullspace of ad f, homogeneous when ``degrees`` is given."""
    groups = [list(range(data.dim))]
    if degrees is not None:
        groups = [
            [i for i in range(data.dim) if degrees[i] == d] for d in sorted(set(degrees), reverse=True)
        ]
    out: list[Vec] = []
    for group in groups:
        rows: list[dict[int, Scalar]] = [{} for _ in range(data.dim)]
        for col, i in enumerate(group):
            for m, c in data.bracket(f, data.basis(i)).items():
                rows[m][col] = c
        for v in nullspace(rows, len(group)):
            out.append({group[col]: c for col, c in enumerate(v) if not c.is_zero})
    return out


def grading_from_pair(data: LieAlgData, x: Mapping[int, Scalar], f: Mapping[int, Scalar]) -> GoodGrading:
    """Grading by ad x; requires an adapted basis, [x, f] = -f and g^f in degrees <= 0."""
    degrees = []
    for i in range(data.dim):
        image = data.bracket(x, data.basis(i))
        if any(k != i for k in image):
            raise NotAdapted(f"{data.names[i]} is not an eigenvector of ad x")
        value = image.get(i, ZERO)
        if not value.is_constant:
            raise NotAdapted(f"eigenvalue {value} on {data.names[i]} is not a number")
        d = value.to_fraction()
        if (2 * d).denominator != 1:
            raise NotAdapted(f"eigenvalue {d} on {data.names[i]} is not a half-integer")
        degrees.append(d)
    if vec_add(data.bracket(x, f), f):
        raise NotGood("[x, f] != -f")
    cent = centralizer(data, f, degrees)
    for v in cent:
        if any(degrees[i] > 0 for i in v):
            raise NotGood(f"centraliser element {data.format_vec(v)} has positive degree")
    logger.debug("grading degrees %s, dim g^f = %d", degrees, len(cent))
    return GoodGrading(data, dict(x), dict(f), tuple(degrees), tuple(cent))


@dataclass(frozen=True)
class DualBases:
    """u^a (form-dual to u_a) and v_a on g_{1/2} with (f|[u_a, v_b]) = delta."""

    upper: tuple[Vec, ...]
    v: Mapping[int, Vec]


def dual_bases(data: LieAlgData, grading: GoodGrading) -> DualBases:
    upper = dual_basis(data)
    half = grading.half
    v: dict[int, Vec] = {}
    if half:
        pairing = [
            [data.pair(grading.f, data.bracket(data.basis(a), data.basis(b))) for b in half]
            for a in half
        ]
        try:
            inv = inverse(pairing)
        except DegenerateForm as e:
            raise DegenerateForm("the pairing (f|[a, b]) on g_1/2 is degenerate") from e
        for col, b in enumerate(half):
            v[b] = {half[g]: inv[g][col] for g in range(len(half)) if not inv[g][col].is_zero}
    return DualBases(tuple(upper), v)


def check_dual_bases(
    data: LieAlgData,
    grading: GoodGrading,
    duals: DualBases,
    samples: Sequence[Mapping[int, Scalar]] = (),
) -> CheckReport:
    """Pairing deltas, u^a = [v_a, f] and the resolution-of-identity relations."""
    report = CheckReport("dual bases")
    n = data.dim
    names = data.names
    for a in range(n):
        for b in range(n):
            expected = ONE if a == b else ZERO
            got = data.pair(data.basis(a), duals.upper[b])
            report.record(f"(u_{names[a]} | u^{names[b]})", None if got == expected else str(got))
    for a in grading.half:
        for b in grading.half:
            expected = ONE if a == b else ZERO
            got = data.pair(grading.f, data.bracket(data.basis(a), duals.v[b]))
            report.record(f"<{names[a]} | v_{names[b]}>", None if got == expected else str(got))
        diff = vec_sub(duals.upper[a], data.bracket(duals.v[a], grading.f))
        report.record(f"u^{names[a]} = [v, f]", data.format_vec(diff) if diff else None)
    for s, a in enumerate(samples):
        first = combine((data.pair(a, duals.upper[i]), data.basis(i)) for i in range(n))
        second = combine((data.pair(data.basis(i), a), duals.upper[i]) for i in range(n))
        for label, got in (("upper", first), ("lower", second)):
            diff = vec_sub(got, a)
            report.record(f"sample {s} {label}", data.format_vec(diff) if diff else None)
        half = grading.pi_half(a)
        got = combine(
            (data.pair(grading.f, data.bracket(a, duals.v[i])), data.basis(i)) for i in grading.half
        )
        diff = vec_sub(got, half)
        report.record(f"sample {s} half", data.format_vec(diff) if diff else None)
    return report


def from_matrices(
    names: Sequence[str],
    matrices: Sequence[Sequence[Sequence[ScalarLike]]],
    name: str = "",
) -> LieAlgData:
    """Matrix Lie algebra with the trace form tr(XY)."""
    size = len(matrices[0])
    mats = [[[Scalar(v) for v in row] for row in m] for m in matrices]
    n = len(mats)

    def mul(a: list[list[Scalar]], b: list[list[Scalar]]) -> list[list[Scalar]]:
        return [
            [sum((a[i][k] * b[k][j] for k in range(size)), ZERO) for j in range(size)]
            for i in range(size)
        ]

    def flat(m: list[list[Scalar]]) -> list[Scalar]:
        return [m[i][j] for i in range(size) for j in range(size)]

    columns = [flat(m) for m in mats]
    rows = [{c: columns[c][e] for c in range(n) if not columns[c][e].is_zero} for e in range(size * size)]
    brackets: dict[tuple[str, str], dict[str, Scalar]] = {}
    form: dict[tuple[str, str], Scalar] = {}
    for i in range(n):
        for j in range(n):
            ab, ba = mul(mats[i], mats[j]), mul(mats[j], mats[i])
            comm = [x - y for x, y in zip(flat(ab), flat(ba))]
            if any(not c.is_zero for c in comm):
                coords = solve(rows, comm, n)
                if coords is None:
                    raise ValueError(f"[{names[i]}, {names[j]}] leaves the span of the basis")
                brackets[(names[i], names[j])] = {
                    names[k]: c for k, c in enumerate(coords) if not c.is_zero
                }
            trace = sum((ab[t][t] for t in range(size)), ZERO)
            if not trace.is_zero:
                form[(names[i], names[j])] = trace
    return LieAlgData.build(names, brackets, form, name=name)


def _unit(size: int, i: int, j: int, c: Fraction = Fraction(1)) -> list[list[Fraction]]:
    m = [[Fraction(0)] * size for _ in range(size)]
    m[i][j] = c
    return m


def _diag(values: Sequence[int]) -> list[list[Fraction]]:
    size = len(values)
    m = [[Fraction(0)] * size for _ in range(size)]
    for i, v in enumerate(values):
        m[i][i] = Fraction(v)
    return m


def sl2() -> LieAlgData:
    """sl2 with basis e, h, f and (e|f) = 1, (h|h) = 2."""
    return from_matrices(
        ["e", "h", "f"], [_unit(2, 0, 1), _diag([1, -1]), _unit(2, 1, 0)], name="sl2"
    )


def sl3() -> LieAlgData:
    """sl3 with the trace form; e13 and f31 are the highest and lowest root vectors."""
    names = ["e12", "e23", "e13", "h1", "h2", "f21", "f32", "f31"]
    mats = [
        _unit(3, 0, 1),
        _unit(3, 1, 2),
        _unit(3, 0, 2),
        _diag([1, -1, 0]),
        _diag([0, 1, -1]),
        _unit(3, 1, 0),
        _unit(3, 2, 1),
        _unit(3, 2, 0),
    ]
    return from_matrices(names, mats, name="sl3")


def sl2_grading(data: LieAlgData | None = None) -> GoodGrading:
    data = data or sl2()
    return grading_from_pair(data, data.vec({"h": Fraction(1, 2)}), data.vec({"f": 1}))


def sl3_principal(data: LieAlgData | None = None) -> GoodGrading:
    data = data or sl3()
    return grading_from_pair(data, data.vec({"h1": 1, "h2": 1}), data.vec({"f21": 1, "f32": 1}))


def sl3_minimal(data: LieAlgData | None = None) -> GoodGrading:
    data = data or sl3()
    half = Fraction(1, 2)
    return grading_from_pair(data, data.vec({"h1": half, "h2": half}), data.vec({"f31": 1}))
