"""
Sectioned text format for algebra definitions.

A file is a sequence of sections; ``#`` starts a comment::

    [params]
    c                       # formal parameter
    k = 1                   # parameter with a default specialization

    [liealg sl2]
    basis e h f
    odd                     # optional list of odd basis elements
    bracket e f = h
    bracket h e = 2*e
    form e f = 1
    form h h = 2

    [lca virasoro]
    generator L delta=2
    bracket L L = T(L) + 2*lam*L + c/12*lam^3

    [pva gfz]
    generator u delta=1
    bracket u u = lam

``[lca]`` sections may add ``hamiltonian = false``. Bracket values use the
element grammar of :mod:`lambda_forge.syntax`; one order of each pair is
enough, the other follows by skewsymmetry.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Union

import pyparsing as pp

from .errors import GradingViolation, ParseError, SpecValidationError, UnknownGenerator
from .liealg import LieAlgData
from .liealg import validate as validate_liealg
from .pva import PvaSpec
from .pva import validate as validate_pva
from .scalar import DEFAULT_PARAMS, Scalar, declare_params, params, parse_scalar
from .syntax import parse_element, parse_lambda, to_tensor
from .terms import Accumulator, Expr, GeneratorDecl, GeneratorSet, LambdaExpr
from .wick import LcaSpec, check_skewsymmetry

logger = logging.getLogger(__name__)

Spec = Union[LieAlgData, LcaSpec, PvaSpec]

SECTION_KINDS = ("params", "liealg", "lca", "pva")
STRUCTURAL_CHECKS = ("antisymmetry", "parity", "supersymmetry", "even form")
GENERATOR_KEYS = ("parity", "delta", "zeta", "charge", "coset")


def _build_line_grammar() -> dict[str, pp.ParserElement]:
    name = pp.Word(pp.alphas + "_", pp.alphanums + "_")
    rest = pp.Regex(r".+").set_name("expression")
    value = pp.Regex(r"[^\s=]+")
    return {
        "header": pp.Suppress("[") + pp.one_of(SECTION_KINDS)("kind") + pp.Optional(name)("name")
        + pp.Suppress("]"),
        "param": name("name") + pp.Optional(pp.Suppress("=") + rest("value")),
        "generator": pp.Keyword("generator").suppress()
        + name("name")
        + pp.Group(pp.ZeroOrMore(pp.Group(name + pp.Suppress("=") + value)))("options"),
        "names": pp.one_of("basis odd", as_keyword=True)("key") + pp.Group(pp.ZeroOrMore(name))("names"),
        "entry": pp.one_of("bracket form", as_keyword=True)("key")
        + name("left")
        + name("right")
        + pp.Suppress("=")
        + rest("value"),
        "option": pp.Keyword("hamiltonian")("key") + pp.Suppress("=") + pp.one_of("true false")("value"),
    }


LINE_GRAMMAR = _build_line_grammar()


@dataclass
class _Section:
    kind: str
    name: str
    line: int
    generators: list[GeneratorDecl] = field(default_factory=list)
    basis: list[str] = field(default_factory=list)
    odd: list[str] = field(default_factory=list)
    brackets: list[tuple[str, str, str, int]] = field(default_factory=list)
    forms: list[tuple[str, str, str, int]] = field(default_factory=list)
    hamiltonian: bool = True


@dataclass
class SpecFile:
    """Everything defined in one file, in file order."""

    params: list[str] = field(default_factory=list)
    assignments: dict[str, Scalar] = field(default_factory=dict)
    specs: list[Spec] = field(default_factory=list)

    def get(self, name: str) -> Spec:
        for spec in self.specs:
            if spec.name == name:
                return spec
        raise KeyError(f"no section named {name!r}")

    @property
    def primary(self) -> Spec:
        if not self.specs:
            raise ParseError("file defines no algebra", 0, 0)
        return self.specs[0]


def _strip_comment(line: str) -> str:
    return line.split("#", 1)[0].strip()


def _match(kind: str, text: str, lineno: int) -> pp.ParseResults:
    try:
        return LINE_GRAMMAR[kind].parse_string(text, parse_all=True)
    except pp.ParseException as e:
        raise ParseError(f"bad {kind} line {text!r}: {e.msg}", lineno, e.col) from e


def _generator(parsed: pp.ParseResults, lineno: int) -> GeneratorDecl:
    options: dict[str, Any] = {"id": parsed["name"]}
    for key, value in parsed["options"]:
        if key not in GENERATOR_KEYS:
            raise ParseError(f"unknown generator option {key!r}", lineno, 1)
        if key == "parity":
            options[key] = value
        elif key == "charge":
            options[key] = int(value)
        else:
            try:
                options[key] = Fraction(value)
            except ValueError as e:
                raise ParseError(f"{key}={value} is not a rational number", lineno, 1) from e
    try:
        return GeneratorDecl(**options)
    except ValueError as e:
        raise ParseError(f"invalid generator {parsed['name']!r}: {e}", lineno, 1) from e


def _read_sections(text: str, out: SpecFile) -> list[_Section]:
    sections: list[_Section] = []
    current: _Section | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line:
            continue
        if line.startswith("["):
            header = _match("header", line, lineno)
            current = _Section(header["kind"], header.get("name", ""), lineno)
            if current.kind != "params":
                sections.append(current)
            continue
        if current is None:
            raise ParseError("content before the first section header", lineno, 1)
        if current.kind == "params":
            parsed = _match("param", line, lineno)
            try:
                declare_params(parsed["name"])
            except ValueError as e:
                raise ParseError(str(e), lineno, 1) from e
            out.params.append(parsed["name"])
            if "value" in parsed:
                out.assignments[parsed["name"]] = parse_scalar(parsed["value"].strip())
        elif line.startswith("generator"):
            if current.kind == "liealg":
                raise ParseError("use 'basis' in a [liealg] section", lineno, 1)
            current.generators.append(_generator(_match("generator", line, lineno), lineno))
        elif line.startswith(("basis", "odd")) and current.kind == "liealg":
            parsed = _match("names", line, lineno)
            getattr(current, parsed["key"]).extend(parsed["names"])
        elif line.startswith(("bracket", "form")):
            parsed = _match("entry", line, lineno)
            if parsed["key"] == "form" and current.kind != "liealg":
                raise ParseError("'form' lines belong to [liealg] sections", lineno, 1)
            entry = (parsed["left"], parsed["right"], parsed["value"].strip(), lineno)
            (current.brackets if parsed["key"] == "bracket" else current.forms).append(entry)
        elif line.startswith("hamiltonian") and current.kind == "lca":
            current.hamiltonian = _match("option", line, lineno)["value"] == "true"
        else:
            raise ParseError(f"unexpected line in [{current.kind}] section: {line!r}", lineno, 1)
    return sections


def _vector(text: str, gens: GeneratorSet, lineno: int) -> dict[str, Scalar]:
    """A linear combination of basis names."""
    try:
        x = to_tensor(parse_element(text, gens))
    except ParseError as e:
        raise ParseError(e.message, lineno, e.column) from e
    out: dict[str, Scalar] = {}
    for word, c in x.items():
        if len(word) != 1 or word[0].tpow:
            raise ParseError(f"{text!r} is not a linear combination of basis elements", lineno, 1)
        out[gens[word[0].gen].id] = c
    return out


def parse_vector(data: LieAlgData, text: str) -> dict[int, Scalar]:
    """A Lie algebra element written as a combination of basis names, e.g. ``h/2``."""
    gens = GeneratorSet(GeneratorDecl(id=n) for n in data.names)
    return {data.lookup(n): c for n, c in _vector(text, gens, 1).items()}


def _build_liealg(section: _Section) -> LieAlgData:
    gens = GeneratorSet(GeneratorDecl(id=n) for n in section.basis)
    brackets = {(a, b): _vector(v, gens, ln) for a, b, v, ln in section.brackets}
    forms: dict[tuple[str, str], Scalar] = {}
    for a, b, v, ln in section.forms:
        try:
            forms[(a, b)] = parse_scalar(v)
        except ParseError as e:
            raise ParseError(e.message, ln, e.column) from e
    try:
        data = LieAlgData.build(section.basis, brackets, forms, section.odd, section.name)
    except (UnknownGenerator, ValueError) as e:
        raise ParseError(str(e), section.line, 1) from e
    report = validate_liealg(data)
    structural = [f for f in report.failures if f.subject.startswith(STRUCTURAL_CHECKS)]
    if structural:
        first = structural[0]
        raise SpecValidationError(
            first.subject.split(" (")[0].split(" [")[0], ValueError(f"{first.subject}: {first.residual}")
        )
    return data


def _entries(section: _Section) -> dict[tuple[str, str], str]:
    """Bracket strings keyed by name pair; each one is parsed once here to report its line."""
    gens = GeneratorSet(section.generators)
    out: dict[tuple[str, str], str] = {}
    for a, b, v, ln in section.brackets:
        for n in (a, b):
            if n not in gens.index:
                raise ParseError(f"unknown generator {n!r}", ln, 1)
        try:
            parse_lambda(v, gens, ("lam",))
        except ParseError as e:
            raise ParseError(e.message, ln, e.column) from e
        out[(a, b)] = v
    return out


def _build_lca(section: _Section) -> LcaSpec:
    try:
        spec = LcaSpec.from_text(section.generators, _entries(section), section.hamiltonian, section.name)
    except GradingViolation as e:
        raise SpecValidationError("GradingViolation", e) from e
    except (UnknownGenerator, ValueError) as e:
        if isinstance(e, (ParseError, SpecValidationError)):
            raise
        raise ParseError(str(e), section.line, 1) from e
    report = check_skewsymmetry(spec)
    if not report.passed:
        raise SpecValidationError("skewsymmetry", ValueError(str(report)))
    return spec


def _build_pva(section: _Section) -> PvaSpec:
    try:
        spec = PvaSpec.from_text(section.generators, _entries(section), section.name)
    except (UnknownGenerator, ValueError) as e:
        if isinstance(e, ParseError):
            raise
        raise ParseError(str(e), section.line, 1) from e
    validate_pva(spec)
    return spec


_BUILDERS = {"liealg": _build_liealg, "lca": _build_lca, "pva": _build_pva}


def parse_text(text: str) -> SpecFile:
    """Parse and validate every section; raises ParseError or SpecValidationError."""
    out = SpecFile()
    for section in _read_sections(text, out):
        spec = _BUILDERS[section.kind](section)
        logger.debug("parsed [%s %s] from line %d", section.kind, section.name, section.line)
        out.specs.append(spec)
    return out


def load_file(path: str | Path) -> SpecFile:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e.strerror}", 0, 0) from e
    logger.info("reading %s", path)
    return parse_text(text)


def parse_spec(path: str | Path) -> Spec:
    """The first algebra defined in a file."""
    return load_file(path).primary


# printing


def _format_generator(decl: GeneratorDecl) -> str:
    parts = [f"generator {decl.id}", f"delta={decl.delta}"]
    if decl.odd:
        parts.append("parity=odd")
    if decl.zeta != decl.delta:
        parts.append(f"zeta={decl.zeta}")
    if decl.charge:
        parts.append(f"charge={decl.charge}")
    if decl.coset != decl.delta - math.floor(decl.delta):
        parts.append(f"coset={decl.coset}")
    return " ".join(parts)


def _format_liealg(data: LieAlgData) -> list[str]:
    lines = [f"[liealg {data.name}]".replace(" ]", "]"), "basis " + " ".join(data.names)]
    odd = [n for n, o in zip(data.names, data.odd) if o]
    if odd:
        lines.append("odd " + " ".join(odd))
    for (i, j), vec in sorted(data.brackets.items()):
        if i <= j:
            lines.append(f"bracket {data.names[i]} {data.names[j]} = {data.format_vec(vec)}")
    for i in range(data.dim):
        for j in range(i, data.dim):
            if not data.form[i][j].is_zero:
                lines.append(f"form {data.names[i]} {data.names[j]} = {data.form[i][j]}")
    return lines


def _format_lca(spec: LcaSpec) -> list[str]:
    lines = [f"[lca {spec.name}]".replace(" ]", "]")]
    if not spec.hamiltonian:
        lines.append("hamiltonian = false")
    lines.extend(_format_generator(d) for d in spec.gens)
    for (i, j), entry in sorted(spec.table.items()):
        lines.append(f"bracket {spec.gens[i].id} {spec.gens[j].id} = {entry.format(spec.gens)}")
    return lines


def _divided_words(x: Expr) -> Expr:
    """Commutative monomials in ordinary derivatives as divided-power words."""
    acc = Accumulator()
    for mono, c in x.items():
        scale = 1
        for t in mono:
            scale *= math.factorial(t.tpow)
        acc.add_term(mono, c * scale)
    return acc.result()


def _format_pva(spec: PvaSpec) -> list[str]:
    lines = [f"[pva {spec.name}]".replace(" ]", "]")]
    lines.extend(_format_generator(d) for d in spec.gens)
    for (i, j), poly in sorted(spec.table.items()):
        entry = LambdaExpr(("lam",), {(n,): _divided_words(x) for n, x in poly.items()})
        lines.append(f"bracket {spec.gens[i].id} {spec.gens[j].id} = {entry.format(spec.gens)}")
    return lines


def format_spec(spec: Spec) -> str:
    if isinstance(spec, LieAlgData):
        lines = _format_liealg(spec)
    elif isinstance(spec, LcaSpec):
        lines = _format_lca(spec)
    else:
        lines = _format_pva(spec)
    return "\n".join(lines) + "\n"


def format_file(specs: SpecFile | Spec) -> str:
    """Text that parses back to the same definitions."""
    if not isinstance(specs, SpecFile):
        specs = SpecFile(specs=[specs])
    names = specs.params or [n for n in params() if n not in DEFAULT_PARAMS]
    blocks = []
    if names or specs.assignments:
        lines = ["[params]"]
        for name in names:
            value = specs.assignments.get(name)
            lines.append(name if value is None else f"{name} = {value}")
        blocks.append("\n".join(lines) + "\n")
    blocks.extend(format_spec(spec) for spec in specs.specs)
    return "\n".join(blocks)


__all__ = [
    "LINE_GRAMMAR",
    "SpecFile",
    "Spec",
    "format_file",
    "format_spec",
    "load_file",
    "parse_spec",
    "parse_vector",
    "parse_text",
]
