"""
Command-line interface.

Every command returns an exit code: 0 when the computation succeeded and all
identities held, 1 when an identity failed or an engine error occurred, 2 on
usage, parse and validation errors. ``--machine`` prints one JSON document
per invocation; text mode prints the same canonical forms.
"""

from __future__ import annotations

import itertools
import json
import logging
import sys
from collections.abc import Sequence
from fractions import Fraction
from pathlib import Path
from typing import Any

import click
from pydantic import ValidationError

from . import __version__
from .builtins import builtin, grading
from .config import SessionConfig, configure_logging
from .constructions import dirac as dirac_operator
from .errors import (
    LambdaForgeError,
    ParseError,
    SpecValidationError,
    UnknownGenerator,
    UnknownParam,
    create_error_response,
    create_success_response,
)
from .fileformat import Spec, load_file, parse_vector
from .liealg import GoodGrading, LieAlgData, grading_from_pair
from .liealg import validate as validate_liealg
from .pva import (
    PvaSpec,
    PvaZhu,
    hamiltonian_flow,
    involution_bracket,
    kdv_hamiltonians,
    pva_bracket,
)
from .pva import check_jacobi as pva_check_jacobi
from .pva import check_skewsymmetry as pva_check_skewsymmetry
from .reports import CheckReport
from .scalar import Scalar, parse_scalar
from .terms import Expr, GeneratorSet, LambdaExpr, expr_tree, lambda_tree
from .walgebra import (
    FiniteW,
    WComplex,
    read_virasoro,
    solve_generators,
    w_bracket_table,
)
from .whittaker import slodowy_dims, whittaker_invariants
from .wick import (
    LcaSpec,
    WickEngine,
    check_integral_bracket,
    check_jacobi,
    check_left_wick,
    check_quasicommutativity,
    check_skewsymmetry,
    check_weak_quasi_associativity,
)
from .zhu import ZhuAlgebra

logger = logging.getLogger(__name__)

MACHINE_FORMAT = "lambda-forge"
MACHINE_VERSION = 1

USAGE_ERRORS = (ParseError, SpecValidationError, UnknownGenerator, UnknownParam, KeyError)


class UsageFailure(click.UsageError):
    """Raised by commands for inconsistent option combinations."""


class FractionType(click.ParamType):
    """Exact rationals such as ``3`` or ``3/2``."""

    name = "fraction"

    def convert(self, value: Any, param: click.Parameter | None, ctx: click.Context | None) -> Fraction:
        if isinstance(value, Fraction):
            return value
        try:
            return Fraction(str(value).strip())
        except (ValueError, ZeroDivisionError):
            self.fail(f"{value!r} is not a rational number", param, ctx)


FRACTION = FractionType()


class Session:
    """Per-invocation state: validated config, loaded specs and output."""

    def __init__(self, config: SessionConfig) -> None:
        self.config = config
        self._file_assignments: dict[str, Scalar] = {}
        self._assignments: dict[str, Scalar] | None = None

    @property
    def machine(self) -> bool:
        return self.config.output == "machine"

    @property
    def assignments(self) -> dict[str, Scalar]:
        return self.resolve_assignments()

    def resolve_assignments(self) -> dict[str, Scalar]:
        """--set values over the [params] values of the loaded file; undeclared names raise."""
        if self._assignments is None:
            resolved = dict(self._file_assignments)
            resolved.update(self.config.parsed_assignments())
            self._assignments = resolved
        return self._assignments

    # inputs

    def load(self, path: Path | None, builtin_name: str | None) -> Spec:
        if (path is None) == (builtin_name is None):
            raise UsageFailure("give exactly one of a spec file or --builtin")
        if builtin_name is not None:
            spec = builtin(builtin_name)
        else:
            specs = load_file(path)
            self._file_assignments.update(specs.assignments)
            spec = specs.primary
        self.resolve_assignments()
        return spec

    def liealg(self, algebra: str) -> LieAlgData:
        if Path(algebra).exists():
            specs = load_file(algebra)
            self._file_assignments.update(specs.assignments)
            spec = specs.primary
        else:
            spec = builtin(algebra)
        if not isinstance(spec, LieAlgData):
            raise UsageFailure(f"{algebra} does not define a Lie superalgebra")
        self.resolve_assignments()
        return spec

    def grading(self, data: LieAlgData, kind: str, x: str | None, f: str | None) -> GoodGrading:
        if x is not None or f is not None:
            if x is None or f is None:
                raise UsageFailure("--x and --f go together")
            return grading_from_pair(data, parse_vector(data, x), parse_vector(data, f))
        return grading(data, kind)

    def level(self, text: str | None) -> Scalar | None:
        return None if text is None else parse_scalar(text)

    # outputs

    def specialize(self, x: Any) -> Any:
        if not self.assignments:
            return x
        if isinstance(x, (Expr, LambdaExpr, Scalar)):
            return x.substitute(self.assignments)
        return x

    def expr(self, x: Expr, gens: GeneratorSet, fmt: Any = None) -> tuple[str, Any]:
        """Text and machine forms of one element."""
        x = self.specialize(x)
        text = fmt(x) if fmt is not None else gens.format(x)
        return text, expr_tree(x, gens)

    def bracket(self, x: LambdaExpr, gens: GeneratorSet) -> tuple[str, Any]:
        x = self.specialize(x)
        return x.format(gens), lambda_tree(x, gens)

    def scalar(self, s: Scalar) -> str:
        return str(self.specialize(s))

    def emit(
        self,
        lines: Sequence[str],
        result: Any,
        reports: Sequence[CheckReport] = (),
        ok: bool = True,
    ) -> int:
        ok = ok and all(r.passed for r in reports)
        if self.machine:
            payload = create_success_response(
                result,
                format=MACHINE_FORMAT,
                version=MACHINE_VERSION,
                command=self.config.command,
                passed=ok,
                reports=[r.to_dict() for r in reports],
            )
            click.echo(json.dumps(payload, indent=2, sort_keys=True))
        else:
            for line in lines:
                click.echo(line)
            for report in reports:
                click.echo(str(report))
        return 0 if ok else 1


def _emit_error(config: SessionConfig | None, error: Exception, code: int) -> int:
    if config is not None and config.output == "machine":
        payload = create_error_response(error)
        payload.update(format=MACHINE_FORMAT, version=MACHINE_VERSION, exit_code=code)
        click.echo(json.dumps(payload, indent=2, sort_keys=True))
    else:
        click.echo(f"error: {error}", err=True)
    return code


def _parse_assignments(items: Sequence[str]) -> dict[str, str]:
    out = {}
    for item in items:
        name, sep, value = item.partition("=")
        if not sep or not name.strip() or not value.strip():
            raise UsageFailure(f"--set expects NAME=VALUE, got {item!r}")
        out[name.strip()] = value.strip()
    return out


pass_session = click.make_pass_decorator(Session)

spec_argument = click.argument(
    "path", required=False, type=click.Path(exists=True, dir_okay=False, path_type=Path)
)
builtin_option = click.option("--builtin", "builtin_name", help="Use a built-in algebra instead of a file.")
algebra_options = [
    click.option("--algebra", default="sl2", show_default=True, help="Built-in name or [liealg] file."),
    click.option("--grading", "kind", default="principal", show_default=True),
    click.option("--x", "x", help="Grading element, e.g. 'h/2' (with --f)."),
    click.option("--f", "f", help="Nilpotent element, e.g. 'f' (with --x)."),
    click.option("--level", help="Level k (formal when omitted)."),
]


def with_algebra(fn: Any) -> Any:
    for option in reversed(algebra_options):
        fn = option(fn)
    return fn


@click.group()
@click.version_option(__version__, prog_name="lambda-forge")
@click.option("--machine", is_flag=True, help="Print one JSON document instead of text.")
@click.option("-v", "--verbose", count=True, help="-v for INFO, -vv for DEBUG (stderr).")
@click.option("--set", "assignments", multiple=True, metavar="NAME=VALUE", help="Specialize a parameter.")
@click.option("--threads", type=int, default=None, help="Worker threads (default LAMBDA_FORGE_THREADS or 1).")
@click.pass_context
def cli(
    ctx: click.Context,
    machine: bool,
    verbose: int,
    assignments: tuple[str, ...],
    threads: int | None,
) -> None:
    """Exact lambda-bracket computations."""
    options: dict[str, Any] = {
        "command": ctx.invoked_subcommand or "",
        "output": "machine" if machine else "text",
        "assignments": _parse_assignments(assignments),
        "verbosity": verbose,
    }
    if threads is not None:
        options["threads"] = threads
    config = SessionConfig(**options)
    configure_logging(config.log_level, sys.stderr)
    ctx.obj = Session(config)


# check


def run_checks(spec: Spec, identities: bool = False, exhaustive: bool = False, threads: int = 1) -> list[CheckReport]:
    """Skewsymmetry and Jacobi (plus the extra identity battery on request)."""
    if isinstance(spec, LieAlgData):
        return [validate_liealg(spec)]
    if isinstance(spec, PvaSpec):
        reports = [pva_check_skewsymmetry(spec), pva_check_jacobi(spec)]
        if identities:
            reports.append(PvaZhu(spec).check())
        return reports
    engine = WickEngine(spec)
    reports = [check_skewsymmetry(spec, engine), check_jacobi(spec, engine, exhaustive, threads)]
    if identities:
        reports.extend(
            [
                check_quasicommutativity(spec, engine),
                check_weak_quasi_associativity(spec, engine),
                check_left_wick(spec, engine),
                check_integral_bracket(spec, engine),
            ]
        )
    return reports


@cli.command()
@spec_argument
@builtin_option
@click.option("--identities", is_flag=True, help="Also run the quasi-associativity and Wick batteries.")
@click.option("--exhaustive", is_flag=True, help="Jacobi on all ordered triples.")
@pass_session
def check(session: Session, path: Path | None, builtin_name: str | None, identities: bool, exhaustive: bool) -> int:
    """Skewsymmetry and Jacobi identity of a spec."""
    spec = session.load(path, builtin_name)
    reports = run_checks(spec, identities, exhaustive, session.config.threads)
    return session.emit([], {"spec": spec.name}, reports)


# ope and nf


def _engine_spec(spec: Spec) -> LcaSpec | PvaSpec:
    if isinstance(spec, LieAlgData):
        raise UsageFailure("this command needs an [lca] or [pva] spec")
    return spec


@cli.command()
@click.argument("a")
@click.argument("b")
@spec_argument
@builtin_option
@pass_session
def ope(session: Session, a: str, b: str, path: Path | None, builtin_name: str | None) -> int:
    """The lambda-bracket [A lam B]."""
    spec = _engine_spec(session.load(path, builtin_name))
    if isinstance(spec, PvaSpec):
        algebra = spec.algebra
        poly = pva_bracket(algebra.parse(a), algebra.parse(b), spec)
        text = spec.format_lam(
            {n: session.specialize(x) for n, x in poly.items()}
        )
        tree = {str(n): expr_tree(session.specialize(x), spec.gens) for n, x in sorted(poly.items())}
        return session.emit([text], {"bracket": tree})
    engine = WickEngine(spec)
    text, tree = session.bracket(engine.lambda_bracket(engine.parse(a), engine.parse(b)), spec.gens)
    return session.emit([text], {"bracket": tree})


@cli.command()
@click.argument("expression")
@spec_argument
@builtin_option
@pass_session
def nf(session: Session, expression: str, path: Path | None, builtin_name: str | None) -> int:
    """Normal form of an expression."""
    spec = _engine_spec(session.load(path, builtin_name))
    if isinstance(spec, PvaSpec):
        text, tree = session.expr(spec.algebra.parse(expression), spec.gens, spec.format)
    else:
        text, tree = session.expr(WickEngine(spec).parse(expression), spec.gens)
    return session.emit([text], {"normal_form": tree})


# zhu


@cli.group()
def zhu() -> None:
    """Computations in the H-twisted Zhu algebra."""


def _zhu(session: Session, path: Path | None, builtin_name: str | None) -> tuple[WickEngine, ZhuAlgebra]:
    spec = session.load(path, builtin_name)
    if not isinstance(spec, LcaSpec):
        raise UsageFailure("zhu commands need an [lca] spec")
    engine = WickEngine(spec)
    return engine, ZhuAlgebra(engine)


@zhu.command("product")
@click.argument("a")
@click.argument("b")
@spec_argument
@builtin_option
@pass_session
def zhu_product(session: Session, a: str, b: str, path: Path | None, builtin_name: str | None) -> int:
    """pi_Z(A) * pi_Z(B) in PBW form."""
    engine, algebra = _zhu(session, path, builtin_name)
    z = algebra.multiply(algebra.project(engine.parse(a)), algebra.project(engine.parse(b)))
    text, tree = session.expr(z, engine.gens, algebra.format)
    return session.emit([text], {"product": tree})


@zhu.command("commutator")
@click.argument("a")
@click.argument("b")
@spec_argument
@builtin_option
@pass_session
def zhu_commutator_cmd(session: Session, a: str, b: str, path: Path | None, builtin_name: str | None) -> int:
    """[pi_Z(A), pi_Z(B)] (supercommutator)."""
    engine, algebra = _zhu(session, path, builtin_name)
    x, y = engine.parse(a), engine.parse(b)
    za, zb = algebra.project(x), algebra.project(y)
    z = algebra.multiply(za, zb) - algebra.multiply(zb, za).scale(engine.sign(x, y))
    text, tree = session.expr(z, engine.gens, algebra.format)
    return session.emit([text], {"commutator": tree})


@zhu.command("pi")
@click.argument("expression")
@spec_argument
@builtin_option
@pass_session
def zhu_pi(session: Session, expression: str, path: Path | None, builtin_name: str | None) -> int:
    """The Zhu projection pi_Z of an element."""
    engine, algebra = _zhu(session, path, builtin_name)
    text, tree = session.expr(algebra.project(engine.parse(expression)), engine.gens, algebra.format)
    return session.emit([text], {"image": tree})


# W-algebras


@cli.group()
def walg() -> None:
    """Quantum Hamiltonian reduction W^k(g, f)."""


def _complex(session: Session, algebra: str, kind: str, x: str | None, f: str | None, level: str | None) -> WComplex:
    data = session.liealg(algebra)
    return WComplex(data, session.grading(data, kind, x, f), session.level(level))


@walg.command("build")
@with_algebra
@click.option("--em", is_flag=True, help="Also check the energy-momentum field.")
@pass_session
def walg_build(
    session: Session, algebra: str, kind: str, x: str | None, f: str | None, level: str | None, em: bool
) -> int:
    """Build the complex C_k and check d."""
    complex = _complex(session, algebra, kind, x, f, level)
    c = session.scalar(complex.central_charge)
    reports = [complex.check_differential()]
    if em:
        reports.append(complex.check_energy_momentum())
    lines = [
        f"complex for {complex.data.name}: {len(complex.spec.gens)} generators",
        f"central charge: {c}",
    ]
    return session.emit(lines, {"generators": complex.spec.gens.names(), "central_charge": c}, reports)


@walg.command("generators")
@with_algebra
@click.option("--maxdelta", type=FRACTION, default=None, help="Largest conformal weight to solve for.")
@pass_session
def walg_generators(
    session: Session,
    algebra: str,
    kind: str,
    x: str | None,
    f: str | None,
    level: str | None,
    maxdelta: Fraction | None,
) -> int:
    """Free generators E_i with d(E_i) = 0."""
    complex = _complex(session, algebra, kind, x, f, level)
    wgens = solve_generators(complex, maxdelta, session.config.threads)
    report = CheckReport("closed generators")
    lines, entries = [], []
    gens = wgens.reduced.gens
    for entry in wgens.entries:
        text, tree = session.expr(entry.element, gens)
        residual = wgens.reduced.differential(entry.element)
        report.record(entry.name, gens.format(residual) if residual else None)
        lines.append(f"{entry.name} (weight {entry.delta}) = {text}")
        lines.append(f"  d({entry.name}) = {gens.format(residual)}")
        entries.append({"name": entry.name, "delta": str(entry.delta), "element": tree})
    return session.emit(lines, {"generators": entries}, [report])


@walg.command("bracket")
@with_algebra
@click.option("--maxdelta", type=FRACTION, default=None)
@pass_session
def walg_bracket(
    session: Session,
    algebra: str,
    kind: str,
    x: str | None,
    f: str | None,
    level: str | None,
    maxdelta: Fraction | None,
) -> int:
    """lambda-brackets of the generators, expressed in the generators."""
    complex = _complex(session, algebra, kind, x, f, level)
    wgens = solve_generators(complex, maxdelta, session.config.threads)
    lines, table = [], {}
    for (a, b), poly in w_bracket_table(wgens).items():
        text, tree = session.bracket(poly, wgens.gens)
        lines.append(f"[{a} lam {b}] = {text}")
        table[f"{a},{b}"] = tree
    result: dict[str, Any] = {"brackets": table}
    virasoro = read_virasoro(wgens)
    if virasoro is not None:
        scale, c = virasoro
        lines.append(f"{wgens[0].name} = ({session.scalar(scale)}) L with central charge {session.scalar(c)}")
        result["virasoro"] = {"scale": session.scalar(scale), "central_charge": session.scalar(c)}
    return session.emit(lines, result)


@walg.command("finite")
@with_algebra
@click.option("--maxdelta", type=FRACTION, default=None)
@pass_session
def walg_finite(
    session: Session,
    algebra: str,
    kind: str,
    x: str | None,
    f: str | None,
    level: str | None,
    maxdelta: Fraction | None,
) -> int:
    """Commutators of the finite W-algebra computed two ways."""
    complex = _complex(session, algebra, kind, x, f, level)
    fw = FiniteW(solve_generators(complex, maxdelta, session.config.threads))
    names = [e.name for e in fw.wgens.entries]
    lines, table = [], {}
    for i, j in itertools.combinations_with_replacement(range(len(names)), 2):
        text, tree = session.expr(fw.commutator(i, j), fw.reduced.gens, fw.zhu_reduced.format)
        lines.append(f"[{names[i]}, {names[j]}] = {text}")
        table[f"{names[i]},{names[j]}"] = tree
    return session.emit(lines, {"commutators": table}, [fw.check()])


@walg.command("whittaker")
@with_algebra
@click.option("--cutoff", type=FRACTION, default="2", show_default=True, help="Kazhdan degree bound.")
@click.option("--l", "isotropic", default="", help="Space-separated basis names spanning l in g_1/2.")
@pass_session
def walg_whittaker(
    session: Session,
    algebra: str,
    kind: str,
    x: str | None,
    f: str | None,
    level: str | None,
    cutoff: Fraction,
    isotropic: str,
) -> int:
    """Graded dimensions of Whittaker invariants against S(g^f)."""
    data = session.liealg(algebra)
    g = session.grading(data, kind, x, f)
    l = [data.lookup(n) for n in isotropic.split()]
    dims = whittaker_invariants(data, g, cutoff, l)
    expected = slodowy_dims(g, cutoff)
    report = CheckReport("whittaker dimensions")
    lines = []
    for d in sorted(expected):
        got = dims.get(d, 0)
        report.record(f"degree {d}", None if got == expected[d] else f"{got} != {expected[d]}")
        lines.append(f"degree {d}: {got} (S(g^f): {expected[d]})")
    result = {"dims": {str(d): n for d, n in sorted(dims.items())}, "expected": {str(d): n for d, n in sorted(expected.items())}}
    return session.emit(lines, result, [report])


# dirac


@cli.command()
@click.option("--algebra", default="sl2", show_default=True)
@click.option("--classical", is_flag=True, help="Also check {D, D} = 2C at hbar = 0.")
@pass_session
def dirac(session: Session, algebra: str, classical: bool) -> int:
    """Cubic Dirac operator in the Zhu algebra at k + h_dual = 1."""
    op = dirac_operator(session.liealg(algebra))
    reports = [op.check()]
    if classical:
        reports.append(op.classical_check())
    text, tree = session.expr(op.D, op.zhu.gens, op.zhu.format)
    lines = [f"D = {text}", f"D^2 - C = {session.scalar(op.shift)}"]
    return session.emit(lines, {"D": tree, "shift": session.scalar(op.shift)}, reports)


# pva


@cli.group()
def pva() -> None:
    """Poisson vertex algebras and Hamiltonian equations."""


def _pva_spec(session: Session, path: Path | None, builtin_name: str | None) -> PvaSpec:
    spec = session.load(path, builtin_name)
    if not isinstance(spec, PvaSpec):
        raise UsageFailure("pva commands need a [pva] spec")
    return spec


def _density(spec: PvaSpec, text: str) -> Expr:
    """A named KdV Hamiltonian (h0, h1, h2) or a density written in the element syntax."""
    if text in ("h0", "h1", "h2") and len(spec.gens) == 1:
        return kdv_hamiltonians(spec)[text]
    return spec.algebra.parse(text)


@pva.command("flow")
@spec_argument
@builtin_option
@click.option("--h", "density", required=True, help="h0, h1, h2 or a density expression.")
@click.option("--target", default=None, help="Generator whose evolution is printed (default: the first).")
@pass_session
def pva_flow(
    session: Session, path: Path | None, builtin_name: str | None, density: str, target: str | None
) -> int:
    """du/dt = {h, u} for a local functional h."""
    spec = _pva_spec(session, path, builtin_name)
    u = spec.algebra.u(spec.gens.lookup(target) if target else 0)
    text, tree = session.expr(hamiltonian_flow(_density(spec, density), u, spec), spec.gens, spec.format)
    return session.emit([text], {"flow": tree})


@pva.command("involution")
@spec_argument
@builtin_option
@click.option("--h", "densities", multiple=True, required=True, help="Repeat for each Hamiltonian.")
@pass_session
def pva_involution(
    session: Session, path: Path | None, builtin_name: str | None, densities: tuple[str, ...]
) -> int:
    """{h_i, h_j} = 0 modulo total derivatives for every pair."""
    spec = _pva_spec(session, path, builtin_name)
    hs = [(name, _density(spec, name)) for name in densities]
    report = CheckReport("involution")
    for (na, a), (nb, b) in itertools.combinations_with_replacement(hs, 2):
        residual = involution_bracket(a, b, spec)
        report.record(f"{{{na}, {nb}}}", spec.format(residual) if residual else None)
    return session.emit([], {"pairs": report.checked}, [report])


@pva.command("zhu")
@spec_argument
@builtin_option
@pass_session
def pva_zhu_cmd(session: Session, path: Path | None, builtin_name: str | None) -> int:
    """Brackets of the Zhu (Poisson) algebra of a PVA."""
    spec = _pva_spec(session, path, builtin_name)
    algebra = PvaZhu(spec)
    names = spec.gens.names()
    lines, table = [], {}
    for i, j in itertools.combinations_with_replacement(range(len(names)), 2):
        text, tree = session.expr(algebra.generator_bracket(i, j), spec.gens, algebra.format)
        lines.append(f"{{{names[i]}, {names[j]}}} = {text}")
        table[f"{names[i]},{names[j]}"] = tree
    return session.emit(lines, {"brackets": table}, [algebra.check()])


def _session_config(ctx: click.Context | None) -> SessionConfig | None:
    if ctx is not None and isinstance(ctx.obj, Session):
        return ctx.obj.config
    return None


def main(argv: Sequence[str] | None = None) -> int:
    """Entry point of the ``lambda-forge`` script; returns the exit code."""
    args = list(sys.argv[1:] if argv is None else argv)
    ctx: click.Context | None = None
    try:
        ctx = cli.make_context("lambda-forge", args)
        with ctx:
            result = cli.invoke(ctx)
        return result if isinstance(result, int) else 0
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.UsageError as e:
        e.show()
        return 2
    except ValidationError as e:
        return _emit_error(None, e, 2)
    except USAGE_ERRORS as e:
        return _emit_error(_session_config(ctx), e, 2)
    except LambdaForgeError as e:
        logger.error("%s: %s", type(e).__name__, e)
        return _emit_error(_session_config(ctx), e, 1)


if __name__ == "__main__":
    sys.exit(main())
