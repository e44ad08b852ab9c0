#!/usr/bin/env python3
"""
lambda-forge MCP server.

Exposes the bracket engine as Model Context Protocol tools: lambda-brackets
and normal forms in a spec, identity checks, Zhu commutators, W-algebra
generators and Hamiltonian flows of Poisson vertex algebras. Every tool
returns the ``{"success": ..., "result": ...}`` dictionaries of
:mod:`lambda_forge.errors`.
"""

from __future__ import annotations

import asyncio
import logging
import sys
from fractions import Fraction
from typing import Any, Optional

from fastmcp import Context, FastMCP
from pydantic import Field

from . import __version__, prompts
from .builtins import BUILTINS, builtin, grading
from .cli import run_checks
from .config import configure_logging
from .errors import LambdaForgeError, create_error_response, create_success_response
from .fileformat import Spec, parse_text
from .liealg import LieAlgData
from .pva import PvaSpec, hamiltonian_flow, kdv_hamiltonians
from .scalar import parse_scalar
from .terms import expr_tree, lambda_tree
from .walgebra import WComplex, solve_generators
from .wick import LcaSpec, WickEngine
from .zhu import ZhuAlgebra

logger = logging.getLogger("lambda-forge-server")

mcp = FastMCP("lambda-forge")

TOOLS = [
    "lambda_bracket",
    "normal_form",
    "check_spec",
    "zhu_commutator",
    "walgebra_generators",
    "pva_flow",
    "health_check",
]


def _load(builtin_name: Optional[str], spec_text: Optional[str]) -> Spec:
    if (builtin_name is None) == (spec_text is None):
        raise ValueError("give exactly one of builtin or spec_text")
    if builtin_name is not None:
        return builtin(builtin_name)
    return parse_text(spec_text or "").primary


def _lca(spec: Spec) -> LcaSpec:
    if not isinstance(spec, LcaSpec):
        raise ValueError(f"{spec.name or 'spec'} is not an [lca] spec")
    return spec


@mcp.tool()
async def lambda_bracket(
    ctx: Context,
    a: str = Field(description="Left element, e.g. 'L' or ':e f:'"),
    b: str = Field(description="Right element"),
    builtin_name: Optional[str] = Field(default=None, description="Built-in algebra, e.g. 'virasoro'"),
    spec_text: Optional[str] = Field(default=None, description="Spec file contents with an [lca] section"),
) -> dict[str, Any]:
    """Compute the lambda-bracket [a lam b] in the vertex algebra of a spec."""
    try:
        await ctx.info(f"Computing [{a} lam {b}]")
        engine = WickEngine(_lca(_load(builtin_name, spec_text)))
        poly = await asyncio.to_thread(engine.lambda_bracket, engine.parse(a), engine.parse(b))
        return create_success_response(
            {"text": poly.format(engine.gens), "tree": lambda_tree(poly, engine.gens)}
        )
    except (LambdaForgeError, ValueError, KeyError) as e:
        await ctx.error(f"Error in lambda_bracket: {e}")
        return create_error_response(e)


@mcp.tool()
async def normal_form(
    ctx: Context,
    expression: str = Field(description="Expression in the element syntax"),
    builtin_name: Optional[str] = Field(default=None, description="Built-in algebra"),
    spec_text: Optional[str] = Field(default=None, description="Spec file contents"),
) -> dict[str, Any]:
    """Normal form of an expression (vertex algebra or PVA)."""
    try:
        await ctx.info(f"Normal form of {expression}")
        spec = _load(builtin_name, spec_text)
        if isinstance(spec, PvaSpec):
            x = spec.algebra.parse(expression)
            text = spec.format(x)
        else:
            engine = WickEngine(_lca(spec))
            x = await asyncio.to_thread(engine.parse, expression)
            text = engine.format(x)
        return create_success_response({"text": text, "tree": expr_tree(x, spec.gens)})
    except (LambdaForgeError, ValueError, KeyError) as e:
        await ctx.error(f"Error in normal_form: {e}")
        return create_error_response(e)


@mcp.tool()
async def check_spec(
    ctx: Context,
    builtin_name: Optional[str] = Field(default=None, description="Built-in algebra"),
    spec_text: Optional[str] = Field(default=None, description="Spec file contents"),
    identities: bool = Field(default=False, description="Also run the extra identity battery"),
) -> dict[str, Any]:
    """Run skewsymmetry and Jacobi (or Lie algebra validation) on a spec."""
    try:
        spec = _load(builtin_name, spec_text)
        await ctx.info(f"Checking {spec.name or 'spec'}")
        reports = await asyncio.to_thread(run_checks, spec, identities)
        passed = all(r.passed for r in reports)
        if not passed:
            await ctx.info("Some identities failed")
        return create_success_response([r.to_dict() for r in reports], passed=passed)
    except (LambdaForgeError, ValueError, KeyError) as e:
        await ctx.error(f"Error in check_spec: {e}")
        return create_error_response(e)


@mcp.tool()
async def zhu_commutator(
    ctx: Context,
    a: str = Field(description="Left element"),
    b: str = Field(description="Right element"),
    builtin_name: Optional[str] = Field(default=None, description="Built-in algebra"),
    spec_text: Optional[str] = Field(default=None, description="Spec file contents with an [lca] section"),
) -> dict[str, Any]:
    """Supercommutator of the Zhu images of a and b, in PBW form."""
    try:
        await ctx.info(f"Computing [pi_Z({a}), pi_Z({b})]")
        engine = WickEngine(_lca(_load(builtin_name, spec_text)))
        zhu = ZhuAlgebra(engine)
        x, y = engine.parse(a), engine.parse(b)

        def run() -> Any:
            za, zb = zhu.project(x), zhu.project(y)
            return zhu.multiply(za, zb) - zhu.multiply(zb, za).scale(engine.sign(x, y))

        z = await asyncio.to_thread(run)
        return create_success_response({"text": zhu.format(z), "tree": expr_tree(z, engine.gens)})
    except (LambdaForgeError, ValueError, KeyError) as e:
        await ctx.error(f"Error in zhu_commutator: {e}")
        return create_error_response(e)


@mcp.tool()
async def walgebra_generators(
    ctx: Context,
    algebra: str = Field(default="sl2", description="Built-in Lie algebra (sl2, sl3)"),
    grading_name: str = Field(default="principal", description="Named good grading"),
    level: Optional[str] = Field(default=None, description="Level k; formal when omitted"),
    max_delta: Optional[str] = Field(default=None, description="Largest conformal weight"),
) -> dict[str, Any]:
    """Free generators E_i of W^k(g, f) with d(E_i) = 0."""
    try:
        data = builtin(algebra)
        if not isinstance(data, LieAlgData):
            raise ValueError(f"{algebra} is not a Lie superalgebra")
        await ctx.info(f"Building the complex for {algebra} ({grading_name})")
        complex = WComplex(data, grading(data, grading_name), parse_scalar(level) if level else None)
        limit = Fraction(max_delta) if max_delta else None
        wgens = await asyncio.to_thread(solve_generators, complex, limit)
        gens = wgens.reduced.gens
        entries = [
            {
                "name": e.name,
                "delta": str(e.delta),
                "text": gens.format(e.element),
                "tree": expr_tree(e.element, gens),
            }
            for e in wgens.entries
        ]
        await ctx.info(f"Solved {len(entries)} generators")
        return create_success_response(entries, central_charge=str(complex.central_charge))
    except (LambdaForgeError, ValueError, KeyError) as e:
        await ctx.error(f"Error in walgebra_generators: {e}")
        return create_error_response(e)


@mcp.tool()
async def pva_flow(
    ctx: Context,
    hamiltonian: str = Field(default="h2", description="h0, h1, h2 or a density expression"),
    builtin_name: Optional[str] = Field(default="gfz", description="Built-in PVA"),
    spec_text: Optional[str] = Field(default=None, description="Spec file contents with a [pva] section"),
    target: Optional[str] = Field(default=None, description="Generator to evolve (default: the first)"),
) -> dict[str, Any]:
    """Hamiltonian flow du/dt = {h, u} of a local functional."""
    try:
        spec = _load(None if spec_text else builtin_name, spec_text)
        if not isinstance(spec, PvaSpec):
            raise ValueError(f"{spec.name or 'spec'} is not a [pva] spec")
        await ctx.info(f"Flow of {hamiltonian}")
        if hamiltonian in ("h0", "h1", "h2") and len(spec.gens) == 1:
            density = kdv_hamiltonians(spec)[hamiltonian]
        else:
            density = spec.algebra.parse(hamiltonian)
        u = spec.algebra.u(spec.gens.lookup(target) if target else 0)
        flow = hamiltonian_flow(density, u, spec)
        return create_success_response({"text": spec.format(flow), "tree": expr_tree(flow, spec.gens)})
    except (LambdaForgeError, ValueError, KeyError) as e:
        await ctx.error(f"Error in pva_flow: {e}")
        return create_error_response(e)


@mcp.tool()
async def health_check(ctx: Context) -> dict[str, Any]:
    """Server status, version, tools and built-in algebras."""
    try:
        await ctx.info("Performing health check")
        health_data = {
            "status": "HEALTHY",
            "version": __version__,
            "server_name": "lambda-forge",
            "tools_available": TOOLS,
            "total_tools": len(TOOLS),
            "builtins": sorted(BUILTINS),
        }
        return create_success_response(health_data)
    except Exception as e:
        await ctx.error(f"Error in health_check: {e}")
        return create_error_response(e, f"Health check failed: {e}")


def main() -> None:
    """Entry point of the ``lambda-forge-server`` script."""
    configure_logging(logging.INFO)
    try:
        logger.info("Starting lambda-forge MCP server %s", __version__)
        logger.info("Available tools: %s", ", ".join(TOOLS))
        prompts.register_prompts(mcp)
        logger.info(prompts.get_prompt_summary())
        mcp.run()
    except KeyboardInterrupt:
        logger.info("Server stopped by user")
    except Exception as e:
        logger.error(f"Server error: {e}")
        sys.exit(1)


if __name__ == "__main__":
    main()
