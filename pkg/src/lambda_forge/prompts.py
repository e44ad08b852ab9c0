"""
MCP prompts for the lambda-forge server.

Guides for agents driving the tools: which tool answers which question, and
the expression syntax every tool accepts.
"""

from __future__ import annotations

import logging
from typing import Any

from fastmcp import Context, FastMCP

from .builtins import BUILTINS

logger = logging.getLogger(__name__)

EXPRESSION_SYNTAX = """
Elements are written in one grammar shared by every tool and by spec files:

    |0>                the vacuum
    L, e, phi          generators declared in the spec
    T(x), T^n(x)       divided powers T^(n) x = T^n x / n!
    :x y z:            normally ordered product, nested to the right :x :y z::
    lam, lam^3         the formal variable of a bracket (spec tables only)
    3/2*x, (k/(k+2))*x scalar multiples; k, c, eps, hbar are formal parameters

Examples: ':e f:', 'T(L) + 2*lam*L + c/12*lam^3', '(1/(k+2))*:h h:'.

In [pva] specs the same grammar reads words as commutative products, so
':u u:' is u^2 and 'T^2(u)' is u''/2.
"""

SPEC_FORMAT = """
A spec file has sections; '#' starts a comment.

    [params]
    c

    [lca virasoro]
    generator L delta=2
    bracket L L = T(L) + 2*lam*L + c/12*lam^3

[liealg] sections list 'basis', optional 'odd', 'bracket a b = vector' and
'form a b = scalar'; [pva] sections use 'generator' and 'bracket' lines.
One order of each pair is enough.
"""


def register_prompts(mcp: FastMCP) -> None:
    """Register the lambda-forge prompts with the MCP server."""

    @mcp.prompt("lambda-forge-guide")
    async def get_lambda_forge_guide(ctx: Context) -> dict[str, Any]:
        """
        Guide to the lambda-forge tools.

        Explains which tool to call for brackets, checks, Zhu algebras,
        W-algebras and Hamiltonian flows.
        """
        return {
            "main_prompt": """
You have tools for exact computations with lambda-brackets. Results are exact
rational functions of the formal parameters; nothing is approximated.

**AVAILABLE TOOLS:**
- `lambda_bracket` - [a lam b] in the vertex algebra of a spec
- `normal_form` - canonical normally ordered form of an expression
- `check_spec` - skewsymmetry and Jacobi for a spec (reports, not exceptions)
- `zhu_commutator` - commutators in the Zhu algebra
- `walgebra_generators` - free generators of W^k(g, f) for sl2 and sl3
- `pva_flow` - Hamiltonian equations, e.g. KdV from the GFZ bracket
- `health_check` - server status

**WORKFLOW:**
1. Run `check_spec` on any new spec before computing with it
2. Start from a built-in algebra when one fits
3. Keep parameters formal; specialize only at the end
""",
            "builtins": sorted(BUILTINS),
            "usage_examples": {
                "virasoro": "lambda_bracket(a='L', b='L', builtin_name='virasoro')",
                "sugawara": "normal_form(expression=':e f:', builtin_name='cur-sl2')",
                "kdv": "pva_flow(hamiltonian='h2', builtin_name='gfz')",
            },
        }

    @mcp.prompt("expression-syntax")
    async def get_expression_syntax(ctx: Context) -> dict[str, Any]:
        """The element grammar and the spec file format."""
        return {"expressions": EXPRESSION_SYNTAX, "spec_files": SPEC_FORMAT}

    logger.debug("registered lambda-forge prompts")


def get_prompt_summary() -> str:
    """Get a summary of available prompts for logging."""
    return """
Available lambda-forge MCP Prompts:
- lambda-forge-guide: Tool usage guide
- expression-syntax: Element grammar and spec file format
"""
