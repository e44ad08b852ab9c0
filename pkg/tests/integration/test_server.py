"""
Integration tests for the lambda-forge MCP server tools.

Tools are called through their wrapped functions with a mocked context;
every argument is passed explicitly.
"""

import pytest

from lambda_forge import prompts, server
from lambda_forge.builtins import BUILTINS

VIRASORO_TEXT = """
[params]
c

[lca virasoro]
generator L delta=2
bracket L L = T(L) + 2*lam*L + c/12*lam^3
"""


class TestBracketTools:
    """lambda_bracket and normal_form."""

    @pytest.mark.asyncio
    async def test_lambda_bracket_builtin(self, mock_context):
        """[L lam L] from the built-in Virasoro."""
        result = await server.lambda_bracket.fn(mock_context, "L", "L", "virasoro", None)
        assert result["success"] is True
        assert "lam^3" in result["result"]["text"]
        mock_context.info.assert_called()

    @pytest.mark.asyncio
    async def test_lambda_bracket_from_text(self, mock_context):
        """The same bracket from spec text."""
        from_text = await server.lambda_bracket.fn(mock_context, "L", "L", None, VIRASORO_TEXT)
        builtin = await server.lambda_bracket.fn(mock_context, "L", "L", "virasoro", None)
        assert from_text["result"]["text"] == builtin["result"]["text"]

    @pytest.mark.asyncio
    async def test_normal_form_pva(self, mock_context):
        """Commutative reading in a [pva] spec."""
        result = await server.normal_form.fn(mock_context, ":u T(u):", "gfz", None)
        assert result["success"] is True
        assert result["result"]["text"] == "u*u'"

    @pytest.mark.asyncio
    async def test_both_sources(self, mock_context):
        """Exactly one of builtin_name and spec_text."""
        result = await server.lambda_bracket.fn(mock_context, "L", "L", "virasoro", VIRASORO_TEXT)
        assert result["success"] is False
        mock_context.error.assert_called()

    @pytest.mark.asyncio
    async def test_unknown_generator(self, mock_context):
        """Engine errors come back as error responses with their type."""
        result = await server.normal_form.fn(mock_context, "M", "virasoro", None)
        assert result["success"] is False
        assert result["error_type"] in ("ParseError", "UnknownGenerator")

    @pytest.mark.asyncio
    async def test_parse_error_in_spec_text(self, mock_context):
        """Bad spec text reports the line."""
        text = "[lca v]\ngenerator L delta=2\nbracket L L = T(L) +\n"
        result = await server.lambda_bracket.fn(mock_context, "L", "L", None, text)
        assert result["success"] is False
        assert "line 3" in result["error"]


class TestAlgebraTools:
    """check_spec, zhu_commutator, walgebra_generators and pva_flow."""

    @pytest.mark.asyncio
    async def test_check_spec(self, mock_context):
        """Currents pass skewsymmetry and Jacobi."""
        result = await server.check_spec.fn(mock_context, "cur-sl2", None, False)
        assert result["success"] is True
        assert result["passed"] is True
        assert {r["check"] for r in result["result"]} == {"skewsymmetry", "jacobi"}

    @pytest.mark.asyncio
    async def test_check_broken_spec(self, mock_context):
        """A Jacobi failure is a successful call with passed = False."""
        text = (
            "[lca broken]\nhamiltonian = false\n"
            "generator a delta=1\ngenerator b delta=1\ngenerator c delta=1\n"
            "bracket a b = c\nbracket a c = a\n"
        )
        result = await server.check_spec.fn(mock_context, None, text, False)
        assert result["success"] is True
        assert result["passed"] is False

    @pytest.mark.asyncio
    async def test_zhu_commutator(self, mock_context):
        """[e, f] = h."""
        result = await server.zhu_commutator.fn(mock_context, "e", "f", "cur-sl2", None)
        assert result["success"] is True
        assert result["result"]["text"] == "h"

    @pytest.mark.asyncio
    async def test_walgebra_generators(self, mock_context):
        """One weight-2 generator for sl2 at level 1, c = -7."""
        result = await server.walgebra_generators.fn(mock_context, "sl2", "principal", "1", None)
        assert result["success"] is True
        assert [e["delta"] for e in result["result"]] == ["2"]
        assert result["central_charge"] == "-7"

    @pytest.mark.asyncio
    async def test_walgebra_not_liealg(self, mock_context):
        """The algebra must be a Lie superalgebra."""
        result = await server.walgebra_generators.fn(mock_context, "virasoro", "principal", None, None)
        assert result["success"] is False

    @pytest.mark.asyncio
    async def test_pva_flow(self, mock_context):
        """KdV from the GFZ bracket."""
        result = await server.pva_flow.fn(mock_context, "h2", "gfz", None, None)
        assert result["success"] is True
        assert result["result"]["text"] == "3*u*u' + u'''"

    @pytest.mark.asyncio
    async def test_pva_flow_rejects_lca(self, mock_context):
        """pva_flow needs a [pva] spec."""
        result = await server.pva_flow.fn(mock_context, "h2", "virasoro", None, None)
        assert result["success"] is False


class TestServerSetup:
    """Health check and prompt registration."""

    @pytest.mark.asyncio
    async def test_health_check(self, mock_context):
        """Status, tools and built-ins."""
        result = await server.health_check.fn(mock_context)
        assert result["success"] is True
        health = result["result"]
        assert health["status"] == "HEALTHY"
        assert health["total_tools"] == len(server.TOOLS)
        assert health["builtins"] == sorted(BUILTINS)

    def test_prompt_summary(self):
        """Both prompts are listed."""
        summary = prompts.get_prompt_summary()
        assert "lambda-forge-guide" in summary
        assert "expression-syntax" in summary

    def test_syntax_guide_matches_parser(self):
        """The examples in the syntax guide parse against the sl2 currents."""
        from lambda_forge.builtins import builtin
        from lambda_forge.wick import WickEngine

        engine = WickEngine(builtin("cur-sl2"))
        for text in (":e f:", "(1/(k+2))*:h h:", "T^2(e)", "|0>"):
            engine.parse(text)

    def test_register_prompts(self):
        """Prompts register on a fresh server."""
        from fastmcp import FastMCP

        mcp = FastMCP("Prompt Test Server")
        prompts.register_prompts(mcp)
