"""
Error hierarchy and response helpers for lambda-forge.

Every engine failure is a subclass of :class:`LambdaForgeError`. Identity
checkers never raise on a failed identity; they return reports instead.
The response helpers build the dictionaries returned by the MCP tools and
by the CLI machine output.
"""

from __future__ import annotations

from typing import Any


class LambdaForgeError(Exception):
    """Base class for all lambda-forge errors."""


class ZeroDenominator(LambdaForgeError, ZeroDivisionError):
    """A rational function was built with a zero denominator."""


class PoleAtSubstitution(LambdaForgeError, ZeroDivisionError):
    """A substitution made a denominator vanish identically."""


class UnknownParam(LambdaForgeError, KeyError):
    """A name is not a declared formal parameter."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown parameter"


class UnknownGenerator(LambdaForgeError, KeyError):
    """A term references a generator that was never declared."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown generator"


class GradingViolation(LambdaForgeError):
    """A bracket table or rewrite produced a monomial outside the allowed grade."""


class UnsupportedBound(LambdaForgeError):
    """An integration bound is not one of the supported forms."""


class InhomogeneousInput(LambdaForgeError):
    """An operation that needs a homogeneous element got a mixed one."""


class NotFreelyGenerated(LambdaForgeError):
    """The vertex algebra does not meet the hypotheses of the Zhu reduction."""


class NotSemisimpleAmbiguity(LambdaForgeError):
    """The Casimir operator does not act by a scalar."""


class NotGood(LambdaForgeError):
    """The pair (x, f) does not define a good grading."""


class NotAdapted(LambdaForgeError):
    """The basis is not an eigenbasis of ad x."""


class DegenerateForm(LambdaForgeError):
    """A bilinear form that must be non-degenerate is degenerate."""


class DegeneratePairing(LambdaForgeError):
    """A fermionic pairing is degenerate."""


class CriticalLevel(LambdaForgeError):
    """The level is critical (k + h^vee vanishes identically)."""


class BadPolarization(LambdaForgeError):
    """A splitting A = A+ + A- is not a pair of dual isotropic subspaces."""


class NoSolution(LambdaForgeError):
    """A linear system expected to be solvable has no solution."""


class InsufficientGenerators(LambdaForgeError):
    """An element cannot be expressed through the solved generators."""


class NotDivisibleByEpsilon(LambdaForgeError):
    """A family table entry is not divisible by the family parameter."""


class ParseError(LambdaForgeError, ValueError):
    """Input text does not conform to the grammar."""

    def __init__(self, message: str, line: int = 0, column: int = 0) -> None:
        super().__init__(message)
        self.message = message
        self.line = line
        self.column = column

    def __str__(self) -> str:
        return f"{self.message} (line {self.line}, column {self.column})"


class SpecValidationError(LambdaForgeError, ValueError):
    """A parsed spec violates an invariant; ``invariant`` names which one."""

    def __init__(self, invariant: str, cause: Exception | None = None) -> None:
        detail = f": {cause}" if cause is not None else ""
        super().__init__(f"{invariant}{detail}")
        self.invariant = invariant
        self.cause = cause


def create_success_response(result: Any, **extra: Any) -> dict[str, Any]:
    """Build the standard success dictionary."""
    response: dict[str, Any] = {"success": True, "result": result}
    response.update(extra)
    return response


def create_error_response(error: Exception | str, result: Any = None) -> dict[str, Any]:
    """Build the standard failure dictionary."""
    message = str(error)
    response: dict[str, Any] = {
        "success": False,
        "error": message,
        "result": result if result is not None else f"Operation failed: {message}",
    }
    if isinstance(error, LambdaForgeError):
        response["error_type"] = type(error).__name__
    return response
