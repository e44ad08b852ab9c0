"""
Tests for session configuration, built-ins and the error helpers.
"""

import logging

import pytest
from pydantic import ValidationError

from lambda_forge.builtins import BUILTINS, builtin, builtin_liealg, grading
from lambda_forge.config import THREADS_ENV, SessionConfig
from lambda_forge.errors import (
    LambdaForgeError,
    ParseError,
    SpecValidationError,
    UnknownParam,
    create_error_response,
    create_success_response,
)
from lambda_forge.liealg import LieAlgData
from lambda_forge.scalar import Scalar


class TestSessionConfig:
    """Validation of one invocation's settings."""

    def test_defaults(self, monkeypatch):
        """Text output, WARNING level and one thread."""
        monkeypatch.delenv(THREADS_ENV, raising=False)
        config = SessionConfig()
        assert config.output == "text"
        assert config.threads == 1
        assert config.log_level == logging.WARNING

    def test_threads_from_environment(self, monkeypatch):
        """LAMBDA_FORGE_THREADS sets the worker count."""
        monkeypatch.setenv(THREADS_ENV, "4")
        assert SessionConfig().threads == 4

    @pytest.mark.parametrize("value", ["0", "-2", "many"])
    def test_bad_threads(self, monkeypatch, value):
        """Non-positive or non-numeric values are validation errors."""
        monkeypatch.setenv(THREADS_ENV, value)
        with pytest.raises(ValidationError):
            SessionConfig()

    def test_explicit_threads_win(self, monkeypatch):
        """An explicit count ignores the environment."""
        monkeypatch.setenv(THREADS_ENV, "abc")
        assert SessionConfig(threads=3).threads == 3

    def test_assignments(self):
        """Assignments parse to exact scalars."""
        config = SessionConfig(assignments={"k": "1/2"})
        assert config.parsed_assignments() == {"k": Scalar(1) / 2}

    def test_unknown_parameter(self):
        """Only declared parameters can be assigned, checked when the values are read."""
        config = SessionConfig(assignments={"undeclared_q": "1"})
        with pytest.raises(UnknownParam):
            config.parsed_assignments()

    @pytest.mark.parametrize("name", ["2k", "k-1", ""])
    def test_bad_name(self, name):
        """Names must be identifiers."""
        with pytest.raises(ValidationError):
            SessionConfig(assignments={name: "1"})

    def test_verbosity(self):
        """-v is INFO, -vv is DEBUG."""
        assert SessionConfig(verbosity=1).log_level == logging.INFO
        assert SessionConfig(verbosity=2).log_level == logging.DEBUG

    def test_frozen(self):
        """Configs are immutable once validated."""
        config = SessionConfig()
        with pytest.raises(ValidationError):
            config.output = "machine"


class TestBuiltins:
    """The built-in catalogue."""

    @pytest.mark.parametrize("name", sorted(BUILTINS))
    def test_every_builtin_builds(self, name):
        """Each name yields a spec carrying a name."""
        assert builtin(name).name

    def test_unknown(self):
        """Unknown names list the known ones."""
        with pytest.raises(KeyError, match="virasoro"):
            builtin("nope")

    def test_liealg(self):
        """sl3 is a Lie algebra; virasoro is not."""
        assert isinstance(builtin_liealg("sl3"), LieAlgData)
        with pytest.raises(KeyError):
            builtin_liealg("virasoro")

    def test_gradings(self):
        """Named gradings exist for sl2 and sl3 only."""
        assert grading(builtin_liealg("sl3"), "minimal").half
        with pytest.raises(KeyError):
            grading(builtin_liealg("sl2"), "minimal")


class TestResponses:
    """Response dictionaries shared by the server and the CLI."""

    def test_success(self):
        """Extra keys are merged in."""
        response = create_success_response({"x": 1}, passed=True)
        assert response == {"success": True, "result": {"x": 1}, "passed": True}

    def test_error_type(self):
        """Library errors carry their class name."""
        response = create_error_response(UnknownParam("unknown parameter 'q'"))
        assert response["success"] is False
        assert response["error_type"] == "UnknownParam"
        assert response["result"].startswith("Operation failed")

    def test_plain_error(self):
        """Other exceptions have no error_type."""
        assert "error_type" not in create_error_response(ValueError("bad"))

    def test_hierarchy(self):
        """Parse and validation errors are library errors and ValueErrors."""
        err = SpecValidationError("jacobi", ValueError("(a, b, c)"))
        assert isinstance(err, LambdaForgeError)
        assert isinstance(err, ValueError)
        assert str(err) == "jacobi: (a, b, c)"
        assert str(ParseError("bad", 3, 7)) == "bad (line 3, column 7)"
