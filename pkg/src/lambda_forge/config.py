"""
Session configuration and logging setup.

``SessionConfig`` validates one CLI or server invocation. The worker count
comes from ``LAMBDA_FORGE_THREADS`` unless given explicitly.
"""

from __future__ import annotations

import logging
import os
import sys
from typing import TYPE_CHECKING, Literal, TextIO

from pydantic import BaseModel, ConfigDict, Field, field_validator

from .errors import UnknownParam

if TYPE_CHECKING:
    from .scalar import Scalar

THREADS_ENV = "LAMBDA_FORGE_THREADS"
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


class SessionConfig(BaseModel):
    """Validated settings for one command."""

    model_config = ConfigDict(frozen=True)

    command: str = Field(default="", description="Command being run")
    output: Literal["text", "machine"] = Field(default="text")
    assignments: dict[str, str] = Field(
        default_factory=dict, description="Parameter specializations, e.g. k=1"
    )
    verbosity: int = Field(default=0, ge=0)
    threads: int = Field(default=None, ge=1, validate_default=True)

    @field_validator("assignments")
    @classmethod
    def _check_assignments(cls, value: dict[str, str]) -> dict[str, str]:
        for name, text in value.items():
            if not name.isidentifier():
                raise ValueError(f"not a parameter name: {name!r}")
            if not text.strip():
                raise ValueError(f"no value given for {name!r}")
        return value

    @field_validator("threads", mode="before")
    @classmethod
    def _threads_from_env(cls, value: object) -> object:
        if value is not None:
            return value
        raw = os.environ.get(THREADS_ENV, "").strip()
        return raw or 1

    def parsed_assignments(self) -> dict[str, Scalar]:
        """Assignments as Scalars; every name must already be a declared parameter."""
        from .scalar import Scalar, is_param

        out = {}
        for name, text in self.assignments.items():
            if not is_param(name):
                raise UnknownParam(f"unknown parameter {name!r}")
            out[name] = Scalar.parse(text)
        return out

    @property
    def log_level(self) -> int:
        if self.verbosity >= 2:
            return logging.DEBUG
        if self.verbosity == 1:
            return logging.INFO
        return logging.WARNING


def configure_logging(level: int = logging.INFO, stream: TextIO | None = None) -> None:
    """Configure root logging once, in the project's standard format."""
    logging.basicConfig(
        level=level,
        format=LOG_FORMAT,
        handlers=[logging.StreamHandler(stream if stream is not None else sys.stdout)],
        force=True,
    )
