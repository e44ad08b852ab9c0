"""Result objects returned by the identity checkers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any


@dataclass(frozen=True)
class CheckFailure:
    """One identity instance that did not hold."""

    subject: str
    residual: str


@dataclass
class CheckReport:
    """Outcome of running one identity over a family of instances."""

    check: str
    checked: int = 0
    failures: list[CheckFailure] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def record(self, subject: str, residual: str | None) -> None:
        """Count an instance; a non-None residual marks it as failed."""
        self.checked += 1
        if residual is not None:
            self.failures.append(CheckFailure(subject, residual))

    def extend(self, other: CheckReport) -> CheckReport:
        self.checked += other.checked
        self.failures.extend(other.failures)
        return self

    def failed_subjects(self) -> list[str]:
        return [f.subject for f in self.failures]

    def to_dict(self) -> dict[str, Any]:
        return {
            "check": self.check,
            "passed": self.passed,
            "checked": self.checked,
            "failures": [{"subject": f.subject, "residual": f.residual} for f in self.failures],
        }

    def __str__(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        lines = [f"{self.check}: {status} ({self.checked} checked, {len(self.failures)} failed)"]
        lines.extend(f"  {f.subject}: {f.residual}" for f in self.failures)
        return "\n".join(lines)
