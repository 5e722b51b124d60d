from dataclasses import dataclass
from typing import Iterable, List


@dataclass(frozen=True, order=True)
class Violation():
    """One finding raised while parsing or building a model.

    Args:
        code (str): Error code, eg: E-DUP-ID
        subject (str): Offending id, document path or position
        detail (str): Free text explanation
    """
    code: str
    subject: str = ""
    detail: str = ""

    def __str__(self) -> str:
        text = f"{self.code}({self.subject})" if self.subject else self.code
        return f"{text}: {self.detail}" if self.detail else text

    def to_dict(self) -> dict:
        return {"code": self.code, "subject": self.subject, "detail": self.detail}


class MetroModelError(ValueError):
    """Base error of the package. Always carries a machine readable code."""

    def __init__(self, code: str, subject: str = "", detail: str = "") -> None:
        self.code = code
        self.subject = subject
        self.detail = detail
        super().__init__(str(Violation(code, subject, detail)))


class _MultiViolationError(MetroModelError):
    def __init__(self, violations: Iterable[Violation]) -> None:
        self.violations: List[Violation] = sorted(set(violations))
        first = self.violations[0] if self.violations else Violation("E-UNKNOWN")
        super().__init__(first.code, first.subject, first.detail)
        self.args = ("\n".join(str(v) for v in self.violations),)

    @property
    def codes(self) -> List[str]:
        return sorted({v.code for v in self.violations})


class ModelBuildError(_MultiViolationError):
    """build_model rejected the parts. Every structural violation is listed, sorted by (code, subject)."""


class DocumentParseError(_MultiViolationError):
    """parse_model rejected the document. Every shape error is listed with its document path."""
