from __future__ import annotations

from pathlib import Path
from typing import Any


class GpBoundError(Exception):
    """
    Base class for every error raised deliberately by gpbound.

    The CLI maps instances of this class (and anything else) to a one-line JSON
    error object on stderr; the class name becomes the ``error`` field.
    """

    def to_mapping(self) -> dict[str, Any]:
        return {"error": type(self).__name__, "message": str(self)}


class KernelDomainError(GpBoundError, ValueError):
    """Hyperparameters or inputs fall outside a kernel family's domain."""


class IllConditionedGramError(GpBoundError):
    """
    A Gram (or joint covariance) matrix could not be factorized even after the
    largest jitter in the escalation schedule was applied.

    Attributes:
        size (int): Dimension of the matrix that failed.
        last_jitter (float): The largest jitter that was tried.
    """

    def __init__(self, message: str, *, size: int = 0, last_jitter: float = 0.0):
        super().__init__(message)
        self.size = size
        self.last_jitter = last_jitter

    def to_mapping(self) -> dict[str, Any]:
        mapping = super().to_mapping()
        mapping.update({"size": self.size, "last_jitter": self.last_jitter})
        return mapping


class FitFailedError(GpBoundError):
    """Every restart of the marginal-likelihood optimization failed."""


class BoxOptimizationError(GpBoundError):
    """
    Projected ascent over a hyperparameter box hit its iteration cap without
    meeting the first-order tolerance.

    Attributes:
        diagnostics (dict[str, Any]): Final iterate, value and projected gradient norm.
    """

    def __init__(self, message: str, *, diagnostics: dict[str, Any] | None = None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})

    def to_mapping(self) -> dict[str, Any]:
        mapping = super().to_mapping()
        mapping["diagnostics"] = self.diagnostics
        return mapping


class AssumptionCertificateError(GpBoundError):
    """The closed-form bound was requested for a candidate set lacking monotonicity certificates."""


class DataParseError(GpBoundError, ValueError):
    """
    A data file could not be parsed.

    Attributes:
        path (Path | None): The offending file, when known.
        line (int | None): 1-based line number in the file, when known.
    """

    def __init__(self, message: str, *, path: Path | str | None = None, line: int | None = None):
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(f"{where}{message}")
        self.path = Path(path) if path is not None else None
        self.line = line

    def to_mapping(self) -> dict[str, Any]:
        mapping = super().to_mapping()
        mapping.update({
            "path": str(self.path) if self.path is not None else None,
            "line": self.line,
        })
        return mapping


class ConfigError(GpBoundError, ValueError):
    """A configuration file or flag combination is invalid."""
