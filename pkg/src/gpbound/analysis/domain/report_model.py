from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np
import pandas as pd
from typing_extensions import Self

from gpbound.helper.multiformat_model_mixin import MultiformatModelMixin


class PropertyKind(str, Enum):
    COMPONENTWISE_MONOTONE = "componentwise_monotone"
    LINE_QUASICONCAVE = "line_quasiconcave"


@dataclass(frozen=True, slots=True, kw_only=True)
class PropertyCheckReport(MultiformatModelMixin):
    """
    Outcome of a randomized numerical check of a kernel property over a box.

    Attributes:
        check (PropertyKind): Which property was tested.
        family (str): Label of the tested family.
        passed (bool): True if no counterexample was found.
        n_checked (int): Number of sampled cases evaluated.
        witness (Mapping[str, Any] | None): The first counterexample, if any.
    """
    check: PropertyKind
    family: str
    passed: bool
    n_checked: int
    witness: Mapping[str, Any] | None = None

    def to_mapping(self, *args, **kwargs) -> dict[str, Any]:
        return {
            "check": self.check.value,
            "family": self.family,
            "passed": self.passed,
            "n_checked": self.n_checked,
            "witness": dict(self.witness) if self.witness is not None else None,
        }

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Any], **_: Any) -> Self:
        return cls(
            check=PropertyKind(mapping["check"]),
            family=str(mapping.get("family", "")),
            passed=bool(mapping["passed"]),
            n_checked=int(mapping.get("n_checked", 0)),
            witness=mapping.get("witness"))


@dataclass(frozen=True, slots=True, kw_only=True)
class BoundReport:
    """
    MSPE quantities at one test point.

    ``exact_mspe`` is absent when no ground truth was supplied; ``thm1`` and
    ``thm2`` are absent when that bound was not requested.
    """
    x: np.ndarray
    est_var_trace: float
    exact_mspe: float | None = None
    thm1: float | None = None
    thm2: float | None = None

    def to_row(self) -> dict[str, float | None]:
        row: dict[str, float | None] = {f"x_{i + 1}": float(v) for i, v in enumerate(self.x)}
        row.update({
            "exact_mspe": self.exact_mspe,
            "est_var_trace": self.est_var_trace,
            "thm1": self.thm1,
            "thm2": self.thm2,
        })
        return row


def reports_to_frame(reports: Sequence[BoundReport], *, n_x: int = 1) -> pd.DataFrame:
    """
    Tabulates bound reports with columns ``x_1..x_nx, exact_mspe, est_var_trace,
    thm1, thm2``. Columns that are absent for every row are dropped.

    Args:
        reports (Sequence[BoundReport]): The reports, in grid order.
        n_x (int): Input dimension, used for the header of an empty table.

    Returns:
        pd.DataFrame: The table.
    """
    columns = [f"x_{i + 1}" for i in range(n_x)] + ["exact_mspe", "est_var_trace", "thm1", "thm2"]
    frame = pd.DataFrame([r.to_row() for r in reports], columns=columns)
    if reports:
        frame = frame.dropna(axis=1, how="all")
    else:
        frame = frame.drop(columns=["exact_mspe", "thm1", "thm2"])
    return frame


@dataclass(frozen=True, slots=True, kw_only=True)
class FitRestart:
    start_phi: tuple[float, ...]
    end_phi: tuple[float, ...]
    log_likelihood: float
    success: bool
    message: str = ""

    def to_mapping(self) -> dict[str, Any]:
        return {
            "start_phi": list(self.start_phi),
            "end_phi": list(self.end_phi),
            "log_likelihood": self.log_likelihood,
            "success": self.success,
            "message": self.message,
        }


@dataclass(frozen=True, slots=True, kw_only=True)
class FitDiagnostics(MultiformatModelMixin):
    """
    Restart table of a marginal-likelihood fit.

    Attributes:
        log_likelihood (float): Log marginal likelihood at the returned optimum.
        restarts (tuple[FitRestart, ...]): One row per restart in draw order.
        best_index (int): Index of the winning restart.
    """
    log_likelihood: float
    restarts: tuple[FitRestart, ...] = field(default_factory=tuple)
    best_index: int = 0

    def to_mapping(self, *args, **kwargs) -> dict[str, Any]:
        return {
            "log_likelihood": self.log_likelihood,
            "best_index": self.best_index,
            "restarts": [r.to_mapping() for r in self.restarts],
        }

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Any], **_: Any) -> Self:
        return cls(
            log_likelihood=float(mapping["log_likelihood"]),
            best_index=int(mapping.get("best_index", 0)),
            restarts=tuple(
                FitRestart(
                    start_phi=tuple(r["start_phi"]),
                    end_phi=tuple(r["end_phi"]),
                    log_likelihood=float(r["log_likelihood"]),
                    success=bool(r["success"]),
                    message=str(r.get("message", "")))
                for r in mapping.get("restarts", [])))
