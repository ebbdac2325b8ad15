from __future__ import annotations

from contextvars import ContextVar
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from gpbound.analysis.lifecycle.analysis_context import AnalysisContext

current_analysis_context: ContextVar["AnalysisContext"] = ContextVar("current_analysis_context")
