from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from gpbound.analysis.domain.runplan_model import RunPlan


@dataclass(kw_only=True)
class AnalysisContext:
    run_plan: RunPlan

    # Resolved execution settings
    seed: int = 0
    threads: int = 1

    def rng(self, *stream: int) -> np.random.Generator:
        """Generator for a named sub-stream of the run seed."""
        return np.random.default_rng(np.random.SeedSequence([self.seed, *stream]))
