from pathlib import Path

import numpy as np
import pytest

from gpbound.analysis.analysis_context_vars import current_analysis_context
from gpbound.analysis.domain.candidate_model import CandidateEntry, CandidateSet, HyperRectangle
from gpbound.analysis.domain.dataset_model import Dataset
from gpbound.analysis.domain.kernel_model import KernelFamily, KernelSpec
from gpbound.analysis.domain.runplan_model import RunPlan
from gpbound.analysis.engine.gp_model import GpModel
from gpbound.analysis.lifecycle.analysis_context import AnalysisContext


@pytest.fixture
def run_plan(tmp_path: Path):
    """An active run plan so audited code can record events."""
    plan = RunPlan(output_dir=tmp_path)
    token = current_analysis_context.set(AnalysisContext(run_plan=plan))
    try:
        yield plan
    finally:
        current_analysis_context.reset(token)


@pytest.fixture
def dataset_1d() -> Dataset:
    X = np.linspace(-2.0, 3.0, 6).reshape(-1, 1)
    return Dataset(X=X, Y=np.sin(X), noise_var=np.array([0.01]))


@pytest.fixture
def se_spec() -> KernelSpec:
    return KernelSpec(family=KernelFamily.se_ard(1), phi=np.array([1.2, 0.9]))


@pytest.fixture
def se_box_cands() -> CandidateSet:
    box = HyperRectangle(lower=np.array([0.8, 0.7]), upper=np.array([1.6, 1.1]))
    return CandidateSet(entries=(CandidateEntry(family=KernelFamily.se_ard(1), box=box),), unsafe=True)


@pytest.fixture
def estimate_1d(dataset_1d: Dataset, se_spec: KernelSpec) -> GpModel:
    return GpModel.build(se_spec, dataset_1d)


@pytest.fixture
def write_train_csv(tmp_path: Path):
    """Writes a small training CSV and returns its path."""

    def _write(name: str = "train.csv", X=None, Y=None) -> Path:
        X = np.linspace(-2.0, 3.0, 6) if X is None else np.asarray(X, dtype=float)
        Y = np.sin(X) if Y is None else np.asarray(Y, dtype=float)
        rows = ["x_1,y_1"] + [f"{x!r},{y!r}" for x, y in zip(X.tolist(), Y.tolist())]
        path = tmp_path / name
        path.write_text("\n".join(rows) + "\n", encoding="utf-8")
        return path

    return _write
