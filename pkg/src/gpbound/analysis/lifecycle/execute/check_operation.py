from __future__ import annotations

from argparse import Namespace
from pathlib import Path

import numpy as np

from gpbound.analysis.analysis_context_vars import current_analysis_context
from gpbound.analysis.constants import CHECK_FILENAME
from gpbound.analysis.domain.candidate_model import CandidateEntry, CandidateSet, CertificationReport, HyperRectangle
from gpbound.analysis.domain.kernel_model import KernelFamily
from gpbound.analysis.engine.kernel_checks import CheckConfig, certify_candidate_set
from gpbound.analysis.lifecycle.audit.run_event_model import EventType, LevelType, StageType, audit, record_event
from gpbound.analysis.lifecycle.init.initializer import load_candidates


def candidates_from_args(args: Namespace) -> CandidateSet:
    if args.cands is not None:
        return load_candidates(args.cands, unsafe=True)
    family = KernelFamily.of(args.family, p=args.p, n_x=args.n_x)
    box = HyperRectangle(lower=np.asarray(args.lower, dtype=float), upper=np.asarray(args.upper, dtype=float))
    return CandidateSet(entries=(CandidateEntry(family=family, box=box),), unsafe=True)


@audit(StageType.CHECK, "check_kernel")
def execute_check_kernel(args: Namespace) -> Path:
    """
    Runs the monotonicity and quasi-concavity checks and writes ``check.json``.

    A failed check is reported in the file, not raised: the command succeeds
    whenever the report is written.

    Args:
        args (Namespace): The parsed ``check-kernel`` command line.

    Returns:
        Path: The written report.
    """
    plan = current_analysis_context.get().run_plan
    if args.cands is not None:
        plan.config_path = Path(args.cands).expanduser()
    cands = candidates_from_args(args)
    checked = certify_candidate_set(cands, config=CheckConfig(budget=args.budget, seed=plan.seed))
    report = CertificationReport.from_candidate_set(checked)
    record_event(
        StageType.CHECK,
        EventType.VALIDATION,
        LevelType.INFO if report.passed else LevelType.WARN,
        message="all entries certified" if report.passed else "some entries failed",
        payload={"passed": report.passed})
    out = plan.register_output(report.save_file(plan.output_dir / CHECK_FILENAME))
    record_event(StageType.CHECK, EventType.OUTPUT, message=f"wrote {out.name}", payload={"path": str(out)})
    return out
