from __future__ import annotations

from argparse import Namespace
from pathlib import Path

from gpbound.analysis.analysis_context_vars import current_analysis_context
from gpbound.analysis.constants import BOUNDS_FILENAME
from gpbound.analysis.domain.report_model import reports_to_frame
from gpbound.analysis.engine.bound_engine import BoundMethod, bound_report
from gpbound.analysis.engine.box_optimizer import (
    BoxOptimizerConfig,
    Maximizer,
    MaximizerKind,
    corner_maximizer,
    optimize_maximizer,
)
from gpbound.analysis.engine.kernel_checks import CheckConfig, certify_candidate_set
from gpbound.analysis.engine.oracle import grid_maximizer
from gpbound.analysis.lifecycle.audit.run_event_model import EventType, StageType, audit, record_event
from gpbound.analysis.lifecycle.init.initializer import load_candidates, load_grid, load_model
from gpbound.helper.table_io import write_csv


def select_maximizer(kind: MaximizerKind | str, *, seed: int, resolution: int) -> Maximizer:
    match MaximizerKind(kind):
        case MaximizerKind.CORNER:
            return corner_maximizer
        case MaximizerKind.GRID:
            return grid_maximizer(resolution)
        case _:
            return optimize_maximizer(BoxOptimizerConfig(seed=seed))


@audit(StageType.BOUND, "evaluate_bounds")
def execute_bound(args: Namespace) -> Path:
    """
    Evaluates the requested bounds, and the exact error when a truth model is
    given, at every grid point and writes ``bounds.csv``.

    The candidate set is certified first whenever the closed-form bound or the
    corner maximizer is used, since both rely on monotonicity over the boxes.
    With ``--unsafe`` failed checks are recorded but do not stop the run.

    Args:
        args (Namespace): The parsed ``bound`` command line.

    Returns:
        Path: The written CSV.

    Raises:
        AssumptionCertificateError: If a check fails and ``--unsafe`` is not set.
        KernelDomainError: If the grid or training inputs violate a family's domain.
    """
    plan = current_analysis_context.get().run_plan
    plan.config_path = Path(args.estimate).expanduser()
    _, estimate = load_model(args.estimate)
    truth = load_model(args.truth)[1] if args.truth is not None else None
    cands = load_candidates(args.cands, unsafe=args.unsafe)
    method = BoundMethod(args.method)
    kind = MaximizerKind(args.maximizer)

    if method.wants_thm2 or (method.wants_thm1 and kind == MaximizerKind.CORNER):
        cands = certify_candidate_set(cands, config=CheckConfig(budget=args.check_budget, seed=plan.seed))
    else:
        record_event(StageType.BOUND, EventType.SKIP, message="property checks not needed for this method")

    grid = load_grid(args, estimate.n_x)
    reports = bound_report(
        truth,
        estimate,
        cands,
        grid,
        method=method,
        maximizer=select_maximizer(kind, seed=plan.seed, resolution=args.grid_resolution),
        threads=plan.threads)
    frame = reports_to_frame(reports, n_x=estimate.n_x)
    out = plan.register_output(write_csv(frame, plan.output_dir / BOUNDS_FILENAME))
    record_event(
        StageType.BOUND,
        EventType.OUTPUT,
        message=f"wrote {out.name}",
        payload={"path": str(out), "rows": len(frame), "columns": list(frame.columns)})
    return out
