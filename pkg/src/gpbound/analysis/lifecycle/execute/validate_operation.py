from __future__ import annotations

from argparse import Namespace
from dataclasses import replace
from pathlib import Path

import numpy as np

from gpbound.analysis.analysis_context_vars import current_analysis_context
from gpbound.analysis.constants import MC_STATISTICAL_SAMPLES, ORACLE_FILENAME
from gpbound.analysis.domain.oracle_model import McConfig
from gpbound.analysis.engine.bound_engine import exact_mspe
from gpbound.analysis.engine.oracle import mc_mspe
from gpbound.analysis.lifecycle.audit.run_event_model import EventType, LevelType, StageType, audit, record_event
from gpbound.analysis.lifecycle.init.initializer import load_model


@audit(StageType.ORACLE, "monte_carlo")
def execute_validate(args: Namespace) -> Path:
    """
    Monte Carlo estimate of the prediction error at one point, written to
    ``oracle.json`` together with the exact value.

    Args:
        args (Namespace): The parsed ``validate`` command line.

    Returns:
        Path: The written result.
    """
    plan = current_analysis_context.get().run_plan
    plan.config_path = Path(args.truth).expanduser()
    _, truth = load_model(args.truth)
    _, estimate = load_model(args.estimate)
    x = np.asarray(args.x, dtype=float)

    config = McConfig(n_samples=args.n_samples, seed=plan.seed, batch=args.batch)
    result = mc_mspe(truth, estimate, x, config, threads=plan.threads)
    result = replace(result, exact_mspe=exact_mspe(truth, estimate, x))
    z = result.z_score
    if not config.is_statistical:
        record_event(
            StageType.ORACLE,
            EventType.DECISION,
            LevelType.WARN,
            message=f"n_samples below {MC_STATISTICAL_SAMPLES}; agreement with the exact error not judged",
            payload={"n_samples": config.n_samples})
    elif z is not None and abs(z) > 3.0:
        record_event(
            StageType.ORACLE,
            EventType.VALIDATION,
            LevelType.WARN,
            message="sample mean more than 3 standard errors from the exact error",
            payload={"z_score": z})

    out = plan.register_output(result.save_file(plan.output_dir / ORACLE_FILENAME))
    record_event(StageType.ORACLE, EventType.OUTPUT, message=f"wrote {out.name}", payload={"path": str(out)})
    return out
