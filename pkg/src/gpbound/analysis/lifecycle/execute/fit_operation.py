from __future__ import annotations

from argparse import Namespace
from pathlib import Path

from gpbound.analysis.analysis_context_vars import current_analysis_context
from gpbound.analysis.constants import MODEL_FILENAME
from gpbound.analysis.domain.dataset_model import Dataset
from gpbound.analysis.domain.kernel_model import KernelFamily
from gpbound.analysis.domain.model_document import ModelDocument
from gpbound.analysis.engine.likelihood import FitConfig, fit_hyperparameters
from gpbound.analysis.lifecycle.audit.run_event_model import EventType, StageType, audit, record_event

# sub-stream of the run seed for restart draws; output i uses (seed, FIT_STREAM, i)
FIT_STREAM = 0


@audit(StageType.FIT, "fit_model")
def execute_fit(args: Namespace) -> Path:
    """
    Fits one kernel per output column of a training CSV and writes ``model.json``.

    Each output is fitted independently with the requested family and a fixed
    noise variance. The written document references the training file
    (relative to the output directory when possible) and carries the restart
    table of every fit.

    Args:
        args (Namespace): The parsed ``fit`` command line.

    Returns:
        Path: The written model document.

    Raises:
        DataParseError: If the CSV cannot be parsed.
        KernelDomainError: If the family parameters are invalid.
        FitFailedError: If every restart of some output failed.
    """
    ctx = current_analysis_context.get()
    plan = ctx.run_plan
    data_path = Path(args.data).expanduser().resolve()
    plan.config_path = data_path
    dataset = Dataset.from_csv(data_path, args.noise_var)
    family = KernelFamily.of(args.family, p=args.p, n_x=dataset.n_x)
    record_event(
        StageType.FIT,
        EventType.INPUT,
        message=f"fitting {family.label} to {dataset.m} points",
        payload={"m": dataset.m, "n_x": dataset.n_x, "n_y": dataset.n_y, "restarts": args.restarts})

    config = FitConfig(restarts=args.restarts)
    kernels, diagnostics = [], []
    for i in range(dataset.n_y):
        result = fit_hyperparameters(
            family,
            dataset.X,
            dataset.Y[:, i],
            float(dataset.noise_var[i]),
            rng=ctx.rng(FIT_STREAM, i),
            config=config)
        kernels.append(result.spec)
        diagnostics.append(result.diagnostics)
        record_event(
            StageType.FIT,
            EventType.CHECKPOINT,
            message=f"output {i + 1} fitted",
            payload={"phi": result.spec.phi.tolist(), "log_likelihood": result.log_likelihood})

    doc = ModelDocument(
        kernels=tuple(kernels),
        noise_var=tuple(float(v) for v in dataset.noise_var),
        data_path=data_path,
        diagnostics=tuple(diagnostics)).relative_to(plan.output_dir)
    out = plan.register_output(doc.save_file(plan.output_dir / MODEL_FILENAME))
    record_event(StageType.FIT, EventType.OUTPUT, message=f"wrote {out.name}", payload={"path": str(out)})
    return out
