from __future__ import annotations

import sys
from argparse import Namespace
from pathlib import Path

import numpy as np

from gpbound.analysis.analysis_context_vars import current_analysis_context
from gpbound.analysis.domain.candidate_model import CandidateSet
from gpbound.analysis.domain.model_document import ModelDocument
from gpbound.analysis.domain.runplan_model import default_output_dir
from gpbound.analysis.engine.gp_model import GpModel
from gpbound.analysis.lifecycle.audit.run_event_model import EventType, StageType, audit, record_event
from gpbound.helper.errors import ConfigError, DataParseError
from gpbound.helper.sys_check_utils import check_python_version, resolve_thread_count
from gpbound.helper.table_io import prefixed_columns, read_numeric_csv


@audit(StageType.LIFECYCLE, substage="system_check")
def system_check() -> None:
    """
    Verifies the interpreter meets the minimum supported version.

    Raises:
        RuntimeError: If Python is older than 3.10.
    """
    check_python_version()


@audit(StageType.INIT, "init_run")
def init_run(args: Namespace) -> Path:
    """
    Resolves the run settings from the parsed command line and records them on
    the active run plan and context.

    The thread count follows ``GPBOUND_THREADS``, then ``--threads``, then the
    available cores. The output directory defaults to the per-command run
    directory under the user cache and is created if needed.

    Args:
        args (Namespace): The parsed command line.

    Returns:
        Path: The output directory.

    Raises:
        ValueError: If the thread count is not a positive integer.
    """
    ctx = current_analysis_context.get()
    plan = ctx.run_plan
    threads = resolve_thread_count(args.threads)
    out_dir = Path(args.output_dir).expanduser() if args.output_dir else default_output_dir(args.command)
    out_dir.mkdir(parents=True, exist_ok=True)

    plan.command = args.command
    plan.seed = ctx.seed = int(args.seed) if args.seed is not None else 0
    plan.threads = ctx.threads = threads
    plan.output_dir = out_dir
    record_event(
        StageType.INIT,
        EventType.INPUT,
        message=f"gpbound {args.command}",
        payload={"argv": sys.argv[1:], "seed": plan.seed, "threads": threads, "output_dir": str(out_dir)})
    return out_dir


@audit(StageType.INIT, "load_model")
def load_model(path: Path) -> tuple[ModelDocument, GpModel]:
    """
    Reads a model document and conditions the GP on its training data.

    Args:
        path (Path): A ``model.json`` (or YAML/TOML) file.

    Returns:
        tuple[ModelDocument, GpModel]: The document and the conditioned model.

    Raises:
        ConfigError: If the file does not exist or is malformed.
        DataParseError: If the referenced training data cannot be parsed.
    """
    p = Path(path).expanduser()
    if not p.is_file():
        raise ConfigError(f"model file not found: {p}")
    doc = ModelDocument.from_file(p)
    model = GpModel.build(doc.kernels, doc.load_dataset())
    record_event(
        StageType.INIT,
        EventType.INPUT,
        message=f"loaded model {p.name}",
        payload={
            "path": str(p),
            "kernels": [k.to_mapping() for k in doc.kernels],
            "m": model.dataset.m,
            "sha512": doc.mapping_hash(),
        })
    return doc, model


@audit(StageType.INIT, "load_candidates")
def load_candidates(path: Path, *, unsafe: bool = False) -> CandidateSet:
    """
    Reads a candidate set: a list of ``{"family", "p", "lower", "upper"}`` objects.

    Raises:
        ConfigError: If the file does not exist.
    """
    p = Path(path).expanduser()
    if not p.is_file():
        raise ConfigError(f"candidate file not found: {p}")
    cands = CandidateSet.from_file(p).with_unsafe(unsafe)
    record_event(
        StageType.INIT,
        EventType.INPUT,
        message=f"loaded {len(cands)} candidate entries",
        payload={
            "path": str(p),
            "entries": [e.family.label for e in cands],
            "unsafe": unsafe,
            "sha512": cands.mapping_hash(),
        })
    return cands


def grid_from_axes(axes: list[tuple[float, float, int]]) -> np.ndarray:
    """
    Cartesian product of regular axes, first axis varying slowest.

    Args:
        axes (list[tuple[float, float, int]]): ``(lo, hi, n)`` per input dimension.

    Returns:
        np.ndarray: Points, shape ``(prod(n), len(axes))``.
    """
    lines = [np.linspace(lo, hi, n) for lo, hi, n in axes]
    mesh = np.meshgrid(*lines, indexing="ij")
    return np.column_stack([m.reshape(-1) for m in mesh])


@audit(StageType.INIT, "load_grid")
def load_grid(args: Namespace, n_x: int) -> np.ndarray:
    """
    Builds the test grid from ``--grid`` axes or a ``--grid-file`` CSV.

    Args:
        args (Namespace): The parsed ``bound`` command line.
        n_x (int): Input dimension of the estimate.

    Returns:
        np.ndarray: Test points, shape ``(n, n_x)``.

    Raises:
        ConfigError: If the number of axes does not match ``n_x``.
        DataParseError: If the grid file lacks ``x_1..x_nx`` columns.
    """
    if args.grid_file is not None:
        frame = read_numeric_csv(args.grid_file)
        cols = prefixed_columns(frame, "x")
        if len(cols) != n_x:
            raise DataParseError(
                f"expected {n_x} input columns x_1..x_{n_x}, found {cols}", path=args.grid_file, line=1)
        grid = frame[cols].to_numpy(dtype=float)
    else:
        if len(args.grid) != n_x:
            raise ConfigError(f"--grid given {len(args.grid)} times for a model with {n_x} inputs")
        grid = grid_from_axes(args.grid)
    record_event(
        StageType.INIT,
        EventType.INPUT,
        message=f"test grid with {grid.shape[0]} points",
        payload={"points": grid.shape[0], "n_x": n_x})
    return grid
