import logging
import sys
from pathlib import Path

from gpbound.analysis.constants import AUDIT_LOG_FILENAME
from gpbound.analysis.domain.runplan_model import RunPlan
from gpbound.analysis.lifecycle.audit.run_event_model import LevelType, RunEvent

AUDIT_LOGGER_NAME = "gpbound.audit"

_LEVELS = {
    LevelType.DEBUG: logging.DEBUG,
    LevelType.INFO: logging.INFO,
    LevelType.WARN: logging.WARNING,
    LevelType.ERROR: logging.ERROR,
}


def to_logging_level(level: LevelType) -> int:
    """Maps an event level to the ``logging`` level it is emitted at."""
    return _LEVELS.get(level, logging.INFO)


def emit_event(logger: logging.Logger, event: RunEvent) -> None:
    """
    Emits one event as a single line of compact JSON.

    Args:
        logger (logging.Logger): Destination logger.
        event (RunEvent): The event.
    """
    logger.log(to_logging_level(event.level), event.to_json(indent=None))


def emit_all(logger: logging.Logger, events: list[RunEvent]) -> None:
    for event in events:
        emit_event(logger, event)


def configure_emitter(dest: list[str], level: int = logging.DEBUG) -> logging.Logger:
    """
    Configures the audit logger. Existing handlers are closed and replaced.

    Args:
        dest (list[str]): Destinations:
            - "stdout": standard output.
            - "stderr": standard error.
            - "file:<path>": the file at ``<path>``, overwritten.
        level (int, optional): The logging level. Defaults to ``logging.DEBUG``.

    Returns:
        logging.Logger: The configured logger.

    Raises:
        ValueError: If a destination is not recognized.
    """
    logger = logging.getLogger(AUDIT_LOGGER_NAME)
    logger.setLevel(level)
    logger.propagate = False
    for handler in list(logger.handlers):
        handler.close()
    logger.handlers.clear()

    for d in dest:
        handler: logging.Handler
        if d == "stdout":
            handler = logging.StreamHandler(sys.stdout)
        elif d == "stderr":
            handler = logging.StreamHandler(sys.stderr)
        elif d.startswith("file:"):
            path = Path(d[len("file:"):])
            path.parent.mkdir(parents=True, exist_ok=True)
            handler = logging.FileHandler(path, mode="w", encoding="utf-8")
        else:
            raise ValueError(f"Unknown audit log destination: {d}")

        handler.setFormatter(logging.Formatter("%(message)s"))
        logger.addHandler(handler)

    return logger


def emit_audit_log(
        run_plan: RunPlan,
        dest: str = "file",
        path: Path | None = None) -> Path | None:
    """
    Writes the run's audit trail, one JSON event per line.

    Args:
        run_plan (RunPlan): The run whose events are emitted.
        dest (str): Space-separated destinations; ``file`` means ``path``, or
            ``<output_dir>/run.audit.jsonl`` when no path is given.
        path (Path | None): Explicit file for the ``file`` destination.

    Returns:
        Path | None: The audit file written, if any.

    Raises:
        ValueError: If no run plan is given.
    """
    if not run_plan:
        raise ValueError("No run plan found; cannot emit audit log")
    file_path = path or Path(run_plan.output_dir) / AUDIT_LOG_FILENAME
    dests = []
    written = None
    for d in dest.split(" "):
        if d == "file":
            dests.append(f"file:{file_path}")
            written = file_path
        else:
            dests.append(d)
    logger = configure_emitter(dests)
    try:
        emit_all(logger, run_plan.audit_log)
    finally:
        for handler in list(logger.handlers):
            handler.flush()
            handler.close()
        logger.handlers.clear()
    return written
