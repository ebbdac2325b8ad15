from __future__ import annotations

import json
import sys
from argparse import Namespace
from pathlib import Path

from gpbound.analysis.analysis_context_vars import current_analysis_context
from gpbound.analysis.cli import parse_cli
from gpbound.analysis.constants import AUDIT_LOG_FILENAME, MANIFEST_FILENAME
from gpbound.analysis.domain.runplan_model import RunManifest, RunPlan
from gpbound.analysis.lifecycle.analysis_context import AnalysisContext
from gpbound.analysis.lifecycle.audit.audit_emitter import emit_audit_log
from gpbound.analysis.lifecycle.audit.run_event_model import EventType, LevelType, RunEvent, StageType
from gpbound.analysis.lifecycle.execute.executor import execute_command, execute_version
from gpbound.analysis.lifecycle.init.initializer import init_run, system_check
from gpbound.helper.errors import GpBoundError


def _finish(plan: RunPlan, *, status: str, verbose: bool) -> None:
    out_dir = Path(plan.output_dir)
    if not plan.command or not out_dir.is_dir():
        return
    audit_path = plan.register_output(out_dir / AUDIT_LOG_FILENAME)
    manifest_path = plan.register_output(out_dir / MANIFEST_FILENAME)
    RunManifest.from_plan(plan, status=status).save_file(manifest_path)
    plan.audit_log.append(
        RunEvent.make(
            StageType.LIFECYCLE,
            EventType.OUTPUT,
            message=f"wrote {MANIFEST_FILENAME}",
            payload={"status": status, "outputs": len(plan.outputs)}))
    emit_audit_log(plan, dest="file stderr" if verbose else "file", path=audit_path)


def run(args: Namespace) -> RunPlan:
    """
    Lifecycle orchestration entrypoint consisting of these main tasks:
      - create and register a RunPlan in context
      - perform host checks
      - delegate to INIT (init_run) and EXECUTE (execute_command)
      - always write the manifest and the audit log once an output directory exists

    Args:
        args (Namespace): The parsed command line.

    Returns:
        RunPlan: The finished plan with its outputs and audit log.

    Raises:
        Exception: Any error of the run is recorded and re-raised.
    """
    run_plan = RunPlan()
    var_token = current_analysis_context.set(AnalysisContext(run_plan=run_plan))
    status = "failed"
    try:
        run_plan.audit_log.append(
            RunEvent.make(
                StageType.LIFECYCLE,
                EventType.START,
                message="Starting gpbound run"))
        system_check()
        if args.version:
            execute_version()
        else:
            init_run(args)
            execute_command(args)
        status = "ok"
        run_plan.audit_log.append(
            RunEvent.make(
                StageType.LIFECYCLE,
                EventType.COMPLETE,
                message=f"Completed gpbound {run_plan.command}".rstrip()))
    except KeyboardInterrupt:
        status = "interrupted"
        raise
    except Exception as e:
        run_plan.audit_log.append(
            RunEvent.make(
                StageType.LIFECYCLE,
                EventType.FAIL,
                LevelType.ERROR,
                message=str(e)))
        raise
    finally:
        try:
            _finish(run_plan, status=status, verbose=bool(getattr(args, "verbose", False)))
        finally:
            current_analysis_context.reset(var_token)
    return run_plan


def error_json(e: BaseException, command: str | None) -> str:
    """One-line JSON error object for stderr."""
    mapping = e.to_mapping() if isinstance(e, GpBoundError) else {"error": type(e).__name__, "message": str(e)}
    mapping["command"] = command
    return json.dumps(mapping, default=str, sort_keys=True)


def main(argv: list[str] | None = None) -> None:
    """
    Main entry point of the ``gpbound`` command.

    Exits with 0 when every requested output was written, 1 on any error (a
    JSON error object is printed to stderr), 2 on usage errors and 130 when
    interrupted.
    """
    args = parse_cli(argv)
    try:
        plan = run(args)
    except KeyboardInterrupt:
        sys.exit(130)
    except Exception as e:
        print(error_json(e, args.command), file=sys.stderr)
        sys.exit(1)
    if plan.command:
        print(Path(plan.output_dir) / MANIFEST_FILENAME)


if __name__ == "__main__":  # pragma: no cover
    main()
