from __future__ import annotations

import sys
from argparse import Namespace

from gpbound.analysis.cli import CommandKind
from gpbound.analysis.domain.runplan_model import tool_version
from gpbound.analysis.lifecycle.audit.run_event_model import StageType, audit
from gpbound.analysis.lifecycle.execute.bound_operation import execute_bound
from gpbound.analysis.lifecycle.execute.check_operation import execute_check_kernel
from gpbound.analysis.lifecycle.execute.fit_operation import execute_fit
from gpbound.analysis.lifecycle.execute.scenario_operation import execute_scenario
from gpbound.analysis.lifecycle.execute.validate_operation import execute_validate


@audit(StageType.LIFECYCLE, substage="execute_version")
def execute_version() -> None:
    print(f"Python: {sys.version.split()[0]}")
    print(f"gpbound: {tool_version()}")


@audit(StageType.LIFECYCLE, substage="execute_command")
def execute_command(args: Namespace) -> None:
    """
    Dispatches a parsed command line to its operation.

    Raises:
        ValueError: If the command is not recognized.
    """
    match args.command:
        case CommandKind.FIT:
            execute_fit(args)
        case CommandKind.BOUND:
            execute_bound(args)
        case CommandKind.VALIDATE:
            execute_validate(args)
        case CommandKind.SCENARIO:
            execute_scenario(args)
        case CommandKind.CHECK_KERNEL:
            execute_check_kernel(args)
        case _:
            raise ValueError(f"unknown command: {args.command}")
