from __future__ import annotations

import time
from collections.abc import Mapping
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib.metadata import PackageNotFoundError, version as get_version
from pathlib import Path
from typing import TYPE_CHECKING, Any

from appdirs import user_cache_dir
from typing_extensions import Self

from gpbound.analysis.constants import RUNS_DIR
from gpbound.helper.multiformat_model_mixin import MultiformatModelMixin

if TYPE_CHECKING:
    from gpbound.analysis.lifecycle.audit.run_event_model import RunEvent


def tool_version() -> str:
    try:
        return get_version("gpbound")
    except PackageNotFoundError:
        return "(source)"


def default_output_dir(command: str) -> Path:
    """Per-command run directory under the user cache, e.g. ``~/.cache/gpbound/runs/bound``."""
    return Path(user_cache_dir("gpbound")) / RUNS_DIR / command


@dataclass(frozen=False, kw_only=True)
class RunPlan(MultiformatModelMixin):
    """
    Mutable record of one CLI invocation: what was asked for, where outputs go
    and everything that happened along the way.

    Attributes:
        audit_log (list[RunEvent]): Events recorded during the run.
        command (str): The subcommand being executed.
        config_path (Path | None): The main input document (model, scenario), if any.
        created_at (datetime): When the plan was created.
        gpbound_version (str): Version of the tool that ran.
        output_dir (Path): Directory receiving every artifact of the run.
        outputs (list[Path]): Artifacts written so far, in write order.
        seed (int): The single seed all randomness derives from.
        threads (int): Worker threads for parallel grid and sampling work.
        started (float): ``time.perf_counter`` at creation, for the wall-clock duration.
    """
    audit_log: list[RunEvent] = field(default_factory=list)
    command: str = ""
    config_path: Path | None = None
    created_at: datetime = field(default_factory=lambda: datetime.now(timezone.utc))
    gpbound_version: str = field(default_factory=tool_version)
    output_dir: Path = field(default_factory=Path)
    outputs: list[Path] = field(default_factory=list)
    seed: int = 0
    threads: int = 1
    started: float = field(default_factory=time.perf_counter)

    def register_output(self, path: Path) -> Path:
        if path not in self.outputs:
            self.outputs.append(path)
        return path

    def elapsed(self) -> float:
        return time.perf_counter() - self.started

    def to_mapping(self, *args, **kwargs) -> Mapping[str, Any]:
        return {
            "audit_log": [e.to_mapping() for e in self.audit_log],
            "command": self.command,
            "config_path": str(self.config_path) if self.config_path else None,
            "created_at": self.created_at.isoformat(),
            "gpbound_version": self.gpbound_version,
            "output_dir": str(self.output_dir),
            "outputs": [str(p) for p in self.outputs],
            "seed": self.seed,
            "threads": self.threads,
        }


@dataclass(frozen=True, slots=True, kw_only=True)
class RunManifest(MultiformatModelMixin):
    """
    Summary written atomically at the end of a run, listing every output file.

    Attributes:
        command (str): The subcommand.
        config_path (str | None): Main input document.
        seed (int): Run seed.
        output_dir (str): Output directory.
        tool_version (str): Version of gpbound.
        duration_s (float): Wall-clock duration in seconds.
        outputs (tuple[str, ...]): Output file names relative to ``output_dir``.
        status (str): ``ok`` or ``failed``.
    """
    command: str
    config_path: str | None
    seed: int
    output_dir: str
    tool_version: str
    duration_s: float
    outputs: tuple[str, ...] = ()
    status: str = "ok"

    @classmethod
    def from_plan(cls, plan: RunPlan, *, status: str = "ok") -> RunManifest:
        out_dir = plan.output_dir
        names = []
        for p in plan.outputs:
            try:
                names.append(Path(p).relative_to(out_dir).as_posix())
            except ValueError:
                names.append(Path(p).as_posix())
        return cls(
            command=plan.command,
            config_path=str(plan.config_path) if plan.config_path else None,
            seed=plan.seed,
            output_dir=str(out_dir),
            tool_version=plan.gpbound_version,
            duration_s=round(plan.elapsed(), 6),
            outputs=tuple(names),
            status=status)

    def to_mapping(self, *args, **kwargs) -> dict[str, Any]:
        return {
            "command": self.command,
            "config_path": self.config_path,
            "seed": self.seed,
            "output_dir": self.output_dir,
            "tool_version": self.tool_version,
            "duration_s": self.duration_s,
            "outputs": list(self.outputs),
            "status": self.status,
        }

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Any], **_: Any) -> Self:
        return cls(
            command=str(mapping["command"]),
            config_path=mapping.get("config_path"),
            seed=int(mapping.get("seed", 0)),
            output_dir=str(mapping.get("output_dir", ".")),
            tool_version=str(mapping.get("tool_version", "")),
            duration_s=float(mapping.get("duration_s", 0.0)),
            outputs=tuple(mapping.get("outputs", ())),
            status=str(mapping.get("status", "ok")))
