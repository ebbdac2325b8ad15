from __future__ import annotations

import datetime
import functools
import uuid
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import TYPE_CHECKING, Any, ParamSpec, TypeVar

from typing_extensions import Self

from gpbound.analysis.analysis_context_vars import current_analysis_context
from gpbound.helper.multiformat_model_mixin import MultiformatModelMixin, _normalize

if TYPE_CHECKING:
    from gpbound.analysis.domain.runplan_model import RunPlan

P = ParamSpec("P")
R = TypeVar("R")


# --------------------------------------------------------------------------- #
# Typed + runtime-safe event type definition
# --------------------------------------------------------------------------- #

class StageType(str, Enum):
    """
    Stages of an analysis run.

    Attributes:
        LIFECYCLE (str): The overall orchestration from start to completion.
        INIT (str): CLI parsing, environment checks and input loading.
        FIT (str): Marginal-likelihood hyperparameter fitting.
        BOUND (str): Exact MSPE and bound evaluation over a grid.
        ORACLE (str): Monte Carlo and brute-force validation.
        SCENARIO (str): The state-space model experiment.
        CHECK (str): Numerical kernel property checks.
    """
    LIFECYCLE = "LIFECYCLE"
    INIT = "INIT"
    FIT = "FIT"
    BOUND = "BOUND"
    ORACLE = "ORACLE"
    SCENARIO = "SCENARIO"
    CHECK = "CHECK"


class LevelType(str, Enum):
    DEBUG = "DEBUG"
    INFO = "INFO"
    WARN = "WARN"
    ERROR = "ERROR"


class EventType(str, Enum):
    """
    Semantic category of a run event.

    Attributes:
        ACTION (str): A meaningful step was taken.
        CHECKPOINT (str): A mid-stage milestone.
        COMPLETE (str): A stage or substage finished successfully.
        DECISION (str): A conditional branch or default was taken.
        EXCEPTION (str): An exception escaped a stage.
        FAIL (str): The run failed irrecoverably.
        INPUT (str): An external input was received.
        OUTPUT (str): An artifact was written.
        SKIP (str): A step was intentionally bypassed.
        START (str): A stage or substage began.
        VALIDATION (str): A validation check ran.
    """
    ACTION = "ACTION"
    CHECKPOINT = "CHECKPOINT"
    COMPLETE = "COMPLETE"
    DECISION = "DECISION"
    EXCEPTION = "EXCEPTION"
    FAIL = "FAIL"
    INPUT = "INPUT"
    OUTPUT = "OUTPUT"
    SKIP = "SKIP"
    START = "START"
    VALIDATION = "VALIDATION"


def _active_plan() -> RunPlan | None:
    ctx = current_analysis_context.get(None)
    return ctx.run_plan if ctx is not None else None


def record_event(
        stage: StageType,
        event_type: EventType,
        level: LevelType = LevelType.INFO,
        *,
        substage: str | None = None,
        message: str | None = None,
        payload: dict[str, Any] | None = None) -> RunEvent | None:
    """
    Appends an event to the active run's audit log.

    Engine code calls this freely: outside a CLI run (no active context) it
    does nothing and returns None.

    Returns:
        RunEvent | None: The recorded event, or None when no run is active.
    """
    plan = _active_plan()
    if plan is None:
        return None
    event = RunEvent.make(stage, event_type, level, substage=substage, message=message, payload=payload)
    plan.audit_log.append(event)
    return event


def audit(stage: StageType, substage: str | None = None) -> Callable[[Callable[P, R]], Callable[P, R]]:
    """
    Decorator that records START, COMPLETE and EXCEPTION events for a stage.

    Args:
        stage (StageType): The stage to log against.
        substage (str | None): Optional substage name.

    Returns:
        Callable[[Callable[P, R]], Callable[P, R]]: The decorator.

    Raises:
        RuntimeError: If no RunPlan is active when the wrapped function runs.
    """
    def decorator(fn: Callable[P, R]) -> Callable[P, R]:
        @functools.wraps(fn)
        def wrapper(*args: P.args, **kwargs: P.kwargs) -> R:
            plan = _active_plan()
            if plan is None:
                raise RuntimeError("No active RunPlan in context for @audit-decorated function")

            plan.audit_log.append(RunEvent.make(stage, EventType.START, substage=substage))
            try:
                result = fn(*args, **kwargs)
                plan.audit_log.append(RunEvent.make(stage, EventType.COMPLETE, substage=substage))
                return result
            except Exception as e:
                plan.audit_log.append(
                    RunEvent.make(
                        stage,
                        EventType.EXCEPTION,
                        LevelType.ERROR,
                        substage=substage,
                        message=f"{type(e).__name__}: {e}"))
                raise

        return wrapper

    return decorator


# --------------------------------------------------------------------------- #
# Data model
# --------------------------------------------------------------------------- #

@dataclass(slots=True, frozen=True)
class RunEvent(MultiformatModelMixin):
    """
    One entry of a run's audit trail.

    Attributes:
        event_id (str): Unique identifier. Defaults to a new UUID string.
        event_type (EventType): Category of the event.
        level (LevelType): Severity.
        message (str | None): Human-readable detail.
        payload (Mapping[str, Any] | None): Structured detail (numbers, paths, keys).
        stage (StageType | None): Stage the event belongs to.
        substage (str | None): Optional substage name.
        timestamp (datetime.datetime): UTC creation time.
    """
    event_id: str = field(default_factory=lambda: str(uuid.uuid4()))
    event_type: EventType = EventType.ACTION
    level: LevelType = LevelType.INFO
    message: str | None = field(default=None)
    payload: Mapping[str, Any] | None = field(default=None)
    stage: StageType | None = None
    substage: str | None = field(default=None)
    timestamp: datetime.datetime = field(
        default_factory=lambda: datetime.datetime.now(datetime.timezone.utc))

    def __post_init__(self):
        if not isinstance(self.stage, StageType):
            raise TypeError("RunEvent.stage must be a StageType")
        if not isinstance(self.event_type, EventType):
            raise TypeError("RunEvent.event_type must be an EventType")
        if not isinstance(self.level, LevelType):
            raise TypeError("RunEvent.level must be a LevelType")

    def to_mapping(self, *args, **kwargs) -> dict[str, Any]:
        return {
            "event_id": self.event_id,
            "event_type": self.event_type.value,
            "level": self.level.value,
            "message": self.message or "",
            "payload": _normalize(dict(self.payload or {})),
            "stage": self.stage.value if self.stage else None,
            "substage": self.substage or "",
            "timestamp": self.timestamp.isoformat(),
        }

    @classmethod
    def make(
            cls,
            stage: StageType,
            event_type: EventType,
            level: LevelType = LevelType.INFO,
            *,
            substage: str | None = None,
            message: str | None = None,
            payload: dict[str, Any] | None = None) -> RunEvent:
        return cls(
            stage=stage,
            substage=substage,
            event_type=event_type,
            level=level,
            message=message,
            payload=MappingProxyType(dict(payload or {})))

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Any], **_: Any) -> Self:
        return cls(
            event_id=mapping.get("event_id", str(uuid.uuid4())),
            event_type=EventType(mapping.get("event_type", EventType.ACTION.value)),
            level=LevelType(mapping.get("level", LevelType.INFO.value)),
            message=mapping.get("message"),
            payload=mapping.get("payload"),
            stage=StageType(mapping.get("stage", StageType.LIFECYCLE.value)),
            substage=mapping.get("substage"),
            timestamp=datetime.datetime.fromisoformat(
                mapping.get("timestamp", datetime.datetime.now(datetime.timezone.utc).isoformat())))
