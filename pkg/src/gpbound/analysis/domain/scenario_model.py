from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any

import numpy as np
import pandas as pd
from typing_extensions import Self

from gpbound.analysis.constants import DEFAULT_CHECK_BUDGET, DEFAULT_NOISE_VAR, DEFAULT_RESTARTS
from gpbound.analysis.domain.candidate_model import CandidateEntry, HyperRectangle
from gpbound.analysis.domain.kernel_model import FamilyKind, KernelFamily, KernelSpec
from gpbound.analysis.lifecycle.audit.run_event_model import EventType, StageType, record_event
from gpbound.helper.errors import ConfigError, GpBoundError
from gpbound.helper.multiformat_model_mixin import MultiformatModelMixin


class FollowKind(str, Enum):
    """Which model's posterior mean drives the rollout."""
    ESTIMATE = "estimate"
    TRUTH = "truth"


def _default_truth() -> KernelSpec:
    return KernelSpec(family=KernelFamily.matern(1), phi=np.array([5.2, 1.6]))


def _default_fixed_entries() -> tuple[CandidateEntry, ...]:
    def entry(family: KernelFamily, lower: list[float], upper: list[float]) -> CandidateEntry:
        return CandidateEntry(family=family, box=HyperRectangle(lower=np.array(lower), upper=np.array(upper)))

    return (
        entry(KernelFamily.matern(0), [1.0, 1.5], [10.0, 2.0]),
        entry(KernelFamily.matern(2), [1.0, 1.5], [10.0, 2.0]),
        entry(KernelFamily.rq(1), [1.0, 0.1], [20.0, 1.0]),
        entry(KernelFamily.se_ard(1), [0.1, 0.01], [10.0, 1.0]),
    )


@dataclass(frozen=True, slots=True, kw_only=True)
class EvalGrid:
    lower: float = -10.0
    upper: float = 15.0
    resolution: int = 200

    def __post_init__(self) -> None:
        if not self.lower < self.upper:
            raise ConfigError(f"eval grid needs lower < upper, got [{self.lower}, {self.upper}]")
        if self.resolution < 2:
            raise ConfigError(f"eval grid resolution must be >= 2, got {self.resolution}")

    def points(self) -> np.ndarray:
        return np.linspace(self.lower, self.upper, self.resolution).reshape(-1, 1)

    def contains(self, x: float) -> bool:
        return bool(np.isfinite(x) and self.lower <= x <= self.upper)

    def to_mapping(self) -> dict[str, Any]:
        return {"lower": self.lower, "upper": self.upper, "resolution": self.resolution}


@dataclass(frozen=True, slots=True, kw_only=True)
class RolloutConfig:
    """
    Attributes:
        x0 (float): Initial state.
        steps (int): Number of transitions.
        follow (FollowKind): Dynamics the trajectory follows.
        variant (int): Index of the interval variant whose bound is reported.
    """
    x0: float = 1.0
    steps: int = 10
    follow: FollowKind = FollowKind.ESTIMATE
    variant: int = 0

    def __post_init__(self) -> None:
        if self.steps < 0:
            raise ConfigError(f"rollout steps must be >= 0, got {self.steps}")
        object.__setattr__(self, "follow", FollowKind(self.follow))

    def to_mapping(self) -> dict[str, Any]:
        return {"x0": self.x0, "steps": self.steps, "follow": self.follow.value, "variant": self.variant}


def interval_name(scale: tuple[float, float]) -> str:
    """``(0.9, 1.1)`` gives ``10pct``, ``(0, 2)`` gives ``100pct``."""
    return f"{round((scale[1] - 1.0) * 100):d}pct"


@dataclass(frozen=True, slots=True, kw_only=True)
class ScenarioConfig(MultiformatModelMixin):
    """
    Settings of the one-dimensional state-space experiment.

    Every key is optional in a config file; missing keys take the defaults
    below and are recorded in the run's audit log.

    Attributes:
        truth_kernel (KernelSpec): Data-generating kernel.
        n_train (int): Number of training inputs, drawn uniformly on ``train_range``.
        train_range (tuple[float, float]): Interval of the training inputs.
        noise_var (float): Measurement-noise variance.
        eval_grid (EvalGrid): State-space grid of the curves.
        interval_scales (tuple[tuple[float, float], ...]): ``(lower, upper)``
            factors applied to the true hyperparameters, one candidate set each.
        fixed_entries (tuple[CandidateEntry, ...]): Entries shared by every
            candidate set.
        estimate_phi (tuple[float, ...] | None): Pins the SE estimate's
            hyperparameters instead of fitting them.
        restarts (int): Likelihood-fit restarts.
        check_budget (int): Cases per kernel property check.
        rollout (RolloutConfig): Trajectory settings.
        seed (int): Root seed.
    """
    truth_kernel: KernelSpec = field(default_factory=_default_truth)
    n_train: int = 10
    train_range: tuple[float, float] = (-10.0, 15.0)
    noise_var: float = DEFAULT_NOISE_VAR
    eval_grid: EvalGrid = field(default_factory=EvalGrid)
    interval_scales: tuple[tuple[float, float], ...] = ((0.9, 1.1), (0.0, 2.0), (0.0, 3.0))
    fixed_entries: tuple[CandidateEntry, ...] = field(default_factory=_default_fixed_entries)
    estimate_phi: tuple[float, ...] | None = None
    restarts: int = DEFAULT_RESTARTS
    check_budget: int = DEFAULT_CHECK_BUDGET
    rollout: RolloutConfig = field(default_factory=RolloutConfig)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_train < 1:
            raise ConfigError(f"n_train must be >= 1, got {self.n_train}")
        if not self.train_range[0] < self.train_range[1]:
            raise ConfigError(f"train_range needs lower < upper, got {list(self.train_range)}")
        if self.noise_var < 0.0:
            raise ConfigError(f"noise_var must be >= 0, got {self.noise_var}")
        if not self.interval_scales:
            raise ConfigError("at least one interval scale is required")
        for lo, hi in self.interval_scales:
            if lo < 0.0 or hi <= 0.0 or lo > hi:
                raise ConfigError(f"invalid interval scale ({lo}, {hi})")
        if not 0 <= self.rollout.variant < len(self.interval_scales):
            raise ConfigError(f"rollout variant {self.rollout.variant} out of range")
        if self.truth_kernel.family.kind == FamilyKind.POLY and self.train_range[0] < 0.0:
            raise ConfigError("a polynomial truth needs a nonnegative train_range")

    def with_seed(self, seed: int) -> ScenarioConfig:
        return replace(self, seed=seed)

    def interval_box(self, scale: tuple[float, float]) -> HyperRectangle:
        """Box ``[lo·φ, hi·φ]`` around the true φ, lower corner clipped to the family floor."""
        phi = self.truth_kernel.phi
        floor = self.truth_kernel.family.phi_floor
        return HyperRectangle(lower=np.maximum(scale[0] * phi, floor), upper=scale[1] * phi)

    def to_mapping(self, *args, **kwargs) -> dict[str, Any]:
        return {
            "truth_kernel": self.truth_kernel.to_mapping(),
            "n_train": self.n_train,
            "train_range": list(self.train_range),
            "noise_var": self.noise_var,
            "eval_grid": self.eval_grid.to_mapping(),
            "interval_scales": [list(s) for s in self.interval_scales],
            "fixed_entries": [e.to_mapping() for e in self.fixed_entries],
            "estimate_phi": list(self.estimate_phi) if self.estimate_phi is not None else None,
            "restarts": self.restarts,
            "check_budget": self.check_budget,
            "rollout": self.rollout.to_mapping(),
            "seed": self.seed,
        }

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Any], **_: Any) -> Self:
        """
        Builds a config from a (possibly partial) mapping.

        Raises:
            ConfigError: If a key is unknown or a value is invalid.
        """
        known = {f for f in cls.__dataclass_fields__}
        unknown = sorted(set(mapping) - known)
        if unknown:
            raise ConfigError(f"unknown scenario keys: {', '.join(unknown)}")
        missing = sorted(known - set(mapping))
        if missing:
            record_event(
                StageType.SCENARIO,
                EventType.DECISION,
                message="scenario defaults applied",
                payload={"defaulted_keys": missing})

        kwargs: dict[str, Any] = {}
        try:
            if "truth_kernel" in mapping:
                kwargs["truth_kernel"] = KernelSpec.from_mapping(mapping["truth_kernel"])
            for key, conv in (("n_train", int), ("noise_var", float), ("restarts", int),
                              ("check_budget", int), ("seed", int)):
                if key in mapping:
                    kwargs[key] = conv(mapping[key])
            if "train_range" in mapping:
                kwargs["train_range"] = _pair(mapping["train_range"], "train_range")
            if "eval_grid" in mapping:
                grid = mapping["eval_grid"]
                kwargs["eval_grid"] = EvalGrid(
                    lower=float(grid.get("lower", -10.0)),
                    upper=float(grid.get("upper", 15.0)),
                    resolution=int(grid.get("resolution", 200)))
            if "interval_scales" in mapping:
                kwargs["interval_scales"] = tuple(_pair(s, "interval_scales") for s in mapping["interval_scales"])
            if "fixed_entries" in mapping:
                kwargs["fixed_entries"] = tuple(CandidateEntry.from_mapping(e) for e in mapping["fixed_entries"])
            if mapping.get("estimate_phi") is not None:
                kwargs["estimate_phi"] = tuple(float(v) for v in mapping["estimate_phi"])
            if "rollout" in mapping:
                ro = mapping["rollout"]
                kwargs["rollout"] = RolloutConfig(
                    x0=float(ro.get("x0", 1.0)),
                    steps=int(ro.get("steps", 10)),
                    follow=FollowKind(str(ro.get("follow", FollowKind.ESTIMATE.value))),
                    variant=int(ro.get("variant", 0)))
        except ConfigError:
            raise
        except (GpBoundError, KeyError, TypeError, ValueError, AttributeError) as e:
            raise ConfigError(f"invalid scenario config: {e}") from e
        return cls(**kwargs)


def _pair(value: Sequence[Any], name: str) -> tuple[float, float]:
    if len(value) != 2:
        raise ConfigError(f"{name} entries must have two numbers, got {list(value)}")
    return float(value[0]), float(value[1])


@dataclass(frozen=True, slots=True, kw_only=True)
class RolloutTrace(MultiformatModelMixin):
    """
    States visited by a mean-dynamics rollout and the error quantities at each.

    ``len(states) == steps + 1`` unless ``truncated`` is set, in which case the
    trajectory left the evaluation domain and stops at the last valid state.
    """
    states: tuple[float, ...]
    exact_mspe: tuple[float, ...]
    est_var: tuple[float, ...]
    thm2: tuple[float, ...]
    follow: FollowKind = FollowKind.ESTIMATE
    truncated: bool = False

    def __len__(self) -> int:
        return len(self.states)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "step": np.arange(len(self.states)),
            "state": self.states,
            "exact_mspe": self.exact_mspe,
            "est_var": self.est_var,
            "thm2": self.thm2,
        })

    def to_mapping(self, *args, **kwargs) -> dict[str, Any]:
        return {
            "states": list(self.states),
            "exact_mspe": list(self.exact_mspe),
            "est_var": list(self.est_var),
            "thm2": list(self.thm2),
            "follow": self.follow.value,
            "truncated": self.truncated,
        }

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Any], **_: Any) -> Self:
        return cls(
            states=tuple(float(v) for v in mapping["states"]),
            exact_mspe=tuple(float(v) for v in mapping["exact_mspe"]),
            est_var=tuple(float(v) for v in mapping["est_var"]),
            thm2=tuple(float(v) for v in mapping["thm2"]),
            follow=FollowKind(mapping.get("follow", FollowKind.ESTIMATE.value)),
            truncated=bool(mapping.get("truncated", False)))
