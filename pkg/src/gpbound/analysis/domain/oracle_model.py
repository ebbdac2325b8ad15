from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass
from typing import Any

from typing_extensions import Self

from gpbound.analysis.constants import DEFAULT_MC_BATCH, DEFAULT_MC_SAMPLES, MC_STATISTICAL_SAMPLES
from gpbound.helper.multiformat_model_mixin import MultiformatModelMixin


@dataclass(frozen=True, slots=True, kw_only=True)
class McConfig:
    """
    Monte Carlo settings.

    Two draws are the least that yield a standard error, so smaller runs are
    accepted for smoke checks. Results used to judge agreement with the exact
    error need at least ``MC_STATISTICAL_SAMPLES`` draws; see ``is_statistical``.

    Attributes:
        n_samples (int): Total number of joint draws.
        seed (int): Root seed; batch ``b`` draws from stream ``(seed, b)``.
        batch (int): Draws per batch, the unit of parallel work.
    """
    n_samples: int = DEFAULT_MC_SAMPLES
    seed: int = 0
    batch: int = DEFAULT_MC_BATCH

    def __post_init__(self) -> None:
        if self.n_samples < 2:
            raise ValueError(f"n_samples must be >= 2, got {self.n_samples}")
        if self.batch < 1:
            raise ValueError(f"batch must be >= 1, got {self.batch}")

    @property
    def is_statistical(self) -> bool:
        return self.n_samples >= MC_STATISTICAL_SAMPLES

    @property
    def batch_sizes(self) -> list[int]:
        full, rest = divmod(self.n_samples, self.batch)
        return [self.batch] * full + ([rest] if rest else [])


@dataclass(frozen=True, slots=True, kw_only=True)
class McResult(MultiformatModelMixin):
    """
    Sample mean of the squared prediction error and its standard error.

    Serialized as ``{"estimate", "std_error", "n_samples", "seed"}``; the
    optional ``exact_mspe`` is included when it was computed alongside.
    """
    estimate: float
    std_error: float
    n_samples: int
    seed: int
    exact_mspe: float | None = None

    @property
    def z_score(self) -> float | None:
        if self.exact_mspe is None or self.std_error == 0.0:
            return None
        return (self.estimate - self.exact_mspe) / self.std_error

    def to_mapping(self, *args, **kwargs) -> dict[str, Any]:
        mapping: dict[str, Any] = {
            "estimate": self.estimate,
            "std_error": self.std_error,
            "n_samples": self.n_samples,
            "seed": self.seed,
        }
        if self.exact_mspe is not None:
            mapping["exact_mspe"] = self.exact_mspe
        return mapping

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Any], **_: Any) -> Self:
        exact = mapping.get("exact_mspe")
        return cls(
            estimate=float(mapping["estimate"]),
            std_error=float(mapping["std_error"]),
            n_samples=int(mapping["n_samples"]),
            seed=int(mapping.get("seed", 0)),
            exact_mspe=float(exact) if exact is not None else None)
