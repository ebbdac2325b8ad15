from __future__ import annotations

import itertools
import json
from collections.abc import Iterator, Mapping, Sequence
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any

import numpy as np
from typing_extensions import Self

from gpbound.analysis.domain.kernel_model import KernelFamily, KernelSpec
from gpbound.analysis.domain.report_model import PropertyCheckReport
from gpbound.helper.errors import KernelDomainError
from gpbound.helper.multiformat_model_mixin import MultiformatModelMixin


@dataclass(frozen=True, slots=True, eq=False)
class HyperRectangle:
    """
    Axis-aligned hyperparameter box ``[lower, upper]``.

    Attributes:
        lower (np.ndarray): Componentwise lower corner.
        upper (np.ndarray): Componentwise upper corner, ``lower <= upper``.
    """
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self) -> None:
        lo = np.asarray(self.lower, dtype=float).reshape(-1)
        hi = np.asarray(self.upper, dtype=float).reshape(-1)
        if lo.shape != hi.shape:
            raise KernelDomainError(f"box corners differ in length: {lo.shape[0]} vs {hi.shape[0]}")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise KernelDomainError("box corners must be finite")
        if np.any(lo > hi):
            raise KernelDomainError(f"box lower {lo.tolist()} exceeds upper {hi.tolist()}")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, HyperRectangle):
            return NotImplemented
        return np.array_equal(self.lower, other.lower) and np.array_equal(self.upper, other.upper)

    def __hash__(self) -> int:
        return hash((self.lower.tobytes(), self.upper.tobytes()))

    @classmethod
    def degenerate(cls, phi: Sequence[float] | np.ndarray) -> HyperRectangle:
        arr = np.asarray(phi, dtype=float)
        return cls(lower=arr.copy(), upper=arr.copy())

    @property
    def dim(self) -> int:
        return int(self.lower.shape[0])

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    @property
    def is_degenerate(self) -> bool:
        return bool(np.all(self.lower == self.upper))

    def contains(self, phi: Sequence[float] | np.ndarray, tol: float = 0.0) -> bool:
        arr = np.asarray(phi, dtype=float)
        return bool(np.all(arr >= self.lower - tol) and np.all(arr <= self.upper + tol))

    def corners(self) -> np.ndarray:
        """All ``2^l`` corners, shape ``(2^l, l)``, lower corner first, upper corner last."""
        picks = np.array(list(itertools.product((0, 1), repeat=self.dim)), dtype=bool)
        return np.where(picks, self.upper, self.lower)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.lower + rng.random((n, self.dim)) * self.width

    def validate_for(self, family: KernelFamily) -> None:
        if self.dim != family.n_hyper:
            raise KernelDomainError(
                f"{family.label} expects {family.n_hyper}-dimensional boxes, got {self.dim}")
        family.validate_phi(self.lower)
        family.validate_phi(self.upper)

    def to_mapping(self) -> dict[str, Any]:
        return {"lower": [float(v) for v in self.lower], "upper": [float(v) for v in self.upper]}


@dataclass(frozen=True, slots=True, kw_only=True)
class CandidateEntry:
    """
    One candidate kernel family with its hyperparameter box, plus the property
    certificates recorded for it (if it has been checked).
    """
    family: KernelFamily
    box: HyperRectangle
    monotone: PropertyCheckReport | None = None
    quasiconcave: PropertyCheckReport | None = None

    def __post_init__(self) -> None:
        self.box.validate_for(self.family)

    @property
    def certified(self) -> bool:
        return bool(
            self.monotone is not None and self.monotone.passed
            and self.quasiconcave is not None and self.quasiconcave.passed)

    def spec_at(self, phi: Sequence[float] | np.ndarray) -> KernelSpec:
        return KernelSpec(family=self.family, phi=np.asarray(phi, dtype=float))

    @property
    def upper_spec(self) -> KernelSpec:
        return self.spec_at(self.box.upper)

    @property
    def lower_spec(self) -> KernelSpec:
        return self.spec_at(self.box.lower)

    def to_mapping(self) -> dict[str, Any]:
        mapping = self.family.to_mapping()
        mapping.pop("n_x", None)
        mapping.update(self.box.to_mapping())
        return mapping

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Any]) -> CandidateEntry:
        try:
            lower = np.asarray(mapping["lower"], dtype=float)
            upper = np.asarray(mapping["upper"], dtype=float)
        except KeyError as e:
            raise KernelDomainError(f"candidate entry is missing {e.args[0]!r}") from None
        family = KernelFamily.from_mapping(mapping, n_hyper=lower.reshape(-1).shape[0])
        return cls(family=family, box=HyperRectangle(lower=lower, upper=upper))


@dataclass(frozen=True, slots=True, kw_only=True)
class CandidateSet(MultiformatModelMixin):
    """
    The finite list of candidate kernels and hyperparameter boxes that is
    assumed to contain the ground truth.

    Serialized as a JSON list of ``{"family", "p", "lower", "upper"}`` objects.

    Construction does not run the property checks. ``certify_candidate_set``
    returns a copy whose entries carry their reports, and the closed-form bound
    refuses a set that is neither certified nor marked ``unsafe``.

    Attributes:
        entries (tuple[CandidateEntry, ...]): At least one entry, in order.
        unsafe (bool): Waives the certificate requirement of the closed-form bound.
        name (str): Optional label (used for the interval variants of a scenario).
    """
    entries: tuple[CandidateEntry, ...]
    unsafe: bool = False
    name: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(self.entries))
        if len(self.entries) < 1:
            raise KernelDomainError("a candidate set needs at least one entry")

    def __iter__(self) -> Iterator[CandidateEntry]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def certified(self) -> bool:
        return all(e.certified for e in self.entries)

    @classmethod
    def singleton(cls, spec: KernelSpec, *, name: str = "") -> CandidateSet:
        entry = CandidateEntry(family=spec.family, box=HyperRectangle.degenerate(spec.phi))
        return cls(entries=(entry,), name=name)

    def with_entries(self, entries: Sequence[CandidateEntry]) -> CandidateSet:
        return replace(self, entries=tuple(entries))

    def with_unsafe(self, unsafe: bool = True) -> CandidateSet:
        return replace(self, unsafe=unsafe)

    def cache_token(self) -> tuple:
        return tuple(
            (e.family, e.box.lower.tobytes(), e.box.upper.tobytes()) for e in self.entries)

    def to_mapping(self, *args, **kwargs) -> dict[str, Any]:
        return {"entries": [e.to_mapping() for e in self.entries]}

    def to_json(self, *, indent=2) -> str:
        return json.dumps([e.to_mapping() for e in self.entries], indent=indent, sort_keys=True)

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Any], **_: Any) -> Self:
        raw = mapping.get("entries")
        if not isinstance(raw, Sequence) or isinstance(raw, (str, bytes)):
            raise KernelDomainError("candidate set requires a list of entries")
        return cls(
            entries=tuple(CandidateEntry.from_mapping(e) for e in raw),
            unsafe=bool(mapping.get("unsafe", False)),
            name=str(mapping.get("name", "")))

    @classmethod
    def _coerce_root_mapping(
            cls,
            raw: Any,
            *,
            fmt: str,
            path: Path | None,
            **kwargs: Any) -> Mapping[str, Any]:
        if isinstance(raw, list):
            return {"entries": raw}
        return super(CandidateSet, cls)._coerce_root_mapping(raw, fmt=fmt, path=path, **kwargs)


@dataclass(frozen=True, slots=True, kw_only=True)
class CertificationReport(MultiformatModelMixin):
    """
    Property-check outcome of every entry of a candidate set, as written by
    ``gpbound check-kernel``.
    """
    entries: tuple[CandidateEntry, ...]

    @classmethod
    def from_candidate_set(cls, cands: CandidateSet) -> CertificationReport:
        return cls(entries=cands.entries)

    @property
    def passed(self) -> bool:
        return all(e.certified for e in self.entries)

    def to_mapping(self, *args, **kwargs) -> dict[str, Any]:
        rows = []
        for entry in self.entries:
            row = entry.to_mapping()
            row["certified"] = entry.certified
            row["checks"] = [r.to_mapping() for r in (entry.monotone, entry.quasiconcave) if r is not None]
            rows.append(row)
        return {"passed": self.passed, "entries": rows}
