from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np
from typing_extensions import Self

from gpbound.analysis.constants import PHI_FLOOR
from gpbound.helper.errors import KernelDomainError
from gpbound.helper.multiformat_model_mixin import MultiformatModelMixin


class FamilyKind(str, Enum):
    """
    The covariance families the engine can evaluate.

    Attributes:
        POLY (str): Polynomial kernel ``(x·x′ + φ²)^p`` on the nonnegative orthant.
        RQ (str): Rational quadratic kernel with integer shape ``p``.
        SE_ARD (str): Squared exponential with one lengthscale per input dimension.
        MATERN (str): Matérn kernel with half-integer smoothness ``ν = p + 1/2``.
    """
    POLY = "poly"
    RQ = "rq"
    SE_ARD = "se_ard"
    MATERN = "matern"


class InputConstraintKind(str, Enum):
    NONNEGATIVE_ORTHANT = "nonnegative-orthant"
    UNRESTRICTED = "unrestricted"


@dataclass(frozen=True, slots=True)
class KernelFamily:
    """
    A covariance family plus its structural parameters.

    The hyperparameter count ``l`` follows from the variant: polynomial has one
    (the offset), RQ and Matérn have a lengthscale and a signal scale, and
    SE-ARD has ``n_x`` lengthscales followed by a signal scale.

    Attributes:
        kind (FamilyKind): Which family.
        p (int | None): Degree (polynomial), shape (RQ) or smoothness index (Matérn).
        n_x (int | None): Input dimension, required for SE-ARD only.
    """
    kind: FamilyKind
    p: int | None = None
    n_x: int | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.kind, FamilyKind):
            object.__setattr__(self, "kind", FamilyKind(self.kind))
        match self.kind:
            case FamilyKind.POLY | FamilyKind.RQ:
                if self.p is None or int(self.p) != self.p or self.p < 1:
                    raise KernelDomainError(f"{self.kind.value} requires an integer p >= 1, got {self.p!r}")
            case FamilyKind.MATERN:
                if self.p not in (0, 1, 2):
                    raise KernelDomainError(f"matern requires p in {{0, 1, 2}}, got {self.p!r}")
            case FamilyKind.SE_ARD:
                if self.n_x is None or self.n_x < 1:
                    raise KernelDomainError(f"se_ard requires n_x >= 1, got {self.n_x!r}")
                if self.p is not None:
                    raise KernelDomainError("se_ard takes no p")

    @classmethod
    def poly(cls, p: int) -> KernelFamily:
        return cls(FamilyKind.POLY, p=p)

    @classmethod
    def rq(cls, p: int) -> KernelFamily:
        return cls(FamilyKind.RQ, p=p)

    @classmethod
    def se_ard(cls, n_x: int = 1) -> KernelFamily:
        return cls(FamilyKind.SE_ARD, n_x=n_x)

    @classmethod
    def matern(cls, p: int) -> KernelFamily:
        return cls(FamilyKind.MATERN, p=p)

    @classmethod
    def of(cls, kind: FamilyKind | str, *, p: int | None = None, n_x: int = 1) -> KernelFamily:
        """Family from command-line style arguments; ``n_x`` is only used by SE-ARD."""
        kind = FamilyKind(kind)
        if kind == FamilyKind.SE_ARD:
            return cls(kind, p=p, n_x=n_x)
        return cls(kind, p=p)

    @property
    def n_hyper(self) -> int:
        match self.kind:
            case FamilyKind.POLY:
                return 1
            case FamilyKind.SE_ARD:
                return int(self.n_x) + 1  # type: ignore[arg-type]
            case _:
                return 2

    @property
    def input_constraint(self) -> InputDomainConstraint:
        kind = (InputConstraintKind.NONNEGATIVE_ORTHANT
                if self.kind == FamilyKind.POLY
                else InputConstraintKind.UNRESTRICTED)
        return InputDomainConstraint(family=self, constraint=kind)

    @property
    def phi_floor(self) -> float:
        return 0.0 if self.kind == FamilyKind.POLY else PHI_FLOOR

    @property
    def label(self) -> str:
        match self.kind:
            case FamilyKind.SE_ARD:
                return f"se_ard(n_x={self.n_x})"
            case _:
                return f"{self.kind.value}(p={self.p})"

    def validate_phi(self, phi: Any) -> np.ndarray:
        """
        Checks a hyperparameter vector against this family's domain.

        Args:
            phi (Any): Array-like of length ``n_hyper``.

        Returns:
            np.ndarray: The vector as a float array.

        Raises:
            KernelDomainError: If the length is wrong, a value is not finite or
                lies below the family's floor.
        """
        arr = np.asarray(phi, dtype=float).reshape(-1)
        if arr.shape[0] != self.n_hyper:
            raise KernelDomainError(
                f"{self.label} expects {self.n_hyper} hyperparameters, got {arr.shape[0]}")
        if not np.all(np.isfinite(arr)):
            raise KernelDomainError(f"{self.label} hyperparameters must be finite: {arr.tolist()}")
        if np.any(arr < self.phi_floor):
            raise KernelDomainError(
                f"{self.label} hyperparameters must be >= {self.phi_floor:g}: {arr.tolist()}")
        return arr

    def to_mapping(self) -> dict[str, Any]:
        mapping: dict[str, Any] = {"family": self.kind.value}
        if self.p is not None:
            mapping["p"] = int(self.p)
        if self.n_x is not None:
            mapping["n_x"] = int(self.n_x)
        return mapping

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Any], *, n_hyper: int | None = None) -> KernelFamily:
        """
        Builds a family from its JSON form. For SE-ARD, ``n_x`` may be omitted and is
        then inferred from the hyperparameter count (``n_hyper - 1``).

        Args:
            mapping (Mapping[str, Any]): The ``family``/``p``/``n_x`` keys.
            n_hyper (int | None): Length of the accompanying hyperparameter vector.

        Returns:
            KernelFamily: The parsed family.
        """
        try:
            kind = FamilyKind(str(mapping["family"]).lower())
        except KeyError:
            raise KernelDomainError("kernel mapping requires a 'family' key") from None
        except ValueError:
            raise KernelDomainError(
                f"unknown kernel family {mapping['family']!r}; "
                f"expected one of {[k.value for k in FamilyKind]}") from None
        if kind == FamilyKind.SE_ARD:
            n_x = mapping.get("n_x")
            if n_x is None and n_hyper is not None:
                n_x = n_hyper - 1
            return cls(kind, n_x=int(n_x) if n_x is not None else None)
        p = mapping.get("p")
        return cls(kind, p=int(p) if p is not None else None)


@dataclass(frozen=True, slots=True)
class InputDomainConstraint:
    """
    The set of inputs a family accepts: the nonnegative orthant for the
    polynomial kernel, everything for the others.
    """
    family: KernelFamily
    constraint: InputConstraintKind

    def check(self, X: np.ndarray, what: str = "input") -> None:
        if self.constraint == InputConstraintKind.NONNEGATIVE_ORTHANT and np.any(np.asarray(X) < 0.0):
            raise KernelDomainError(
                f"{self.family.label} requires nonnegative {what} coordinates")


@dataclass(frozen=True, slots=True, eq=False)
class KernelSpec(MultiformatModelMixin):
    """
    A kernel family with a concrete hyperparameter vector φ.

    Serialized as ``{"family": ..., "p": ..., "phi": [...]}``.
    """
    family: KernelFamily
    phi: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self) -> None:
        arr = self.family.validate_phi(self.phi)
        arr.setflags(write=False)
        object.__setattr__(self, "phi", arr)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, KernelSpec):
            return NotImplemented
        return self.family == other.family and np.array_equal(self.phi, other.phi)

    def __hash__(self) -> int:
        return hash((self.family, self.phi.tobytes()))

    def with_phi(self, phi: Sequence[float] | np.ndarray) -> KernelSpec:
        return KernelSpec(family=self.family, phi=np.asarray(phi, dtype=float))

    def to_mapping(self, *args, **kwargs) -> dict[str, Any]:
        mapping = self.family.to_mapping()
        mapping.pop("n_x", None)
        mapping["phi"] = [float(v) for v in self.phi]
        return mapping

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Any], **_: Any) -> Self:
        if "phi" not in mapping:
            raise KernelDomainError("kernel spec requires a 'phi' list")
        phi = np.asarray(mapping["phi"], dtype=float).reshape(-1)
        family = KernelFamily.from_mapping(mapping, n_hyper=phi.shape[0])
        return cls(family=family, phi=phi)
