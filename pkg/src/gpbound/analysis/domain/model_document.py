from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from typing_extensions import Self

from gpbound.analysis.domain.dataset_model import Dataset
from gpbound.analysis.domain.kernel_model import KernelSpec
from gpbound.analysis.domain.report_model import FitDiagnostics
from gpbound.helper.errors import ConfigError, GpBoundError
from gpbound.helper.multiformat_model_mixin import MultiformatModelMixin


@dataclass(frozen=True, slots=True, kw_only=True)
class ModelDocument(MultiformatModelMixin):
    """
    A GP model on disk: one kernel per output, the noise variances and the
    training-data file.

    Serialized as::

        {"kernels": [{"family": "se_ard", "phi": [...]}],
         "noise_var": [0.01],
         "data": "train.csv",
         "diagnostics": [{...}]}

    A relative ``data`` path is resolved against the document's directory when
    loaded with ``from_file``.

    Attributes:
        kernels (tuple[KernelSpec, ...]): One kernel per output.
        noise_var (tuple[float, ...]): One noise variance per output, or a single shared one.
        data_path (Path): Training data CSV.
        diagnostics (tuple[FitDiagnostics, ...]): Fit diagnostics per output, if fitted.
    """
    kernels: tuple[KernelSpec, ...]
    noise_var: tuple[float, ...]
    data_path: Path
    diagnostics: tuple[FitDiagnostics, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if not self.kernels:
            raise ConfigError("a model document needs at least one kernel")
        if len(self.noise_var) not in (1, len(self.kernels)):
            raise ConfigError(f"{len(self.noise_var)} noise variances for {len(self.kernels)} kernels")

    def load_dataset(self) -> Dataset:
        return Dataset.from_csv(self.data_path, self.noise_var)

    def relative_to(self, directory: Path) -> ModelDocument:
        """Copy whose data path is written relative to ``directory`` where possible."""
        try:
            rel = Path(self.data_path).resolve().relative_to(directory.resolve())
        except ValueError:
            return self
        return replace(self, data_path=rel)

    def to_mapping(self, *args, **kwargs) -> dict[str, Any]:
        mapping: dict[str, Any] = {
            "kernels": [k.to_mapping() for k in self.kernels],
            "noise_var": list(self.noise_var),
            "data": Path(self.data_path).as_posix(),
        }
        if self.diagnostics:
            mapping["diagnostics"] = [d.to_mapping() for d in self.diagnostics]
        return mapping

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Any], **_: Any) -> Self:
        try:
            raw_kernels = mapping["kernels"]
            data = mapping["data"]
        except KeyError as e:
            raise ConfigError(f"model document is missing {e.args[0]!r}") from None
        if isinstance(raw_kernels, Mapping):
            raw_kernels = [raw_kernels]
        noise = mapping.get("noise_var", [0.0])
        noise = [noise] if isinstance(noise, (int, float)) else list(noise)
        try:
            kernels = tuple(KernelSpec.from_mapping(k) for k in raw_kernels)
            diagnostics = tuple(FitDiagnostics.from_mapping(d) for d in mapping.get("diagnostics", []))
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, GpBoundError):
                raise
            raise ConfigError(f"invalid model document: {e}") from e
        return cls(
            kernels=kernels,
            noise_var=tuple(float(v) for v in noise),
            data_path=Path(str(data)),
            diagnostics=diagnostics)

    @classmethod
    def _postprocess_instance(cls, inst: Self, *, fmt: str, path: Path | None, **_: Any) -> Self:
        if path is None or inst.data_path.is_absolute():
            return inst
        return replace(inst, data_path=path.parent / inst.data_path)
