from __future__ import annotations

import hashlib
import json
import os
import tempfile
from collections.abc import Mapping
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np
import tomli
import tomli_w
import yaml
from typing_extensions import Self


def _normalize(value: Any) -> Any:
    """
    Normalizes a value into plain, serializer-friendly Python objects.

    Numpy arrays become nested lists of Python floats/ints, numpy scalars become
    the matching Python scalar, paths become POSIX strings and enums their value.
    Mappings are key-sorted and normalized recursively; sets are sorted.

    Args:
        value (Any): The value to normalize.

    Returns:
        Any: The normalized value.
    """
    match value:
        case Path():
            return value.as_posix()

        case Enum():
            return value.value

        case np.ndarray():
            return _normalize(value.tolist())

        case np.generic():
            return value.item()

        case Mapping():
            return {
                str(k): _normalize(v)
                for k, v in sorted(value.items(), key=lambda kv: str(kv[0]))
            }

        case set() | frozenset():
            return sorted(_normalize(v) for v in value)

        case list() | tuple():
            return [_normalize(v) for v in value]

        case _:
            return value


def _strip_none(value: Any) -> Any:
    # TOML has no null
    match value:
        case dict():
            return {k: _strip_none(v) for k, v in value.items() if v is not None}
        case list():
            return [_strip_none(v) for v in value]
        case _:
            return value


def atomic_write_text(path: str | Path, text: str) -> Path:
    """
    Writes text to a file atomically by writing a temporary sibling file and
    renaming it over the destination with ``os.replace``.

    Args:
        path (str | Path): Destination file. Parent directories are created.
        text (str): The content to write (UTF-8).

    Returns:
        Path: The destination path.
    """
    dest = Path(path)
    dest.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{dest.name}.", suffix=".tmp", dir=dest.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp_name, dest)
    except BaseException:
        Path(tmp_name).unlink(missing_ok=True)
        raise
    return dest


class MultiformatSerializableMixin:
    """
    Adds JSON/YAML/TOML serialization to any model implementing ``to_mapping``.

    Every format goes through ``_normalize`` first, so models may keep numpy
    arrays in their fields and still serialize to plain documents.
    """

    def mapping_hash(self) -> str:
        """
        Generates a SHA-512 hash of the normalized mapping, serialized as compact,
        key-sorted JSON. Two models with equal content hash identically.

        Returns:
            str: The hexadecimal digest.
        """
        payload = json.dumps(
            _normalize(self.to_mapping()),
            sort_keys=True,
            separators=(",", ":")).encode("utf-8")
        return hashlib.new("sha512", payload).hexdigest()

    def to_mapping(self, *args, **kwargs) -> Mapping[str, Any]:
        raise NotImplementedError(
            f"{self.__class__.__name__} must implement to_mapping() "
            "to use MultiformatSerializableMixin serialization.")

    def to_json(self, *, indent=2) -> str:
        return json.dumps(
            _normalize(self.to_mapping()),
            ensure_ascii=False,
            indent=indent,
            sort_keys=True)

    def to_yaml(self, *, indent=2) -> str:
        return yaml.safe_dump(
            _normalize(self.to_mapping()),
            sort_keys=True,
            allow_unicode=True,
            indent=indent)

    def to_toml(self, *, indent=2) -> str:
        return tomli_w.dumps(_strip_none(_normalize(self.to_mapping())), indent=indent)

    def serialize(self, *, fmt="json", indent=2) -> str:
        """
        Serializes the model to a string in the given format.

        Args:
            fmt (str): One of ``json``, ``yaml`` or ``toml``.
            indent (int): Indentation for the output.

        Returns:
            str: The serialized model.

        Raises:
            ValueError: If the format is not recognized.
        """
        match fmt:
            case "json":
                return self.to_json(indent=indent)
            case "yaml":
                return self.to_yaml(indent=indent)
            case "toml":
                return self.to_toml(indent=indent)
            case _:
                raise ValueError(f"unrecognized format: {fmt}")

    def save_file(self, path: str | Path, fmt: str | None = None) -> Path:
        """
        Serializes the model and writes it atomically. The format is inferred from
        the file suffix when not given.

        Args:
            path (str | Path): Destination path.
            fmt (str | None): Explicit format, or None to infer from the suffix.

        Returns:
            Path: The written path.
        """
        p = Path(path)
        fmt = fmt or MultiformatDeserializableMixin._infer_format_from_suffix(p)
        return atomic_write_text(p, self.serialize(fmt=fmt) + "\n")


class MultiformatDeserializableMixin:
    """
    Adds JSON/YAML/TOML deserialization to any model implementing ``from_mapping``.

    ``from_file`` infers the format from the suffix and calls the overridable
    hooks ``_preprocess_mapping`` and ``_postprocess_instance`` with the source
    path, so models can resolve sibling files relative to the document.
    """

    # ---- core contract ----

    @classmethod
    def from_mapping(cls: type[Self], mapping: Mapping[str, Any], **_: Any) -> Self:
        raise NotImplementedError(
            f"{cls.__name__} must implement from_mapping(mapping, **kwargs) "
            "to use MultiformatDeserializableMixin.")

    # ---- public entrypoints ----

    @classmethod
    def deserialize(cls: type[Self], text: str, *, fmt: str = "json", **context: Any) -> Self:
        raw = cls._parse_text(text, fmt=fmt, path=None, **context)
        mapping = cls._coerce_root_mapping(raw, fmt=fmt, path=None, **context)
        mapping = cls._preprocess_mapping(mapping, fmt=fmt, path=None, **context)
        inst = cls.from_mapping(mapping, **context)
        return cls._postprocess_instance(inst, fmt=fmt, path=None, **context)

    @classmethod
    def from_json(cls: type[Self], text: str, **context: Any) -> Self:
        return cls.deserialize(text, fmt="json", **context)

    @classmethod
    def from_yaml(cls: type[Self], text: str, **context: Any) -> Self:
        return cls.deserialize(text, fmt="yaml", **context)

    @classmethod
    def from_toml(cls: type[Self], text: str, **context: Any) -> Self:
        return cls.deserialize(text, fmt="toml", **context)

    @classmethod
    def from_file(cls: type[Self], path: str | Path, fmt: str | None = None, **context: Any) -> Self:
        """
        Loads an instance from a JSON, YAML or TOML file.

        Args:
            path (str | Path): The document to read.
            fmt (str | None): Explicit format, or None to infer from the suffix.
            **context (Any): Passed through to ``from_mapping`` and the hooks.

        Returns:
            Self: The loaded instance.
        """
        p = Path(path)
        text = p.read_text(encoding="utf-8")
        fmt = fmt or cls._infer_format_from_suffix(p)
        raw = cls._parse_text(text, fmt=fmt, path=p, **context)
        mapping = cls._coerce_root_mapping(raw, fmt=fmt, path=p, **context)
        mapping = cls._preprocess_mapping(mapping, fmt=fmt, path=p, **context)
        inst = cls.from_mapping(mapping, **context)
        return cls._postprocess_instance(inst, fmt=fmt, path=p, **context)

    # ---- overridable hooks ----

    @staticmethod
    def _infer_format_from_suffix(path: Path) -> str:
        suffix = path.suffix.lower()
        match suffix:
            case ".json":
                return "json"
            case ".yaml" | ".yml":
                return "yaml"
            case ".toml":
                return "toml"
            case _:
                raise ValueError(f"Cannot infer format from extension {suffix!r}")

    @classmethod
    def _parse_text(cls, text: str, *, fmt: str, path: Path | None, **_: Any) -> Any:
        match fmt.lower():
            case "json":
                return json.loads(text or "{}")
            case "yaml":
                return next(iter(yaml.safe_load_all(text)), None) or {}
            case "toml":
                return tomli.loads(text or "")
            case _:
                raise ValueError(f"unrecognized format: {fmt!r}")

    @classmethod
    def _coerce_root_mapping(
            cls,
            raw: Any,
            *,
            fmt: str,
            path: Path | None,
            **_: Any) -> Mapping[str, Any]:
        if isinstance(raw, Mapping):
            return raw
        raise TypeError(
            f"{cls.__name__} expected top-level mapping, got {type(raw)!r} "
            f"from {fmt} {str(path) if path else '<inline>'}")

    @classmethod
    def _preprocess_mapping(
            cls,
            mapping: Mapping[str, Any],
            *,
            fmt: str,
            path: Path | None,
            **_: Any) -> Mapping[str, Any]:
        return mapping

    @classmethod
    def _postprocess_instance(
            cls,
            inst: Self,
            *,
            fmt: str,
            path: Path | None,
            **_: Any) -> Self:
        return inst


class MultiformatModelMixin(MultiformatSerializableMixin, MultiformatDeserializableMixin):
    pass
