from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from gpbound.helper.errors import DataParseError, KernelDomainError
from gpbound.helper.table_io import prefixed_columns, read_numeric_csv, write_csv


@dataclass(frozen=True, slots=True, eq=False)
class Dataset:
    """
    Training data: ``m`` inputs in ``R^n_x``, an ``m x n_y`` output matrix and
    one measurement-noise variance per output.

    Arrays are copied and frozen on construction. ``m = 0`` is accepted so a
    model can represent its prior; files must contain at least one row.

    Attributes:
        X (np.ndarray): Inputs, shape ``(m, n_x)``.
        Y (np.ndarray): Outputs, shape ``(m, n_y)``.
        noise_var (np.ndarray): Noise variances ``σᵢ² >= 0``, shape ``(n_y,)``.
    """
    X: np.ndarray
    Y: np.ndarray
    noise_var: np.ndarray

    def __post_init__(self) -> None:
        X = np.array(self.X, dtype=float, copy=True)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        Y = np.array(self.Y, dtype=float, copy=True)
        if Y.ndim == 1:
            Y = Y.reshape(-1, 1)
        if X.ndim != 2 or Y.ndim != 2:
            raise KernelDomainError("X and Y must be two-dimensional")
        if X.shape[0] != Y.shape[0]:
            raise KernelDomainError(f"X has {X.shape[0]} rows but Y has {Y.shape[0]}")
        noise = np.array(self.noise_var, dtype=float, copy=True).reshape(-1)
        if noise.shape[0] == 1 and Y.shape[1] > 1:
            noise = np.repeat(noise, Y.shape[1])
        if noise.shape[0] != Y.shape[1]:
            raise KernelDomainError(f"{noise.shape[0]} noise variances for {Y.shape[1]} outputs")
        if np.any(noise < 0.0) or not np.all(np.isfinite(noise)):
            raise KernelDomainError(f"noise variances must be finite and >= 0: {noise.tolist()}")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
            raise KernelDomainError("training data must be finite")
        for arr in (X, Y, noise):
            arr.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "noise_var", noise)

    @property
    def m(self) -> int:
        return int(self.X.shape[0])

    @property
    def n_x(self) -> int:
        return int(self.X.shape[1])

    @property
    def n_y(self) -> int:
        return int(self.Y.shape[1])

    def with_outputs(self, Y: Any) -> Dataset:
        return Dataset(X=self.X, Y=Y, noise_var=self.noise_var)

    def with_point(self, x: Any, y: Any) -> Dataset:
        x_row = np.asarray(x, dtype=float).reshape(1, self.n_x)
        y_row = np.asarray(y, dtype=float).reshape(1, self.n_y)
        return Dataset(
            X=np.vstack([self.X, x_row]),
            Y=np.vstack([self.Y, y_row]),
            noise_var=self.noise_var)

    # ---- CSV ----

    def to_frame(self) -> pd.DataFrame:
        data = {f"x_{i + 1}": self.X[:, i] for i in range(self.n_x)}
        data.update({f"y_{i + 1}": self.Y[:, i] for i in range(self.n_y)})
        return pd.DataFrame(data)

    def to_csv(self, path: str | Path) -> Path:
        return write_csv(self.to_frame(), path)

    @classmethod
    def from_csv(cls, path: str | Path, noise_var: Any) -> Dataset:
        """
        Reads ``x_1..x_nx, y_1..y_ny`` columns from a CSV file.

        Args:
            path (str | Path): The data file.
            noise_var (Any): A scalar (shared by all outputs) or one variance per output.

        Returns:
            Dataset: The parsed training data.

        Raises:
            DataParseError: If the file is empty or lacks ``x_*``/``y_*`` columns.
        """
        frame = read_numeric_csv(path)
        x_cols = prefixed_columns(frame, "x")
        y_cols = prefixed_columns(frame, "y")
        if not x_cols or not y_cols:
            raise DataParseError("expected columns x_1..x_n and y_1..y_n", path=path, line=1)
        return cls(
            X=frame[x_cols].to_numpy(dtype=float),
            Y=frame[y_cols].to_numpy(dtype=float),
            noise_var=np.atleast_1d(np.asarray(noise_var, dtype=float)))
