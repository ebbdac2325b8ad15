from __future__ import annotations

import io
import re
from collections.abc import Sequence
from pathlib import Path

import numpy as np
import pandas as pd

from gpbound.helper.errors import DataParseError
from gpbound.helper.multiformat_model_mixin import atomic_write_text

_PANDAS_LINE_RE = re.compile(r"line (\d+)")


def read_numeric_csv(path: str | Path, *, required_columns: Sequence[str] = ()) -> pd.DataFrame:
    """
    Reads a headed CSV file whose cells must all be finite numbers.

    Floats are parsed with pandas' ``round_trip`` converter so values written by
    ``write_csv`` come back bit-identical. Every failure is reported as a
    ``DataParseError`` carrying the 1-based line number of the offending row
    (the header is line 1).

    Args:
        path (str | Path): The CSV file to read.
        required_columns (Sequence[str]): Columns that must be present.

    Returns:
        pd.DataFrame: The parsed table with float64 columns.

    Raises:
        DataParseError: On empty files, ragged rows, missing columns or
            non-numeric cells.
    """
    p = Path(path)
    try:
        frame = pd.read_csv(p, float_precision="round_trip", skipinitialspace=True)
    except FileNotFoundError:
        raise DataParseError("file not found", path=p) from None
    except pd.errors.EmptyDataError:
        raise DataParseError("file is empty", path=p, line=1) from None
    except pd.errors.ParserError as e:
        m = _PANDAS_LINE_RE.search(str(e))
        raise DataParseError(str(e).strip(), path=p, line=int(m.group(1)) if m else None) from None

    if frame.empty:
        raise DataParseError("no data rows", path=p, line=2)

    missing = [c for c in required_columns if c not in frame.columns]
    if missing:
        raise DataParseError(f"missing columns {missing}", path=p, line=1)

    for col in frame.columns:
        numeric = pd.to_numeric(frame[col], errors="coerce")
        bad = ~np.isfinite(numeric.to_numpy(dtype=float))
        if bad.any():
            row = int(np.flatnonzero(bad)[0])
            raise DataParseError(
                f"column {col!r} has a non-numeric or non-finite value {frame[col].iloc[row]!r}",
                path=p,
                line=row + 2)
        frame[col] = numeric.astype(float)
    return frame


def prefixed_columns(frame: pd.DataFrame, prefix: str) -> list[str]:
    """
    Returns the ``<prefix>_<n>`` columns of a frame ordered by ``n``.

    Args:
        frame (pd.DataFrame): The table.
        prefix (str): Column prefix such as ``x`` or ``y``.

    Returns:
        list[str]: Matching column names in index order.
    """
    pattern = re.compile(rf"^{re.escape(prefix)}_(\d+)$")
    hits = [(int(m.group(1)), c) for c in frame.columns if (m := pattern.match(str(c)))]
    return [c for _, c in sorted(hits)]


def write_csv(frame: pd.DataFrame, path: str | Path) -> Path:
    """
    Writes a table as a headed CSV, atomically, with shortest round-trip float text.

    Args:
        frame (pd.DataFrame): The table to write. The index is not written.
        path (str | Path): Destination file.

    Returns:
        Path: The written path.
    """
    buf = io.StringIO()
    frame.to_csv(buf, index=False, lineterminator="\n")
    return atomic_write_text(path, buf.getvalue())
