"""Core containers for labeled multivariate time series, plus CSV I/O.

Nulls are carried as NaN in float64 arrays. Timestamps are stored as epoch
seconds; the textual format found in the file is recorded in frame metadata.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

__all__ = [
    "DataError",
    "TimeSeriesFrame",
    "LabeledDataset",
    "SplitResult",
    "load_csv",
    "write_csv",
]


class DataError(ValueError):
    """Raised when an input file or frame violates the data contract."""


@dataclass(frozen=True)
class TimeSeriesFrame:
    """Column-major feature block: names, an (n, d) float64 matrix, timestamps."""

    names: tuple[str, ...]
    values: np.ndarray
    timestamps: np.ndarray | None = None
    meta: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.values.ndim != 2:
            raise DataError("frame values must be a 2-d array")
        if len(self.names) != self.values.shape[1]:
            raise DataError(
                f"{len(self.names)} column names for {self.values.shape[1]} columns"
            )
        if len(set(self.names)) != len(self.names):
            raise DataError("duplicate column names")
        if self.timestamps is not None and len(self.timestamps) != len(self.values):
            raise DataError("timestamp length does not match row count")

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def n_columns(self) -> int:
        return self.values.shape[1]

    def column(self, name: str) -> np.ndarray:
        try:
            j = self.names.index(name)
        except ValueError:
            raise DataError(f"no column named {name!r}") from None
        return self.values[:, j]

    def take_rows(self, idx: np.ndarray) -> TimeSeriesFrame:
        ts = self.timestamps[idx] if self.timestamps is not None else None
        return TimeSeriesFrame(self.names, self.values[idx], ts, dict(self.meta))

    def with_columns(self, names: list[str], columns: np.ndarray) -> TimeSeriesFrame:
        """Return a copy with extra columns appended on the right."""
        if columns.shape != (len(self), len(names)):
            raise DataError("appended column block has wrong shape")
        values = np.hstack([self.values, columns])
        return TimeSeriesFrame(
            self.names + tuple(names), values, self.timestamps, dict(self.meta)
        )

    def select_columns(self, names: list[str]) -> TimeSeriesFrame:
        cols = [self.names.index(n) if n in self.names else -1 for n in names]
        missing = [n for n, j in zip(names, cols) if j < 0]
        if missing:
            raise DataError(f"no column named {missing[0]!r}")
        return TimeSeriesFrame(
            tuple(names), self.values[:, cols], self.timestamps, dict(self.meta)
        )


@dataclass(frozen=True)
class LabeledDataset:
    """A frame plus a binary target and stable per-row provenance ids."""

    frame: TimeSeriesFrame
    y: np.ndarray
    row_ids: np.ndarray

    def __post_init__(self) -> None:
        if len(self.y) != len(self.frame) or len(self.row_ids) != len(self.frame):
            raise DataError("label/row-id length does not match frame")
        bad = ~np.isin(self.y, (0, 1))
        if bad.any():
            raise DataError(f"labels must be 0 or 1 (row {int(np.argmax(bad))})")

    def __len__(self) -> int:
        return len(self.frame)

    @property
    def positive_count(self) -> int:
        return int(np.sum(self.y == 1))

    @property
    def negative_count(self) -> int:
        return int(np.sum(self.y == 0))

    def take_rows(self, idx: np.ndarray) -> LabeledDataset:
        return LabeledDataset(self.frame.take_rows(idx), self.y[idx], self.row_ids[idx])


@dataclass(frozen=True)
class SplitResult:
    train: LabeledDataset
    test: LabeledDataset
    metadata: dict[str, str]


_TIME_FORMATS = (
    ("%m/%d/%y %H:%M", "m/d/y h:m"),
    ("%m/%d/%Y %H:%M", "m/d/y h:m"),
    ("%m/%d/%y %H:%M:%S", "m/d/y h:m:s"),
    ("%m/%d/%Y %H:%M:%S", "m/d/y h:m:s"),
)


def _parse_timestamps(raw: list[str], column: str) -> tuple[np.ndarray, str]:
    """Detect the timestamp format of a column and convert to epoch seconds."""
    for i, cell in enumerate(raw):
        if cell == "":
            raise DataError(f"empty timestamp in column {column!r} at data row {i}")
    try:
        return np.array([float(c) for c in raw], dtype=np.float64), "epoch-seconds"
    except ValueError:
        pass

    def epoch(dt: datetime) -> float:
        if dt.tzinfo is None:
            dt = dt.replace(tzinfo=timezone.utc)
        return dt.timestamp()

    try:
        return (
            np.array([epoch(datetime.fromisoformat(c)) for c in raw]),
            "iso-8601",
        )
    except ValueError:
        pass
    for fmt, label in _TIME_FORMATS:
        try:
            return (
                np.array([epoch(datetime.strptime(c, fmt)) for c in raw]),
                label,
            )
        except ValueError:
            continue
    bad = raw[0]
    raise DataError(f"column {column!r} has unrecognized timestamp format ({bad!r})")


def load_csv(
    path: str | Path,
    y_column: str,
    time_column: str | None = None,
) -> LabeledDataset:
    """Load an RFC-4180-style CSV with a mandatory header.

    Empty fields become nulls (NaN). The label column must contain only 0 and 1.
    Timestamps in `time_column` may be epoch seconds or ISO-8601 datetimes
    (plus m/d/y clock stamps seen in legacy plant exports); the detected format
    is stored under the "time_format" metadata key.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: file is empty, header row required") from None
        rows = list(reader)

    if y_column not in header:
        raise DataError(f"{path}: label column {y_column!r} not in header")
    if time_column is not None and time_column not in header:
        raise DataError(f"{path}: time column {time_column!r} not in header")

    width = len(header)
    for i, row in enumerate(rows):
        if len(row) != width:
            raise DataError(
                f"{path}: row {i} has {len(row)} fields, header has {width}"
            )

    y_pos = header.index(y_column)
    t_pos = header.index(time_column) if time_column is not None else -1
    feature_names = tuple(
        name for j, name in enumerate(header) if j not in (y_pos, t_pos)
    )

    n = len(rows)
    values = np.empty((n, len(feature_names)), dtype=np.float64)
    y = np.empty(n, dtype=np.int64)
    for i, row in enumerate(rows):
        cell = row[y_pos].strip()
        try:
            label = float(cell)
        except ValueError:
            label = math.nan
        if label not in (0.0, 1.0):
            raise DataError(
                f"{path}: label column {y_column!r} must be 0 or 1, got {cell!r} at data row {i}"
            )
        y[i] = int(label)
        k = 0
        for j, raw in enumerate(row):
            if j == y_pos or j == t_pos:
                continue
            raw = raw.strip()
            if raw == "":
                values[i, k] = np.nan
            else:
                try:
                    values[i, k] = float(raw)
                except ValueError:
                    raise DataError(
                        f"{path}: non-numeric value {raw!r} in column "
                        f"{header[j]!r} at data row {i}"
                    ) from None
            k += 1

    meta: dict[str, str] = {"source": str(path)}
    timestamps = None
    if time_column is not None:
        timestamps, fmt = _parse_timestamps([r[t_pos].strip() for r in rows], time_column)
        meta["time_format"] = fmt
        meta["time_column"] = time_column

    frame = TimeSeriesFrame(feature_names, values, timestamps, meta)
    return LabeledDataset(frame, y, np.arange(n, dtype=np.int64))


def write_csv(ds: LabeledDataset, path: str | Path, y_column: str = "y",
              time_column: str = "time") -> None:
    """Write a dataset back to CSV; nulls become empty fields."""
    path = Path(path)
    frame = ds.frame
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        header = list(frame.names) + [y_column]
        if frame.timestamps is not None:
            header = [time_column] + header
        writer.writerow(header)
        for i in range(len(ds)):
            row: list[str] = []
            if frame.timestamps is not None:
                row.append(repr(float(frame.timestamps[i])))
            for v in frame.values[i]:
                row.append("" if math.isnan(v) else repr(float(v)))
            row.append(str(int(ds.y[i])))
            writer.writerow(row)
