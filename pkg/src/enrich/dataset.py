"""Labeling, splitting, rarity derivation, and decimation of labeled frames."""
from __future__ import annotations

import math

import numpy as np

from .frame import DataError, LabeledDataset, SplitResult, TimeSeriesFrame

__all__ = [
    "curve_shift",
    "split_random",
    "split_time_based",
    "split_run_based",
    "derive_rarity",
    "downsample",
]

DEFAULT_GAP_SECONDS = 30 * 60.0


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def curve_shift(ds: LabeledDataset, k: int) -> LabeledDataset:
    """Relabel the k rows before each event as positive and drop event rows.

    Rows caught by overlapping windows are labeled once; a row that is itself
    an event is always dropped. Output length = input length - event count.
    """
    if k < 1:
        raise DataError(f"shift distance must be >= 1, got {k}")
    if len(ds) == 0:
        raise DataError("cannot curve-shift an empty dataset")
    if k >= len(ds):
        raise DataError(f"shift distance {k} must be < dataset length {len(ds)}")
    events = np.flatnonzero(ds.y == 1)
    marked = np.zeros(len(ds), dtype=np.int64)
    for e in events:
        marked[max(0, e - k) : e] = 1
    keep = ds.y == 0
    kept = ds.take_rows(np.flatnonzero(keep))
    return LabeledDataset(kept.frame, marked[keep], kept.row_ids)


def _sorted_take(ds: LabeledDataset, idx: np.ndarray) -> LabeledDataset:
    return ds.take_rows(np.sort(idx))


def split_random(
    ds: LabeledDataset,
    test_fraction: float,
    seed: int,
    stratified: bool = True,
) -> SplitResult:
    """Seeded random split; stratified by label unless disabled.

    |test| = round(test_fraction * length). Row order inside each part stays
    chronological. With >= 2 positives, stratification keeps at least one
    positive in the training part.
    """
    n = len(ds)
    if not 0.0 < test_fraction < 1.0:
        raise DataError(f"test_fraction must be in (0, 1), got {test_fraction}")
    n_test = _round_half_up(test_fraction * n)
    if n_test < 1 or n_test > n - 1:
        raise DataError(
            f"cannot split {n} rows into non-empty parts at fraction {test_fraction}"
        )
    rng = np.random.default_rng(seed)
    if stratified:
        pos = np.flatnonzero(ds.y == 1)
        neg = np.flatnonzero(ds.y == 0)
        n_test_pos = _round_half_up(test_fraction * len(pos))
        if len(pos) >= 2:
            n_test_pos = min(n_test_pos, len(pos) - 1)
        n_test_pos = min(n_test_pos, n_test)
        n_test_neg = n_test - n_test_pos
        if n_test_neg > len(neg):
            raise DataError("not enough negative rows to fill the test part")
        if len(neg) >= 2 and n_test_neg == len(neg):
            n_test_neg -= 1
            n_test = n_test_pos + n_test_neg
        test_idx = np.concatenate(
            [
                rng.permutation(pos)[:n_test_pos],
                rng.permutation(neg)[:n_test_neg],
            ]
        )
    else:
        test_idx = rng.permutation(n)[:n_test]
    mask = np.zeros(n, dtype=bool)
    mask[test_idx] = True
    train = _sorted_take(ds, np.flatnonzero(~mask))
    test = _sorted_take(ds, np.flatnonzero(mask))
    metadata = {
        "method": "random",
        "stratified": str(stratified).lower(),
        "seed": str(seed),
        "test_fraction": repr(test_fraction),
        "train_rows": str(len(train)),
        "test_rows": str(len(test)),
    }
    return SplitResult(train, test, metadata)


def split_time_based(ds: LabeledDataset, train_fraction: float) -> SplitResult:
    """First ceil(train_fraction * length) rows train, remainder test."""
    n = len(ds)
    if not 0.0 < train_fraction < 1.0:
        raise DataError(f"train_fraction must be in (0, 1), got {train_fraction}")
    n_train = math.ceil(train_fraction * n)
    if n_train < 1 or n_train >= n:
        raise DataError(
            f"cannot split {n} rows into non-empty parts at fraction {train_fraction}"
        )
    idx = np.arange(n)
    train = ds.take_rows(idx[:n_train])
    test = ds.take_rows(idx[n_train:])
    metadata = {
        "method": "time",
        "train_fraction": repr(train_fraction),
        "boundary_row": str(n_train),
        "train_rows": str(n_train),
        "test_rows": str(n - n_train),
    }
    if ds.frame.timestamps is not None:
        metadata["boundary_instant"] = repr(float(ds.frame.timestamps[n_train]))
    return SplitResult(train, test, metadata)


def split_run_based(
    ds: LabeledDataset, gap_threshold: float = DEFAULT_GAP_SECONDS
) -> list[LabeledDataset]:
    """Partition into maximal sessions at timestamp gaps larger than the threshold.

    `gap_threshold` is in seconds; the default suits 2-minute plant sampling.
    """
    if ds.frame.timestamps is None:
        raise DataError("run-based split requires timestamps")
    if gap_threshold <= 0:
        raise DataError("gap_threshold must be positive")
    t = ds.frame.timestamps
    gaps = np.flatnonzero(np.diff(t) > gap_threshold) + 1
    bounds = [0, *gaps.tolist(), len(ds)]
    return [
        ds.take_rows(np.arange(lo, hi)) for lo, hi in zip(bounds[:-1], bounds[1:])
    ]


def derive_rarity(
    normal: TimeSeriesFrame,
    fault: TimeSeriesFrame,
    rarity: float,
    total: int,
    seed: int,
) -> LabeledDataset:
    """Compose a labeled dataset with the requested fault-row rarity.

    Fault rows are sampled without replacement from the fault frame (original
    order kept) and interleaved at seeded positions; the rest is the head of
    the normal frame in order. Provenance: output row_ids are the normal-frame
    row index for y=0 rows and -(fault_row + 1) for y=1 rows; the placement is
    also recorded in frame metadata.
    """
    if normal.names != fault.names:
        raise DataError("normal and fault frames must share the column schema")
    if not 0.0 < rarity <= 0.5:
        raise DataError(f"rarity must be in (0, 0.5], got {rarity}")
    if total < 1:
        raise DataError("total must be positive")
    n_fault = _round_half_up(rarity * total)
    n_normal = total - n_fault
    if n_fault > len(fault):
        raise DataError(
            f"need {n_fault} fault rows, fault frame has {len(fault)}"
        )
    if n_normal > len(normal):
        raise DataError(
            f"need {n_normal} normal rows, normal frame has {len(normal)}"
        )
    rng = np.random.default_rng(seed)
    positions = np.sort(rng.choice(total, size=n_fault, replace=False))
    fault_rows = np.sort(rng.choice(len(fault), size=n_fault, replace=False))

    values = np.empty((total, normal.values.shape[1]), dtype=np.float64)
    y = np.zeros(total, dtype=np.int64)
    row_ids = np.empty(total, dtype=np.int64)
    is_fault = np.zeros(total, dtype=bool)
    is_fault[positions] = True
    values[is_fault] = fault.values[fault_rows]
    values[~is_fault] = normal.values[:n_normal]
    y[is_fault] = 1
    row_ids[is_fault] = -(fault_rows + 1)
    row_ids[~is_fault] = np.arange(n_normal)
    meta = {
        "derived_rarity": repr(rarity),
        "fault_positions": ",".join(str(p) for p in positions),
        "fault_source_rows": ",".join(str(r) for r in fault_rows),
    }
    frame = TimeSeriesFrame(normal.names, values, None, meta)
    return LabeledDataset(frame, y, row_ids)


def downsample(ds: LabeledDataset, factor: int, aggregator: str = "mean") -> LabeledDataset:
    """Collapse each block of `factor` rows into one; block label = max label.

    Mean aggregation ignores nulls (an all-null block cell stays null); "first"
    keeps the block's first row. Timestamps and row ids take the block's first.
    """
    if factor < 1:
        raise DataError(f"downsample factor must be >= 1, got {factor}")
    if aggregator not in ("mean", "first"):
        raise DataError(f"unknown aggregator {aggregator!r}")
    if factor == 1:
        return ds
    n = len(ds)
    starts = np.arange(0, n, factor)
    n_out = len(starts)
    frame = ds.frame
    if aggregator == "first":
        values = frame.values[starts]
    else:
        values = np.empty((n_out, frame.values.shape[1]), dtype=np.float64)
        for b, lo in enumerate(starts):
            block = frame.values[lo : lo + factor]
            seen = ~np.isnan(block)
            count = seen.sum(axis=0)
            total = np.where(seen, block, 0.0).sum(axis=0)
            values[b] = np.where(count > 0, total / np.maximum(count, 1), np.nan)
    y = np.array(
        [int(ds.y[lo : lo + factor].max()) for lo in starts], dtype=np.int64
    )
    ts = frame.timestamps[starts] if frame.timestamps is not None else None
    out_frame = TimeSeriesFrame(frame.names, values, ts, dict(frame.meta))
    return LabeledDataset(out_frame, y, ds.row_ids[starts])
