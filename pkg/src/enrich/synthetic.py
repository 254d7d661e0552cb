"""Synthetic sensor-style datasets for experiments and self-checks.

The generators build series whose fault rows are hard to spot from raw
amplitudes alone (the fault marginal sits inside the normal operating range)
but easy to spot from local context, which is exactly the regime windowed
augmentation is meant to expose.
"""
from __future__ import annotations

import numpy as np

from .dataset import derive_rarity
from .frame import DataError, LabeledDataset, TimeSeriesFrame

__all__ = [
    "make_vibration_pools",
    "make_vibration_dataset",
    "make_leading_signature_dataset",
    "inject_nulls",
]


def _wander(
    n: int,
    rng: np.random.Generator,
    base: float,
    amplitude: float,
    period: float,
    noise_sigma: float,
) -> np.ndarray:
    t = np.arange(n, dtype=np.float64)
    phase = rng.uniform(0.0, 2.0 * np.pi)
    return (
        base
        + amplitude * np.sin(2.0 * np.pi * t / period + phase)
        + rng.normal(0.0, noise_sigma, n)
    )


def _burst(
    n: int,
    rng: np.random.Generator,
    base: float,
    amplitude: float,
    period: float,
    noise_sigma: float,
) -> np.ndarray:
    t = np.arange(n, dtype=np.float64)
    phase = rng.uniform(0.0, 2.0 * np.pi)
    return (
        base
        + amplitude * np.abs(np.sin(2.0 * np.pi * t / period + phase))
        + rng.normal(0.0, noise_sigma, n)
    )


def make_vibration_pools(
    n_normal: int,
    n_fault: int,
    seed: int = 0,
) -> tuple[TimeSeriesFrame, TimeSeriesFrame]:
    """Normal and fault row pools for a two-channel vibration-style signal.

    Normal rows follow slow smooth oscillations, so consecutive rows are
    nearly equal. Fault rows ride a fast one-sided burst on channel x1 and an
    incoherent fast cycle on x2; their values stay inside the normal
    operating range, so only the break in local continuity marks them.
    """
    if n_normal < 1 or n_fault < 1:
        raise DataError("pool sizes must be positive")
    rng_n = np.random.default_rng([seed, 101])
    rng_f = np.random.default_rng([seed, 102])
    normal = TimeSeriesFrame(
        ("x1", "x2"),
        np.column_stack(
            [
                _wander(n_normal, rng_n, 10.0, 2.0, 347.0, 0.05),
                _wander(n_normal, rng_n, 5.0, 1.0, 211.0, 0.04),
            ]
        ),
        None,
        {"source": "synthetic-vibration-normal"},
    )
    fault = TimeSeriesFrame(
        ("x1", "x2"),
        np.column_stack(
            [
                _burst(n_fault, rng_f, 10.9, 0.8, 9.0, 0.05),
                _wander(n_fault, rng_f, 5.0, 1.0, 13.0, 0.04),
            ]
        ),
        None,
        {"source": "synthetic-vibration-fault"},
    )
    return normal, fault


def make_vibration_dataset(total: int, rarity: float, seed: int = 0) -> LabeledDataset:
    """Interleave fault rows into a normal stream at the requested rarity."""
    n_fault = max(16, int(round(rarity * total)) + 8)
    normal, fault = make_vibration_pools(total, n_fault, seed)
    return derive_rarity(normal, fault, rarity, total, seed)


def make_leading_signature_dataset(
    n_rows: int = 6000,
    n_events: int = 40,
    seed: int = 0,
    lead: int = 2,
    spike: float = 4.0,
) -> LabeledDataset:
    """Events whose only precursor is a spike exactly `lead` rows earlier.

    Event rows themselves look like normal operation; the x1 spike at
    position event - lead is the sole signal, so relabeling with a shift
    window that covers that offset is rewarded and wider windows are diluted
    by construction.
    """
    if n_rows < 1 or n_events < 1:
        raise DataError("n_rows and n_events must be positive")
    if lead < 1:
        raise DataError("lead must be >= 1")
    block = n_rows // n_events
    if block < lead + 8:
        raise DataError("too many events for the row count")
    rng = np.random.default_rng([seed, 103])
    x1 = _wander(n_rows, rng, 10.0, 1.5, 401.0, 0.08)
    x2 = _wander(n_rows, rng, 5.0, 1.0, 257.0, 0.08)
    y = np.zeros(n_rows, dtype=np.int64)
    for b in range(n_events):
        offset = int(rng.integers(lead + 4, block - 2))
        event = b * block + offset
        y[event] = 1
        x1[event - lead] += spike
    frame = TimeSeriesFrame(
        ("x1", "x2"),
        np.column_stack([x1, x2]),
        None,
        {"source": "synthetic-leading-signature", "lead": str(lead)},
    )
    return LabeledDataset(frame, y, np.arange(n_rows, dtype=np.int64))


def inject_nulls(ds: LabeledDataset, fraction: float, seed: int = 0) -> LabeledDataset:
    """Null out a seeded random fraction of feature cells."""
    if not 0.0 <= fraction < 1.0:
        raise DataError(f"fraction must be in [0, 1), got {fraction}")
    values = ds.frame.values.copy()
    n_cells = values.size
    k = int(round(fraction * n_cells))
    rng = np.random.default_rng([seed, 104])
    flat = rng.choice(n_cells, size=k, replace=False)
    values[np.unravel_index(flat, values.shape)] = np.nan
    meta = dict(ds.frame.meta)
    meta["injected_nulls"] = str(k)
    frame = TimeSeriesFrame(ds.frame.names, values, ds.frame.timestamps, meta)
    return LabeledDataset(frame, ds.y, ds.row_ids)
