"""Null filling: zero substitution and rolling-mean neighborhood imputation."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .frame import DataError, TimeSeriesFrame

__all__ = ["ImputationReport", "impute_zero", "impute_rolling_mean"]

ZERO_AS_MISSING_MAX_FREQUENCY = 0.01


@dataclass(frozen=True)
class ImputationReport:
    method: str
    window: int | None
    filled: dict[str, int]
    residual_nulls: tuple[tuple[str, int], ...] = ()
    zero_as_missing: tuple[str, ...] = field(default_factory=tuple)

    def to_json_dict(self) -> dict:
        return {
            "method": self.method,
            "window": self.window,
            "filled": dict(self.filled),
            "residual_nulls": [[c, r] for c, r in self.residual_nulls],
            "zero_as_missing": list(self.zero_as_missing),
        }


def impute_zero(frame: TimeSeriesFrame) -> tuple[TimeSeriesFrame, ImputationReport]:
    """Replace every null with 0.0."""
    values = frame.values.copy()
    nulls = np.isnan(values)
    filled = {name: int(nulls[:, j].sum()) for j, name in enumerate(frame.names)}
    values[nulls] = 0.0
    out = TimeSeriesFrame(frame.names, values, frame.timestamps, dict(frame.meta))
    return out, ImputationReport("zero", None, filled)


def _window_means(
    values: np.ndarray, mask: np.ndarray, lo: np.ndarray, hi: np.ndarray
) -> np.ndarray:
    """Mean of observed values over [lo, hi) per row; NaN when the range is empty."""
    pref_sum = np.concatenate([[0.0], np.cumsum(np.where(mask, values, 0.0))])
    pref_cnt = np.concatenate([[0], np.cumsum(mask)])
    total = pref_sum[hi] - pref_sum[lo]
    count = pref_cnt[hi] - pref_cnt[lo]
    with np.errstate(invalid="ignore"):
        return np.where(count > 0, total / np.maximum(count, 1), np.nan)


def impute_rolling_mean(
    frame: TimeSeriesFrame, w: int = 5
) -> tuple[TimeSeriesFrame, ImputationReport]:
    """Fill null (and rare-zero) cells from neighboring window means.

    For a target cell at row t the previous window covers the w rows ending at
    t-1 and the following window the w rows starting at t+1; the fill is the
    average of the two window means, or whichever is defined (the last row
    always falls back to the previous window). All window means are taken over
    the ORIGINAL column, ignoring nulls, so fills never read earlier fills.
    Zeros count as missing only in columns whose observed zero frequency is
    below 1%. Row-0 nulls are left in place and reported; if neither window
    holds an observed value the fill falls back to the column mean.
    """
    n = len(frame)
    if w < 2:
        raise DataError(f"window must be >= 2, got {w}")
    if w > n:
        raise DataError(f"window {w} exceeds frame length {n}")

    values = frame.values.copy()
    filled: dict[str, int] = {}
    residual: list[tuple[str, int]] = []
    zero_cols: list[str] = []
    t = np.arange(n)
    prev_lo, prev_hi = np.maximum(t - w, 0), t
    foll_lo, foll_hi = np.minimum(t + 1, n), np.minimum(t + 1 + w, n)

    for j, name in enumerate(frame.names):
        col = frame.values[:, j]
        observed = ~np.isnan(col)
        n_observed = int(observed.sum())
        zeros = observed & (col == 0.0)
        zero_missing = bool(
            zeros.any()
            and zeros.sum() / max(1, n_observed) < ZERO_AS_MISSING_MAX_FREQUENCY
        )
        if zero_missing:
            zero_cols.append(name)
        target = ~observed | (zeros if zero_missing else False)
        filled[name] = 0
        if not target.any():
            continue
        prev_mean = _window_means(col, observed, prev_lo, prev_hi)
        foll_mean = _window_means(col, observed, foll_lo, foll_hi)
        column_mean = float(col[observed].mean()) if n_observed else np.nan

        for row in np.flatnonzero(target):
            if row == 0 and not observed[0]:
                residual.append((name, 0))
                continue
            p, f = prev_mean[row], foll_mean[row]
            if row == n - 1 or np.isnan(f):
                fill = p
            elif np.isnan(p):
                fill = f
            else:
                fill = (p + f) / 2.0
            if np.isnan(fill):
                fill = column_mean
            if np.isnan(fill):
                residual.append((name, int(row)))
                continue
            values[row, j] = fill
            filled[name] += 1

    out = TimeSeriesFrame(frame.names, values, frame.timestamps, dict(frame.meta))
    report = ImputationReport(
        "rolling_mean", w, filled, tuple(residual), tuple(zero_cols)
    )
    return out, report
