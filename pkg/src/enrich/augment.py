"""Length-preserving series transforms and the frame-level augmentation driver.

Every transform takes a null-free float series and returns a series of the
same length. Stochastic transforms (drift, tw, noise) are pure functions of
(input, params, seed). Edge handling is replication throughout, so augmented
matrices stay dense.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from .frame import DataError, LabeledDataset, TimeSeriesFrame

__all__ = [
    "AugmentationSpec",
    "AugmentationState",
    "Decomposition",
    "relative_change",
    "lag",
    "rolling_mean",
    "expanding_mean",
    "convolve",
    "pool",
    "drift",
    "time_warp",
    "quantize",
    "reverse",
    "add_noise",
    "decompose",
    "fit_augmentation_state",
    "augment_frame",
    "FAMILIES",
]

# Family name -> (column prefix template, stream code for seed derivation).
FAMILIES = {
    "relchg": ("relchg", 1),
    "lag": ("lag_{l}", 2),
    "roll": ("roll_{w}", 3),
    "expanding_mean": ("expanding_mean", 4),
    "cnv": ("cnv", 5),
    "pool": ("pool", 6),
    "drift": ("drift", 7),
    "tw": ("tw", 8),
    "quant": ("quant", 9),
    "rev": ("rev", 10),
    "noise": ("noise", 11),
    "trend": ("trend", 12),
    "seasonal": ("seasonal", 13),
    "residual": ("resid", 14),
}

_DEFAULT_PARAMS = {
    "lag": {"l": 1},
    "roll": {"w": 5},
    "cnv": {"c": 3},
    "pool": {"p": 4},
    "drift": {"d": 0.1, "m": 5},
    "tw": {"r": 2.0, "s": 3},
    "quant": {"q": 10},
    "noise": {"sigma": 0.01},
    # trend/seasonal/residual need an explicit period P: it is data-specific.
}

_DECOMP_FAMILIES = ("trend", "seasonal", "residual")


def relative_change(series: np.ndarray) -> np.ndarray:
    """Percent change against the previous value; 0 at t=0 and over zero denominators."""
    x = np.asarray(series, dtype=np.float64)
    out = np.zeros_like(x)
    if len(x) > 1:
        prev = x[:-1]
        with np.errstate(divide="ignore", invalid="ignore"):
            change = 100.0 * (x[1:] - prev) / prev
        out[1:] = np.where(prev == 0.0, 0.0, change)
    return out


def lag(series: np.ndarray, l: int) -> np.ndarray:
    x = np.asarray(series, dtype=np.float64)
    if not 1 <= l < len(x):
        raise DataError(f"lag must satisfy 1 <= l < length, got l={l}, length={len(x)}")
    out = np.empty_like(x)
    out[:l] = x[0]
    out[l:] = x[:-l]
    return out


def rolling_mean(series: np.ndarray, w: int) -> np.ndarray:
    """Trailing mean over w rows; a growing prefix mean before the window fills."""
    x = np.asarray(series, dtype=np.float64)
    if not 1 <= w <= len(x):
        raise DataError(f"window must satisfy 1 <= w <= length, got w={w}")
    if w == 1:
        return x.copy()
    c = np.cumsum(x)
    out = np.empty_like(x)
    head = min(w - 1, len(x))
    out[:head] = c[:head] / np.arange(1, head + 1)
    if w <= len(x):
        out[w - 1] = c[w - 1] / w
        out[w:] = (c[w:] - c[:-w]) / w
    return out


def expanding_mean(series: np.ndarray) -> np.ndarray:
    x = np.asarray(series, dtype=np.float64)
    return np.cumsum(x) / np.arange(1, len(x) + 1)


def convolve(series: np.ndarray, c: int) -> np.ndarray:
    """Uniform kernel of odd size c with edge-replication padding."""
    x = np.asarray(series, dtype=np.float64)
    if c % 2 == 0 or c < 1:
        raise DataError(f"kernel size must be odd and positive, got {c}")
    if c > len(x):
        raise DataError(f"kernel size {c} exceeds series length {len(x)}")
    if c == 1:
        return x.copy()
    h = (c - 1) // 2
    padded = np.pad(x, h, mode="edge")
    return np.convolve(padded, np.full(c, 1.0 / c), mode="valid")


def pool(series: np.ndarray, p: int) -> np.ndarray:
    """Average pooling: every index in a block of p gets the block mean."""
    x = np.asarray(series, dtype=np.float64)
    if p < 1:
        raise DataError(f"pool size must be >= 1, got {p}")
    if p == 1:
        return x.copy()
    starts = np.arange(0, len(x), p)
    sums = np.add.reduceat(x, starts)
    sizes = np.diff(np.append(starts, len(x)))
    return np.repeat(sums / sizes, sizes)


def drift(series: np.ndarray, d: float, m: int, seed: int | list[int]) -> np.ndarray:
    """Add a smooth random offset curve bounded by d * (series range).

    m knot offsets are drawn uniformly in [-d*A, d*A] (A = range, 1 if
    constant), the first pinned to 0, placed evenly over the index range and
    joined by a monotone cubic spline, so |out - x| never exceeds d*A.
    """
    x = np.asarray(series, dtype=np.float64)
    if m < 2:
        raise DataError(f"drift needs at least 2 knots, got {m}")
    if d < 0:
        raise DataError(f"max drift must be >= 0, got {d}")
    n = len(x)
    if n == 1 or d == 0.0:
        return x.copy()
    amplitude = float(x.max() - x.min())
    if amplitude == 0.0:
        amplitude = 1.0
    rng = np.random.default_rng(seed)
    offsets = rng.uniform(-d * amplitude, d * amplitude, size=m)
    offsets[0] = 0.0
    knots = np.linspace(0.0, n - 1.0, m)
    curve = PchipInterpolator(knots, offsets)(np.arange(n, dtype=np.float64))
    return x + curve


def time_warp(series: np.ndarray, r: float, s: int, seed: int | list[int]) -> np.ndarray:
    """Resample along a random strictly increasing piecewise-linear time map.

    The map has s interior breakpoints; segment slopes are log-uniform in
    [1/r, r], renormalized so the endpoints stay fixed.
    """
    x = np.asarray(series, dtype=np.float64)
    if r < 1:
        raise DataError(f"max speed ratio must be >= 1, got {r}")
    if s < 0:
        raise DataError(f"speed changes must be >= 0, got {s}")
    n = len(x)
    if n == 1 or s == 0 or r == 1.0:
        return x.copy()
    rng = np.random.default_rng(seed)
    slopes = np.exp(rng.uniform(math.log(1.0 / r), math.log(r), size=s + 1))
    kx = np.linspace(0.0, n - 1.0, s + 2)
    raw = np.concatenate([[0.0], np.cumsum(slopes * np.diff(kx))])
    ky = raw * ((n - 1.0) / raw[-1])
    ky[-1] = n - 1.0
    tau = np.interp(np.arange(n, dtype=np.float64), kx, ky)
    return np.interp(tau, np.arange(n, dtype=np.float64), x)


def quantize(series: np.ndarray, q: int, levels: np.ndarray | None = None) -> np.ndarray:
    """Round to the nearest of q evenly spaced levels; ties go to the lower level.

    `levels` overrides the level set (used to apply train-fitted levels to
    test data; out-of-range values clip to the end levels).
    """
    x = np.asarray(series, dtype=np.float64)
    if q < 2:
        raise DataError(f"need at least 2 levels, got {q}")
    if levels is None:
        lo, hi = float(x.min()), float(x.max())
        if lo == hi:
            return x.copy()
        step = (hi - lo) / (q - 1)
        levels = lo + np.arange(q) * step
    else:
        levels = np.asarray(levels, dtype=np.float64)
        if len(levels) < 2 or levels[0] == levels[-1]:
            return x.copy()
        lo = float(levels[0])
        step = (levels[-1] - levels[0]) / (len(levels) - 1)
    pos = (x - lo) / step
    idx = np.clip(np.ceil(pos - 0.5), 0, len(levels) - 1).astype(np.int64)
    return levels[idx]


def quantize_levels(series: np.ndarray, q: int) -> np.ndarray | None:
    """The level set quantize() would fit on this series (None if constant)."""
    x = np.asarray(series, dtype=np.float64)
    lo, hi = float(x.min()), float(x.max())
    if lo == hi:
        return None
    step = (hi - lo) / (q - 1)
    return lo + np.arange(q) * step


def reverse(series: np.ndarray) -> np.ndarray:
    return np.asarray(series, dtype=np.float64)[::-1].copy()


def add_noise(
    series: np.ndarray, sigma_rel: float, seed: int | list[int], scale: float | None = None
) -> np.ndarray:
    """Add iid Gaussian noise with std sigma_rel * std(series).

    A constant series substitutes std 1. `scale` overrides the measured std
    (used to apply a train-fitted scale to test data).
    """
    x = np.asarray(series, dtype=np.float64)
    if sigma_rel < 0:
        raise DataError(f"noise scale must be >= 0, got {sigma_rel}")
    if sigma_rel == 0.0:
        return x.copy()
    if scale is None:
        scale = float(x.std())
        if scale == 0.0:
            scale = 1.0
    rng = np.random.default_rng(seed)
    return x + rng.normal(0.0, sigma_rel * scale, size=len(x))


@dataclass(frozen=True)
class Decomposition:
    trend: np.ndarray
    seasonal: np.ndarray
    residual: np.ndarray


def decompose(series: np.ndarray, period: int) -> Decomposition:
    """Classical additive decomposition with a centered moving-average trend.

    Even periods use the standard 2xP weighted average. Seasonal phase means
    are taken over the interior rows where the trend is defined, re-centered
    to sum to zero; trend edges are then filled by replication and the
    residual absorbs the remainder, so reconstruction is exact everywhere.
    """
    x = np.asarray(series, dtype=np.float64)
    n = len(x)
    if period < 2:
        raise DataError(f"period must be >= 2, got {period}")
    if n < 2 * period:
        raise DataError(f"need length >= 2*period, got {n} < {2 * period}")
    half = period // 2
    if period % 2 == 1:
        kernel = np.full(period, 1.0 / period)
    else:
        kernel = np.full(period + 1, 1.0 / period)
        kernel[0] = kernel[-1] = 0.5 / period
    core = np.convolve(x, kernel, mode="valid")
    first, last = half, half + len(core) - 1

    trend = np.empty(n, dtype=np.float64)
    trend[first : last + 1] = core
    phase_means = np.zeros(period)
    detrended_interior = x[first : last + 1] - core
    phases = np.arange(first, last + 1) % period
    for ph in range(period):
        phase_means[ph] = detrended_interior[phases == ph].mean()
    phase_means -= phase_means.mean()
    seasonal = phase_means[np.arange(n) % period]

    trend[:first] = trend[first]
    trend[last + 1 :] = trend[last]
    residual = x - trend - seasonal
    return Decomposition(trend, seasonal, residual)


@dataclass(frozen=True)
class AugmentationSpec:
    """Which transform families to append and with what parameters."""

    families: tuple[str, ...]
    params: dict[str, dict[str, float]] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "families", tuple(self.families))
        unknown = [f for f in self.families if f not in FAMILIES]
        if unknown:
            raise DataError(f"unknown augmentation family {unknown[0]!r}")
        if len(set(self.families)) != len(self.families):
            raise DataError("duplicate augmentation family")
        self.resolved_params()

    def resolved_params(self) -> dict[str, dict[str, float]]:
        """Per-family parameters with defaults applied and values validated."""
        for fam_key, fam_params in self.params.items():
            if fam_key not in FAMILIES:
                raise DataError(
                    f"params must be keyed by family name; {fam_key!r} is not one"
                )
            allowed = set(_DEFAULT_PARAMS.get(fam_key, {}))
            if fam_key in _DECOMP_FAMILIES:
                allowed.add("P")
            extra = sorted(set(fam_params) - allowed)
            if extra:
                raise DataError(
                    f"family {fam_key!r} does not take parameter {extra[0]!r}"
                )
        resolved: dict[str, dict[str, float]] = {}
        for family in self.families:
            params = dict(_DEFAULT_PARAMS.get(family, {}))
            params.update(self.params.get(family, {}))
            if family in _DECOMP_FAMILIES:
                if "P" not in params:
                    raise DataError(
                        f"family {family!r} needs an explicit period P (data-specific)"
                    )
                params["P"] = _as_int(params["P"], "P")
            for key in ("l", "w", "c", "p", "m", "s", "q"):
                if key in params:
                    params[key] = _as_int(params[key], key)
                    if key != "s" and params[key] < 1:
                        raise DataError(f"parameter {key} must be >= 1")
            if family == "tw" and params["s"] < 0:
                raise DataError("parameter s must be >= 0")
            if family == "noise" and params["sigma"] < 0:
                raise DataError("parameter sigma must be >= 0")
            if family == "drift" and params["d"] < 0:
                raise DataError("parameter d must be >= 0")
            if family == "tw" and params["r"] < 1:
                raise DataError("parameter r must be >= 1")
            if family == "quant" and params["q"] < 2:
                raise DataError("parameter q must be >= 2")
            if family == "drift" and params["m"] < 2:
                raise DataError("parameter m must be >= 2")
            resolved[family] = params
        return resolved

    def prefix(self, family: str) -> str:
        template = FAMILIES[family][0]
        return template.format(**self.resolved_params()[family])


def _as_int(value: float, name: str) -> int:
    if float(value) != int(value):
        raise DataError(f"parameter {name} must be an integer, got {value}")
    return int(value)


@dataclass(frozen=True)
class AugmentationState:
    """Train-fitted state for the stateful families (quantize, noise)."""

    quantize_levels: dict[str, np.ndarray | None] = field(default_factory=dict)
    noise_scale: dict[str, float] = field(default_factory=dict)


def fit_augmentation_state(frame: TimeSeriesFrame, spec: AugmentationSpec) -> AugmentationState:
    params = spec.resolved_params()
    levels: dict[str, np.ndarray | None] = {}
    scales: dict[str, float] = {}
    if "quant" in spec.families:
        for name in frame.names:
            levels[name] = quantize_levels(frame.column(name), params["quant"]["q"])
    if "noise" in spec.families:
        for name in frame.names:
            std = float(frame.column(name).std())
            scales[name] = std if std > 0 else 1.0
    return AugmentationState(levels, scales)


def _family_seed(spec: AugmentationSpec, family: str, column_index: int) -> list[int]:
    """Seed material for one (family, column) stream; streams never collide."""
    return [spec.seed, FAMILIES[family][1], column_index]


def augment_frame(
    ds: LabeledDataset,
    spec: AugmentationSpec,
    state: AugmentationState | None = None,
) -> LabeledDataset:
    """Append one augmented column per (family, source column).

    Families are processed in name order, source columns in frame order, so
    output column order is deterministic. Original columns and y are untouched.
    When `state` is given, quantize levels and noise scales come from it
    instead of being fitted on this frame.
    """
    frame = ds.frame
    if np.isnan(frame.values).any():
        raise DataError("augmentation requires a null-free frame; impute first")
    if not spec.families:
        return ds
    params = spec.resolved_params()
    source_names = frame.names

    decomp_cache: dict[tuple[int, int], Decomposition] = {}

    def decomposition(column_index: int, period: int) -> Decomposition:
        key = (column_index, period)
        if key not in decomp_cache:
            decomp_cache[key] = decompose(frame.values[:, column_index], period)
        return decomp_cache[key]

    new_names: list[str] = []
    new_columns: list[np.ndarray] = []
    for family in sorted(spec.families):
        prefix = spec.prefix(family)
        fp = params[family]
        for j, name in enumerate(source_names):
            x = frame.values[:, j]
            if family == "relchg":
                col = relative_change(x)
            elif family == "lag":
                col = lag(x, fp["l"])
            elif family == "roll":
                col = rolling_mean(x, fp["w"])
            elif family == "expanding_mean":
                col = expanding_mean(x)
            elif family == "cnv":
                col = convolve(x, fp["c"])
            elif family == "pool":
                col = pool(x, fp["p"])
            elif family == "drift":
                seed = _family_seed(spec, family, j)
                col = drift(x, fp["d"], fp["m"], seed)
            elif family == "tw":
                seed = _family_seed(spec, family, j)
                col = time_warp(x, fp["r"], fp["s"], seed)
            elif family == "quant":
                fitted = state.quantize_levels.get(name) if state else None
                if state is not None and fitted is None:
                    col = x.copy()
                else:
                    col = quantize(x, fp["q"], levels=fitted)
            elif family == "rev":
                col = reverse(x)
            elif family == "noise":
                seed = _family_seed(spec, family, j)
                scale = state.noise_scale.get(name) if state else None
                col = add_noise(x, fp["sigma"], seed, scale=scale)
            elif family == "trend":
                col = decomposition(j, fp["P"]).trend
            elif family == "seasonal":
                col = decomposition(j, fp["P"]).seasonal
            else:
                col = decomposition(j, fp["P"]).residual
            new_names.append(f"{prefix}_{name}")
            new_columns.append(col)

    clashes = set(new_names) & set(frame.names)
    if clashes:
        raise DataError(f"augmented column name collision: {sorted(clashes)[0]!r}")
    out_frame = frame.with_columns(new_names, np.column_stack(new_columns))
    return LabeledDataset(out_frame, ds.y, ds.row_ids)
