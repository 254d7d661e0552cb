"""Series transforms, seasonal decomposition, and the frame augmentation driver."""
import numpy as np
import pytest

from enrich import AugmentationSpec, DataError, augment_frame, decompose, fit_augmentation_state
from enrich.augment import (
    add_noise,
    convolve,
    drift,
    expanding_mean,
    lag,
    pool,
    quantize,
    relative_change,
    reverse,
    rolling_mean,
    time_warp,
)

from _toys import make_dataset

RNG = np.random.default_rng(2024)


def random_series(n, rng=RNG):
    return rng.normal(3.0, 2.0, size=n)


# --- hand-checkable arithmetic -------------------------------------------------


def test_relative_change_hand_example():
    out = relative_change(np.array([2.0, 4.0, 2.0, 2.0]))
    assert np.allclose(out, [0.0, 100.0, -50.0, 0.0])


def test_relative_change_zero_denominator_yields_zero():
    out = relative_change(np.array([0.0, 5.0, 0.0, -3.0]))
    assert out[1] == 0.0
    assert out[3] == 0.0


def test_lag_hand_example():
    x = np.array([1.0, 2.0, 3.0, 4.0])
    assert np.array_equal(lag(x, 1), [1.0, 1.0, 2.0, 3.0])
    assert np.array_equal(lag(x, 2), [1.0, 1.0, 1.0, 2.0])


def test_lag_bounds():
    x = np.arange(4.0)
    with pytest.raises(DataError, match="1 <= l < length"):
        lag(x, 0)
    with pytest.raises(DataError, match="1 <= l < length"):
        lag(x, 4)


def test_rolling_mean_hand_example():
    out = rolling_mean(np.array([1.0, 2.0, 3.0, 4.0, 5.0]), 3)
    assert np.allclose(out, [1.0, 1.5, 2.0, 3.0, 4.0])


def test_rolling_mean_bounds():
    with pytest.raises(DataError, match="1 <= w <= length"):
        rolling_mean(np.arange(3.0), 0)
    with pytest.raises(DataError, match="1 <= w <= length"):
        rolling_mean(np.arange(3.0), 4)


def test_expanding_mean_matches_running_average():
    x = random_series(300)
    out = expanding_mean(x)
    total = 0.0
    for i, v in enumerate(x):
        total += v
        assert abs(out[i] - total / (i + 1)) < 1e-12


def test_convolve_hand_example():
    out = convolve(np.array([1.0, 2.0, 3.0]), 3)
    assert np.allclose(out, [4.0 / 3.0, 2.0, 8.0 / 3.0])


def test_convolve_bounds():
    with pytest.raises(DataError, match="odd"):
        convolve(np.arange(4.0), 2)
    with pytest.raises(DataError, match="exceeds series length"):
        convolve(np.arange(2.0), 3)


def test_pool_hand_example_and_piecewise_constant():
    out = pool(np.array([1.0, 2.0, 3.0, 4.0, 5.0]), 2)
    assert np.allclose(out, [1.5, 1.5, 3.5, 3.5, 5.0])
    x = random_series(97)
    pooled = pool(x, 5)
    for lo in range(0, 97, 5):
        block = pooled[lo : lo + 5]
        assert np.all(block == block[0])
        assert abs(block[0] - x[lo : lo + 5].mean()) < 1e-12


def test_quantize_hand_example_ties_go_down():
    out = quantize(np.array([0.0, 1.0, 2.0, 3.0, 4.0]), 3)
    assert np.array_equal(out, [0.0, 0.0, 2.0, 2.0, 4.0])


def test_quantize_image_is_subset_of_level_set():
    x = random_series(500)
    q = 7
    out = quantize(x, q)
    lo, hi = x.min(), x.max()
    levels = lo + np.arange(q) * (hi - lo) / (q - 1)
    assert set(np.round(out, 12)) <= set(np.round(levels, 12))


def test_quantize_external_levels_clip_out_of_range():
    levels = np.array([0.0, 1.0, 2.0])
    out = quantize(np.array([-50.0, 50.0, 0.9]), 3, levels=levels)
    assert np.array_equal(out, [0.0, 2.0, 1.0])


def test_quantize_bounds():
    with pytest.raises(DataError, match="at least 2 levels"):
        quantize(np.arange(3.0), 1)


def test_reverse_hand_example():
    assert np.array_equal(reverse(np.array([1.0, 2.0, 3.0])), [3.0, 2.0, 1.0])


def test_drift_stays_within_bound():
    x = random_series(400)
    amplitude = x.max() - x.min()
    for d in (0.05, 0.2):
        out = drift(x, d, 6, seed=3)
        assert np.max(np.abs(out - x)) <= d * amplitude + 1e-9
    with pytest.raises(DataError, match="2 knots"):
        drift(x, 0.1, 1, seed=0)
    with pytest.raises(DataError, match=">= 0"):
        drift(x, -0.1, 5, seed=0)


def test_time_warp_preserves_endpoints_and_range():
    x = random_series(200)
    out = time_warp(x, 3.0, 4, seed=8)
    assert out[0] == x[0]
    assert out[-1] == x[-1]
    assert out.min() >= x.min() - 1e-12
    assert out.max() <= x.max() + 1e-12
    with pytest.raises(DataError, match=">= 1"):
        time_warp(x, 0.5, 3, seed=0)
    with pytest.raises(DataError, match=">= 0"):
        time_warp(x, 2.0, -1, seed=0)


def test_add_noise_scale_tracks_series_std():
    x = random_series(20_000)
    out = add_noise(x, 0.5, seed=1)
    measured = (out - x).std()
    assert abs(measured - 0.5 * x.std()) < 0.02 * x.std()
    forced = add_noise(x, 0.5, seed=1, scale=4.0)
    assert abs((forced - x).std() - 2.0) < 0.05
    with pytest.raises(DataError, match=">= 0"):
        add_noise(x, -0.1, seed=0)


# --- identity parameterizations are exact --------------------------------------


def test_identity_parameterizations_return_exact_copies():
    x = random_series(64)
    for out in (
        rolling_mean(x, 1),
        pool(x, 1),
        convolve(x, 1),
        drift(x, 0.0, 5, seed=0),
        time_warp(x, 1.0, 3, seed=0),
        time_warp(x, 2.0, 0, seed=0),
        add_noise(x, 0.0, seed=0),
        reverse(reverse(x)),
    ):
        assert np.array_equal(out, x)
        assert out is not x


def test_quantize_constant_series_is_identity():
    x = np.full(10, 3.5)
    assert np.array_equal(quantize(x, 4), x)


# --- length preservation --------------------------------------------------------


@pytest.mark.parametrize("n", [1, 2, 7, 1000])
def test_transforms_preserve_length(n):
    x = random_series(n)
    checks = [
        relative_change(x),
        expanding_mean(x),
        rolling_mean(x, min(5, n)),
        pool(x, 4),
        drift(x, 0.1, 5, seed=0),
        time_warp(x, 2.0, 3, seed=0),
        quantize(x, 10) if n > 1 else quantize(x, 10, levels=np.array([0.0, 1.0])),
        reverse(x),
        add_noise(x, 0.01, seed=0),
    ]
    if n > 1:
        checks.append(lag(x, 1))
        checks.append(convolve(x, 3 if n >= 3 else 1))
    for out in checks:
        assert len(out) == n


def test_decompose_preserves_length():
    x = random_series(100)
    dec = decompose(x, 12)
    assert len(dec.trend) == len(dec.seasonal) == len(dec.residual) == 100


# --- determinism ----------------------------------------------------------------


def test_stochastic_transforms_are_pure_functions_of_seed():
    x = random_series(120)
    assert np.array_equal(drift(x, 0.2, 5, seed=5), drift(x, 0.2, 5, seed=5))
    assert np.array_equal(time_warp(x, 2.0, 3, seed=5), time_warp(x, 2.0, 3, seed=5))
    assert np.array_equal(add_noise(x, 0.1, seed=5), add_noise(x, 0.1, seed=5))
    assert not np.array_equal(add_noise(x, 0.1, seed=5), add_noise(x, 0.1, seed=6))


# --- seasonal-trend decomposition -----------------------------------------------


@pytest.mark.parametrize("period", [4, 7, 12])
def test_decompose_reconstruction_is_exact(period):
    x = random_series(30 * period // 2)
    dec = decompose(x, period)
    assert np.max(np.abs(dec.trend + dec.seasonal + dec.residual - x)) < 1e-9


@pytest.mark.parametrize("period", [5, 8])
def test_decompose_seasonal_window_sums_vanish(period):
    x = random_series(12 * period)
    dec = decompose(x, period)
    for start in range(0, len(x) - period):
        assert abs(dec.seasonal[start : start + period].sum()) < 1e-9


def test_decompose_recovers_line_plus_periodic_pattern():
    period = 6
    pattern = np.array([2.0, -1.0, 0.5, 3.0, -2.5, 1.0])
    t = np.arange(20 * period, dtype=np.float64)
    x = 0.5 * t + 4.0 + pattern[np.arange(len(t)) % period]
    dec = decompose(x, period)
    expected_seasonal = pattern - pattern.mean()
    assert np.max(np.abs(dec.seasonal - expected_seasonal[np.arange(len(t)) % period])) < 1e-9
    half = period // 2
    interior = slice(half, len(t) - half)
    expected_trend = 0.5 * t + 4.0 + pattern.mean()
    assert np.max(np.abs(dec.trend[interior] - expected_trend[interior])) < 1e-9
    assert np.max(np.abs(dec.residual[interior])) < 1e-9


def test_decompose_linear_series_has_no_seasonal_component():
    x = 1.5 * np.arange(48.0) - 7.0
    dec = decompose(x, 8)
    assert np.max(np.abs(dec.seasonal)) < 1e-9


def test_decompose_bounds():
    with pytest.raises(DataError, match="period must be >= 2"):
        decompose(np.arange(10.0), 1)
    with pytest.raises(DataError, match="length >= 2\\*period"):
        decompose(np.arange(10.0), 6)


# --- the frame driver -----------------------------------------------------------


def test_augment_frame_appends_without_touching_originals():
    ds = make_dataset(RNG.normal(size=(50, 2)), [0] * 48 + [1, 1])
    before_values = ds.frame.values.copy()
    spec = AugmentationSpec(("lag", "relchg"), {"lag": {"l": 2}}, seed=1)
    out = augment_frame(ds, spec)
    assert out.frame.names == ("x1", "x2", "lag_2_x1", "lag_2_x2", "relchg_x1", "relchg_x2")
    assert np.array_equal(out.frame.values[:, :2], before_values)
    assert np.array_equal(out.y, ds.y)
    assert np.array_equal(out.row_ids, ds.row_ids)
    assert np.array_equal(out.frame.values[:, 2], lag(before_values[:, 0], 2))
    assert np.array_equal(out.frame.values[:, 5], relative_change(before_values[:, 1]))


def test_augment_frame_family_order_is_sorted_by_name():
    ds = make_dataset(RNG.normal(size=(40, 1)), [0] * 40)
    out = augment_frame(ds, AugmentationSpec(("rev", "cnv", "pool"), seed=0))
    assert out.frame.names == ("x1", "cnv_x1", "pool_x1", "rev_x1")


def test_augment_frame_empty_family_list_is_identity():
    ds = make_dataset(RNG.normal(size=(10, 1)), [0] * 10)
    assert augment_frame(ds, AugmentationSpec((), seed=0)) is ds


def test_augment_frame_rejects_nulls():
    values = np.array([[1.0], [np.nan]])
    ds = make_dataset(values, [0, 0])
    with pytest.raises(DataError, match="impute first"):
        augment_frame(ds, AugmentationSpec(("lag",), seed=0))


def test_augment_frame_rejects_name_collisions():
    ds = make_dataset(RNG.normal(size=(10, 2)), [0] * 10, names=("x1", "rev_x1"))
    with pytest.raises(DataError, match="collision"):
        augment_frame(ds, AugmentationSpec(("rev",), seed=0))


def test_augment_frame_deterministic_under_fixed_seed():
    ds = make_dataset(RNG.normal(size=(60, 2)), [0] * 60)
    spec = AugmentationSpec(("noise", "drift", "tw"), seed=42)
    a = augment_frame(ds, spec)
    b = augment_frame(ds, spec)
    assert np.array_equal(a.frame.values, b.frame.values)
    c = augment_frame(ds, AugmentationSpec(("noise", "drift", "tw"), seed=43))
    assert not np.array_equal(a.frame.values, c.frame.values)


def test_train_fitted_state_applies_to_unseen_rows():
    train = make_dataset(np.linspace(0.0, 9.0, 10), [0] * 10)
    test = make_dataset(np.array([-100.0, 100.0, 4.6]), [0] * 3)
    spec = AugmentationSpec(("quant",), {"quant": {"q": 10}}, seed=0)
    state = fit_augmentation_state(train.frame, spec)
    out = augment_frame(test, spec, state=state)
    q = out.frame.column("quant_x1")
    assert q[0] == 0.0 and q[1] == 9.0  # clipped to the train-fitted ends
    assert q[2] == 5.0


def test_noise_state_reuses_train_scale():
    rng = np.random.default_rng(0)
    train = make_dataset(rng.normal(0, 4.0, size=(5000, 1)), [0] * 5000)
    test = make_dataset(np.zeros((5000, 1)), [0] * 5000)
    spec = AugmentationSpec(("noise",), {"noise": {"sigma": 1.0}}, seed=0)
    state = fit_augmentation_state(train.frame, spec)
    out = augment_frame(test, spec, state=state)
    injected = out.frame.column("noise_x1")
    assert abs(injected.std() - 4.0) < 0.2  # train std, not the test std of 0


def test_spec_validation():
    with pytest.raises(DataError, match="unknown augmentation family"):
        AugmentationSpec(("wavelet",))
    with pytest.raises(DataError, match="duplicate"):
        AugmentationSpec(("lag", "lag"))
    with pytest.raises(DataError, match="keyed by family name"):
        AugmentationSpec(("lag",), {"l": 1})
    with pytest.raises(DataError, match="does not take parameter"):
        AugmentationSpec(("lag",), {"lag": {"window": 3}})
    with pytest.raises(DataError, match="needs an explicit period"):
        AugmentationSpec(("trend",))
    with pytest.raises(DataError, match="must be an integer"):
        AugmentationSpec(("lag",), {"lag": {"l": 1.5}})
    spec = AugmentationSpec(("lag",), {"lag": {"l": 3.0}})
    assert spec.resolved_params()["lag"]["l"] == 3
    assert spec.prefix("lag") == "lag_3"


def test_decomposition_families_through_driver():
    period = 6
    t = np.arange(60.0)
    x = 0.2 * t + np.sin(2 * np.pi * t / period)
    ds = make_dataset(x, [0] * 60)
    spec = AugmentationSpec(
        ("trend", "seasonal", "residual"),
        {"trend": {"P": period}, "seasonal": {"P": period}, "residual": {"P": period}},
        seed=0,
    )
    out = augment_frame(ds, spec)
    assert out.frame.names == ("x1", "resid_x1", "seasonal_x1", "trend_x1")
    total = (
        out.frame.column("trend_x1")
        + out.frame.column("seasonal_x1")
        + out.frame.column("resid_x1")
    )
    assert np.max(np.abs(total - x)) < 1e-9
