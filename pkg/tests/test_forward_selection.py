"""Greedy adoption of augmentation families on validation score."""
import numpy as np
import pytest

from enrich import DataError, GbdtParams, forward_select_augmentations

from _toys import make_dataset


def jump_dataset(n, n_pos, seed):
    """Level is an uninformative wander; positives are 4% one-step jumps.

    The jump is small against the series-wide level spread (so the raw
    column carries almost no signal) but an order of magnitude above the
    step noise, so the step-to-step relative change separates the classes
    cleanly and adopting the relchg family lifts validation score.
    """
    rng = np.random.default_rng(seed)
    steps = rng.normal(0.0, 0.05, size=n)
    base = 10.0 + np.cumsum(steps)
    y = np.zeros(n, dtype=np.int64)
    pos_rows = rng.choice(np.arange(2, n - 1, 3), size=n_pos, replace=False)
    y[pos_rows] = 1
    x1 = base.copy()
    x1[pos_rows] = base[pos_rows] * 1.04
    x2 = rng.normal(size=n)
    return make_dataset(np.column_stack([x1, x2]), y)


def split(ds, n_train):
    idx = np.arange(len(ds))
    return ds.take_rows(idx[:n_train]), ds.take_rows(idx[n_train:])


SMALL_MODEL = GbdtParams(n_rounds=15, max_depth=3, seed=0)


def test_informative_family_is_adopted_and_noise_rejected():
    train, validation = split(jump_dataset(700, 80, seed=21), 500)
    result = forward_select_augmentations(
        train, validation, ["noise", "relchg"], model_params=SMALL_MODEL
    )
    assert "relchg" in result.selected
    assert "noise" not in result.selected
    assert result.final_score > result.baseline_score + 0.1


def test_trace_records_every_candidate_at_every_step():
    train, validation = split(jump_dataset(600, 70, seed=22), 430)
    result = forward_select_augmentations(
        train, validation, ["noise", "relchg", "rev"], model_params=SMALL_MODEL
    )
    steps = sorted({e.step for e in result.trace})
    assert steps[0] == 1
    seen = 3
    for s in steps:
        entries = [e for e in result.trace if e.step == s]
        assert len(entries) == seen
        assert len({e.family for e in entries}) == seen
        adopted = [e for e in entries if e.adopted]
        assert len(adopted) <= 1
        if adopted:
            top = max(e.score for e in entries)
            assert adopted[0].score == top
        seen -= 1
    # The last step adopts nothing (that is why the loop stopped), unless
    # every family was consumed.
    last = [e for e in result.trace if e.step == steps[-1]]
    if len(result.selected) < 3:
        assert not any(e.adopted for e in last)


def test_scores_along_the_adopted_path_are_increasing():
    train, validation = split(jump_dataset(600, 70, seed=23), 430)
    result = forward_select_augmentations(
        train, validation, ["relchg", "noise", "lag"], model_params=SMALL_MODEL
    )
    path = [result.baseline_score]
    for e in result.trace:
        if e.adopted:
            path.append(e.score)
    for a, b in zip(path, path[1:]):
        assert b > a + 0.001
    assert result.final_score == path[-1]


def test_gain_fields_measure_against_the_running_score():
    train, validation = split(jump_dataset(500, 60, seed=24), 360)
    result = forward_select_augmentations(
        train, validation, ["relchg", "noise"], model_params=SMALL_MODEL
    )
    current = result.baseline_score
    for s in sorted({e.step for e in result.trace}):
        entries = [e for e in result.trace if e.step == s]
        for e in entries:
            assert e.gain == pytest.approx(e.score - current, abs=1e-12)
        adopted = [e for e in entries if e.adopted]
        if adopted:
            current = adopted[0].score
    assert result.final_score == current


def test_selection_is_deterministic():
    train, validation = split(jump_dataset(500, 60, seed=25), 360)
    a = forward_select_augmentations(
        train, validation, ["relchg", "noise"], model_params=SMALL_MODEL
    )
    b = forward_select_augmentations(
        train, validation, ["relchg", "noise"], model_params=SMALL_MODEL
    )
    assert a == b


def test_high_epsilon_blocks_adoption():
    train, validation = split(jump_dataset(500, 60, seed=26), 360)
    result = forward_select_augmentations(
        train,
        validation,
        ["relchg"],
        model_params=SMALL_MODEL,
        epsilon=10.0,
    )
    assert result.selected == ()
    assert result.final_score == result.baseline_score
    assert len(result.trace) == 1 and not result.trace[0].adopted


def test_validation_errors():
    train, validation = split(jump_dataset(300, 40, seed=27), 220)
    with pytest.raises(DataError, match="at least one candidate"):
        forward_select_augmentations(train, validation, [])
    with pytest.raises(DataError, match="unique"):
        forward_select_augmentations(train, validation, ["lag", "lag"])
    with pytest.raises(DataError, match="unknown augmentation family"):
        forward_select_augmentations(train, validation, ["wavelet"])
    with pytest.raises(DataError, match="epsilon"):
        forward_select_augmentations(train, validation, ["lag"], epsilon=-0.1)
    all_neg = validation.take_rows(np.flatnonzero(validation.y == 0))
    with pytest.raises(DataError, match="both classes"):
        forward_select_augmentations(train, all_neg, ["lag"])