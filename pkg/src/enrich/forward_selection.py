"""Greedy forward selection over augmentation families."""
from __future__ import annotations

from dataclasses import dataclass

from .augment import FAMILIES, AugmentationSpec, augment_frame, fit_augmentation_state
from .frame import DataError, LabeledDataset
from .gbdt import GbdtParams, predict_label, predict_proba, train_gbdt
from .metrics import score
from .sampling import as_matrix

__all__ = ["TraceEntry", "SelectionResult", "forward_select_augmentations"]


@dataclass(frozen=True)
class TraceEntry:
    step: int
    family: str
    score: float
    gain: float
    adopted: bool


@dataclass(frozen=True)
class SelectionResult:
    selected: tuple[str, ...]
    trace: tuple[TraceEntry, ...]
    baseline_score: float
    final_score: float


def _fit_and_score(
    train: LabeledDataset,
    validation: LabeledDataset,
    families: tuple[str, ...],
    model_params: GbdtParams,
    aug_params: dict | None,
    aug_seed: int,
) -> float:
    if families:
        spec = AugmentationSpec(families, aug_params or {}, seed=aug_seed)
        state = fit_augmentation_state(train.frame, spec)
        train = augment_frame(train, spec, state=state)
        validation = augment_frame(validation, spec, state=state)
    model = train_gbdt(as_matrix(train), model_params, feature_names=train.frame.names)
    pred = predict_label(predict_proba(model, validation.frame.values))
    return score(validation.y, pred, "macro_f1")


def forward_select_augmentations(
    train: LabeledDataset,
    validation: LabeledDataset,
    families: list[str],
    model_params: GbdtParams | None = None,
    epsilon: float = 0.001,
    aug_params: dict | None = None,
    aug_seed: int = 0,
) -> SelectionResult:
    """Adopt one augmentation family at a time while validation macro-F1 grows.

    Each step evaluates every unadopted family on top of the current set and
    adopts the best one if its gain exceeds epsilon; ties go to the family
    listed first by the caller. Every evaluation is recorded in the trace,
    adopted or not, so the decision path can be audited.
    """
    if not families:
        raise DataError("forward selection needs at least one candidate family")
    if len(set(families)) != len(families):
        raise DataError("candidate families must be unique")
    for fam in families:
        if fam not in FAMILIES:
            raise DataError(f"unknown augmentation family {fam!r}")
    if epsilon < 0:
        raise DataError("epsilon must be non-negative")
    if validation.positive_count == 0 or validation.negative_count == 0:
        raise DataError("validation split must contain both classes")
    params = model_params or GbdtParams()

    baseline = _fit_and_score(train, validation, (), params, aug_params, aug_seed)
    selected: list[str] = []
    remaining = list(families)
    trace: list[TraceEntry] = []
    current = baseline
    step = 0
    while remaining:
        step += 1
        best_family = None
        best_score = -1.0
        entries: list[TraceEntry] = []
        for fam in remaining:
            s = _fit_and_score(
                train,
                validation,
                tuple(selected + [fam]),
                params,
                aug_params,
                aug_seed,
            )
            entries.append(TraceEntry(step, fam, s, s - current, False))
            if s > best_score:
                best_score = s
                best_family = fam
        adopt = best_score - current > epsilon
        for e in entries:
            trace.append(
                TraceEntry(e.step, e.family, e.score, e.gain, adopt and e.family == best_family)
            )
        if not adopt:
            break
        selected.append(best_family)
        remaining.remove(best_family)
        current = best_score
    return SelectionResult(tuple(selected), tuple(trace), baseline, current)
