"""Repeated stratified cross-validation and hyperparameter grid search."""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

import numpy as np

from .frame import DataError, LabeledDataset
from .gbdt import GbdtParams, predict_label, predict_proba, total_cover_importance, train_gbdt
from .metrics import SCORING_NAMES, score
from .sampling import FeatureMatrix

__all__ = [
    "CvSpec",
    "ScoreRow",
    "GridSearchResult",
    "repeated_stratified_kfold",
    "default_grid",
    "grid_search",
    "select_top_features",
]

_PARAM_NAMES = tuple(f.name for f in fields(GbdtParams))


@dataclass(frozen=True)
class CvSpec:
    k: int = 5
    repeats: int = 3
    seed: int = 0
    scoring: str = "macro_f1"

    def __post_init__(self) -> None:
        if self.k < 2:
            raise DataError("cross-validation needs k >= 2 folds")
        if self.repeats < 1:
            raise DataError("cross-validation needs repeats >= 1")
        if self.scoring not in SCORING_NAMES:
            raise DataError(
                f"unknown scoring {self.scoring!r}; expected one of {SCORING_NAMES}"
            )


def repeated_stratified_kfold(
    y: np.ndarray, spec: CvSpec
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Fold index pairs (train, validation), k per repeat.

    Each repeat shuffles every class independently with its own seeded
    generator and deals the rows round-robin, so class proportions stay as
    even as integer counts allow. Row order inside each fold is ascending.
    """
    y = np.asarray(y)
    n = y.shape[0]
    n_pos = int(np.sum(y == 1))
    n_neg = n - n_pos
    if n_pos < spec.k:
        raise DataError(
            f"stratified {spec.k}-fold needs at least {spec.k} positive rows, got {n_pos}"
        )
    if n_neg < spec.k:
        raise DataError(
            f"stratified {spec.k}-fold needs at least {spec.k} negative rows, got {n_neg}"
        )
    splits: list[tuple[np.ndarray, np.ndarray]] = []
    for rep in range(spec.repeats):
        rng = np.random.default_rng([spec.seed, rep])
        folds: list[list[int]] = [[] for _ in range(spec.k)]
        for label in (0, 1):
            idx = np.flatnonzero(y == label)
            perm = rng.permutation(idx)
            for i, row in enumerate(perm):
                folds[i % spec.k].append(int(row))
        for f in range(spec.k):
            val = np.sort(np.asarray(folds[f], dtype=np.intp))
            mask = np.ones(n, dtype=bool)
            mask[val] = False
            splits.append((np.flatnonzero(mask), val))
    return splits


def default_grid(n_neg: int, n_pos: int) -> dict[str, list]:
    """Search grid keyed off the class ratio rho = n_neg / n_pos."""
    if n_pos <= 0 or n_neg <= 0:
        raise DataError("default grid needs at least one row of each class")
    rho = n_neg / n_pos
    spw = sorted({1.0, math.sqrt(rho), rho / 2.0, rho, 2.0 * rho})
    return {
        "scale_pos_weight": spw,
        "n_rounds": [50, 100, 200],
        "max_depth": [3, 5],
        "learning_rate": [0.1, 0.3],
        "lam": [1.0],
        "alpha": [0.0, 1.0],
        "subsample": [0.8, 1.0],
    }


@dataclass(frozen=True)
class ScoreRow:
    combo_index: int
    repeat: int
    fold: int
    score: float
    params: dict


@dataclass(frozen=True)
class GridSearchResult:
    best_params: GbdtParams
    best_score: float
    best_index: int
    combos: tuple[dict, ...]
    mean_scores: tuple[float, ...]
    table: tuple[ScoreRow, ...]


def _expand(grid: dict[str, list]) -> list[dict]:
    if not grid:
        raise DataError("grid must contain at least one parameter")
    for key, values in grid.items():
        if key not in _PARAM_NAMES:
            raise DataError(f"unknown grid parameter {key!r}")
        if not isinstance(values, (list, tuple)) or len(values) == 0:
            raise DataError(f"grid parameter {key!r} needs a non-empty list of values")
    combos: list[dict] = [{}]
    for key in sorted(grid):
        combos = [{**c, key: v} for c in combos for v in grid[key]]
    return combos


def grid_search(
    matrix: FeatureMatrix,
    grid: dict[str, list],
    cv: CvSpec | None = None,
    base_params: GbdtParams | None = None,
    feature_names: tuple[str, ...] | None = None,
) -> GridSearchResult:
    """Exhaustive search over the parameter grid with shared CV folds.

    Every combination is scored on the identical fold assignment, so score
    differences come from the parameters alone. Ties on the mean score fall
    to the smaller scale_pos_weight, then the smaller n_rounds, then the
    earlier combination.
    """
    cv = cv or CvSpec()
    base = base_params or GbdtParams()
    combos = _expand(grid)
    splits = repeated_stratified_kfold(matrix.labels, cv)
    table: list[ScoreRow] = []
    means: list[float] = []
    for ci, combo in enumerate(combos):
        params = replace(base, **combo)
        fold_scores = []
        for si, (train_idx, val_idx) in enumerate(splits):
            sub = FeatureMatrix(matrix.rows[train_idx], matrix.labels[train_idx])
            model = train_gbdt(sub, params, feature_names=feature_names)
            pred = predict_label(predict_proba(model, matrix.rows[val_idx]))
            s = score(matrix.labels[val_idx], pred, cv.scoring)
            fold_scores.append(s)
            table.append(
                ScoreRow(ci, si // cv.k, si % cv.k, float(s), dict(combo))
            )
        means.append(float(np.mean(fold_scores)))
    best = min(
        range(len(combos)),
        key=lambda i: (
            -means[i],
            combos[i].get("scale_pos_weight", base.scale_pos_weight),
            combos[i].get("n_rounds", base.n_rounds),
            i,
        ),
    )
    return GridSearchResult(
        best_params=replace(base, **combos[best]),
        best_score=means[best],
        best_index=best,
        combos=tuple(combos),
        mean_scores=tuple(means),
        table=tuple(table),
    )


def select_top_features(
    ds: LabeledDataset,
    m: int,
    params: GbdtParams | None = None,
    cv: CvSpec | None = None,
) -> LabeledDataset:
    """Keep the m feature columns with the highest total-cover importance.

    Columns are ranked by fitting the boosted model (once on all rows, or
    once per CV training fold with covers summed when a CvSpec is given) and
    returned in their original frame order. m at or above the column count
    keeps everything.
    """
    if m < 1:
        raise DataError("feature selection needs m >= 1")
    params = params or GbdtParams()
    names = ds.frame.names
    matrix = FeatureMatrix(ds.frame.values, ds.y)
    totals = dict.fromkeys(names, 0.0)
    if cv is None:
        fits = [matrix]
    else:
        fits = [
            FeatureMatrix(matrix.rows[train_idx], matrix.labels[train_idx])
            for train_idx, _ in repeated_stratified_kfold(matrix.labels, cv)
        ]
    for sub in fits:
        model = train_gbdt(sub, params, feature_names=names)
        for name, cover in total_cover_importance(model):
            totals[name] += cover
    order = {name: j for j, name in enumerate(names)}
    ranked = sorted(names, key=lambda name: (-totals[name], order[name]))
    keep = set(ranked[:m])
    selected = tuple(name for name in names if name in keep)
    return LabeledDataset(ds.frame.select_columns(selected), ds.y, ds.row_ids)
