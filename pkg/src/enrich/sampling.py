"""Class-balance resampling: SMOTE, Tomek links, ENN, ADASYN, and combinations.

All neighbor searches use Euclidean distance on z-score-standardized features
(so one high-magnitude sensor cannot dominate) with ties broken by lower row
index. Resampling belongs on the training split only.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .frame import DataError, LabeledDataset

__all__ = [
    "FeatureMatrix",
    "as_matrix",
    "RowProvenance",
    "RemovedRow",
    "ResampleResult",
    "knn",
    "smote",
    "tomek_links",
    "enn",
    "adasyn",
    "smote_tomek",
    "smote_enn",
]

_CHUNK = 256


@dataclass(frozen=True)
class FeatureMatrix:
    """Dense feature rows with binary labels and per-column z-score stats."""

    rows: np.ndarray
    labels: np.ndarray
    mean: np.ndarray = field(init=False)
    std: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        rows = np.asarray(self.rows, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "labels", labels)
        if rows.ndim != 2 or rows.shape[1] < 1:
            raise DataError("feature matrix must be 2-d with at least one column")
        if len(rows) == 0:
            raise DataError("feature matrix must not be empty")
        if len(labels) != len(rows):
            raise DataError("label length does not match row count")
        if np.isnan(rows).any():
            raise DataError("feature matrix must be null-free")
        if not np.isin(labels, (0, 1)).all():
            raise DataError("labels must be 0 or 1")
        mean = rows.mean(axis=0)
        std = rows.std(axis=0)
        std = np.where(std == 0.0, 1.0, std)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)
        object.__setattr__(self, "_z", (rows - mean) / std)

    def __len__(self) -> int:
        return len(self.rows)

    def standardized(self) -> np.ndarray:
        return self._z  # type: ignore[attr-defined]

    def class_counts(self) -> tuple[int, int]:
        """(negative count, positive count)."""
        pos = int(self.labels.sum())
        return len(self) - pos, pos

    def minority_label(self) -> int:
        neg, pos = self.class_counts()
        return 1 if pos <= neg else 0


def as_matrix(ds: LabeledDataset) -> FeatureMatrix:
    return FeatureMatrix(ds.frame.values, ds.y)


@dataclass(frozen=True)
class RowProvenance:
    kind: str  # "original" or "synthetic"
    source: int = -1
    seed_row: int = -1
    neighbor_row: int = -1
    lam: float = 0.0


@dataclass(frozen=True)
class RemovedRow:
    index: int  # position in the pre-removal matrix
    label: int
    reason: str


@dataclass(frozen=True)
class ResampleResult:
    matrix: FeatureMatrix
    provenance: tuple[RowProvenance, ...]
    removed: tuple[RemovedRow, ...]


def _knn_block(
    z: np.ndarray,
    queries: np.ndarray,
    k: int,
    candidates: np.ndarray | None = None,
) -> np.ndarray:
    """k nearest candidate indices per query row, self excluded, stable ties.

    Each distance is accumulated feature by feature from the pairwise
    differences, never via the |a|^2+|b|^2-2ab expansion: that keeps d(i,j) a
    pure function of the two rows, so equal rows give bitwise-equal distances
    and the stable argsort over ascending candidates resolves ties to the
    lower global row index.
    """
    cand = np.arange(len(z)) if candidates is None else np.asarray(candidates)
    zc = z[cand]
    out = np.empty((len(queries), k), dtype=np.int64)
    for lo in range(0, len(queries), _CHUNK):
        q = queries[lo : lo + _CHUNK]
        zq = z[q]
        d2 = np.zeros((len(q), len(cand)), dtype=np.float64)
        for f in range(z.shape[1]):
            diff = zq[:, f, None] - zc[None, :, f]
            d2 += diff * diff
        d2[cand[None, :] == q[:, None]] = np.inf
        order = np.argsort(d2, axis=1, kind="stable")
        out[lo : lo + len(q)] = cand[order[:, :k]]
    return out


def knn(
    matrix: FeatureMatrix, i: int, k: int, restrict: int | None = None
) -> np.ndarray:
    """Indices of the k nearest rows to row i (i excluded), ties to lower index."""
    if not 0 <= i < len(matrix):
        raise DataError(f"row index {i} out of range")
    if restrict is None:
        candidates = None
        n_candidates = len(matrix) - 1
    else:
        candidates = np.flatnonzero(matrix.labels == restrict)
        n_candidates = len(candidates) - (1 if matrix.labels[i] == restrict else 0)
    if k < 1 or k > n_candidates:
        raise DataError(
            f"k={k} nearest neighbors requested with {n_candidates} candidates"
        )
    return _knn_block(
        matrix.standardized(), np.array([i]), k, candidates=candidates
    )[0]


def _as_result(
    matrix: FeatureMatrix, provenance: list[RowProvenance], removed: list[RemovedRow]
) -> ResampleResult:
    return ResampleResult(matrix, tuple(provenance), tuple(removed))


def _original_provenance(matrix: FeatureMatrix) -> list[RowProvenance]:
    return [RowProvenance("original", source=i) for i in range(len(matrix))]


def smote(
    matrix: FeatureMatrix, target_ratio: float = 1.0, k: int = 5, seed: int = 0
) -> ResampleResult:
    """Append synthetic minority rows a + lam*(b - a) until the target ratio.

    s = max(0, ceil(target_ratio * N_maj) - N_min) synthetics; a is a seeded
    random minority row, b one of its k nearest minority neighbors (k clamped
    to minority-1), lam uniform in [0, 1].
    """
    if not 0.0 < target_ratio <= 1.0:
        raise DataError(f"target_ratio must be in (0, 1], got {target_ratio}")
    minority = matrix.minority_label()
    counts = matrix.class_counts()
    n_min = counts[minority]
    n_maj = counts[1 - minority]
    if n_min < 2:
        raise DataError(f"smote needs at least 2 minority rows, got {n_min}")
    s = max(0, math.ceil(target_ratio * n_maj) - n_min)
    provenance = _original_provenance(matrix)
    if s == 0:
        return _as_result(matrix, provenance, [])

    k_eff = min(k, n_min - 1)
    minority_idx = np.flatnonzero(matrix.labels == minority)
    tables = _knn_block(
        matrix.standardized(), minority_idx, k_eff, candidates=minority_idx
    )
    rng = np.random.default_rng(seed)
    synth = np.empty((s, matrix.rows.shape[1]), dtype=np.float64)
    for t in range(s):
        m = int(rng.integers(n_min))
        a = int(minority_idx[m])
        b = int(tables[m][rng.integers(k_eff)])
        lam = float(rng.uniform())
        synth[t] = matrix.rows[a] + lam * (matrix.rows[b] - matrix.rows[a])
        provenance.append(RowProvenance("synthetic", seed_row=a, neighbor_row=b, lam=lam))
    rows = np.vstack([matrix.rows, synth])
    labels = np.concatenate([matrix.labels, np.full(s, minority, dtype=np.int64)])
    return _as_result(FeatureMatrix(rows, labels), provenance, [])


def tomek_links(matrix: FeatureMatrix) -> ResampleResult:
    """Drop the majority member of every mutual-1NN opposite-label pair.

    With equal class counts, label 0 plays the majority role.
    """
    n = len(matrix)
    if n < 2:
        raise DataError("tomek_links needs at least 2 rows")
    nn1 = _knn_block(matrix.standardized(), np.arange(n), 1)[:, 0]
    neg, pos = matrix.class_counts()
    majority = 0 if neg >= pos else 1
    flagged = [
        i
        for i in range(n)
        if matrix.labels[i] == majority
        and matrix.labels[nn1[i]] != majority
        and int(nn1[nn1[i]]) == i
    ]
    return _remove(matrix, flagged, "tomek-link")


def enn(matrix: FeatureMatrix, k: int = 3) -> ResampleResult:
    """Remove rows whose label loses the majority vote of their k neighbors.

    One pass against the original matrix; a tied vote keeps the row.
    """
    n = len(matrix)
    if k < 1 or k >= n:
        raise DataError(f"enn needs 1 <= k < n, got k={k}, n={n}")
    table = _knn_block(matrix.standardized(), np.arange(n), k)
    votes = matrix.labels[table].sum(axis=1)
    flagged = [
        i
        for i in range(n)
        if (2 * votes[i] > k and matrix.labels[i] == 0)
        or (2 * votes[i] < k and matrix.labels[i] == 1)
    ]
    return _remove(matrix, flagged, "enn")


def _remove(matrix: FeatureMatrix, flagged: list[int], reason: str) -> ResampleResult:
    removed = [RemovedRow(i, int(matrix.labels[i]), reason) for i in flagged]
    keep = np.ones(len(matrix), dtype=bool)
    keep[flagged] = False
    out = FeatureMatrix(matrix.rows[keep], matrix.labels[keep])
    provenance = [RowProvenance("original", source=int(i)) for i in np.flatnonzero(keep)]
    return _as_result(out, provenance, removed)


def adasyn(
    matrix: FeatureMatrix, beta: float = 1.0, k: int = 5, seed: int = 0
) -> ResampleResult:
    """Density-adaptive oversampling: more synthetics where majority crowds in.

    G = (N_maj - N_min) * beta synthetics are allocated per minority point i
    proportionally to r_i = (majority among its k all-class neighbors)/k; each
    synthetic interpolates toward a random minority neighbor (nearest minority
    row when the neighborhood has none). Sum of r_i = 0 emits a warning and
    produces no synthetics.
    """
    if beta < 0:
        raise DataError(f"beta must be >= 0, got {beta}")
    minority = matrix.minority_label()
    counts = matrix.class_counts()
    n_min, n_maj = counts[minority], counts[1 - minority]
    if n_min < 2:
        raise DataError(f"adasyn needs at least 2 minority rows, got {n_min}")
    provenance = _original_provenance(matrix)
    total = int(math.floor((n_maj - n_min) * beta + 0.5))
    if total <= 0:
        return _as_result(matrix, provenance, [])

    k_eff = min(k, len(matrix) - 1)
    minority_idx = np.flatnonzero(matrix.labels == minority)
    tables = _knn_block(matrix.standardized(), minority_idx, k_eff)
    r = (matrix.labels[tables] != minority).sum(axis=1) / float(k_eff)
    if r.sum() == 0.0:
        warnings.warn(
            "adasyn: no minority point borders the majority class; no synthetics",
            stacklevel=2,
        )
        return _as_result(matrix, provenance, [])

    share = total * r / r.sum()
    alloc = np.floor(share + 0.5).astype(np.int64)
    # Settle the rounding residue so the total is exact: add to the densest
    # neighborhoods, trim from the sparsest allocated ones (ties: lower index).
    by_r_desc = np.lexsort((np.arange(len(r)), -r))
    by_r_asc = np.lexsort((np.arange(len(r)), r))
    pos = 0
    while alloc.sum() < total:
        alloc[by_r_desc[pos % len(r)]] += 1
        pos += 1
    pos = 0
    while alloc.sum() > total:
        j = by_r_asc[pos % len(r)]
        if alloc[j] > 0:
            alloc[j] -= 1
        pos += 1

    rng = np.random.default_rng(seed)
    synth_rows: list[np.ndarray] = []
    for m, i in enumerate(minority_idx):
        g = int(alloc[m])
        if g == 0:
            continue
        nbrs = tables[m]
        partners = nbrs[matrix.labels[nbrs] == minority]
        if len(partners) == 0:
            partners = knn(matrix, int(i), 1, restrict=minority)
        for _ in range(g):
            b = int(partners[rng.integers(len(partners))])
            lam = float(rng.uniform())
            synth_rows.append(matrix.rows[i] + lam * (matrix.rows[b] - matrix.rows[i]))
            provenance.append(
                RowProvenance("synthetic", seed_row=int(i), neighbor_row=b, lam=lam)
            )
    rows = np.vstack([matrix.rows, np.array(synth_rows)])
    labels = np.concatenate(
        [matrix.labels, np.full(len(synth_rows), minority, dtype=np.int64)]
    )
    return _as_result(FeatureMatrix(rows, labels), provenance, [])


def _rechain(first: ResampleResult, second: ResampleResult) -> ResampleResult:
    """Compose provenance of an oversample stage with a removal stage."""
    dropped = {r.index for r in second.removed}
    kept = [p for i, p in enumerate(first.provenance) if i not in dropped]
    return ResampleResult(second.matrix, tuple(kept), second.removed)


def smote_tomek(
    matrix: FeatureMatrix, target_ratio: float = 1.0, k: int = 5, seed: int = 0
) -> ResampleResult:
    """SMOTE, then Tomek-link cleaning of the combined matrix."""
    oversampled = smote(matrix, target_ratio, k, seed)
    cleaned = tomek_links(oversampled.matrix)
    return _rechain(oversampled, cleaned)


def smote_enn(
    matrix: FeatureMatrix,
    target_ratio: float = 1.0,
    k_smote: int = 5,
    k_enn: int = 3,
    seed: int = 0,
) -> ResampleResult:
    """SMOTE, then one ENN pass over the combined matrix (both classes eligible)."""
    oversampled = smote(matrix, target_ratio, k_smote, seed)
    cleaned = enn(oversampled.matrix, k_enn)
    return _rechain(oversampled, cleaned)
