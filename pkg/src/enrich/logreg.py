"""Class-weighted logistic regression baseline."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .frame import DataError
from .sampling import FeatureMatrix

__all__ = ["LogregModel", "train_weighted_logreg", "predict_proba_logreg"]


@dataclass(frozen=True)
class LogregModel:
    coef: np.ndarray
    intercept: float
    converged: bool
    n_iter: int
    feature_names: tuple[str, ...] | None = None


def train_weighted_logreg(
    matrix: FeatureMatrix,
    scale_pos_weight: float = 1.0,
    l2: float = 1.0,
    max_iter: int = 1000,
    tol: float = 1e-6,
    feature_names: tuple[str, ...] | None = None,
) -> LogregModel:
    """Full-batch gradient descent on the weighted logistic loss.

    Features are standardized internally for conditioning; the returned
    coefficients are mapped back to the original feature scale. The step
    size is 1/L with L the curvature bound 0.25 * lam_max(Z'WZ) + l2, which
    guarantees monotone loss decrease. The intercept is not penalized.
    """
    if scale_pos_weight < 0:
        raise DataError("scale_pos_weight must be >= 0")
    if l2 < 0:
        raise DataError("l2 must be non-negative")
    if max_iter < 1:
        raise DataError("max_iter must be >= 1")
    n_neg, n_pos = matrix.class_counts()
    if n_pos == 0 or n_neg == 0:
        raise DataError("training data must contain both classes")

    z = matrix.standardized()
    y = matrix.labels.astype(np.float64)
    n, d = z.shape
    w = np.where(y == 1.0, scale_pos_weight, 1.0)
    zaug = np.hstack([z, np.ones((n, 1))])
    curvature = 0.25 * (zaug * w[:, None]).T @ zaug
    lam_max = float(np.linalg.eigvalsh(curvature)[-1])
    step = 1.0 / (lam_max + l2)

    theta = np.zeros(d + 1)
    converged = False
    n_iter = 0
    penalty_mask = np.ones(d + 1)
    penalty_mask[d] = 0.0
    for n_iter in range(1, max_iter + 1):
        margin = zaug @ theta
        p = 1.0 / (1.0 + np.exp(-np.clip(margin, -500.0, 500.0)))
        grad = zaug.T @ (w * (p - y)) + l2 * penalty_mask * theta
        if np.max(np.abs(grad)) < tol:
            converged = True
            break
        theta = theta - step * grad

    coef_z = theta[:d]
    coef = coef_z / matrix.std
    intercept = float(theta[d] - np.sum(coef_z * matrix.mean / matrix.std))
    return LogregModel(coef, intercept, converged, n_iter, feature_names)


def predict_proba_logreg(model: LogregModel, rows: np.ndarray) -> np.ndarray:
    rows = np.asarray(rows, dtype=np.float64)
    margin = rows @ model.coef + model.intercept
    return 1.0 / (1.0 + np.exp(-np.clip(margin, -500.0, 500.0)))
