"""Weighted logistic regression against an independent convex optimizer."""
import numpy as np
import pytest
from scipy.optimize import minimize

from enrich import (
    DataError,
    FeatureMatrix,
    predict_proba_logreg,
    train_weighted_logreg,
)

from _toys import blob_dataset


def reference_fit(matrix, scale_pos_weight, l2):
    """Minimize the same penalized weighted loss with scipy in z-space."""
    z = matrix.standardized()
    y = matrix.labels.astype(np.float64)
    w = np.where(y == 1.0, scale_pos_weight, 1.0)
    zaug = np.hstack([z, np.ones((len(z), 1))])
    d = z.shape[1]

    def loss(theta):
        margin = zaug @ theta
        # log(1 + e^m) - y*m is the stable per-row negative log likelihood
        ll = np.logaddexp(0.0, margin) - y * margin
        return float(np.sum(w * ll) + 0.5 * l2 * np.dot(theta[:d], theta[:d]))

    def grad(theta):
        p = 1.0 / (1.0 + np.exp(-zaug @ theta))
        g = zaug.T @ (w * (p - y))
        g[:d] += l2 * theta[:d]
        return g

    res = minimize(loss, np.zeros(d + 1), jac=grad, method="L-BFGS-B",
                   options={"ftol": 1e-14, "gtol": 1e-10, "maxiter": 5000})
    theta = res.x
    coef = theta[:d] / matrix.std
    intercept = float(theta[d] - np.sum(theta[:d] * matrix.mean / matrix.std))
    return coef, intercept


def test_fit_matches_independent_convex_solver():
    ds = blob_dataset(n_neg=70, n_pos=30, seed=1, spread=1.4)
    matrix = FeatureMatrix(ds.frame.values, ds.y)
    for spw, l2 in ((1.0, 1.0), (4.0, 0.5), (1.0, 10.0)):
        model = train_weighted_logreg(matrix, scale_pos_weight=spw, l2=l2,
                                      max_iter=20000, tol=1e-9)
        assert model.converged
        ref_coef, ref_intercept = reference_fit(matrix, spw, l2)
        assert np.allclose(model.coef, ref_coef, atol=1e-5)
        assert abs(model.intercept - ref_intercept) < 1e-5
        probe = np.array([[0.0, 0.0], [3.0, 3.0], [-2.0, 5.0]])
        ours = predict_proba_logreg(model, probe)
        theirs = 1.0 / (1.0 + np.exp(-(probe @ ref_coef + ref_intercept)))
        assert np.allclose(ours, theirs, atol=1e-6)


def test_gradient_vanishes_at_the_returned_solution():
    ds = blob_dataset(n_neg=50, n_pos=25, seed=2, spread=1.0)
    matrix = FeatureMatrix(ds.frame.values, ds.y)
    model = train_weighted_logreg(matrix, scale_pos_weight=2.0, l2=1.0,
                                  max_iter=20000, tol=1e-7)
    assert model.converged
    z = matrix.standardized()
    y = matrix.labels.astype(np.float64)
    w = np.where(y == 1.0, 2.0, 1.0)
    zaug = np.hstack([z, np.ones((len(z), 1))])
    theta_z = np.append(model.coef * matrix.std,
                        model.intercept + np.sum(model.coef * matrix.mean))
    p = 1.0 / (1.0 + np.exp(-zaug @ theta_z))
    grad = zaug.T @ (w * (p - y))
    grad[:2] += 1.0 * theta_z[:2]
    assert np.max(np.abs(grad)) < 1e-6


def test_zero_positive_weight_yields_the_majority_predictor():
    ds = blob_dataset(n_neg=40, n_pos=20, seed=3, spread=0.8)
    matrix = FeatureMatrix(ds.frame.values, ds.y)
    model = train_weighted_logreg(matrix, scale_pos_weight=0.0, max_iter=20000)
    probs = predict_proba_logreg(model, matrix.rows)
    assert np.all(probs < 0.5)


def test_separable_data_classifies_perfectly():
    ds = blob_dataset(n_neg=30, n_pos=15, seed=4, spread=0.3, center=6.0)
    matrix = FeatureMatrix(ds.frame.values, ds.y)
    model = train_weighted_logreg(matrix, l2=0.1, max_iter=20000)
    pred = (predict_proba_logreg(model, matrix.rows) >= 0.5).astype(int)
    assert np.array_equal(pred, matrix.labels)


def test_probabilities_are_invariant_to_feature_rescaling():
    ds = blob_dataset(n_neg=45, n_pos=18, seed=5, spread=1.1)
    matrix = FeatureMatrix(ds.frame.values, ds.y)
    scaled_rows = ds.frame.values.copy()
    scaled_rows[:, 0] = scaled_rows[:, 0] * 1000.0 - 77.0
    scaled = FeatureMatrix(scaled_rows, ds.y)
    a = train_weighted_logreg(matrix, max_iter=20000, tol=1e-9)
    b = train_weighted_logreg(scaled, max_iter=20000, tol=1e-9)
    pa = predict_proba_logreg(a, matrix.rows)
    pb = predict_proba_logreg(b, scaled_rows)
    assert np.allclose(pa, pb, atol=1e-9)


def test_unconverged_run_reports_itself():
    ds = blob_dataset(n_neg=40, n_pos=16, seed=6)
    matrix = FeatureMatrix(ds.frame.values, ds.y)
    model = train_weighted_logreg(matrix, max_iter=1)
    assert not model.converged
    assert model.n_iter == 1


def test_parameter_validation():
    ds = blob_dataset(n_neg=10, n_pos=5, seed=7)
    matrix = FeatureMatrix(ds.frame.values, ds.y)
    with pytest.raises(DataError, match="scale_pos_weight"):
        train_weighted_logreg(matrix, scale_pos_weight=-1.0)
    with pytest.raises(DataError, match="l2"):
        train_weighted_logreg(matrix, l2=-0.1)
    with pytest.raises(DataError, match="max_iter"):
        train_weighted_logreg(matrix, max_iter=0)
    single = FeatureMatrix(np.arange(6.0)[:, None], np.zeros(6, dtype=np.int64))
    with pytest.raises(DataError, match="both classes"):
        train_weighted_logreg(single)


def test_feature_names_are_carried():
    ds = blob_dataset(n_neg=10, n_pos=5, seed=8)
    matrix = FeatureMatrix(ds.frame.values, ds.y)
    model = train_weighted_logreg(matrix, max_iter=50, feature_names=("a", "b"))
    assert model.feature_names == ("a", "b")
    assert model.coef.shape == (2,)