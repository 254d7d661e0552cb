"""Weighted gradient-boosted trees with second-order logistic loss.

Exact greedy split search over raw feature values (no histogram binning);
per-row weights w_i = scale_pos_weight for positives, 1 otherwise. Node cover
is the hessian mass routed through the node. Models serialize to versioned,
human-diffable JSON.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .frame import DataError
from .sampling import FeatureMatrix

__all__ = [
    "GbdtParams",
    "TreeNode",
    "GbdtModel",
    "train_gbdt",
    "predict_proba",
    "predict_label",
    "total_cover_importance",
    "split_count_importance",
    "model_to_json",
    "model_from_json",
]

MODEL_FORMAT = "enrich-gbdt"
MODEL_VERSION = 1


@dataclass(frozen=True)
class GbdtParams:
    n_rounds: int = 100
    max_depth: int = 3
    learning_rate: float = 0.3
    lam: float = 1.0
    alpha: float = 0.0
    subsample: float = 1.0
    scale_pos_weight: float = 1.0
    min_child_hessian: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_rounds < 1:
            raise DataError("n_rounds must be >= 1")
        if self.max_depth < 1:
            raise DataError("max_depth must be >= 1")
        if not 0.0 < self.learning_rate <= 1.0:
            raise DataError("learning_rate must be in (0, 1]")
        if self.lam < 0 or self.alpha < 0:
            raise DataError("lambda and alpha must be >= 0")
        if not 0.0 < self.subsample <= 1.0:
            raise DataError("subsample must be in (0, 1]")
        if self.scale_pos_weight <= 0:
            raise DataError("scale_pos_weight must be > 0")
        if self.min_child_hessian < 0:
            raise DataError("min_child_hessian must be >= 0")


@dataclass(frozen=True)
class TreeNode:
    """Internal node (feature >= 0) or leaf (feature = -1, weight set)."""

    cover: float
    feature: int = -1
    threshold: float = 0.0
    weight: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.feature < 0


@dataclass(frozen=True)
class GbdtModel:
    trees: tuple[TreeNode, ...]
    base_score: float
    learning_rate: float
    feature_names: tuple[str, ...]
    params: GbdtParams


def _sigmoid(margin: np.ndarray) -> np.ndarray:
    out = np.empty_like(margin)
    pos = margin >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-margin[pos]))
    e = np.exp(margin[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _leaf_weight(g_sum: float, h_sum: float, lam: float, alpha: float) -> float:
    shrunk = max(0.0, abs(g_sum) - alpha)
    return -math.copysign(shrunk, g_sum) / (h_sum + lam)


def _best_split(
    rows: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    idx: np.ndarray,
    lam: float,
    min_child_hessian: float,
) -> tuple[int, float, float] | None:
    """(feature, threshold, gain) of the best valid split, or None.

    Ties in gain resolve to the lowest feature index then lowest threshold:
    features are scanned in order and candidate positions ascend in value, so
    the first strict improvement wins.
    """
    g_sum = float(g[idx].sum())
    h_sum = float(h[idx].sum())
    parent = g_sum * g_sum / (h_sum + lam)
    best_gain = 0.0
    best: tuple[int, float, float] | None = None
    for f in range(rows.shape[1]):
        xv = rows[idx, f]
        order = np.argsort(xv, kind="stable")
        xs = xv[order]
        if xs[0] == xs[-1]:
            continue
        gl = np.cumsum(g[idx][order])[:-1]
        hl = np.cumsum(h[idx][order])[:-1]
        gr = g_sum - gl
        hr = h_sum - hl
        valid = (
            (xs[1:] != xs[:-1])
            & (hl >= min_child_hessian)
            & (hr >= min_child_hessian)
        )
        if not valid.any():
            continue
        gains = 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent)
        gains[~valid] = -np.inf
        at = int(np.argmax(gains))
        if gains[at] > best_gain:
            best_gain = float(gains[at])
            best = (f, float((xs[at] + xs[at + 1]) / 2.0), best_gain)
    return best


def _grow(
    rows: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    idx: np.ndarray,
    depth: int,
    params: GbdtParams,
) -> TreeNode:
    g_sum = float(g[idx].sum())
    h_sum = float(h[idx].sum())
    split = None
    if depth < params.max_depth and len(idx) >= 2:
        split = _best_split(rows, g, h, idx, params.lam, params.min_child_hessian)
    if split is None:
        return TreeNode(
            cover=h_sum, weight=_leaf_weight(g_sum, h_sum, params.lam, params.alpha)
        )
    feature, threshold, _ = split
    goes_left = rows[idx, feature] < threshold
    left = _grow(rows, g, h, idx[goes_left], depth + 1, params)
    right = _grow(rows, g, h, idx[~goes_left], depth + 1, params)
    return TreeNode(
        cover=h_sum, feature=feature, threshold=threshold, left=left, right=right
    )


def _tree_margin(node: TreeNode, rows: np.ndarray, idx: np.ndarray, out: np.ndarray) -> None:
    if node.is_leaf:
        out[idx] += node.weight
        return
    goes_left = rows[idx, node.feature] < node.threshold
    _tree_margin(node.left, rows, idx[goes_left], out)
    _tree_margin(node.right, rows, idx[~goes_left], out)


def _ensemble_margin(model: GbdtModel, rows: np.ndarray) -> np.ndarray:
    out = np.full(len(rows), model.base_score, dtype=np.float64)
    idx = np.arange(len(rows))
    for tree in model.trees:
        contrib = np.zeros(len(rows), dtype=np.float64)
        _tree_margin(tree, rows, idx, contrib)
        out += model.learning_rate * contrib
    return out


def train_gbdt(X: FeatureMatrix, params: GbdtParams, feature_names=None) -> GbdtModel:
    """Boost weighted second-order trees on the raw (unstandardized) columns."""
    rows, y = X.rows, X.labels
    n = len(rows)
    names = tuple(feature_names) if feature_names is not None else tuple(
        f"f{j}" for j in range(rows.shape[1])
    )
    if len(names) != rows.shape[1]:
        raise DataError("feature_names length does not match column count")

    spw = params.scale_pos_weight
    w = np.where(y == 1, spw, 1.0)
    # Single-class input degenerates to a near-constant predictor rather
    # than erroring, so ablation arms with no minority rows still run.
    prevalence = float(np.clip((w * y).sum() / w.sum(), 1e-6, 1.0 - 1e-6))
    base_score = math.log(prevalence / (1.0 - prevalence))

    margin = np.full(n, base_score, dtype=np.float64)
    rng = np.random.default_rng(params.seed)
    all_rows = np.arange(n)
    trees: list[TreeNode] = []
    for _ in range(params.n_rounds):
        p = _sigmoid(margin)
        g = w * (p - y)
        h = w * p * (1.0 - p)
        if params.subsample < 1.0:
            m = max(1, int(math.floor(params.subsample * n + 0.5)))
            idx = np.sort(rng.choice(n, size=m, replace=False))
        else:
            idx = all_rows
        tree = _grow(rows, g, h, idx, 0, params)
        trees.append(tree)
        contrib = np.zeros(n, dtype=np.float64)
        _tree_margin(tree, rows, all_rows, contrib)
        margin += params.learning_rate * contrib
    return GbdtModel(tuple(trees), base_score, params.learning_rate, names, params)


def predict_proba(model: GbdtModel, rows: np.ndarray | FeatureMatrix) -> np.ndarray:
    if isinstance(rows, FeatureMatrix):
        rows = rows.rows
    rows = np.asarray(rows, dtype=np.float64)
    return _sigmoid(_ensemble_margin(model, rows))


def predict_label(probs: np.ndarray, threshold: float = 0.5) -> np.ndarray:
    """1 where probability >= threshold."""
    return (np.asarray(probs) >= threshold).astype(np.int64)


def _walk(node: TreeNode, covers: dict[int, float], counts: dict[int, int]) -> None:
    if node.is_leaf:
        return
    covers[node.feature] = covers.get(node.feature, 0.0) + node.cover
    counts[node.feature] = counts.get(node.feature, 0) + 1
    _walk(node.left, covers, counts)
    _walk(node.right, covers, counts)


def total_cover_importance(model: GbdtModel) -> list[tuple[str, float]]:
    """Features ranked by summed hessian cover of their split nodes (desc)."""
    covers: dict[int, float] = {}
    counts: dict[int, int] = {}
    for tree in model.trees:
        _walk(tree, covers, counts)
    order = sorted(
        range(len(model.feature_names)), key=lambda j: (-covers.get(j, 0.0), j)
    )
    return [(model.feature_names[j], covers.get(j, 0.0)) for j in order]


def split_count_importance(model: GbdtModel) -> dict[str, int]:
    """How many internal nodes split on each feature (0 when unused)."""
    covers: dict[int, float] = {}
    counts: dict[int, int] = {}
    for tree in model.trees:
        _walk(tree, covers, counts)
    return {name: counts.get(j, 0) for j, name in enumerate(model.feature_names)}


def _node_to_dict(node: TreeNode) -> dict:
    if node.is_leaf:
        return {"cover": node.cover, "weight": node.weight}
    return {
        "cover": node.cover,
        "feature": node.feature,
        "threshold": node.threshold,
        "left": _node_to_dict(node.left),
        "right": _node_to_dict(node.right),
    }


def _node_from_dict(raw: dict) -> TreeNode:
    if "feature" not in raw:
        return TreeNode(cover=raw["cover"], weight=raw["weight"])
    return TreeNode(
        cover=raw["cover"],
        feature=raw["feature"],
        threshold=raw["threshold"],
        left=_node_from_dict(raw["left"]),
        right=_node_from_dict(raw["right"]),
    )


def model_to_json(model: GbdtModel) -> str:
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "base_score": model.base_score,
        "learning_rate": model.learning_rate,
        "feature_names": list(model.feature_names),
        "params": asdict(model.params),
        "trees": [_node_to_dict(t) for t in model.trees],
    }
    return json.dumps(doc, sort_keys=True, indent=1)


def model_from_json(text: str) -> GbdtModel:
    doc = json.loads(text)
    if doc.get("format") != MODEL_FORMAT:
        raise DataError(f"not a {MODEL_FORMAT} document")
    if doc.get("version") != MODEL_VERSION:
        raise DataError(f"unsupported model version {doc.get('version')}")
    return GbdtModel(
        trees=tuple(_node_from_dict(t) for t in doc["trees"]),
        base_score=doc["base_score"],
        learning_rate=doc["learning_rate"],
        feature_names=tuple(doc["feature_names"]),
        params=GbdtParams(**doc["params"]),
    )
