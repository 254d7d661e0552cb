"""Config-driven pipeline execution, experiment grids, and report files.

Stage order is fixed: load, impute, curve-shift, split, augment, resample,
train, evaluate, report. Resampling touches training rows only, and every
stateful transform is fitted on the training split and applied to the test
split with the train-fitted state. Each stage draws its seed from the global
seed through a fixed per-stage code, so adding or removing one stage never
shifts the randomness of the others.
"""
from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from datetime import datetime, timezone
from typing import Callable

import numpy as np

from .augment import AugmentationSpec, AugmentationState, augment_frame, fit_augmentation_state
from .config import PipelineConfig, ResolvedGrid, config_fingerprint
from .cv import CvSpec, GridSearchResult, grid_search
from .dataset import curve_shift, downsample, split_random, split_run_based, split_time_based
from .frame import DataError, LabeledDataset, load_csv
from .gbdt import GbdtParams, model_to_json, predict_label, predict_proba, split_count_importance, total_cover_importance, train_gbdt
from .imputation import ImputationReport, impute_rolling_mean, impute_zero
from .logreg import predict_proba_logreg, train_weighted_logreg
from .metrics import (
    ComparisonTable,
    EvaluationReport,
    compare_report,
    confusion,
    metrics,
    report_from_json_dict,
    table_to_csv,
)
from .sampling import FeatureMatrix, ResampleResult, adasyn, as_matrix, enn, smote, smote_enn, smote_tomek, tomek_links

__all__ = [
    "STAGE_ORDER",
    "PipelineError",
    "stage_seed",
    "run_id_for",
    "run_pipeline",
    "run_experiment_grid",
    "importance",
    "write_atomic",
]

STAGE_ORDER = (
    "load",
    "impute",
    "curve_shift",
    "split",
    "augment",
    "resample",
    "train",
    "evaluate",
    "report",
)

# Per-stage seed codes; see stage_seed.
_SEED_CODES = {"split": 1, "augment": 2, "resample": 3, "model": 4, "cv": 5}


class PipelineError(DataError):
    """Stage failure, prefixed with the stage name."""


@contextmanager
def _stage(name: str):
    try:
        yield
    except PipelineError:
        raise
    except DataError as exc:
        raise PipelineError(f"{name}: {exc}") from exc


def stage_seed(global_seed: int, stage: str) -> int:
    """Derive one stage's integer seed from the global seed."""
    seq = np.random.SeedSequence([global_seed, _SEED_CODES[stage]])
    return int(seq.generate_state(1)[0])


def write_atomic(path: str, text: str) -> None:
    """Write-temp-then-rename so readers never observe a partial file."""
    tmp = f"{path}.tmp-{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _blob_hash(path: str) -> str:
    with open(path, "rb") as fh:
        content = fh.read()
    digest = hashlib.sha1()
    digest.update(b"blob %d\0" % len(content))
    digest.update(content)
    return digest.hexdigest()


def run_id_for(cfg: PipelineConfig) -> str:
    return f"{cfg.label}-{config_fingerprint(cfg)[:12]}"


def _coerce_int_params(params: dict) -> dict:
    out = dict(params)
    for name in ("n_rounds", "max_depth", "seed", "max_iter"):
        if name in out:
            out[name] = int(out[name])
    return out


def _load_stage(cfg: PipelineConfig) -> LabeledDataset:
    ds = load_csv(cfg.dataset.path, cfg.dataset.y_column, cfg.dataset.time_column)
    if cfg.dataset.feature_columns is not None:
        frame = ds.frame.select_columns(tuple(cfg.dataset.feature_columns))
        ds = LabeledDataset(frame, ds.y, ds.row_ids)
    if cfg.dataset.downsample > 1:
        ds = downsample(ds, cfg.dataset.downsample)
    return ds


def _fill_residual_nulls(ds: LabeledDataset, report: ImputationReport) -> LabeledDataset:
    """Fill leftover nulls (head rows) with the column's first observed value."""
    if not report.residual_nulls:
        return ds
    values = ds.frame.values.copy()
    name_to_col = {name: j for j, name in enumerate(ds.frame.names)}
    for name, row in report.residual_nulls:
        j = name_to_col[name]
        finite = np.flatnonzero(~np.isnan(values[:, j]))
        if finite.size == 0:
            raise DataError(f"column {name!r} has no observed values to model")
        values[row, j] = values[finite[0], j]
    frame = ds.frame.with_columns(ds.frame.names, values)
    return LabeledDataset(frame, ds.y, ds.row_ids)


def _impute_stage(
    cfg: PipelineConfig, ds: LabeledDataset
) -> tuple[LabeledDataset, ImputationReport | None]:
    method = cfg.imputation.method
    if method == "none":
        if np.isnan(ds.frame.values).any():
            raise DataError(
                "dataset contains nulls; configure zero or rolling imputation"
            )
        return ds, None
    if method == "zero":
        frame, report = impute_zero(ds.frame)
    else:
        frame, report = impute_rolling_mean(ds.frame, cfg.imputation.window)
    out = LabeledDataset(frame, ds.y, ds.row_ids)
    return _fill_residual_nulls(out, report), report


def _split_stage(cfg: PipelineConfig, ds: LabeledDataset):
    s = cfg.split
    if s.method == "random":
        return split_random(
            ds,
            s.test_fraction,
            seed=stage_seed(cfg.seed, "split"),
            stratified=s.stratified,
        )
    if s.method == "time":
        return split_time_based(ds, s.train_fraction)
    sessions = split_run_based(ds, s.gap_seconds)
    if s.session >= len(sessions):
        raise DataError(
            f"session {s.session} out of range; found {len(sessions)} sessions"
        )
    result = split_time_based(sessions[s.session], s.train_fraction)
    result.metadata["method"] = "run"
    result.metadata["session"] = str(s.session)
    result.metadata["sessions_found"] = str(len(sessions))
    return result


def _augment_stage(
    cfg: PipelineConfig, train: LabeledDataset, test: LabeledDataset
) -> tuple[LabeledDataset, LabeledDataset, AugmentationState | None]:
    if not cfg.augmentation.families:
        return train, test, None
    spec = AugmentationSpec(
        tuple(cfg.augmentation.families),
        dict(cfg.augmentation.params),
        seed=stage_seed(cfg.seed, "augment"),
    )
    state = fit_augmentation_state(train.frame, spec)
    return (
        augment_frame(train, spec, state=state),
        augment_frame(test, spec, state=state),
        state,
    )


def _resample_stage(
    cfg: PipelineConfig, matrix: FeatureMatrix
) -> tuple[FeatureMatrix, ResampleResult | None]:
    method = cfg.sampling.method
    if method == "none":
        return matrix, None
    s = cfg.sampling
    seed = stage_seed(cfg.seed, "resample")
    if method == "smote":
        result = smote(matrix, s.target_ratio, s.k, seed)
    elif method == "tomek":
        result = tomek_links(matrix)
    elif method == "enn":
        result = enn(matrix, s.k_enn)
    elif method == "adasyn":
        result = adasyn(matrix, s.beta, s.k, seed)
    elif method == "smote_tomek":
        result = smote_tomek(matrix, s.target_ratio, s.k, seed)
    else:
        result = smote_enn(matrix, s.target_ratio, s.k, s.k_enn, seed)
    return result.matrix, result


def _train_stage(cfg: PipelineConfig, matrix: FeatureMatrix, names: tuple[str, ...]):
    """Returns (kind, model, grid_result_or_none)."""
    params = _coerce_int_params(cfg.model.params)
    if cfg.model.kind == "logreg":
        model = train_weighted_logreg(matrix, feature_names=names, **params)
        return "logreg", model, None
    params.setdefault("seed", stage_seed(cfg.seed, "model"))
    base = GbdtParams(**params)
    if cfg.model.grid is None:
        return "gbdt", train_gbdt(matrix, base, feature_names=names), None
    grid = {k: list(v) for k, v in cfg.model.grid.items()}
    for key in ("n_rounds", "max_depth", "seed"):
        if key in grid:
            grid[key] = [int(x) for x in grid[key]]
    cv = CvSpec(
        cfg.model.cv.k,
        cfg.model.cv.repeats,
        seed=stage_seed(cfg.seed, "cv"),
        scoring=cfg.model.cv.scoring,
    )
    result = grid_search(matrix, grid, cv, base_params=base, feature_names=names)
    model = train_gbdt(matrix, result.best_params, feature_names=names)
    return "gbdt", model, result


def _predict(kind: str, model, rows: np.ndarray) -> np.ndarray:
    if kind == "logreg":
        return predict_label(predict_proba_logreg(model, rows))
    return predict_label(predict_proba(model, rows))


def _state_hash(
    state: AugmentationState | None, matrix: FeatureMatrix
) -> str:
    doc = {
        "mean": [repr(x) for x in matrix.mean],
        "std": [repr(x) for x in matrix.std],
        "quantize": {},
        "noise": {},
    }
    if state is not None:
        doc["quantize"] = {
            name: None if levels is None else [repr(x) for x in levels]
            for name, levels in sorted(state.quantize_levels.items())
        }
        doc["noise"] = {
            name: repr(scale) for name, scale in sorted(state.noise_scale.items())
        }
    canonical = json.dumps(doc, sort_keys=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _grid_result_json(result: GridSearchResult | None) -> dict | None:
    if result is None:
        return None
    return {
        "best_index": result.best_index,
        "best_score": result.best_score,
        "best_params": {
            k: getattr(result.best_params, k)
            for k in result.best_params.__dataclass_fields__
        },
        "combos": [dict(c) for c in result.combos],
        "mean_scores": list(result.mean_scores),
        "table": [
            {
                "combo": r.combo_index,
                "repeat": r.repeat,
                "fold": r.fold,
                "score": r.score,
            }
            for r in result.table
        ],
    }


def _resample_json(result: ResampleResult | None, before: tuple[int, int]) -> dict | None:
    if result is None:
        return None
    after = result.matrix.class_counts()
    return {
        "before": {"negative": before[0], "positive": before[1]},
        "after": {"negative": after[0], "positive": after[1]},
        "synthetic": sum(1 for p in result.provenance if p.kind == "synthetic"),
        "removed": len(result.removed),
    }


def _serialize_model(kind: str, model) -> str:
    if kind == "gbdt":
        return model_to_json(model)
    doc = {
        "format": "enrich-logreg",
        "version": 1,
        "coef": [repr(x) for x in model.coef],
        "intercept": repr(model.intercept),
        "converged": model.converged,
        "n_iter": model.n_iter,
        "feature_names": list(model.feature_names or ()),
    }
    return json.dumps(doc, sort_keys=True, indent=1)


class _RunContext:
    """Everything run_pipeline and importance share."""

    def __init__(self, cfg: PipelineConfig):
        self.cfg = cfg
        with _stage("load"):
            ds = _load_stage(cfg)
            self.input_hash = _blob_hash(cfg.dataset.path)
        with _stage("impute"):
            ds, self.imputation = _impute_stage(cfg, ds)
        with _stage("curve_shift"):
            if cfg.task.mode == "predict":
                ds = curve_shift(ds, int(cfg.task.k))
        with _stage("split"):
            split = _split_stage(cfg, ds)
            self.split_metadata = dict(split.metadata)
        with _stage("augment"):
            train, test, self.aug_state = _augment_stage(cfg, split.train, split.test)
        self.test = test
        with _stage("resample"):
            base_matrix = as_matrix(train)
            self.counts_before = base_matrix.class_counts()
            self.matrix, self.resample = _resample_stage(cfg, base_matrix)
        with _stage("train"):
            self.kind, self.model, self.grid_result = _train_stage(
                cfg, self.matrix, train.frame.names
            )
        self.feature_names = train.frame.names

    def fingerprint(self) -> dict[str, str]:
        return {
            "config": config_fingerprint(self.cfg),
            "input": self.input_hash,
            "train_state": _state_hash(self.aug_state, self.matrix),
            "label": self.cfg.label,
            "seed": str(self.cfg.seed),
        }


def _report_doc(ctx: _RunContext, report: EvaluationReport, run_id: str) -> dict:
    return {
        "run_id": run_id,
        "label": ctx.cfg.label,
        "schema_version": ctx.cfg.schema_version,
        "stage_order": list(STAGE_ORDER),
        "config": ctx.cfg.model_dump(mode="json"),
        "fingerprint": ctx.fingerprint(),
        "imputation": None if ctx.imputation is None else ctx.imputation.to_json_dict(),
        "split": {k: str(v) for k, v in ctx.split_metadata.items()},
        "resampling": _resample_json(ctx.resample, ctx.counts_before),
        "grid_search": _grid_result_json(ctx.grid_result),
        "model_file": "model.json",
        "metrics": report.to_json_dict(),
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }


def run_pipeline(cfg: PipelineConfig, out_dir: str | None = None) -> EvaluationReport:
    """Execute every stage in order, write report files, return the report."""
    ctx = _RunContext(cfg)
    with _stage("evaluate"):
        pred = _predict(ctx.kind, ctx.model, ctx.test.frame.values)
        report = metrics(confusion(ctx.test.y, pred), ctx.fingerprint())
    with _stage("report"):
        run_id = run_id_for(cfg)
        root = os.path.join(out_dir or cfg.report_dir, run_id)
        os.makedirs(root, exist_ok=True)
        doc = _report_doc(ctx, report, run_id)
        write_atomic(
            os.path.join(root, "report.json"),
            json.dumps(doc, sort_keys=True, indent=2) + "\n",
        )
        write_atomic(
            os.path.join(root, "table.csv"),
            table_to_csv(compare_report([(cfg.label, report)])),
        )
        write_atomic(os.path.join(root, "model.json"), _serialize_model(ctx.kind, ctx.model))
    return report


def _run_variant(cfg: PipelineConfig, out_dir: str | None) -> EvaluationReport:
    return run_pipeline(cfg, out_dir)


def run_experiment_grid(
    grid: ResolvedGrid,
    out_dir: str | None = None,
    workers: int = 1,
    echo: Callable[[str], None] | None = None,
) -> ComparisonTable:
    """Run every variant, skipping ones that already have a report on disk.

    Variants run in parallel up to the worker limit; each is internally
    deterministic, and report writes are atomic, so reruns and concurrent
    workers cannot corrupt results.
    """
    if workers < 1:
        raise DataError("workers must be >= 1")
    if echo:
        echo(f"grid: {grid.size} variants")
    root = out_dir or grid.variants[0][1].report_dir
    done: dict[str, EvaluationReport] = {}
    pending: list[tuple[str, PipelineConfig]] = []
    for label, cfg in grid.variants:
        path = os.path.join(root, run_id_for(cfg), "report.json")
        if os.path.isfile(path):
            with open(path, encoding="utf-8") as fh:
                done[label] = report_from_json_dict(json.load(fh)["metrics"])
            if echo:
                echo(f"variant {label}: already reported, skipping")
        else:
            pending.append((label, cfg))
    if pending:
        if workers == 1 or len(pending) == 1:
            for label, cfg in pending:
                done[label] = run_pipeline(cfg, root)
                if echo:
                    echo(f"variant {label}: done")
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = {
                    label: pool.submit(_run_variant, cfg, root)
                    for label, cfg in pending
                }
                for label, future in futures.items():
                    done[label] = future.result()
                    if echo:
                        echo(f"variant {label}: done")
    table = compare_report([(label, done[label]) for label, _ in grid.variants])
    os.makedirs(root, exist_ok=True)
    write_atomic(os.path.join(root, "table.csv"), table_to_csv(table))
    write_atomic(
        os.path.join(root, "table.json"),
        json.dumps(table.to_json_dict(), sort_keys=True, indent=2) + "\n",
    )
    return table


def importance(
    cfg: PipelineConfig, top: int, out_dir: str | None = None
) -> list[tuple[str, float, int]]:
    """Train per config and write ranked (feature, cover, split count) triples."""
    if top < 1:
        raise DataError("top must be >= 1")
    ctx = _RunContext(cfg)
    if ctx.kind != "gbdt":
        raise DataError("importance ranking applies to the gbdt model only")
    covers = total_cover_importance(ctx.model)
    splits = split_count_importance(ctx.model)
    triples = [(name, cover, splits.get(name, 0)) for name, cover in covers[:top]]
    run_id = run_id_for(cfg)
    root = os.path.join(out_dir or cfg.report_dir, run_id)
    os.makedirs(root, exist_ok=True)
    doc = {
        "run_id": run_id,
        "label": cfg.label,
        "top": top,
        "importance": [
            {"feature": name, "cover": cover, "split_count": count}
            for name, cover, count in triples
        ],
        "fingerprint": ctx.fingerprint(),
    }
    write_atomic(
        os.path.join(root, "importance.json"),
        json.dumps(doc, sort_keys=True, indent=2) + "\n",
    )
    return triples
