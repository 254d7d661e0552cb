"""JSON pipeline and experiment-grid configuration with full validation.

Validation collects every violation instead of stopping at the first, so a
config file can be fixed in one pass. Relative dataset paths are resolved
against the directory of the config file they appear in.
"""
from __future__ import annotations

import hashlib
import itertools
import json
import os
from dataclasses import dataclass
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .augment import FAMILIES, AugmentationSpec
from .cv import CvSpec
from .frame import DataError
from .gbdt import GbdtParams

__all__ = [
    "ConfigError",
    "DatasetConfig",
    "TaskConfig",
    "ImputationConfig",
    "AugmentationConfig",
    "SamplingConfig",
    "SplitConfig",
    "CvConfig",
    "ModelConfig",
    "PipelineConfig",
    "VariantConfig",
    "GridConfig",
    "ResolvedGrid",
    "SCHEMA_VERSION",
    "parse_config",
    "validate_config",
    "parse_grid",
    "validate_grid",
    "config_fingerprint",
    "deep_merge",
]

SCHEMA_VERSION = 1

SAMPLING_METHODS = ("none", "smote", "tomek", "enn", "adasyn", "smote_tomek", "smote_enn")

_LOGREG_PARAMS = ("scale_pos_weight", "l2", "max_iter", "tol")


class ConfigError(DataError):
    """Carries the complete list of violations found in one validation pass."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("invalid config:\n" + "\n".join(self.violations))


class DatasetConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")
    path: str
    y_column: str = "y"
    time_column: str | None = None
    feature_columns: list[str] | None = None
    downsample: int = 1


class TaskConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")
    mode: Literal["detect", "predict"] = "detect"
    k: int | None = None


class ImputationConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")
    method: Literal["none", "zero", "rolling"] = "none"
    window: int = 5


class AugmentationConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")
    families: list[str] = Field(default_factory=list)
    # Keyed by family name: {"lag": {"l": 2}, "trend": {"P": 12}}.
    params: dict[str, dict[str, float]] = Field(default_factory=dict)


class SamplingConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")
    method: Literal[
        "none", "smote", "tomek", "enn", "adasyn", "smote_tomek", "smote_enn"
    ] = "none"
    target_ratio: float = 1.0
    k: int = 5
    k_enn: int = 3
    beta: float = 1.0


class SplitConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")
    method: Literal["random", "time", "run"] = "random"
    test_fraction: float = 0.2
    stratified: bool = True
    train_fraction: float = 0.8
    gap_seconds: float = 1800.0
    session: int = 0


class CvConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")
    k: int = 5
    repeats: int = 3
    scoring: Literal["macro_f1", "recall_pos", "precision_pos"] = "macro_f1"


class ModelConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")
    kind: Literal["gbdt", "logreg"] = "gbdt"
    params: dict[str, float] = Field(default_factory=dict)
    grid: dict[str, list[float]] | None = None
    cv: CvConfig = Field(default_factory=CvConfig)


class PipelineConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")
    schema_version: int
    label: str = "run"
    seed: int = 0
    dataset: DatasetConfig
    task: TaskConfig = Field(default_factory=TaskConfig)
    imputation: ImputationConfig = Field(default_factory=ImputationConfig)
    augmentation: AugmentationConfig = Field(default_factory=AugmentationConfig)
    sampling: SamplingConfig = Field(default_factory=SamplingConfig)
    split: SplitConfig = Field(default_factory=SplitConfig)
    model: ModelConfig = Field(default_factory=ModelConfig)
    report_dir: str = "reports"


class VariantConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")
    label: str
    overrides: dict = Field(default_factory=dict)


class GridConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")
    schema_version: int
    base: dict
    axes: list[list[VariantConfig]]


@dataclass(frozen=True)
class ResolvedGrid:
    base: dict
    variants: tuple[tuple[str, PipelineConfig], ...]

    @property
    def size(self) -> int:
        return len(self.variants)


def deep_merge(base: dict, override: dict) -> dict:
    """Recursive dict merge; non-dict override values replace base values."""
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def _pydantic_violations(exc: ValidationError) -> list[str]:
    out = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "$"
        out.append(f"{loc}: {err['msg']}")
    return out


def _int_param(violations: list[str], path: str, name: str, value: float) -> float:
    if float(value) != int(value):
        violations.append(f"{path}: {name} must be an integer, got {value}")
        return value
    return int(value)


def _semantic_violations(cfg: PipelineConfig, base_dir: str) -> list[str]:
    v: list[str] = []
    if cfg.schema_version != SCHEMA_VERSION:
        v.append(
            f"schema_version: expected {SCHEMA_VERSION}, got {cfg.schema_version}"
        )
    path = cfg.dataset.path
    if not os.path.isabs(path):
        path = os.path.join(base_dir, path)
    if not os.path.isfile(path):
        v.append(f"dataset.path: file not found: {path}")
    if cfg.dataset.downsample < 1:
        v.append("dataset.downsample: must be >= 1")
    if cfg.dataset.feature_columns is not None and not cfg.dataset.feature_columns:
        v.append("dataset.feature_columns: must be null or a non-empty list")

    if cfg.task.mode == "predict":
        if cfg.task.k is None or cfg.task.k < 1:
            v.append("task.k: predict mode requires k >= 1")
    elif cfg.task.k is not None:
        v.append("task.k: detect mode does not take k")

    if cfg.imputation.method == "rolling" and cfg.imputation.window < 2:
        v.append("imputation.window: rolling imputation requires window >= 2")

    for fam in cfg.augmentation.families:
        if fam not in FAMILIES:
            v.append(f"augmentation.families: unknown family {fam!r}")
    if all(f in FAMILIES for f in cfg.augmentation.families):
        try:
            AugmentationSpec(
                tuple(cfg.augmentation.families), dict(cfg.augmentation.params)
            )
        except DataError as exc:
            v.append(f"augmentation.params: {exc}")

    if cfg.sampling.method != "none":
        if cfg.sampling.target_ratio <= 0:
            v.append("sampling.target_ratio: must be positive")
        if cfg.sampling.k < 1:
            v.append("sampling.k: must be >= 1")
        if cfg.sampling.k_enn < 1:
            v.append("sampling.k_enn: must be >= 1")
        if cfg.sampling.beta <= 0:
            v.append("sampling.beta: must be positive")

    if cfg.split.method == "random" and not 0.0 < cfg.split.test_fraction < 1.0:
        v.append("split.test_fraction: must be in (0, 1)")
    if cfg.split.method in ("time", "run") and not 0.0 < cfg.split.train_fraction < 1.0:
        v.append("split.train_fraction: must be in (0, 1)")
    if cfg.split.method == "run":
        if cfg.split.gap_seconds <= 0:
            v.append("split.gap_seconds: must be positive")
        if cfg.split.session < 0:
            v.append("split.session: must be >= 0")
        if cfg.dataset.time_column is None:
            v.append("split.method: run-based split requires dataset.time_column")

    params = dict(cfg.model.params)
    if cfg.model.kind == "gbdt":
        known = {f for f in GbdtParams.__dataclass_fields__}
        for name in ("n_rounds", "max_depth", "seed"):
            if name in params:
                params[name] = _int_param(v, "model.params", name, params[name])
        bad = sorted(set(params) - known)
        if bad:
            v.append(f"model.params: unknown gbdt parameters {bad}")
        elif not any(msg.startswith("model.params") for msg in v):
            try:
                GbdtParams(**params)
            except DataError as exc:
                v.append(f"model.params: {exc}")
        if cfg.model.grid is not None:
            for key, values in cfg.model.grid.items():
                if key not in known:
                    v.append(f"model.grid.{key}: unknown gbdt parameter")
                elif not values:
                    v.append(f"model.grid.{key}: needs a non-empty list of values")
                elif key in ("n_rounds", "max_depth", "seed") and any(
                    float(x) != int(x) for x in values
                ):
                    v.append(f"model.grid.{key}: values must be integers")
        try:
            CvSpec(cfg.model.cv.k, cfg.model.cv.repeats, 0, cfg.model.cv.scoring)
        except DataError as exc:
            v.append(f"model.cv: {exc}")
    else:
        bad = sorted(set(params) - set(_LOGREG_PARAMS))
        if bad:
            v.append(f"model.params: unknown logreg parameters {bad}")
        if cfg.model.grid is not None:
            v.append("model.grid: grid search applies to the gbdt model only")

    if not cfg.label:
        v.append("label: must be non-empty")
    return v


def _without_paths(doc: dict, locs: list[tuple]) -> dict:
    """Deep-copy doc with the given key paths removed."""
    import copy

    out = copy.deepcopy(doc)
    for loc in locs:
        node = out
        try:
            for key in loc[:-1]:
                node = node[key]
            del node[loc[-1]]
        except (KeyError, IndexError, TypeError):
            pass
    return out


def validate_config(doc: dict, base_dir: str = ".") -> PipelineConfig:
    """Validate a config document, reporting every violation at once.

    Structural violations do not stop semantic checking: the offending keys
    are dropped (falling back to defaults) and the remaining document is
    checked too, so one pass reports as much as possible.
    """
    violations: list[str] = []
    try:
        cfg = PipelineConfig.model_validate(doc)
    except ValidationError as exc:
        violations = _pydantic_violations(exc)
        trimmed = _without_paths(doc, [err["loc"] for err in exc.errors()])
        try:
            cfg = PipelineConfig.model_validate(trimmed)
        except ValidationError:
            raise ConfigError(violations) from None
        stripped = {".".join(str(p) for p in err["loc"]) for err in exc.errors()}
        violations += [
            v
            for v in _semantic_violations(cfg, base_dir)
            if v.split(":", 1)[0] not in stripped
        ]
        raise ConfigError(violations)
    violations = _semantic_violations(cfg, base_dir)
    if violations:
        raise ConfigError(violations)
    path = cfg.dataset.path
    if not os.path.isabs(path):
        resolved = os.path.abspath(os.path.join(base_dir, path))
        cfg = cfg.model_copy(
            update={"dataset": cfg.dataset.model_copy(update={"path": resolved})}
        )
    return cfg


def parse_config(path: str) -> PipelineConfig:
    doc = _load_json(path)
    return validate_config(doc, base_dir=os.path.dirname(os.path.abspath(path)))


def _load_json(path: str) -> dict:
    if not os.path.isfile(path):
        raise ConfigError([f"$: config file not found: {path}"])
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError([f"$: not valid JSON: {exc}"]) from None
    if not isinstance(doc, dict):
        raise ConfigError(["$: config must be a JSON object"])
    return doc


def validate_grid(doc: dict, base_dir: str = ".") -> ResolvedGrid:
    """Expand the axes cross product and validate every variant config."""
    try:
        grid = GridConfig.model_validate(doc)
    except ValidationError as exc:
        raise ConfigError(_pydantic_violations(exc)) from None
    violations: list[str] = []
    if grid.schema_version != SCHEMA_VERSION:
        violations.append(
            f"schema_version: expected {SCHEMA_VERSION}, got {grid.schema_version}"
        )
    if not grid.axes or any(not axis for axis in grid.axes):
        violations.append("axes: every axis needs at least one variant")
        raise ConfigError(violations)
    variants: list[tuple[str, PipelineConfig]] = []
    labels: set[str] = set()
    for combo in itertools.product(*grid.axes):
        label = "-".join(part.label for part in combo)
        doc_v = dict(grid.base)
        for part in combo:
            doc_v = deep_merge(doc_v, part.overrides)
        doc_v["label"] = label
        if label in labels:
            violations.append(f"axes: duplicate variant label {label!r}")
            continue
        labels.add(label)
        try:
            variants.append((label, validate_config(doc_v, base_dir)))
        except ConfigError as exc:
            violations.extend(f"variant {label!r}: {msg}" for msg in exc.violations)
    if violations:
        raise ConfigError(violations)
    return ResolvedGrid(base=grid.base, variants=tuple(variants))


def parse_grid(path: str) -> ResolvedGrid:
    doc = _load_json(path)
    return validate_grid(doc, base_dir=os.path.dirname(os.path.abspath(path)))


def config_fingerprint(cfg: PipelineConfig) -> str:
    """Stable hash of the fully resolved configuration."""
    canonical = json.dumps(cfg.model_dump(mode="json"), sort_keys=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
