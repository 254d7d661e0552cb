"""HTTP service over the pipeline runner.

The handler functions hold all behavior; the FastAPI routes and the CLI both
call them, so local and remote execution stay identical. Config documents
arrive as raw JSON objects and are validated with the same collect-all rules
as config files. Relative dataset paths are resolved against base_dir, which
defaults to the server's working directory.
"""
from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, ConfigDict, Field

from .config import ConfigError, validate_config, validate_grid
from .frame import DataError
from .pipeline import importance, run_experiment_grid, run_id_for, run_pipeline

__all__ = [
    "app",
    "HealthResponse",
    "ValidateRequest",
    "ValidateResponse",
    "RunRequest",
    "RunResponse",
    "GridRequest",
    "GridResponse",
    "ImportanceRequest",
    "ImportanceEntry",
    "ImportanceResponse",
    "handle_validate",
    "handle_run",
    "handle_grid",
    "handle_importance",
]

SERVICE_VERSION = "0.1.0"


class HealthResponse(BaseModel):
    status: str = "ok"
    version: str = SERVICE_VERSION


class ValidateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    config: dict | None = None
    grid: dict | None = None
    base_dir: str = "."


class ValidateResponse(BaseModel):
    valid: bool
    kind: str
    violations: list[str] = Field(default_factory=list)
    variants: int | None = None


class RunRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    config: dict
    seed: int | None = None
    out_dir: str | None = None
    base_dir: str = "."


class RunResponse(BaseModel):
    run_id: str
    label: str
    out_dir: str
    report: dict


class GridRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    grid: dict
    seed: int | None = None
    out_dir: str | None = None
    workers: int = 1
    base_dir: str = "."


class GridResponse(BaseModel):
    variants: int
    labels: list[str]
    out_dir: str
    table: dict


class ImportanceRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    config: dict
    top: int = 20
    seed: int | None = None
    out_dir: str | None = None
    base_dir: str = "."


class ImportanceEntry(BaseModel):
    feature: str
    cover: float
    split_count: int


class ImportanceResponse(BaseModel):
    run_id: str
    label: str
    importance: list[ImportanceEntry]


def _with_seed(doc: dict, seed: int | None) -> dict:
    if seed is None:
        return doc
    out = dict(doc)
    out["seed"] = seed
    return out


def _with_grid_seed(doc: dict, seed: int | None) -> dict:
    if seed is None:
        return doc
    out = dict(doc)
    base = dict(out.get("base", {}))
    base["seed"] = seed
    out["base"] = base
    return out


def handle_validate(req: ValidateRequest) -> ValidateResponse:
    if (req.config is None) == (req.grid is None):
        raise ConfigError(["$: provide exactly one of config or grid"])
    if req.config is not None:
        try:
            validate_config(req.config, req.base_dir)
        except ConfigError as exc:
            return ValidateResponse(valid=False, kind="pipeline", violations=exc.violations)
        return ValidateResponse(valid=True, kind="pipeline")
    try:
        grid = validate_grid(req.grid, req.base_dir)
    except ConfigError as exc:
        return ValidateResponse(valid=False, kind="grid", violations=exc.violations)
    return ValidateResponse(valid=True, kind="grid", variants=grid.size)


def handle_run(req: RunRequest) -> RunResponse:
    cfg = validate_config(_with_seed(req.config, req.seed), req.base_dir)
    report = run_pipeline(cfg, req.out_dir)
    return RunResponse(
        run_id=run_id_for(cfg),
        label=cfg.label,
        out_dir=req.out_dir or cfg.report_dir,
        report=report.to_json_dict(),
    )


def handle_grid(req: GridRequest, echo=None) -> GridResponse:
    grid = validate_grid(_with_grid_seed(req.grid, req.seed), req.base_dir)
    table = run_experiment_grid(grid, req.out_dir, workers=req.workers, echo=echo)
    return GridResponse(
        variants=grid.size,
        labels=[label for label, _ in grid.variants],
        out_dir=req.out_dir or grid.variants[0][1].report_dir,
        table=table.to_json_dict(),
    )


def handle_importance(req: ImportanceRequest) -> ImportanceResponse:
    cfg = validate_config(_with_seed(req.config, req.seed), req.base_dir)
    triples = importance(cfg, req.top, req.out_dir)
    return ImportanceResponse(
        run_id=run_id_for(cfg),
        label=cfg.label,
        importance=[
            ImportanceEntry(feature=f, cover=c, split_count=s) for f, c, s in triples
        ],
    )


app = FastAPI(title="enrich", version=SERVICE_VERSION)


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse()


@app.post("/validate", response_model=ValidateResponse)
def validate(req: ValidateRequest) -> ValidateResponse:
    try:
        return handle_validate(req)
    except ConfigError as exc:
        raise HTTPException(status_code=422, detail=exc.violations) from None


@app.post("/runs", response_model=RunResponse)
def runs(req: RunRequest) -> RunResponse:
    try:
        return handle_run(req)
    except ConfigError as exc:
        raise HTTPException(status_code=422, detail=exc.violations) from None
    except DataError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from None


@app.post("/grids", response_model=GridResponse)
def grids(req: GridRequest) -> GridResponse:
    try:
        return handle_grid(req)
    except ConfigError as exc:
        raise HTTPException(status_code=422, detail=exc.violations) from None
    except DataError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from None


@app.post("/importance", response_model=ImportanceResponse)
def importance_route(req: ImportanceRequest) -> ImportanceResponse:
    try:
        return handle_importance(req)
    except ConfigError as exc:
        raise HTTPException(status_code=422, detail=exc.violations) from None
    except DataError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from None
