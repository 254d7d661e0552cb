"""Command-line client for the pipeline service.

Commands execute in-process by default; pass --server to send the same
request to a running HTTP service instead. Exit codes: 0 success, 2 config
validation failure, 1 runtime failure.
"""
from __future__ import annotations

import json
import os
import sys

import click

from .config import ConfigError
from .frame import DataError
from .service import (
    GridRequest,
    ImportanceRequest,
    RunRequest,
    ValidateRequest,
    handle_grid,
    handle_importance,
    handle_run,
    handle_validate,
)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2


def _fail_config(violations: list[str]) -> None:
    click.echo("config validation failed:", err=True)
    for v in violations:
        click.echo(f"  {v}", err=True)
    sys.exit(EXIT_CONFIG)


def _fail_runtime(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(EXIT_RUNTIME)


def _load_doc(path: str) -> tuple[dict, str]:
    base_dir = os.path.dirname(os.path.abspath(path))
    if not os.path.isfile(path):
        _fail_config([f"$: config file not found: {path}"])
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            _fail_config([f"$: not valid JSON: {exc}"])
    if not isinstance(doc, dict):
        _fail_config(["$: config must be a JSON object"])
    return doc, base_dir


def _post(server: str, path: str, payload: dict) -> dict:
    import httpx

    try:
        response = httpx.post(
            server.rstrip("/") + path, json=payload, timeout=None
        )
    except httpx.HTTPError as exc:
        _fail_runtime(f"cannot reach server: {exc}")
    if response.status_code == 422:
        detail = response.json().get("detail", [])
        if isinstance(detail, str):
            detail = [detail]
        _fail_config([str(d) for d in detail])
    if response.status_code != 200:
        try:
            detail = response.json().get("detail", response.text)
        except ValueError:
            detail = response.text
        _fail_runtime(f"server returned {response.status_code}: {detail}")
    return response.json()


def _echo_json(doc: dict) -> None:
    click.echo(json.dumps(doc, indent=2, sort_keys=True))


@click.group()
def main() -> None:
    """Data enrichment pipelines for rare-event detection and prediction."""


@main.command()
@click.argument("config_path", type=click.Path())
@click.option("--seed", type=int, default=None, help="Override the global seed.")
@click.option("--out", "out_dir", type=click.Path(), default=None, help="Report directory.")
@click.option("--server", default=None, help="Base URL of a running service.")
def run(config_path: str, seed: int | None, out_dir: str | None, server: str | None) -> None:
    """Run one pipeline from a JSON config file."""
    doc, base_dir = _load_doc(config_path)
    req = RunRequest(config=doc, seed=seed, out_dir=out_dir, base_dir=base_dir)
    if server:
        _echo_json(_post(server, "/runs", req.model_dump()))
        return
    try:
        resp = handle_run(req)
    except ConfigError as exc:
        _fail_config(exc.violations)
    except DataError as exc:
        _fail_runtime(str(exc))
    _echo_json(resp.model_dump())


@main.command()
@click.argument("grid_path", type=click.Path())
@click.option("--seed", type=int, default=None, help="Override the global seed.")
@click.option("--out", "out_dir", type=click.Path(), default=None, help="Report directory.")
@click.option("--workers", type=int, default=1, help="Parallel variant workers.")
@click.option("--server", default=None, help="Base URL of a running service.")
def grid(
    grid_path: str,
    seed: int | None,
    out_dir: str | None,
    workers: int,
    server: str | None,
) -> None:
    """Run every variant of an experiment grid and write the comparison table."""
    doc, base_dir = _load_doc(grid_path)
    if server:
        check = _post(
            server,
            "/validate",
            ValidateRequest(grid=doc, base_dir=base_dir).model_dump(),
        )
        if not check.get("valid", False):
            _fail_config([str(v) for v in check.get("violations", [])])
        click.echo(f"grid: {check.get('variants')} variants", err=True)
        req = GridRequest(
            grid=doc, seed=seed, out_dir=out_dir, workers=workers, base_dir=base_dir
        )
        _echo_json(_post(server, "/grids", req.model_dump()))
        return
    req = GridRequest(
        grid=doc, seed=seed, out_dir=out_dir, workers=workers, base_dir=base_dir
    )
    try:
        check = handle_validate(ValidateRequest(grid=doc, base_dir=base_dir))
        if not check.valid:
            _fail_config(check.violations)
        resp = handle_grid(req, echo=lambda msg: click.echo(msg, err=True))
    except ConfigError as exc:
        _fail_config(exc.violations)
    except DataError as exc:
        _fail_runtime(str(exc))
    _echo_json(resp.model_dump())


@main.command()
@click.argument("config_path", type=click.Path())
@click.option("--top", type=int, default=20, help="How many features to rank.")
@click.option("--seed", type=int, default=None, help="Override the global seed.")
@click.option("--out", "out_dir", type=click.Path(), default=None, help="Report directory.")
@click.option("--server", default=None, help="Base URL of a running service.")
def importance(
    config_path: str,
    top: int,
    seed: int | None,
    out_dir: str | None,
    server: str | None,
) -> None:
    """Train per config and rank features by total cover."""
    doc, base_dir = _load_doc(config_path)
    req = ImportanceRequest(
        config=doc, top=top, seed=seed, out_dir=out_dir, base_dir=base_dir
    )
    if server:
        _echo_json(_post(server, "/importance", req.model_dump()))
        return
    try:
        resp = handle_importance(req)
    except ConfigError as exc:
        _fail_config(exc.violations)
    except DataError as exc:
        _fail_runtime(str(exc))
    _echo_json(resp.model_dump())


@main.command()
@click.argument("config_path", type=click.Path())
@click.option("--grid", "is_grid", is_flag=True, help="Validate an experiment grid.")
@click.option("--server", default=None, help="Base URL of a running service.")
def validate(config_path: str, is_grid: bool, server: str | None) -> None:
    """Check a config file and report every violation."""
    doc, base_dir = _load_doc(config_path)
    req = (
        ValidateRequest(grid=doc, base_dir=base_dir)
        if is_grid
        else ValidateRequest(config=doc, base_dir=base_dir)
    )
    if server:
        resp_doc = _post(server, "/validate", req.model_dump())
        if not resp_doc.get("valid", False):
            _fail_config([str(v) for v in resp_doc.get("violations", [])])
        _echo_json(resp_doc)
        return
    try:
        resp = handle_validate(req)
    except ConfigError as exc:
        _fail_config(exc.violations)
    if not resp.valid:
        _fail_config(resp.violations)
    _echo_json(resp.model_dump())


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
def serve(host: str, port: int) -> None:
    """Start the HTTP service (requires the 'serve' extra)."""
    try:
        import uvicorn
    except ImportError:
        _fail_runtime("uvicorn is not installed; install the 'serve' extra")
    from .service import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
