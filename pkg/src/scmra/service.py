"""HTTP facade over the experiment commands.

Each endpoint takes a raw config object plus optional overrides and a seed,
runs the command, and returns the manifest together with every artifact as
named text content. Worker parallelism for Monte Carlo sweeps is selected by
the SCMRA_WORKERS environment variable on the serving side (default 1).
"""

from __future__ import annotations

import os
from typing import Any

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__, runner
from .config import ConfigError, apply_overrides, config_from_dict, parse_override


class RunRequest(BaseModel):
    """One experiment invocation."""

    config: dict[str, Any] = Field(default_factory=dict)
    overrides: list[str] = Field(default_factory=list,
                                 description="key=value pairs applied on top of config")
    seed: int | None = Field(default=None, description="overrides config seed")


class FileArtifact(BaseModel):
    name: str
    content: str


class RunResponse(BaseModel):
    command: str
    manifest: dict[str, Any]
    manifest_sha256: str
    files: list[FileArtifact]


class HealthResponse(BaseModel):
    status: str
    version: str


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("SCMRA_WORKERS", "1")))
    except ValueError:
        return 1


def _resolve_config(request: RunRequest):
    raw = dict(request.config)
    if request.overrides:
        pairs = dict(parse_override(text) for text in request.overrides)
        raw = apply_overrides(raw, pairs)
    if request.seed is not None:
        raw["seed"] = request.seed
    return config_from_dict(raw)


def _run(command: str, request: RunRequest) -> RunResponse:
    try:
        cfg = _resolve_config(request)
    except ConfigError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    try:
        result = runner.execute(command, cfg, workers=_workers())
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    return RunResponse(
        command=result.command, manifest=result.manifest,
        manifest_sha256=result.manifest_sha256,
        files=[FileArtifact(name=n, content=c)
               for n, c in sorted(result.files.items())])


def create_app() -> FastAPI:
    app = FastAPI(title="scmra", version=__version__,
                  description="Grant-free metasurface random-access simulator")

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/analyze", response_model=RunResponse)
    def analyze(request: RunRequest) -> RunResponse:
        return _run("analyze", request)

    @app.post("/linkbudget", response_model=RunResponse)
    def linkbudget(request: RunRequest) -> RunResponse:
        return _run("linkbudget", request)

    @app.post("/simulate", response_model=RunResponse)
    def simulate(request: RunRequest) -> RunResponse:
        return _run("simulate", request)

    @app.post("/sweep", response_model=RunResponse)
    def sweep(request: RunRequest) -> RunResponse:
        return _run("sweep", request)

    return app


app = create_app()
