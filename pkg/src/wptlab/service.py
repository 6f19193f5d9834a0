"""HTTP front end for the study runners.

Exposes the same runners the command line uses, over three routes:

  * ``POST /v1/run``       execute a study, return rows inline as JSON
  * ``POST /v1/validate``  check a config without running anything
  * ``GET  /v1/health``    liveness and version probe

The service never writes files; clients that want the CSV and manifest
on disk (the command line in ``--server`` mode, for instance) re-render
the returned rows locally, which yields byte-identical output because
row values round-trip exactly through JSON.

Config problems and solver failures both map to HTTP 422, with a
``kind`` field in the detail ("config" or "solver") so thin clients can
translate them back into distinct exit codes.
"""

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__, studies
from .errors import ConfigError, WptLabError

app = FastAPI(title="wptlab", version=__version__)


class RunRequest(BaseModel):
    config: dict
    jobs: int = Field(default=1, ge=1, le=64)


class RunResponse(BaseModel):
    study: str
    seed: int
    fieldnames: list[str]
    rows: list[dict]
    summary: dict
    versions: dict


class ValidateRequest(BaseModel):
    config: dict


class ValidateResponse(BaseModel):
    ok: bool
    diagnostics: list[str]


class HealthResponse(BaseModel):
    status: str
    version: str


def _refuse(kind, exc):
    raise HTTPException(
        status_code=422,
        detail={"kind": kind, "message": f"{type(exc).__name__}: {exc}"},
    )


@app.post("/v1/run", response_model=RunResponse)
def run(request: RunRequest):
    try:
        config = studies.parse_config(request.config)
        fieldnames, rows, summary = studies.execute(config, jobs=request.jobs)
    except ConfigError as exc:
        _refuse("config", exc)
    except WptLabError as exc:
        _refuse("solver", exc)
    return RunResponse(
        study=config.study,
        seed=config.seed,
        fieldnames=fieldnames,
        rows=studies.jsonable(rows),
        summary=studies.jsonable(summary),
        versions=studies._versions(),
    )


@app.post("/v1/validate", response_model=ValidateResponse)
def validate(request: ValidateRequest):
    diagnostics = studies.validate_config(request.config)
    return ValidateResponse(ok=not diagnostics, diagnostics=diagnostics)


@app.get("/v1/health", response_model=HealthResponse)
def health():
    return HealthResponse(status="ok", version=__version__)
