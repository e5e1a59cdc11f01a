"""HTTP facade over the experiment runner.

The service is stateless: every request carries a full experiment config and
the response carries the rendered artifact files, so any number of clients
can share one instance. Run it with

    uvicorn tiadcsim.service:app
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__
from .errors import TiAdcError
from .experiments import ConfigSchemaError, run, serialize_config, validate_config

app = FastAPI(title="tiadcsim", version=__version__)


class ValidateRequest(BaseModel):
    config: dict = Field(default_factory=dict)


class ValidateResponse(BaseModel):
    config: dict


class RunRequest(BaseModel):
    config: dict = Field(default_factory=dict)
    seed: int | None = Field(None, ge=0, lt=1 << 64, description="overrides master_seed")


class RunResponse(BaseModel):
    scenario: str
    files: dict[str, str]
    summary: dict


def _schema_detail(exc: ConfigSchemaError) -> dict:
    return {"errors": [{"path": path, "message": msg} for path, msg in exc.errors]}


@app.get("/healthz")
def healthz() -> dict:
    return {"status": "ok", "version": __version__}


@app.post("/v1/validate", response_model=ValidateResponse)
def validate(request: ValidateRequest) -> ValidateResponse:
    try:
        cfg = validate_config(request.config)
    except ConfigSchemaError as exc:
        raise HTTPException(status_code=400, detail=_schema_detail(exc)) from exc
    return ValidateResponse(config=serialize_config(cfg))


@app.post("/v1/run", response_model=RunResponse)
def run_experiment(request: RunRequest) -> RunResponse:
    raw = dict(request.config)
    if request.seed is not None:
        raw["master_seed"] = request.seed
    try:
        cfg = validate_config(raw)
    except ConfigSchemaError as exc:
        raise HTTPException(status_code=400, detail=_schema_detail(exc)) from exc
    try:
        result = run(cfg)
    except TiAdcError as exc:
        raise HTTPException(status_code=500, detail={"error": str(exc)}) from exc
    return RunResponse(scenario=result.scenario, files=result.files, summary=result.summary)
