"""HTTP service wrapping the experiment runners.

The service is stateless: every request carries a full case description
and the response returns the reports plus the output files as named text
artifacts, so clients (the bundled CLI included) decide where results live.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from . import experiments
from .analytic import ErrorReport
from .config import CaseConfig
from .experiments import ConvergenceRow, ModeDiffRow, MovingReport
from .heat import SolverError

app = FastAPI(title="slabfem service", version="0.1.0")


class ArtifactModel(BaseModel):
    name: str
    content: str


class RunRequest(BaseModel):
    config: CaseConfig


class RunResponse(BaseModel):
    report: ErrorReport | None = None
    moving: MovingReport | None = None
    artifacts: list[ArtifactModel] = []
    warnings: list[str] = []


class ConvergeRequest(BaseModel):
    config: CaseConfig
    dt_list: list[float]
    schemes: list[str] = ["spacetime", "implicit_euler"]


class ConvergeResponse(BaseModel):
    rows: list[ConvergenceRow]
    artifacts: list[ArtifactModel]
    error: str | None = None


class ModeDiffRequest(BaseModel):
    config: CaseConfig
    dt_list: list[float]


class ModeDiffResponse(BaseModel):
    rows: list[ModeDiffRow]
    artifacts: list[ArtifactModel]


def _artifacts(items):
    return [ArtifactModel(name=a.name, content=a.content) for a in items]


@app.get("/health")
def health():
    return {"status": "ok"}


@app.post("/run", response_model=RunResponse)
def run(request: RunRequest):
    try:
        result = experiments.run_case(request.config)
    except SolverError as exc:
        raise HTTPException(500, f"case {request.config.case}: {exc}") from exc
    return RunResponse(report=result.report, moving=result.moving,
                       artifacts=_artifacts(result.artifacts), warnings=result.warnings)


@app.post("/converge", response_model=ConvergeResponse)
def converge(request: ConvergeRequest):
    try:
        result = experiments.run_convergence(request.config, request.dt_list, request.schemes)
    except ValueError as exc:
        raise HTTPException(422, str(exc)) from exc
    return ConvergeResponse(rows=result.rows, artifacts=_artifacts(result.artifacts),
                            error=result.error)


@app.post("/modediff", response_model=ModeDiffResponse)
def modediff(request: ModeDiffRequest):
    try:
        result = experiments.run_mode_diff(request.config, request.dt_list)
    except ValueError as exc:
        raise HTTPException(422, str(exc)) from exc
    except SolverError as exc:
        raise HTTPException(500, f"mode comparison: {exc}") from exc
    return ModeDiffResponse(rows=result.rows, artifacts=_artifacts(result.artifacts))


@app.post("/moving", response_model=RunResponse)
def moving(request: RunRequest):
    config = request.config
    if config.case != "moving":
        config = config.with_overrides(case="moving")
    try:
        result = experiments.run_case(config)
    except SolverError as exc:
        raise HTTPException(500, f"moving case: {exc}") from exc
    return RunResponse(moving=result.moving, artifacts=_artifacts(result.artifacts),
                       warnings=result.warnings)
