"""FastAPI service exposing the experiments.

POST /experiments/{name} runs one experiment (or "all") on a validated
RunConfig and returns the deterministic summary plus the CSV artifacts
inline; clients (the CLI included) write them to disk.  The compute layer is
pure and stateless, so concurrent requests are safe.

Error mapping: malformed configs are 422 (pydantic) or 400 (semantic
argument errors); domain/solver/consistency failures -- the hard assertions
of the numerics -- are 409 with a structured body, which the CLI converts to
exit code 1.
"""

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import __version__
from .config import RunConfig
from .errors import (ArgumentError, ConfigError, ConsistencyError,
                     DomainError, ShrinkerlabError, SolverError)
from .experiments import EXPERIMENTS, run_experiment

__all__ = ["app", "create_app", "RunRequest", "Artifact", "RunReport"]

EXPERIMENT_NAMES = tuple(EXPERIMENTS) + ("all",)


class RunRequest(BaseModel):
    config: RunConfig = Field(default_factory=RunConfig)


class Artifact(BaseModel):
    path: str
    content: str


class RunReport(BaseModel):
    experiment: str
    summary: dict
    artifacts: list[Artifact]


class HealthReport(BaseModel):
    status: str
    version: str
    experiments: list[str]


def create_app():
    app = FastAPI(
        title="shrinkerlab",
        version=__version__,
        description="Numerical laboratory for self-shrinkers of degree-one "
                    "curvature flows.",
    )

    @app.exception_handler(ShrinkerlabError)
    async def _domain_errors(request: Request, exc: ShrinkerlabError):
        if isinstance(exc, (ConfigError, ArgumentError)):
            status, kind = 400, "usage"
        elif isinstance(exc, (DomainError, SolverError, ConsistencyError)):
            status, kind = 409, "assertion"
        else:
            status, kind = 500, "internal"
        return JSONResponse(
            status_code=status,
            content={"error": {"kind": kind, "type": type(exc).__name__,
                               "message": str(exc)}})

    @app.get("/health", response_model=HealthReport)
    def health():
        return HealthReport(status="ok", version=__version__,
                            experiments=list(EXPERIMENT_NAMES))

    @app.get("/config/defaults", response_model=RunConfig)
    def defaults():
        return RunConfig()

    @app.post("/experiments/{name}", response_model=RunReport)
    def run(name: str, request: RunRequest):
        if name not in EXPERIMENT_NAMES:
            raise ArgumentError(
                f"unknown experiment '{name}'; one of {EXPERIMENT_NAMES}")
        out = run_experiment(name, request.config)
        return RunReport(
            experiment=name,
            summary=out["summary"],
            artifacts=[Artifact(path=p, content=c)
                       for p, c in sorted(out["artifacts"].items())])

    return app


app = create_app()
