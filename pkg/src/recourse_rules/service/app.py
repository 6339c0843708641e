"""HTTP surface over the pipeline.

Runs execute synchronously inside the request (the fixture-scale pipeline
finishes in seconds; long runs should set a wall-clock budget). Completed and
failed runs are kept in an in-memory registry for listing and retrieval;
artifacts live on disk in each run's output directory.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse

from ..errors import ConfigError, IncompatibleRuns, StageFailure
from ..pipeline import compare, run
from .models import (
    CompareRequest,
    CompareResponse,
    HealthResponse,
    MergedTraceRow,
    RunReportModel,
    RunRequest,
    RunSummary,
)


def _typed_row(row: dict) -> MergedTraceRow:
    def opt(key, cast):
        value = row.get(key, "")
        return None if value in ("", None) else cast(value)

    return MergedTraceRow(
        run=row["run"],
        wall_seconds=float(row["wall_seconds"]),
        stage=row["stage"],
        evaluated=opt("evaluated", int),
        kept=opt("kept", int),
        acc_percent=opt("acc_percent", float),
        cost=opt("cost", float),
        objective=opt("objective", float),
    )


def create_app() -> FastAPI:
    app = FastAPI(title="recourse-rules", version="1.0")
    registry: dict[str, RunReportModel] = {}
    app.state.registry = registry

    @app.exception_handler(ConfigError)
    async def config_error(_, exc: ConfigError):
        return JSONResponse(
            status_code=400, content={"detail": str(exc), "errors": exc.errors}
        )

    @app.exception_handler(IncompatibleRuns)
    async def incompatible_runs(_, exc: IncompatibleRuns):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(StageFailure)
    async def stage_failure(_, exc: StageFailure):
        return JSONResponse(
            status_code=500, content={"detail": str(exc), "stage": exc.stage}
        )

    def next_id() -> str:
        return f"run-{len(registry) + 1:04d}"

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(status="ok")

    @app.post("/runs", response_model=RunReportModel)
    def create_run(request: RunRequest):
        run_id = next_id()
        try:
            report = run(request.to_config())
        except StageFailure as exc:
            registry[run_id] = RunReportModel(
                run_id=run_id,
                status=f"failed:{exc.stage}",
                config=request.model_dump(),
                stage_seconds={},
                sd_size=0,
                rl_size=0,
                alpha=0.0,
                ground_set_size=0,
                iteration_count=0,
                affected_count=0,
                evaluated_count=0,
                kept_count=0,
                acc_v=0.0,
                acc_v_scope="full",
                acc_r=0.0,
                cost_r=None,
                termination="failed",
                out_dir=request.out_dir,
            )
            raise
        model = RunReportModel(run_id=run_id, status="ok", **report.__dict__)
        registry[run_id] = model
        return model

    @app.get("/runs", response_model=list[RunSummary])
    def list_runs():
        return [
            RunSummary(
                run_id=m.run_id,
                status=m.status,
                method=str(m.config.get("method", "")),
                acc_r=m.acc_r,
                termination=m.termination,
                out_dir=m.out_dir,
            )
            for m in registry.values()
        ]

    @app.get("/runs/{run_id}", response_model=RunReportModel)
    def get_run(run_id: str):
        if run_id not in registry:
            raise HTTPException(status_code=404, detail=f"unknown run {run_id!r}")
        return registry[run_id]

    @app.post("/compare", response_model=CompareResponse)
    def compare_runs(request: CompareRequest):
        rows = compare([r.to_config() for r in request.runs], request.labels)
        return CompareResponse(rows=[_typed_row(r) for r in rows])

    return app


app = create_app()
