"""Request/response schemas for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field

from ..pipeline import RunConfig


class RunRequest(BaseModel):
    """Mirror of the engine's run configuration."""

    dataset_file: str
    schema_file: str
    model_file: str
    out_dir: str
    p: float = 0.1
    method: str = "original"
    q: float | None = None
    r: int | None = None
    r_prime: int | None = None
    s: int | None = None
    eps1: int = 20
    eps2: int = 7
    eps3: int = 10
    lam: float = Field(default=0.0, alias="lambda")
    seed: int = 0
    budget_seconds: float | None = None
    target_acc: float | None = None
    sd_file: str | None = None
    cost_table: str | None = None
    workers: int | None = None
    dump_ground_set: bool = False

    model_config = ConfigDict(protected_namespaces=(), populate_by_name=True)

    def to_config(self) -> RunConfig:
        return RunConfig(**self.model_dump(by_alias=False))


class RunReportModel(BaseModel):
    model_config = ConfigDict(protected_namespaces=())

    run_id: str
    status: str
    config: dict
    stage_seconds: dict[str, float]
    sd_size: int
    rl_size: int
    alpha: float
    ground_set_size: int
    iteration_count: int
    affected_count: int
    evaluated_count: int
    kept_count: int
    acc_v: float
    acc_v_scope: str
    acc_r: float
    cost_r: float | None
    termination: str
    out_dir: str


class RunSummary(BaseModel):
    run_id: str
    status: str
    method: str
    acc_r: float | None = None
    termination: str | None = None
    out_dir: str


class CompareRequest(BaseModel):
    runs: list[RunRequest]
    labels: list[str] | None = None


class MergedTraceRow(BaseModel):
    run: str
    wall_seconds: float
    stage: str
    evaluated: int | None = None
    kept: int | None = None
    acc_percent: float | None = None
    cost: float | None = None
    objective: float | None = None


class CompareResponse(BaseModel):
    rows: list[MergedTraceRow]


class HealthResponse(BaseModel):
    status: str
