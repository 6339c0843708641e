"""End-to-end orchestration: config validation, stage sequencing, artifacts.

A run loads the dataset/schema/model, generates the ground set (Stage 1),
evaluates it with optional V-Reduction (Stage 2), optionally V-Selects, and
maximizes under the interpretability constraints (Stage 3). Artifacts land in
the output directory:

  trace.csv               time-stamped accuracy/objective rows, stages 2 and 3
  groundset_summary.json  candidate pool sizes and iteration counts
  rules.txt               the final recourse set, human-readable
  rules.json              the same, structured
  report.json             per-stage wall times and headline numbers
  groundset.json          full triple dump (only with dump_ground_set)

The rules files carry no timestamps, so an identical config and seed yields
byte-identical rules. Config problems raise ConfigError before any stage
runs; mid-run errors raise StageFailure after flagging the partial artifacts
in report.json.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import os
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import yaml

from .dataset import BinningSpec, discretize, fit_bins, load_dataset, value_label
from .errors import ConfigError, EngineError, IncompatibleRuns, StageFailure
from .schema import Categorical, FeatureSchema, load_sidecar
from .evaluation import (
    EvaluatedTriple,
    SetMetrics,
    SimplifiedObjective,
    TraceRow,
    acc_fraction,
    v_reduce,
)
from .generation import (
    CandidateSets,
    generate_original,
    generate_rl_reduced,
    generate_then,
    rl_reduce,
    save_ground_set,
    user_subgroups,
)
from .itemsets import apriori
from .model import affected_set, load_model
from .optimizer import OptimizerConfig, RecourseSet, early_gate, maximize, v_select

METHODS = ("original", "rl-reduction", "then-generation")


@dataclass(frozen=True)
class RunConfig:
    dataset_file: str
    schema_file: str
    model_file: str
    out_dir: str
    p: float = 0.1
    method: str = "original"
    q: float | None = None
    r: int | None = None  # V-Reduction, keep every evaluated triple
    r_prime: int | None = None  # V-Reduction, keep only accuracy gains
    s: int | None = None  # V-Selection
    eps1: int = 20
    eps2: int = 7
    eps3: int = 10
    lam: float = 0.0
    seed: int = 0
    budget_seconds: float | None = None
    target_acc: float | None = None  # skip Stage 3 when acc(V) falls short
    sd_file: str | None = None
    cost_table: str | None = None
    workers: int | None = None  # None = one per core
    dump_ground_set: bool = False

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class RunReport:
    config: dict
    stage_seconds: dict
    sd_size: int
    rl_size: int
    alpha: float
    ground_set_size: int
    iteration_count: int
    affected_count: int
    evaluated_count: int
    kept_count: int
    acc_v: float
    acc_v_scope: str  # "full" | "prefix"
    acc_r: float
    cost_r: float | None
    termination: str
    out_dir: str


def validate_config(config: RunConfig) -> None:
    """Static field checks; threshold floors are re-checked against the dataset."""
    errors: dict[str, str] = {}
    for name in ("dataset_file", "schema_file", "model_file"):
        path = getattr(config, name)
        if not path:
            errors[name] = "required"
        elif not Path(path).is_file():
            errors[name] = f"file not found: {path}"
    if not (0 < config.p <= 1):
        errors["p"] = f"support threshold must be in (0, 1], got {config.p}"
    if config.method not in METHODS:
        errors["method"] = f"unknown method {config.method!r}; expected one of {METHODS}"
    if config.method == "then-generation":
        if config.q is None:
            errors["q"] = "then-generation requires a second-pass threshold q"
        elif not (0 < config.q <= 1):
            errors["q"] = f"q must be in (0, 1], got {config.q}"
    elif config.q is not None:
        errors["q"] = "q only applies to method=then-generation"
    if config.r is not None and config.r_prime is not None:
        errors["r"] = "set at most one of r and r_prime"
    for name in ("r", "r_prime", "s"):
        value = getattr(config, name)
        if value is not None and value < 1:
            errors[name] = f"must be >= 1, got {value}"
    if config.eps1 < 1:
        errors["eps1"] = f"must be >= 1, got {config.eps1}"
    if config.eps2 < 2:
        errors["eps2"] = f"width limit must allow one outer and one inner item, got {config.eps2}"
    if config.eps3 < 1:
        errors["eps3"] = f"must be >= 1, got {config.eps3}"
    if config.lam < 0:
        errors["lam"] = f"must be non-negative, got {config.lam}"
    if config.budget_seconds is not None and config.budget_seconds <= 0:
        errors["budget_seconds"] = f"must be positive, got {config.budget_seconds}"
    if config.target_acc is not None and not (0 <= config.target_acc <= 100):
        errors["target_acc"] = f"must be a percentage, got {config.target_acc}"
    if config.workers is not None and config.workers < 1:
        errors["workers"] = f"must be >= 1, got {config.workers}"
    if config.sd_file is not None and not Path(config.sd_file).is_file():
        errors["sd_file"] = f"file not found: {config.sd_file}"
    if config.cost_table is not None and not Path(config.cost_table).is_file():
        errors["cost_table"] = f"file not found: {config.cost_table}"
    if not config.out_dir:
        errors["out_dir"] = "required"
    if errors:
        raise ConfigError(errors)


def _load_cost_table(path: str, schema: FeatureSchema) -> dict[int, float]:
    with open(path, "r", encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict):
        raise ConfigError({"cost_table": "must be a mapping of feature name to weight"})
    table = {}
    for name, weight in doc.items():
        if name not in schema.names():
            raise ConfigError({"cost_table": f"unknown feature {name!r}"})
        try:
            w = float(weight)
        except (TypeError, ValueError):
            raise ConfigError({"cost_table": f"weight for {name!r} is not a number"}) from None
        if w < 0:
            raise ConfigError({"cost_table": f"weight for {name!r} must be non-negative"})
        table[schema.index_of(name)] = w
    return table


def _load_sd_file(path: str, schema: FeatureSchema):
    with open(path, "r", encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, list) or not all(isinstance(c, dict) for c in doc):
        raise ConfigError({"sd_file": "must be a list of {feature: value} mappings"})
    try:
        return user_subgroups(doc, schema)
    except (ValueError, KeyError) as exc:
        raise ConfigError({"sd_file": str(exc)}) from None


def _itemset_lines(iset, schema: FeatureSchema, binning: BinningSpec, keyword: str) -> list[str]:
    lines = []
    for j, (f, v) in enumerate(iset.items):
        head = keyword if j == 0 else "and " + keyword
        lines.append(f"  {head} {value_label(schema, binning, f, v)}")
    return lines


def _itemset_doc(iset, schema: FeatureSchema) -> dict:
    """Category labels for categorical items, bin indices otherwise.

    Matches the subgroup-file input format, so rules.json conditions can be
    fed back in as sd_file entries; the rendered intervals live in rules.txt.
    """
    out = {}
    for f, v in iset.items:
        feat = schema.features[f]
        out[feat.name] = feat.kind.values[v] if isinstance(feat.kind, Categorical) else int(v)
    return out


def _write_rules(
    out: Path,
    result: RecourseSet,
    config: RunConfig,
    schema: FeatureSchema,
    binning: BinningSpec,
    n_aff: int,
) -> None:
    cfg = config.as_dict()
    for key in ("out_dir", "workers", "dump_ground_set"):  # result-irrelevant
        cfg.pop(key)
    header = (
        f"method={config.method} p={config.p} q={config.q} lambda={config.lam} "
        f"eps=({config.eps1},{config.eps2},{config.eps3}) seed={config.seed}"
    )
    cost = "n/a" if result.metrics.cost is None else f"{result.metrics.cost:.4f}"
    lines = [
        f"recourse rule set ({header})",
        f"affected individuals: {n_aff}",
        f"set accuracy: {result.metrics.acc:.1f}%  average cost: {cost}  "
        f"termination: {result.termination}",
        "",
    ]
    for i, ev in enumerate(result.triples, 1):
        lines.append(
            f"rule {i}  [covers {ev.covered_count}, corrects {ev.corrected_count}, "
            f"cost {ev.recourse_cost:g}]"
        )
        lines.extend(_itemset_lines(ev.triple.outer, schema, binning, "for"))
        lines.extend(_itemset_lines(ev.triple.inner, schema, binning, "if"))
        lines.extend(_itemset_lines(ev.triple.then, schema, binning, "then"))
        lines.append("")
    (out / "rules.txt").write_text("\n".join(lines), encoding="utf-8")

    doc = {
        "config": cfg,
        "metrics": {"acc_percent": result.metrics.acc, "cost": result.metrics.cost},
        "termination": result.termination,
        "rules": [
            {
                "gen_index": ev.triple.gen_index,
                "outer": _itemset_doc(ev.triple.outer, schema),
                "inner": _itemset_doc(ev.triple.inner, schema),
                "then": _itemset_doc(ev.triple.then, schema),
                "covered": ev.covered_count,
                "corrected": ev.corrected_count,
                "cost": ev.recourse_cost,
            }
            for ev in result.triples
        ],
    }
    with open(out / "rules.json", "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)


def _write_trace(out: Path, rows: list[TraceRow]) -> None:
    with open(out / "trace.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["wall_seconds", "stage", "evaluated", "kept", "acc_percent", "cost", "objective"]
        )
        for r in rows:
            writer.writerow(
                [
                    f"{r.wall_seconds:.6f}",
                    r.stage,
                    "" if r.evaluated is None else r.evaluated,
                    "" if r.kept is None else r.kept,
                    "" if r.acc_percent is None else f"{r.acc_percent:.6f}",
                    "" if r.cost is None else f"{r.cost:.6f}",
                    "" if r.objective is None else f"{r.objective:.6f}",
                ]
            )


def _write_json(path: Path, doc: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)


def run(config: RunConfig) -> RunReport:
    validate_config(config)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    clock = lambda: time.perf_counter() - start
    stage_seconds: dict[str, float] = {}
    report_doc: dict = {"config": config.as_dict(), "status": "running"}

    def fail(stage: str, exc: Exception):
        report_doc["status"] = "failed"
        report_doc["failed_stage"] = stage
        report_doc["error"] = str(exc)
        report_doc["stage_seconds"] = stage_seconds
        _write_json(out / "report.json", report_doc)
        return StageFailure(stage, exc)

    # --- load ---
    t0 = clock()
    try:
        sidecar = load_sidecar(config.schema_file)
        schema = sidecar.schema
        raw = load_dataset(config.dataset_file, schema)
        binning = fit_bins(raw, schema)
        disc = discretize(raw, binning, schema)
        oracle = load_model(config.model_file, schema)
        x_aff = affected_set(oracle, raw)
        cost_weights = (
            _load_cost_table(config.cost_table, schema) if config.cost_table else None
        )
        user_sd = _load_sd_file(config.sd_file, schema) if config.sd_file else None
    except ConfigError:
        raise
    except EngineError as exc:
        raise fail("load", exc) from exc
    stage_seconds["load"] = clock() - t0

    floor = Fraction(1, raw.row_count)
    floor_errors = {}
    if Fraction(config.p) < floor:
        floor_errors["p"] = f"below the observable floor 1/{raw.row_count}"
    if config.q is not None and Fraction(config.q) < floor:
        floor_errors["q"] = f"below the observable floor 1/{raw.row_count}"
    if floor_errors:
        raise ConfigError(floor_errors)

    # --- stage 1: ground set generation ---
    t0 = clock()
    try:
        pool = apriori(disc, config.p, max_length=config.eps2 - 1)
        cands = (
            CandidateSets(user_sd, tuple(pool)) if user_sd else CandidateSets.shared(pool)
        )
        actionable = schema.actionable_mask()
        if config.method == "original":
            ground = generate_original(cands, config.eps2, actionable)
        elif config.method == "rl-reduction":
            ground = generate_rl_reduced(cands, config.eps2, actionable)
        else:
            ground = generate_then(cands, disc, config.q, config.eps2, actionable)
    except EngineError as exc:
        raise fail("stage1", exc) from exc
    stage_seconds["stage1"] = clock() - t0

    # alpha is the candidate-pool survival ratio under RL-Reduction
    if config.method == "rl-reduction" and cands.rl:
        alpha = len(rl_reduce(cands.rl)) / len(cands.rl)
    else:
        alpha = 1.0
    summary = {
        "method": ground.method,
        "q": ground.q,
        "sd_size": len(cands.sd),
        "rl_size": len(cands.rl),
        "alpha": alpha,
        "ground_set_size": len(ground),
        "iteration_count": ground.iteration_count,
        "affected_count": len(x_aff),
    }
    _write_json(out / "groundset_summary.json", summary)
    if config.dump_ground_set:
        save_ground_set(out / "groundset.json", ground, schema)

    # --- stage 2: evaluation / V-Reduction ---
    t0 = clock()
    trace: list[TraceRow] = []
    workers = config.workers or os.cpu_count() or 1
    try:
        if config.r is not None:
            budget, mode = config.r, "add-all"
        elif config.r_prime is not None:
            budget, mode = config.r_prime, "acc-gain"
        else:
            budget, mode = max(1, len(ground)), "add-all"
        if len(ground) == 0:
            reduced = None
            kept: list[EvaluatedTriple] = []
            acc_v_exact = Fraction(0)
        else:
            reduced = v_reduce(
                ground,
                budget,
                mode,
                x_aff,
                disc,
                oracle,
                binning,
                cost_weights=cost_weights,
                workers=workers,
                clock=clock,
            )
            trace.extend(reduced.trace)
            kept = reduced.kept
            acc_v_exact = acc_fraction(reduced.evaluated, len(x_aff))
    except EngineError as exc:
        raise fail("stage2", exc) from exc
    stage_seconds["stage2"] = clock() - t0
    acc_v_scope = "full" if reduced is None or reduced.evaluated_count >= len(ground) else "prefix"

    # --- stage 3: selection + maximization ---
    t0 = clock()
    try:
        selected = v_select(kept, config.s) if config.s is not None else list(kept)
        gated = config.target_acc is not None and not early_gate(
            float(acc_v_exact), config.target_acc
        )
        if gated:
            result = RecourseSet([], SetMetrics(0.0, None), 0.0, "gated")
        else:
            opt_cfg = OptimizerConfig(
                eps1=config.eps1,
                eps3=config.eps3,
                wall_clock_budget=config.budget_seconds,
                seed=config.seed,
            )
            acc_bound = acc_fraction(selected, len(x_aff))
            result = maximize(
                selected,
                opt_cfg,
                SimplifiedObjective(config.lam),
                acc_bound,
                clock=clock,
                trace=trace,
            )
    except EngineError as exc:
        raise fail("stage3", exc) from exc
    stage_seconds["stage3"] = clock() - t0

    # --- artifacts ---
    _write_trace(out, trace)
    _write_rules(out, result, config, schema, binning, len(x_aff))
    report = RunReport(
        config=config.as_dict(),
        stage_seconds=stage_seconds,
        sd_size=len(cands.sd),
        rl_size=len(cands.rl),
        alpha=alpha,
        ground_set_size=len(ground),
        iteration_count=ground.iteration_count,
        affected_count=len(x_aff),
        evaluated_count=0 if reduced is None else reduced.evaluated_count,
        kept_count=len(kept),
        acc_v=float(acc_v_exact),
        acc_v_scope=acc_v_scope,
        acc_r=result.metrics.acc,
        cost_r=result.metrics.cost,
        termination=result.termination,
        out_dir=str(out),
    )
    report_doc = dataclasses.asdict(report)
    report_doc["status"] = "ok"
    _write_json(out / "report.json", report_doc)
    return report


def compare(configs: list[RunConfig], labels: list[str] | None = None) -> list[dict]:
    """Run each config and merge their traces into one table for plotting.

    All configs must target the same dataset and model; each keeps its own
    output directory. Rows carry the run label in a leading column.
    """
    if len(configs) < 2:
        raise ConfigError({"configs": "compare needs at least two run configs"})
    if labels is None:
        labels = [f"run{i}" for i in range(len(configs))]
    if len(labels) != len(configs):
        raise ConfigError({"labels": "one label per config required"})
    datasets = {Path(c.dataset_file).resolve() for c in configs}
    models = {Path(c.model_file).resolve() for c in configs}
    if len(datasets) > 1 or len(models) > 1:
        raise IncompatibleRuns(
            "compare runs must share one dataset and one model, got "
            f"{sorted(str(d) for d in datasets)} / {sorted(str(m) for m in models)}"
        )
    merged: list[dict] = []
    for label, cfg in zip(labels, configs):
        run(cfg)
        with open(Path(cfg.out_dir) / "trace.csv", "r", encoding="utf-8", newline="") as fh:
            for row in csv.DictReader(fh):
                merged.append({"run": label, **row})
    return merged
