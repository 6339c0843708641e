"""Synthetic credit-style fixture: dataset, schema sidecar and linear model.

The fixture exists so the whole pipeline can run hermetically: a 300-row
loan-application table over three continuous and three categorical features,
plus a single-layer softmax model whose score leans heavily on income and
savings. Age is marked non-actionable, so Then conditions may mention it only
by leaving it unchanged.

The shipped copies under fixtures_data/ are the reference artifacts; the
generator here reproduces them and lets tests or the CLI materialize fresh
copies anywhere.
"""

from __future__ import annotations

import csv
import shutil
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .model import MlpWeights, save_model
from .schema import (
    Categorical,
    Continuous,
    Feature,
    FeatureEncoding,
    FeatureSchema,
    InputEncoding,
    SchemaSidecar,
    save_sidecar,
)

EMPLOYMENT = ("unemployed", "part-time", "full-time", "self-employed")
HOUSING = ("rent", "own", "free")
PURPOSE = ("car", "education", "furniture", "repairs", "business")

DATASET_FILE = "fixture_credit.csv"
SCHEMA_FILE = "fixture_credit.schema.yaml"
MODEL_FILE = "fixture_credit.weights.json"

# support threshold used by the shipped presets; tuned so the fixture ground
# set clears 20000 triples and its evaluated-prefix accuracy converges well
# inside the first fifth of evaluations
FIXTURE_P = 0.04


def credit_schema() -> FeatureSchema:
    return FeatureSchema(
        (
            Feature("income", Continuous(10)),
            Feature("savings", Continuous(10)),
            Feature("age", Continuous(10), actionable=False),
            Feature("employment", Categorical(EMPLOYMENT)),
            Feature("housing", Categorical(HOUSING)),
            Feature("purpose", Categorical(PURPOSE)),
        )
    )


def credit_encoding() -> InputEncoding:
    return InputEncoding(
        (
            FeatureEncoding("income", "raw", (0,)),
            FeatureEncoding("savings", "raw", (1,)),
            FeatureEncoding("age", "raw", (2,)),
            FeatureEncoding("employment", "onehot", (3, 4, 5, 6)),
            FeatureEncoding("housing", "onehot", (7, 8, 9)),
            FeatureEncoding("purpose", "onehot", (10, 11, 12, 13, 14)),
        )
    )


def credit_weights() -> MlpWeights:
    """One dense layer, class-1 logit is the score, class-0 logit stays 0."""
    score = np.array(
        [0.08, 0.10, 0.01]  # income, savings, age
        + [-1.0, -0.2, 0.6, 0.2]  # employment
        + [-0.2, 0.3, 0.0]  # housing
        + [0.0, 0.1, -0.1, -0.05, 0.15]  # purpose
    )
    w = np.vstack([np.zeros_like(score), score])
    b = np.array([0.0, -6.6])
    return MlpWeights(((w, b),), favorable_class=1, encoding=credit_encoding())


def _pick(r: float, labels, cumulative) -> str:
    for label, edge in zip(labels, cumulative):
        if r < edge:
            return label
    return labels[-1]


def make_credit_rows(n_rows: int = 300, seed: int = 7) -> list[tuple]:
    rng = np.random.default_rng(seed)
    rows = []
    for _ in range(n_rows):
        income = round(10.0 + 90.0 * rng.random(), 1)
        savings = round(50.0 * rng.random() ** 2, 1)
        age = int(18 + rng.random() * 60)
        employment = _pick(rng.random(), EMPLOYMENT, (0.25, 0.5, 0.9))
        housing = _pick(rng.random(), HOUSING, (0.5, 0.85))
        purpose = PURPOSE[int(rng.random() * 5)]
        rows.append((income, savings, age, employment, housing, purpose))
    return rows


@dataclass(frozen=True)
class FixturePaths:
    dataset: Path
    schema: Path
    model: Path


def write_fixture(outdir: str | Path, n_rows: int = 300, seed: int = 7) -> FixturePaths:
    """Generate the fixture triple of files into a directory."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = FixturePaths(
        outdir / DATASET_FILE, outdir / SCHEMA_FILE, outdir / MODEL_FILE
    )
    schema = credit_schema()
    with open(paths.dataset, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(schema.names())
        writer.writerows(make_credit_rows(n_rows, seed))
    save_sidecar(paths.schema, SchemaSidecar(schema, credit_encoding()))
    save_model(paths.model, credit_weights())
    return paths


def shipped_fixture() -> FixturePaths:
    """Paths of the fixture files distributed with the package."""
    root = resources.files("recourse_rules") / "fixtures_data"
    return FixturePaths(
        Path(str(root / DATASET_FILE)),
        Path(str(root / SCHEMA_FILE)),
        Path(str(root / MODEL_FILE)),
    )


def copy_fixture(outdir: str | Path) -> FixturePaths:
    """Copy the shipped fixture files into a directory (CLI convenience)."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    src = shipped_fixture()
    out = FixturePaths(
        outdir / DATASET_FILE, outdir / SCHEMA_FILE, outdir / MODEL_FILE
    )
    shutil.copyfile(src.dataset, out.dataset)
    shutil.copyfile(src.schema, out.schema)
    shutil.copyfile(src.model, out.model)
    return out
