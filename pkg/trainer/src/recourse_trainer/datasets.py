"""Raw credit files to processed CSV + schema sidecar.

Two provider formats are supported. The Statlog German credit file is
space-separated with documented categorical codes and a 1/2 label in the
last column; 17 columns are treated as categorical (the 13 coded ones plus
the four small-integer ordinals) and 3 as continuous. The HELOC file is a
CSV of 23 numeric features with a Good/Bad label, where negative integers
mean missing: rows with every feature missing are dropped, remaining
missing entries take the feature's median, then exact duplicate feature
vectors are dropped (first kept).

Categorical encodings keep catalog order but only observed values, so codes
the provider documents but never uses (e.g. German purpose A47) do not
widen the model input. Everything downstream is deterministic in the
source bytes and the split seed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from recourse_rules.schema import (
    Categorical,
    Continuous,
    Feature,
    FeatureEncoding,
    FeatureSchema,
    InputEncoding,
    SchemaSidecar,
    save_sidecar,
)

from .errors import FormatDrift, MissingSource

# Statlog german.data column order; the trailing 21st field is the label.
GERMAN_COLUMNS = (
    "checking_status",
    "duration",
    "credit_history",
    "purpose",
    "credit_amount",
    "savings",
    "employment",
    "installment_rate",
    "personal_status",
    "other_debtors",
    "residence_since",
    "property",
    "age",
    "other_installments",
    "housing",
    "existing_credits",
    "job",
    "dependents",
    "telephone",
    "foreign_worker",
)

GERMAN_CONTINUOUS = ("duration", "credit_amount", "age")

# full documented code catalogs; values never observed are pruned per-file
GERMAN_CATALOG = {
    "checking_status": ("A11", "A12", "A13", "A14"),
    "credit_history": ("A30", "A31", "A32", "A33", "A34"),
    "purpose": ("A40", "A41", "A42", "A43", "A44", "A45", "A46", "A47", "A48", "A49", "A410"),
    "savings": ("A61", "A62", "A63", "A64", "A65"),
    "employment": ("A71", "A72", "A73", "A74", "A75"),
    "installment_rate": ("1", "2", "3", "4"),
    "personal_status": ("A91", "A92", "A93", "A94", "A95"),
    "other_debtors": ("A101", "A102", "A103"),
    "residence_since": ("1", "2", "3", "4"),
    "property": ("A121", "A122", "A123", "A124"),
    "other_installments": ("A141", "A142", "A143"),
    "housing": ("A151", "A152", "A153"),
    "existing_credits": ("1", "2", "3", "4"),
    "job": ("A171", "A172", "A173", "A174"),
    "dependents": ("1", "2"),
    "telephone": ("A191", "A192"),
    "foreign_worker": ("A201", "A202"),
}

# features an individual cannot change; conditions on them are still allowed
GERMAN_NON_ACTIONABLE = ("age",)

HELOC_LABEL = "RiskPerformance"

SOURCE_NAMES = {
    "german": ("german.data",),
    "heloc": ("heloc_dataset_v1.csv", "heloc.csv"),
}


@dataclass
class LoadedTable:
    """Parsed rows in provider order, labels mapped to 1 = favorable."""

    feature_names: tuple[str, ...]
    continuous: tuple[str, ...]
    rows: list[dict]
    labels: np.ndarray


def find_source(dataset: str, data_dir: str | Path) -> Path:
    for name in SOURCE_NAMES[dataset]:
        path = Path(data_dir) / name
        if path.is_file():
            return path
    tried = ", ".join(SOURCE_NAMES[dataset])
    raise MissingSource(f"no {dataset} source under {data_dir} (tried {tried})")


def load_german(path: str | Path) -> LoadedTable:
    rows, labels = [], []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            tokens = line.split()
            if not tokens:
                continue
            if len(tokens) != len(GERMAN_COLUMNS) + 1:
                raise FormatDrift(
                    f"line {lineno}", f"expected {len(GERMAN_COLUMNS) + 1} fields, got {len(tokens)}"
                )
            row = {}
            for name, tok in zip(GERMAN_COLUMNS, tokens):
                if name in GERMAN_CONTINUOUS:
                    try:
                        row[name] = float(tok)
                    except ValueError:
                        raise FormatDrift(name, f"unparsable number {tok!r} (line {lineno})") from None
                elif tok in GERMAN_CATALOG[name]:
                    row[name] = tok
                else:
                    raise FormatDrift(name, f"unknown code {tok!r} (line {lineno})")
            label = tokens[-1]
            if label not in ("1", "2"):
                raise FormatDrift("label", f"expected 1 or 2, got {label!r} (line {lineno})")
            rows.append(row)
            labels.append(1 if label == "1" else 0)
    if not rows:
        raise FormatDrift("file", "no data rows")
    return LoadedTable(GERMAN_COLUMNS, GERMAN_CONTINUOUS, rows, np.array(labels, dtype=np.int64))


def load_heloc(path: str | Path) -> LoadedTable:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        if HELOC_LABEL not in header:
            raise FormatDrift(HELOC_LABEL, "label column missing")
        features = tuple(h for h in header if h != HELOC_LABEL)
        if not features:
            raise FormatDrift("file", "no feature columns")
        rows, labels = [], []
        for lineno, rec in enumerate(reader, start=2):
            label = rec[HELOC_LABEL]
            if label not in ("Good", "Bad"):
                raise FormatDrift(HELOC_LABEL, f"expected Good or Bad, got {label!r} (line {lineno})")
            row = {}
            for name in features:
                try:
                    row[name] = float(rec[name])
                except (TypeError, ValueError):
                    raise FormatDrift(
                        name, f"unparsable number {rec[name]!r} (line {lineno})"
                    ) from None
            rows.append(row)
            labels.append(1 if label == "Good" else 0)
    if not rows:
        raise FormatDrift("file", "no data rows")
    return LoadedTable(features, features, rows, np.array(labels, dtype=np.int64))


def preprocess_heloc(table: LoadedTable) -> LoadedTable:
    """Drop all-missing rows, impute medians, drop duplicate feature vectors."""
    names = table.feature_names
    values = np.array([[row[n] for n in names] for row in table.rows], dtype=float)
    missing = values < 0
    keep = ~missing.all(axis=1)
    values, miss, labels = values[keep], missing[keep], table.labels[keep]
    for j, name in enumerate(names):
        col_missing = miss[:, j]
        if col_missing.all():
            raise FormatDrift(name, "all values missing")
        if col_missing.any():
            values[col_missing, j] = np.median(values[~col_missing, j])
    seen, keep_idx = set(), []
    for i in range(values.shape[0]):
        key = values[i].tobytes()
        if key not in seen:
            seen.add(key)
            keep_idx.append(i)
    values, labels = values[keep_idx], labels[keep_idx]
    rows = [{n: float(v) for n, v in zip(names, vec)} for vec in values]
    return LoadedTable(names, table.continuous, rows, labels)


def load_processed(dataset: str, path: str | Path) -> LoadedTable:
    if dataset == "german":
        return load_german(path)
    if dataset == "heloc":
        return preprocess_heloc(load_heloc(path))
    raise ValueError(f"unknown dataset {dataset!r}")


def build_schema(table: LoadedTable, non_actionable=()) -> tuple[FeatureSchema, InputEncoding]:
    """Schema + model-input layout: observed categories one-hot, continuous raw."""
    features, encodings, col = [], [], 0
    for name in table.feature_names:
        if name in table.continuous:
            features.append(Feature(name, Continuous(), actionable=name not in non_actionable))
            encodings.append(FeatureEncoding(name, "raw", (col,)))
            col += 1
        else:
            observed = {row[name] for row in table.rows}
            values = tuple(v for v in GERMAN_CATALOG[name] if v in observed)
            features.append(Feature(name, Categorical(values), actionable=name not in non_actionable))
            encodings.append(FeatureEncoding(name, "onehot", tuple(range(col, col + len(values)))))
            col += len(values)
    return FeatureSchema(tuple(features)), InputEncoding(tuple(encodings))


def encode_matrix(table: LoadedTable, schema: FeatureSchema, encoding: InputEncoding) -> np.ndarray:
    x = np.zeros((len(table.rows), encoding.total_columns()), dtype=np.float64)
    for i, row in enumerate(table.rows):
        for feat, enc in zip(schema.features, encoding.per_feature):
            if enc.kind == "raw":
                x[i, enc.columns[0]] = row[feat.name]
            else:
                x[i, enc.columns[feat.kind.values.index(row[feat.name])]] = 1.0
    return x


def split_indices(n: int, split: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Shuffled train/test split; indices come back in file order."""
    perm = np.random.default_rng(seed).permutation(n)
    cut = int(split * n)
    return np.sort(perm[:cut]), np.sort(perm[cut:])


def write_csv(path: Path, table: LoadedTable, indices: np.ndarray) -> None:
    def cell(value):
        if isinstance(value, float) and value == int(value):
            return int(value)
        return value

    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(table.feature_names)
        for i in indices:
            row = table.rows[int(i)]
            writer.writerow([cell(row[n]) for n in table.feature_names])


def write_sidecar(path: Path, schema: FeatureSchema, encoding: InputEncoding) -> None:
    save_sidecar(path, SchemaSidecar(schema, encoding))
