"""Dataset ingestion, equal-width discretization and transaction encoding.

Raw rows keep categorical cells as labels and continuous cells as floats so
model inputs can always be reconstructed. Discretization maps every cell to
a small integer (category index or bin index); all itemset mining and rule
matching happens on that integer matrix.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateFeature, MissingColumn, UnknownCategory, UnparsableNumber
from .schema import Categorical, Continuous, FeatureSchema


@dataclass(frozen=True)
class RawDataset:
    """Rows of raw values in file order: labels for categoricals, floats otherwise."""

    schema: FeatureSchema
    rows: tuple[tuple, ...]

    @property
    def row_count(self) -> int:
        return len(self.rows)


@dataclass(frozen=True)
class BinningSpec:
    """Per continuous feature: bin edges and one representative raw value per bin.

    Edges are ascending with edge[0]/edge[-1] the training min/max. Bins are
    left-closed/right-open; the last bin is right-closed. Representatives are
    interval midpoints and are what a Then condition substitutes back into the
    model input.
    """

    edges: dict[int, np.ndarray]
    representatives: dict[int, np.ndarray]

    def __post_init__(self):
        for f, e in self.edges.items():
            if not np.all(np.diff(e) > 0):
                raise ValueError(f"bin edges for feature {f} are not strictly ascending")
            reps = self.representatives[f]
            if len(reps) != len(e) - 1:
                raise ValueError(f"feature {f}: need one representative per bin")
            if not np.all((reps >= e[:-1]) & (reps <= e[1:])):
                raise ValueError(f"feature {f}: representative outside its bin")

    def bin_of(self, feature_index: int, value: float) -> int:
        """Bin containing `value`; out-of-range values clamp to the edge bins."""
        e = self.edges[feature_index]
        # left-closed convention: value on an interior edge e[j] falls in bin j
        j = int(np.searchsorted(e, value, side="right")) - 1
        return min(max(j, 0), len(e) - 2)


@dataclass(frozen=True)
class DiscretizedDataset:
    """Integer-coded rows plus the raw dataset they came from."""

    schema: FeatureSchema
    codes: np.ndarray  # (row_count, n_features) ints
    raw: RawDataset

    @property
    def row_count(self) -> int:
        return int(self.codes.shape[0])


def load_dataset(csv_path: str | Path, schema: FeatureSchema) -> RawDataset:
    """Read a headered CSV into raw rows, validating cells against the schema."""
    with open(csv_path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for f in schema.features:
            if f.name not in header:
                raise MissingColumn(f.name)
        rows = []
        for row_no, record in enumerate(reader):
            row = []
            for f in schema.features:
                cell = record[f.name]
                if isinstance(f.kind, Categorical):
                    if cell not in f.kind.values:
                        raise UnknownCategory(row_no, f.name, cell)
                    row.append(cell)
                else:
                    try:
                        value = float(cell)
                    except (TypeError, ValueError):
                        raise UnparsableNumber(row_no, f.name, str(cell)) from None
                    if not math.isfinite(value):
                        raise UnparsableNumber(row_no, f.name, str(cell))
                    row.append(value)
            rows.append(tuple(row))
    return RawDataset(schema, tuple(rows))


def fit_bins(dataset: RawDataset, schema: FeatureSchema) -> BinningSpec:
    """Equal-width bins over [min, max] of the given (training) data.

    Representatives are interval midpoints, recorded in the BinningSpec so
    the choice stays swappable without touching discretization.
    """
    if dataset.row_count == 0:
        raise ValueError("cannot fit bins on an empty dataset")
    edges: dict[int, np.ndarray] = {}
    reps: dict[int, np.ndarray] = {}
    for i, f in enumerate(schema.features):
        if not isinstance(f.kind, Continuous):
            continue
        col = np.array([row[i] for row in dataset.rows], dtype=float)
        lo, hi = float(col.min()), float(col.max())
        if lo == hi:
            raise DegenerateFeature(f.name)
        e = np.linspace(lo, hi, f.kind.bin_count + 1)
        e[0], e[-1] = lo, hi
        edges[i] = e
        reps[i] = (e[:-1] + e[1:]) / 2.0
    return BinningSpec(edges, reps)


def discretize(dataset: RawDataset, binning: BinningSpec, schema: FeatureSchema) -> DiscretizedDataset:
    """Map every cell to its value index; clamping makes this total."""
    n = dataset.row_count
    codes = np.zeros((n, len(schema)), dtype=np.int32)
    for i, f in enumerate(schema.features):
        if isinstance(f.kind, Categorical):
            lookup = {v: j for j, v in enumerate(f.kind.values)}
            codes[:, i] = [lookup[row[i]] for row in dataset.rows]
        else:
            e = binning.edges[i]
            col = np.array([row[i] for row in dataset.rows], dtype=float)
            j = np.searchsorted(e, col, side="right") - 1
            codes[:, i] = np.clip(j, 0, len(e) - 2)
    return DiscretizedDataset(schema, codes, dataset)


def value_label(schema: FeatureSchema, binning: BinningSpec | None, feature_index: int, value_index: int) -> str:
    """Human-readable rendering of one (feature, value) condition."""
    f = schema.features[feature_index]
    if isinstance(f.kind, Categorical):
        return f"{f.name} = {f.kind.values[value_index]}"
    if binning is None:
        return f"{f.name} in bin {value_index}"
    e = binning.edges[feature_index]
    lo, hi = e[value_index], e[value_index + 1]
    closing = "<=" if value_index == len(e) - 2 else "<"
    return f"{lo:g} <= {f.name} {closing} {hi:g}"
