"""Black-box classifier abstraction and Then-condition application.

The oracle wraps a ReLU MLP (softmax head, dropout already stripped) loaded
from a JSON weights file that also carries the input encoding, so raw rows
can be encoded without re-implementing any trainer preprocessing. The
forward pass uses np.einsum with optimize=False: its per-element summation
order does not depend on batch size, so batch prediction is bitwise equal
to element-wise prediction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import BinningSpec, RawDataset
from .errors import DimensionMismatch, EncodingMismatch, NotCovered
from .generation import Triple
from .schema import Categorical, FeatureEncoding, FeatureSchema, InputEncoding

WEIGHTS_FORMAT_VERSION = 1


@dataclass(frozen=True)
class MlpWeights:
    """Dense layers (row-major weight matrices), ReLU hidden, softmax output."""

    layers: tuple[tuple[np.ndarray, np.ndarray], ...]
    favorable_class: int
    encoding: InputEncoding

    @property
    def input_dim(self) -> int:
        return int(self.layers[0][0].shape[1])


class ModelOracle:
    """Deterministic predict function over the raw feature space."""

    def __init__(self, weights: MlpWeights, schema: FeatureSchema):
        _validate(weights, schema)
        self.weights = weights
        self.schema = schema
        self.favorable_class = weights.favorable_class
        self._columns = {e.feature: e for e in weights.encoding.per_feature}

    # --- encoding ---

    def encode(self, row) -> np.ndarray:
        return self.encode_batch([row])[0]

    def encode_batch(self, rows) -> np.ndarray:
        x = np.zeros((len(rows), self.weights.input_dim))
        for i, f in enumerate(self.schema.features):
            enc = self._columns[f.name]
            if enc.kind == "onehot":
                lookup = {v: c for v, c in zip(f.kind.values, enc.columns)}
                for r, row in enumerate(rows):
                    x[r, lookup[row[i]]] = 1.0
            else:
                col = enc.columns[0]
                x[:, col] = [row[i] for row in rows]
        return x

    # --- inference ---

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Class probabilities for a batch of encoded inputs (n, input_dim)."""
        h = x
        last = len(self.weights.layers) - 1
        for li, (w, b) in enumerate(self.weights.layers):
            h = np.einsum("nd,od->no", h, w, optimize=False) + b
            if li != last:
                h = np.maximum(h, 0.0)
        h = h - h.max(axis=1, keepdims=True)
        e = np.exp(h)
        return e / e.sum(axis=1, keepdims=True)

    def predict_proba(self, row) -> np.ndarray:
        return self.forward(self.encode_batch([row]))[0]

    def predict_proba_batch(self, rows) -> np.ndarray:
        return self.forward(self.encode_batch(rows))

    def is_favorable(self, row) -> bool:
        return bool(self.favorable_batch([row])[0])

    def favorable_batch(self, rows) -> np.ndarray:
        """True where the favorable class strictly wins; ties count as unfavorable."""
        probs = self.predict_proba_batch(rows)
        fav = probs[:, self.favorable_class]
        other = np.delete(probs, self.favorable_class, axis=1).max(axis=1)
        return fav > other


@dataclass(frozen=True)
class AffectedSet:
    """Sorted row indices (into the dataset) with an unfavorable prediction."""

    indices: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.indices)


def _validate(weights: MlpWeights, schema: FeatureSchema) -> None:
    if not weights.layers:
        raise DimensionMismatch("weights file has no layers")
    prev_out = None
    for li, (w, b) in enumerate(weights.layers):
        if w.ndim != 2 or b.ndim != 1 or w.shape[0] != b.shape[0]:
            raise DimensionMismatch(f"layer {li}: weight {w.shape} / bias {b.shape} mismatch")
        if prev_out is not None and w.shape[1] != prev_out:
            raise DimensionMismatch(
                f"layer {li}: input dim {w.shape[1]} != previous output {prev_out}"
            )
        prev_out = w.shape[0]
    if prev_out != 2:
        raise DimensionMismatch(f"final layer must output 2 classes, got {prev_out}")
    if weights.favorable_class not in (0, 1):
        raise DimensionMismatch(f"favorable_class must be 0 or 1, got {weights.favorable_class}")

    by_name = {e.feature: e for e in weights.encoding.per_feature}
    seen_columns: set[int] = set()
    for f in schema.features:
        enc = by_name.get(f.name)
        if enc is None:
            raise EncodingMismatch(f.name, "feature missing from encoding")
        if isinstance(f.kind, Categorical):
            if enc.kind != "onehot":
                raise EncodingMismatch(f.name, f"categorical feature encoded as {enc.kind!r}")
            if len(enc.columns) != len(f.kind.values):
                raise EncodingMismatch(
                    f.name,
                    f"one-hot span has {len(enc.columns)} columns for {len(f.kind.values)} categories",
                )
        else:
            if enc.kind != "raw" or len(enc.columns) != 1:
                raise EncodingMismatch(f.name, "continuous feature must use a single raw column")
        if seen_columns & set(enc.columns):
            raise EncodingMismatch(f.name, "encoding columns overlap another feature")
        seen_columns.update(enc.columns)
    extra = set(by_name) - {f.name for f in schema.features}
    if extra:
        raise EncodingMismatch(sorted(extra)[0], "encoding names a feature not in the schema")
    in_dim = weights.layers[0][0].shape[1]
    if seen_columns != set(range(in_dim)):
        raise DimensionMismatch(
            f"encoding covers columns {sorted(seen_columns)} but the model expects 0..{in_dim - 1}"
        )


def load_model(weights_path: str | Path, schema: FeatureSchema) -> ModelOracle:
    """Load a weights file and return the validated oracle."""
    with open(weights_path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    layers = tuple(
        (np.asarray(layer["weights"], dtype=float), np.asarray(layer["bias"], dtype=float))
        for layer in doc["layers"]
    )
    encoding = InputEncoding(
        tuple(
            FeatureEncoding(e["feature"], e["kind"], tuple(int(c) for c in e["columns"]))
            for e in doc["input_encoding"]
        )
    )
    weights = MlpWeights(layers, int(doc["favorable_class"]), encoding)
    return ModelOracle(weights, schema)


def save_model(weights_path: str | Path, weights: MlpWeights) -> None:
    """Write the interchange weights file (full-precision doubles)."""
    doc = {
        "version": WEIGHTS_FORMAT_VERSION,
        "favorable_class": weights.favorable_class,
        "input_encoding": [
            {"feature": e.feature, "kind": e.kind, "columns": list(e.columns)}
            for e in weights.encoding.per_feature
        ],
        "layers": [
            {"weights": [[float(x) for x in row] for row in w], "bias": [float(x) for x in b]}
            for w, b in weights.layers
        ],
    }
    with open(weights_path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def affected_set(oracle: ModelOracle, dataset: RawDataset) -> AffectedSet:
    """Rows whose prediction is unfavorable; ties stay in (they still need recourse)."""
    favorable = oracle.favorable_batch(dataset.rows)
    return AffectedSet(tuple(int(i) for i in np.flatnonzero(~favorable)))


def apply_then(row, triple: Triple, binning: BinningSpec, schema: FeatureSchema):
    """Produce the candidate counterfactual input for a covered row.

    Categorical Then items set the named category; continuous items set the
    named bin's representative, unless the current value already lies in that
    bin (no spurious change). Features outside the Then condition are kept.
    """
    codes_ok = _satisfies(row, triple.outer, binning, schema) and _satisfies(
        row, triple.inner, binning, schema
    )
    if not codes_ok:
        raise NotCovered(f"input does not satisfy the If conditions of {triple}")
    return apply_items(row, triple.then, binning, schema)


def apply_items(row, then, binning: BinningSpec, schema: FeatureSchema):
    """Substitute Then values into a raw row without the coverage precondition."""
    out = list(row)
    for f, v in then.items:
        feat = schema.features[f]
        if isinstance(feat.kind, Categorical):
            out[f] = feat.kind.values[v]
        else:
            if binning.bin_of(f, float(row[f])) != v:
                out[f] = float(binning.representatives[f][v])
    return tuple(out)


def _satisfies(row, iset, binning: BinningSpec, schema: FeatureSchema) -> bool:
    for f, v in iset.items:
        feat = schema.features[f]
        if isinstance(feat.kind, Categorical):
            if feat.kind.values.index(row[f]) != v:
                return False
        elif binning.bin_of(f, float(row[f])) != v:
            return False
    return True


def row_codes(row, binning: BinningSpec, schema: FeatureSchema) -> tuple[int, ...]:
    """Discretize a single raw row (used to re-check rule satisfaction)."""
    out = []
    for i, f in enumerate(schema.features):
        if isinstance(f.kind, Categorical):
            out.append(f.kind.values.index(row[i]))
        else:
            out.append(binning.bin_of(i, float(row[i])))
    return tuple(out)
