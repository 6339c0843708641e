"""Feature schema: declarative description of the tabular feature space.

A schema lists the dataset's features in column order. Categorical features
carry their category labels; continuous features carry the number of
equal-width bins used for discretization (default 10). The schema sidecar
file additionally records how the model encodes each feature (one-hot span
or raw column), so the engine never re-derives preprocessing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import SchemaError

DEFAULT_BIN_COUNT = 10


@dataclass(frozen=True)
class Categorical:
    values: tuple[str, ...]

    def __post_init__(self):
        if len(self.values) == 0:
            raise SchemaError("categorical feature needs at least one category")
        if len(set(self.values)) != len(self.values):
            raise SchemaError(f"duplicate category labels: {self.values}")


@dataclass(frozen=True)
class Continuous:
    bin_count: int = DEFAULT_BIN_COUNT

    def __post_init__(self):
        if self.bin_count < 2:
            raise SchemaError(f"bin_count must be >= 2, got {self.bin_count}")


@dataclass(frozen=True)
class Feature:
    name: str
    kind: Categorical | Continuous
    actionable: bool = True

    @property
    def is_continuous(self) -> bool:
        return isinstance(self.kind, Continuous)

    def value_count(self) -> int:
        """Number of discrete values this feature can take after discretization."""
        if isinstance(self.kind, Categorical):
            return len(self.kind.values)
        return self.kind.bin_count


@dataclass(frozen=True)
class FeatureSchema:
    features: tuple[Feature, ...]

    def __post_init__(self):
        if len(self.features) == 0:
            raise SchemaError("schema needs at least one feature")
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise SchemaError(f"duplicate feature names: {names}")
        object.__setattr__(self, "_index", {f.name: i for i, f in enumerate(self.features)})

    def __len__(self) -> int:
        return len(self.features)

    def index_of(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise SchemaError(f"unknown feature {name!r}") from None

    def feature(self, index: int) -> Feature:
        return self.features[index]

    def names(self) -> list[str]:
        return [f.name for f in self.features]

    def actionable_mask(self) -> tuple[bool, ...]:
        return tuple(f.actionable for f in self.features)


@dataclass(frozen=True)
class FeatureEncoding:
    """How one schema feature maps onto model input columns."""

    feature: str
    kind: str  # "onehot" | "raw"
    columns: tuple[int, ...]


@dataclass(frozen=True)
class InputEncoding:
    """Per-feature column layout of the model's input vector, schema order."""

    per_feature: tuple[FeatureEncoding, ...]

    def total_columns(self) -> int:
        return sum(len(e.columns) for e in self.per_feature)


@dataclass
class SchemaSidecar:
    schema: FeatureSchema
    encoding: InputEncoding | None = None
    extras: dict = field(default_factory=dict)


def _parse_feature(entry: dict) -> Feature:
    try:
        name = entry["name"]
        kind = entry["kind"]
    except (KeyError, TypeError):
        raise SchemaError(f"feature entry needs 'name' and 'kind': {entry!r}") from None
    actionable = bool(entry.get("actionable", True))
    if kind == "categorical":
        values = entry.get("values")
        if not isinstance(values, list):
            raise SchemaError(f"categorical feature {name!r} needs a 'values' list")
        return Feature(name, Categorical(tuple(str(v) for v in values)), actionable)
    if kind == "continuous":
        bins = int(entry.get("bins", DEFAULT_BIN_COUNT))
        return Feature(name, Continuous(bins), actionable)
    raise SchemaError(f"feature {name!r} has unknown kind {kind!r}")


def _parse_encoding(entries: list, schema: FeatureSchema) -> InputEncoding:
    per_feature = []
    seen = set()
    for entry in entries:
        name = entry.get("feature")
        if name is None or name not in schema.names():
            raise SchemaError(f"encoding entry names unknown feature {name!r}")
        if name in seen:
            raise SchemaError(f"encoding lists feature {name!r} twice")
        seen.add(name)
        kind = entry.get("type")
        if kind not in ("onehot", "raw"):
            raise SchemaError(f"encoding for {name!r} has unknown type {kind!r}")
        columns = tuple(int(c) for c in entry.get("columns", []))
        per_feature.append(FeatureEncoding(name, kind, columns))
    missing = set(schema.names()) - seen
    if missing:
        raise SchemaError(f"encoding is missing features: {sorted(missing)}")
    # keep schema order regardless of file order
    order = {e.feature: e for e in per_feature}
    return InputEncoding(tuple(order[n] for n in schema.names()))


def load_sidecar(path: str | Path) -> SchemaSidecar:
    """Load a schema sidecar (YAML). The 'encoding' section is optional."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict) or "features" not in doc:
        raise SchemaError(f"{path}: sidecar must be a mapping with a 'features' list")
    schema = FeatureSchema(tuple(_parse_feature(e) for e in doc["features"]))
    encoding = None
    if "encoding" in doc and doc["encoding"] is not None:
        encoding = _parse_encoding(doc["encoding"], schema)
    extras = {k: v for k, v in doc.items() if k not in ("features", "encoding")}
    return SchemaSidecar(schema, encoding, extras)


def save_sidecar(path: str | Path, sidecar: SchemaSidecar) -> None:
    doc: dict = {"features": []}
    for f in sidecar.schema.features:
        entry: dict = {"name": f.name}
        if isinstance(f.kind, Categorical):
            entry["kind"] = "categorical"
            entry["values"] = list(f.kind.values)
        else:
            entry["kind"] = "continuous"
            entry["bins"] = f.kind.bin_count
        entry["actionable"] = f.actionable
        doc["features"].append(entry)
    if sidecar.encoding is not None:
        doc["encoding"] = [
            {"feature": e.feature, "type": e.kind, "columns": list(e.columns)}
            for e in sidecar.encoding.per_feature
        ]
    doc.update(sidecar.extras)
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(doc, fh, sort_keys=False)
