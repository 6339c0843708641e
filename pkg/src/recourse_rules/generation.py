"""Stage 1: ground set generation.

A triple is valid when the Outer-If and Inner-If share no feature, the Then
condition ranges over exactly the Inner-If's features with at least one
changed value, and the combined If width stays within the interpretability
limit. The width check runs at the (outer, inner) pair level so the Then
loop is skipped entirely for violating pairs, and apriori is capped at
width-1 upstream, which keeps the width constraint out of Stage 3.

Iteration counting mirrors the loop structure: a skipped pair costs one
iteration, an expanded pair costs one iteration per Then candidate scanned.
These counters back the crossover claims between the naive method,
RL-Reduction and Then-Generation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .dataset import DiscretizedDataset
from .errors import ThresholdBelowFloor
from .itemsets import Item, ItemSet, itemset, itemset_mask, min_count_for, mine_frequent
from .schema import Categorical, FeatureSchema


@dataclass(frozen=True, slots=True)
class Triple:
    """One Outer-If / Inner-If / Then recourse rule."""

    outer: ItemSet
    inner: ItemSet
    then: ItemSet
    gen_index: int = field(compare=False, default=-1)

    def __post_init__(self):
        if set(self.outer.features) & set(self.inner.features):
            raise ValueError("outer and inner conditions share a feature")
        if self.inner.features != self.then.features:
            raise ValueError("then condition must range over exactly the inner features")
        if self.inner.values == self.then.values:
            raise ValueError("then condition must change at least one value")

    def key(self) -> tuple:
        return (self.outer.items, self.inner.items, self.then.items)

    def changed_features(self) -> tuple[int, ...]:
        return tuple(
            f for (f, vi), (_, vt) in zip(self.inner.items, self.then.items) if vi != vt
        )

    def width(self) -> int:
        return len(self.outer) + len(self.inner)


@dataclass(frozen=True)
class CandidateSets:
    """Subgroup descriptors and the Inner-If/Then candidate pool.

    With no user-supplied subgroups both names reference the same apriori
    output list.
    """

    sd: tuple[ItemSet, ...]
    rl: tuple[ItemSet, ...]

    @classmethod
    def shared(cls, items) -> "CandidateSets":
        pool = tuple(items)
        return cls(pool, pool)


@dataclass
class GroundSet:
    triples: list[Triple]
    iteration_count: int
    method: str  # "original" | "rl-reduction" | "then-generation"
    q: float | None = None

    def __len__(self) -> int:
        return len(self.triples)


def pair_is_expandable(outer: ItemSet, inner: ItemSet, eps2: int) -> bool:
    """Pair-level validity: feature-disjoint and within the If-width limit."""
    if len(outer) + len(inner) > eps2:
        return False
    return not set(outer.features) & set(inner.features)


def _then_change_allowed(inner: ItemSet, then_items: tuple[Item, ...], actionable) -> bool:
    if actionable is None:
        return True
    return all(
        actionable[f] for (f, vi), (_, vt) in zip(inner.items, then_items) if vi != vt
    )


class _Emitter:
    """Deduplicates triples at emission, keeping the first generation index."""

    def __init__(self):
        self.triples: list[Triple] = []
        self._seen: set[tuple] = set()

    def emit(self, outer: ItemSet, inner: ItemSet, then: ItemSet) -> None:
        key = (outer.items, inner.items, then.items)
        if key in self._seen:
            return
        self._seen.add(key)
        self.triples.append(Triple(outer, inner, then, gen_index=len(self.triples)))


def generate_original(cands: CandidateSets, eps2: int, actionable=None) -> GroundSet:
    """Iterate SD x RL x RL in index order and keep the valid triples.

    Then candidates for a pair are exactly the RL members sharing the inner
    condition's feature combination, so they are pre-grouped; emission order
    still matches the naive outer-major, then-minor scan.
    """
    groups: dict[tuple[int, ...], list[ItemSet]] = {}
    for iset in cands.rl:
        groups.setdefault(iset.features, []).append(iset)

    emitter = _Emitter()
    iterations = 0
    n_rl = len(cands.rl)
    for outer in cands.sd:
        for inner in cands.rl:
            if not pair_is_expandable(outer, inner, eps2):
                iterations += 1
                continue
            iterations += n_rl
            for then in groups[inner.features]:
                if then.values == inner.values:
                    continue
                if not _then_change_allowed(inner, then.items, actionable):
                    continue
                emitter.emit(outer, inner, then)
    return GroundSet(emitter.triples, iterations, "original")


def rl_reduce(rl) -> tuple[ItemSet, ...]:
    """Drop RL members whose feature combination occurs exactly once.

    Such members can never pair with a distinct Then condition over the same
    features, so the generated ground set is unchanged. Subgroup descriptors
    are left untouched by callers.
    """
    counts: dict[tuple[int, ...], int] = {}
    for iset in rl:
        counts[iset.features] = counts.get(iset.features, 0) + 1
    return tuple(iset for iset in rl if counts[iset.features] >= 2)


def generate_rl_reduced(cands: CandidateSets, eps2: int, actionable=None) -> GroundSet:
    """RL-Reduction: reduce the pool first, then run the original generator.

    The reduction pass itself costs one iteration per original RL member,
    which is included in the count (the alpha^2 n^3 + n accounting).
    """
    reduced = rl_reduce(cands.rl)
    ground = generate_original(CandidateSets(cands.sd, reduced), eps2, actionable)
    ground.iteration_count += len(cands.rl)
    ground.method = "rl-reduction"
    return ground


def generate_then(
    cands: CandidateSets,
    dataset: DiscretizedDataset,
    q: float,
    eps2: int,
    actionable=None,
) -> GroundSet:
    """Then-Generation: mine Then conditions per If pair instead of scanning RL.

    For each expandable (outer, inner) pair the dataset is projected onto the
    inner condition's feature columns, rows satisfying the full If condition
    are dropped, and a second apriori run at threshold q proposes Then
    candidates; only full-width itemsets differing from the inner condition
    survive. Iterations count the Then candidates scanned, bounded by n^2 * m.
    """
    n_rows = dataset.row_count
    if not (0 < q <= 1):
        raise ValueError(f"q must be in (0, 1], got {q}")
    if Fraction(q) < Fraction(1, n_rows):
        raise ThresholdBelowFloor(q, n_rows)

    codes = dataset.codes
    mask_cache: dict[tuple[Item, ...], np.ndarray] = {}

    def mask(iset: ItemSet) -> np.ndarray:
        m = mask_cache.get(iset.items)
        if m is None:
            m = itemset_mask(codes, iset)
            mask_cache[iset.items] = m
        return m

    emitter = _Emitter()
    iterations = 0
    for outer in cands.sd:
        outer_mask = mask(outer)
        for inner in cands.rl:
            if not pair_is_expandable(outer, inner, eps2):
                continue
            keep = ~(outer_mask & mask(inner))
            feats = inner.features
            sub = codes[keep][:, feats]
            thens: list[tuple[Item, ...]] = []
            if sub.shape[0] > 0:
                # q below the sub-dataset's own floor degenerates to "observed
                # at least once", hence the max with 1
                min_count = min_count_for(q, sub.shape[0])
                for found in mine_frequent(sub, min_count, max_length=len(inner)):
                    if len(found) != len(inner):
                        continue
                    remapped = tuple(Item(feats[it.feature_index], it.value_index) for it in found)
                    if tuple(v for _, v in remapped) == inner.values:
                        continue  # survives via rows matching inner but not outer
                    thens.append(remapped)
            iterations += len(thens)
            for then_items in thens:
                if not _then_change_allowed(inner, then_items, actionable):
                    continue
                emitter.emit(outer, inner, ItemSet(then_items))
    return GroundSet(emitter.triples, iterations, "then-generation", q=q)


def user_subgroups(conditions, schema: FeatureSchema) -> tuple[ItemSet, ...]:
    """Parse user-supplied subgroup descriptors.

    Each condition is a mapping feature name -> value; categorical values are
    labels, continuous values are bin indices.
    """
    out = []
    for cond in conditions:
        pairs = []
        for name, value in cond.items():
            f = schema.index_of(name)
            feat = schema.features[f]
            if isinstance(feat.kind, Categorical):
                if value not in feat.kind.values:
                    raise ValueError(f"{name!r}: unknown category {value!r}")
                pairs.append((f, feat.kind.values.index(value)))
            else:
                v = int(value)
                if not (0 <= v < feat.kind.bin_count):
                    raise ValueError(f"{name!r}: bin index {v} out of range")
                pairs.append((f, v))
        out.append(itemset(pairs))
    return tuple(out)


# --- serialization (inspection + resuming Stage 2) ---


def _itemset_doc(iset: ItemSet, schema: FeatureSchema) -> dict:
    doc = {}
    for f, v in iset.items:
        feat = schema.features[f]
        doc[feat.name] = feat.kind.values[v] if isinstance(feat.kind, Categorical) else int(v)
    return doc


def _itemset_from_doc(doc: dict, schema: FeatureSchema) -> ItemSet:
    return user_subgroups([doc], schema)[0]


def save_ground_set(path: str | Path, ground: GroundSet, schema: FeatureSchema) -> None:
    doc = {
        "method": ground.method,
        "q": ground.q,
        "iteration_count": ground.iteration_count,
        "triples": [
            {
                "gen_index": t.gen_index,
                "outer": _itemset_doc(t.outer, schema),
                "inner": _itemset_doc(t.inner, schema),
                "then": _itemset_doc(t.then, schema),
            }
            for t in ground.triples
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)


def load_ground_set(path: str | Path, schema: FeatureSchema) -> GroundSet:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    triples = [
        Triple(
            _itemset_from_doc(t["outer"], schema),
            _itemset_from_doc(t["inner"], schema),
            _itemset_from_doc(t["then"], schema),
            gen_index=int(t["gen_index"]),
        )
        for t in doc["triples"]
    ]
    return GroundSet(triples, int(doc["iteration_count"]), doc["method"], doc.get("q"))
