"""Items, itemsets and apriori frequent-itemset mining.

An item is one "feature = value" predicate over the discretized feature
space; an itemset is a conjunction with at most one item per feature.
Apriori output order is pinned (ascending length, then lexicographic by
(feature_index, value_index) sequence) because downstream generation order
defines which triples a partial evaluation sees first.

Support comparisons use exact integer counts against ceil(threshold * rows)
rather than floating-point ratios, so candidate set sizes are reproducible
at threshold boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .dataset import DiscretizedDataset
from .errors import ThresholdBelowFloor


class Item(NamedTuple):
    feature_index: int
    value_index: int


@dataclass(frozen=True, slots=True)
class ItemSet:
    items: tuple[Item, ...]

    def __post_init__(self):
        feats = [it.feature_index for it in self.items]
        if feats != sorted(feats):
            raise ValueError(f"items must be sorted by feature index: {self.items}")
        if len(set(feats)) != len(feats):
            raise ValueError(f"at most one item per feature: {self.items}")

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    @property
    def features(self) -> tuple[int, ...]:
        return tuple(it.feature_index for it in self.items)

    @property
    def values(self) -> tuple[int, ...]:
        return tuple(it.value_index for it in self.items)

    def sort_key(self) -> tuple:
        return (len(self.items), self.items)


def itemset(pairs) -> ItemSet:
    """Build an ItemSet from (feature_index, value_index) pairs in any order."""
    return ItemSet(tuple(Item(int(f), int(v)) for f, v in sorted(pairs)))


def itemset_mask(codes: np.ndarray, iset: ItemSet) -> np.ndarray:
    """Boolean row mask of `codes` rows satisfying every item."""
    mask = np.ones(codes.shape[0], dtype=bool)
    for f, v in iset.items:
        mask &= codes[:, f] == v
    return mask


def min_count_for(threshold: float | Fraction, row_count: int) -> int:
    """Smallest integer support count satisfying count/row_count >= threshold."""
    frac = Fraction(threshold)
    return max(1, math.ceil(frac * row_count))


def mine_frequent(codes: np.ndarray, min_count: int, max_length: int) -> list[tuple[Item, ...]]:
    """Level-wise apriori over an integer-coded matrix.

    Returns item tuples (sorted by feature) with support count >= min_count,
    in the canonical order. Internal to this module and generate_then;
    callers wanting threshold validation use apriori().
    """
    n_rows, n_feat = codes.shape
    if n_rows == 0:
        return []

    # frequent single items, lexicographic
    item_masks: dict[Item, np.ndarray] = {}
    level: list[tuple[Item, ...]] = []
    for f in range(n_feat):
        col = codes[:, f]
        values, counts = np.unique(col, return_counts=True)
        for v, c in zip(values.tolist(), counts.tolist()):
            if c >= min_count:
                it = Item(f, int(v))
                item_masks[it] = col == v
                level.append((it,))

    out: list[tuple[Item, ...]] = list(level)
    level_masks = {s: item_masks[s[0]] for s in level}
    length = 1
    while level and length < max_length:
        frequent_prev = set(level)
        next_level: list[tuple[Item, ...]] = []
        next_masks: dict[tuple[Item, ...], np.ndarray] = {}
        # join step: sorted level guarantees a[:-1] == b[:-1] groups are adjacent
        for i, a in enumerate(level):
            prefix = a[:-1]
            for b in level[i + 1:]:
                if b[:-1] != prefix:
                    break
                if b[-1].feature_index == a[-1].feature_index:
                    continue  # two items on one feature never co-occur
                cand = a + (b[-1],)
                # prune: every length-k subset must be frequent
                if length >= 2 and any(
                    cand[:j] + cand[j + 1:] not in frequent_prev for j in range(length - 1)
                ):
                    continue
                mask = level_masks[a] & item_masks[b[-1]]
                if int(mask.sum()) >= min_count:
                    next_level.append(cand)
                    next_masks[cand] = mask
        next_level.sort()
        out.extend(next_level)
        level = next_level
        level_masks = next_masks
        length += 1
    return out


def apriori(dataset: DiscretizedDataset, support_threshold: float, max_length: int) -> list[ItemSet]:
    """All itemsets of length <= max_length with support >= support_threshold.

    Rejects thresholds below 1/row_count: no observed itemset can occur less
    than once, so such a request is a caller error rather than a clamp.
    """
    if not (0 < support_threshold <= 1):
        raise ValueError(f"support threshold must be in (0, 1], got {support_threshold}")
    if max_length < 1:
        raise ValueError(f"max_length must be >= 1, got {max_length}")
    n = dataset.row_count
    if Fraction(support_threshold) < Fraction(1, n):
        raise ThresholdBelowFloor(support_threshold, n)
    min_count = min_count_for(support_threshold, n)
    raw = mine_frequent(dataset.codes, min_count, max_length)
    result = [ItemSet(t) for t in raw]
    result.sort(key=ItemSet.sort_key)
    return result


def support_count(codes: np.ndarray, iset: ItemSet) -> int:
    return int(itemset_mask(codes, iset).sum())
