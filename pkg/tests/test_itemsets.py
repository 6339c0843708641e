"""Frequent-itemset mining checked against exhaustive enumeration."""

import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from recourse_rules.errors import ThresholdBelowFloor
from recourse_rules.itemsets import (
    Item,
    ItemSet,
    apriori,
    itemset,
    itemset_mask,
    min_count_for,
    mine_frequent,
    support_count,
)

from .conftest import dataset_from_codes, random_cat_dataset


def brute_force_apriori(ds, threshold, max_length):
    """Enumerate every itemset up to max_length and keep the frequent ones."""
    need = min_count_for(threshold, ds.row_count)
    n_feat = len(ds.schema)
    out = []
    for k in range(1, max_length + 1):
        for feats in itertools.combinations(range(n_feat), k):
            ranges = [range(ds.schema.features[f].value_count()) for f in feats]
            for values in itertools.product(*ranges):
                iset = itemset(zip(feats, values))
                if support_count(ds.codes, iset) >= need:
                    out.append(iset)
    out.sort(key=ItemSet.sort_key)
    return out


class TestItemSet:
    def test_items_must_be_sorted_by_feature(self):
        with pytest.raises(ValueError):
            ItemSet((Item(2, 0), Item(1, 0)))

    def test_at_most_one_item_per_feature(self):
        with pytest.raises(ValueError):
            ItemSet((Item(0, 0), Item(0, 1)))

    def test_itemset_helper_sorts_pairs(self):
        iset = itemset([(3, 1), (0, 2)])
        assert iset.items == (Item(0, 2), Item(3, 1))
        assert iset.features == (0, 3)
        assert iset.values == (2, 1)

    def test_mask_selects_matching_rows(self):
        ds = dataset_from_codes([[0, 1], [0, 0], [1, 1]])
        mask = itemset_mask(ds.codes, itemset([(0, 0), (1, 1)]))
        assert mask.tolist() == [True, False, False]


class TestMinCount:
    def test_exact_fraction_boundary(self):
        # 3/10 of 10 rows is exactly 3, not 4
        assert min_count_for(0.3, 10) == 3
        assert min_count_for(Fraction(3, 10), 10) == 3

    def test_rounds_up_between_counts(self):
        assert min_count_for(0.1, 11) == 2  # 1.1 rows
        assert min_count_for(0.25, 9) == 3  # 2.25 rows

    def test_floor_is_one(self):
        assert min_count_for(0.001, 5) == 1

    @given(st.integers(1, 200), st.fractions(min_value="1/200", max_value=1))
    def test_count_is_smallest_satisfying(self, rows, threshold):
        c = min_count_for(threshold, rows)
        assert Fraction(c, rows) >= threshold
        assert c == 1 or Fraction(c - 1, rows) < threshold


class TestApriori:
    def test_matches_enumeration_on_random_data(self):
        rng = np.random.default_rng(11)
        for _ in range(60):
            ds = random_cat_dataset(rng)
            # count-based thresholds land exactly on support boundaries
            threshold = Fraction(int(rng.integers(1, ds.row_count + 1)), ds.row_count)
            max_length = int(rng.integers(1, len(ds.schema) + 1))
            got = apriori(ds, threshold, max_length)
            assert got == brute_force_apriori(ds, threshold, max_length)

    def test_matches_enumeration_float_thresholds(self):
        rng = np.random.default_rng(12)
        for threshold in (0.2, 0.35, 0.5, 0.75, 1.0):
            for _ in range(10):
                ds = random_cat_dataset(rng, max_rows=8)
                if Fraction(threshold) < Fraction(1, ds.row_count):
                    continue
                got = apriori(ds, threshold, len(ds.schema))
                assert got == brute_force_apriori(ds, threshold, len(ds.schema))

    def test_output_order_is_pinned(self):
        ds = dataset_from_codes([[0, 1, 0], [0, 1, 1], [1, 1, 0], [0, 0, 0]])
        result = apriori(ds, 0.5, 3)
        assert result == sorted(result, key=ItemSet.sort_key)
        lengths = [len(s) for s in result]
        assert lengths == sorted(lengths)

    def test_rejects_threshold_below_floor(self):
        ds = dataset_from_codes([[0], [1], [0]])
        with pytest.raises(ThresholdBelowFloor):
            apriori(ds, 0.2, 1)  # floor is 1/3

    def test_threshold_at_floor_is_accepted(self):
        ds = dataset_from_codes([[0], [1], [0]])
        # the float 1/3 rounds below the exact floor and is rejected;
        # the exact fraction is accepted
        with pytest.raises(ThresholdBelowFloor):
            apriori(ds, 1 / 3, 1)
        result = apriori(ds, Fraction(1, 3), 1)
        assert itemset([(0, 1)]) in result

    def test_threshold_out_of_range(self):
        ds = dataset_from_codes([[0], [1]])
        with pytest.raises(ValueError):
            apriori(ds, 0.0, 1)
        with pytest.raises(ValueError):
            apriori(ds, 1.5, 1)

    def test_max_length_truncates(self):
        ds = dataset_from_codes([[0, 0, 0]] * 4)
        assert max(len(s) for s in apriori(ds, 0.5, 2)) == 2

    def test_support_monotone_in_subsets(self):
        rng = np.random.default_rng(3)
        ds = random_cat_dataset(rng, max_rows=8, max_features=4)
        for iset in apriori(ds, Fraction(1, ds.row_count), len(ds.schema)):
            full = support_count(ds.codes, iset)
            for j in range(len(iset)):
                sub = ItemSet(iset.items[:j] + iset.items[j + 1 :])
                if len(sub):
                    assert support_count(ds.codes, sub) >= full


class TestMineFrequent:
    def test_empty_matrix(self):
        assert mine_frequent(np.zeros((0, 3), dtype=np.int32), 1, 3) == []

    def test_min_count_equal_rows_keeps_constants(self):
        codes = np.array([[1, 0], [1, 1]], dtype=np.int32)
        found = mine_frequent(codes, 2, 2)
        assert found == [(Item(0, 1),)]
