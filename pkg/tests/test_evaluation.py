"""Triple evaluation, set metrics, objectives, and V-Reduction."""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from recourse_rules.dataset import BinningSpec, RawDataset, discretize, fit_bins
from recourse_rules.errors import NormalizerViolation
from recourse_rules.evaluation import (
    EvaluatedTriple,
    FourTermObjective,
    GroundSetEvaluator,
    SimplifiedObjective,
    acc_fraction,
    cost_fraction,
    evaluate_triple,
    four_term_normalizers,
    metrics,
    objective,
    objective_exact,
    union_corrected,
    v_reduce,
)
from recourse_rules.generation import CandidateSets, Triple, generate_original
from recourse_rules.itemsets import itemset
from recourse_rules.model import AffectedSet, affected_set
from recourse_rules.schema import Continuous, Feature, FeatureSchema

from .conftest import (
    cat_schema,
    dataset_from_codes,
    linear_oracle,
    no_bins,
    random_cat_dataset,
    random_linear_oracle,
    synthetic_ground,
)

# Three binary features. Class-1 score: f1=v1 contributes +1, f1=v0
# contributes -1, f2=v1 contributes -5. So f1=v0 rows are affected, and
# changing f1 to v1 flips them unless f2=v1 drags the score back down.
SCORES = [[0.0, 0.0], [-1.0, 1.0], [0.0, -5.0]]


def hand_setup():
    schema = cat_schema([2, 2, 2])
    oracle = linear_oracle(schema, SCORES, bias=0.0)
    ds = dataset_from_codes(
        [
            [0, 0, 0],  # affected; covered; flips
            [0, 0, 1],  # affected; covered; f2 blocks the flip
            [1, 0, 0],  # affected; outer excludes it
            [0, 1, 0],  # favorable already
            [0, 0, 0],  # affected; covered; flips
        ],
        value_counts=[2, 2, 2],
    )
    x_aff = affected_set(oracle, ds.raw)
    triple = Triple(itemset([(0, 0)]), itemset([(1, 0)]), itemset([(1, 1)]), gen_index=0)
    return schema, oracle, ds, x_aff, triple


class TestEvaluateTriple:
    def test_hand_computed_masks(self):
        _, oracle, ds, x_aff, triple = hand_setup()
        assert x_aff.indices == (0, 1, 2, 4)
        ev = evaluate_triple(triple, x_aff, ds, oracle, no_bins())
        assert ev.covered == [0, 1, 3]  # positions within X_aff
        assert ev.corrected == [0, 3]
        assert ev.covered_count == 3 and ev.corrected_count == 2
        assert ev.recourse_cost == 1.0
        assert ev.cost_per_corrected == {0: 1.0, 3: 1.0}

    def test_corrected_never_exceeds_covered(self):
        _, oracle, ds, x_aff, triple = hand_setup()
        ev = evaluate_triple(triple, x_aff, ds, oracle, no_bins())
        assert not (ev.corrected_mask & ~ev.covered_mask).any()

    def test_vacuous_coverage(self):
        _, oracle, ds, x_aff, _ = hand_setup()
        # nobody affected has f1 = v1, so inner never matches
        t = Triple(itemset([(0, 0)]), itemset([(1, 1)]), itemset([(1, 0)]))
        ev = evaluate_triple(t, x_aff, ds, oracle, no_bins())
        assert ev.covered == [] and ev.corrected == []

    def test_cost_weights_apply_to_changed_features_only(self):
        _, oracle, ds, x_aff, _ = hand_setup()
        t = Triple(
            itemset([(0, 0)]),
            itemset([(1, 0), (2, 0)]),
            itemset([(1, 1), (2, 0)]),  # f2 conditioned on but unchanged
        )
        ev = evaluate_triple(t, x_aff, ds, oracle, no_bins(), cost_weights={1: 2.5, 2: 40.0})
        assert ev.recourse_cost == 2.5

    def test_continuous_inner_uses_bin_representative(self):
        schema = FeatureSchema((Feature("x", Continuous(2)),))
        raw = RawDataset(schema, ((0.0,), (1.0,), (4.0,)))
        spec = fit_bins(raw, schema)
        ds = discretize(raw, spec, schema)
        # favorable iff x > 2: single raw input with weight on class 1
        from recourse_rules.model import MlpWeights, ModelOracle
        from recourse_rules.schema import FeatureEncoding, InputEncoding

        enc = InputEncoding((FeatureEncoding("x", "raw", (0,)),))
        w = np.array([[0.0], [1.0]])
        b = np.array([0.0, -2.0])
        oracle = ModelOracle(MlpWeights(((w, b),), 1, enc), schema)
        x_aff = affected_set(oracle, raw)
        assert x_aff.indices == (0, 1)
        # then: move x into the upper bin; its representative is 3.0 > 2
        t = Triple(itemset([]), itemset([(0, 0)]), itemset([(0, 1)]))
        ev = evaluate_triple(t, x_aff, ds, oracle, spec)
        assert ev.corrected == [0, 1]


class TestSetMetrics:
    def test_acc_and_cost_from_hand_case(self):
        _, oracle, ds, x_aff, triple = hand_setup()
        ev = evaluate_triple(triple, x_aff, ds, oracle, no_bins())
        m = metrics([ev], x_aff)
        assert m.acc == 50.0  # 2 of 4 affected
        assert m.cost == 1.0

    def test_empty_set_metrics(self):
        _, _, _, x_aff, _ = hand_setup()
        m = metrics([], x_aff)
        assert m.acc == 0.0 and m.cost is None
        assert union_corrected([]) is None

    def test_cost_takes_cheapest_per_individual(self):
        _, oracle, ds, x_aff, triple = hand_setup()
        cheap = evaluate_triple(triple, x_aff, ds, oracle, no_bins())
        expensive = evaluate_triple(triple, x_aff, ds, oracle, no_bins(), cost_weights={1: 9.0})
        m = metrics([expensive, cheap], x_aff)
        assert m.cost == 1.0

    def test_cost_averages_over_corrected(self):
        rng = np.random.default_rng(0)
        ground = synthetic_ground(rng, 6, 20)
        best = {}
        for ev in ground:
            for i in ev.corrected:
                best[i] = min(best.get(i, float("inf")), ev.recourse_cost)
        expected = Fraction(sum(Fraction(c) for c in best.values()), len(best))
        assert cost_fraction(ground) == expected

    def test_acc_fraction_is_exact(self):
        rng = np.random.default_rng(1)
        ground = synthetic_ground(rng, 5, 7)
        got = acc_fraction(ground, 7)
        mask = union_corrected(ground)
        assert got == Fraction(100 * int(mask.sum()), 7)

    @given(st.data())
    @settings(max_examples=60, deadline=None)
    def test_acc_monotone_under_inclusion(self, data):
        seed = data.draw(st.integers(0, 10_000))
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 10))
        ground = synthetic_ground(rng, n, 12)
        picks = data.draw(st.lists(st.integers(0, n - 1), max_size=n))
        subset = [ground[i] for i in sorted(set(picks))]
        assert acc_fraction(subset, 12) <= acc_fraction(ground, 12)


class TestObjectives:
    def test_simplified_tradeoff(self):
        _, oracle, ds, x_aff, triple = hand_setup()
        ev = evaluate_triple(triple, x_aff, ds, oracle, no_bins(), cost_weights={1: 2.5})
        assert objective([ev], SimplifiedObjective(lam=1.0), x_aff) == 47.5
        assert objective([ev], SimplifiedObjective(lam=0.0), x_aff) == 50.0

    def test_simplified_clamps_at_zero(self):
        _, oracle, ds, x_aff, triple = hand_setup()
        ev = evaluate_triple(triple, x_aff, ds, oracle, no_bins(), cost_weights={1: 2.5})
        assert objective([ev], SimplifiedObjective(lam=100.0), x_aff) == 0.0

    def test_empty_set_objective(self):
        assert objective_exact([], SimplifiedObjective(lam=3.0), 10) == 0

    def test_four_term_hand_computed(self):
        _, oracle, ds, x_aff, triple = hand_setup()
        ev = evaluate_triple(triple, x_aff, ds, oracle, no_bins())
        cfg = FourTermObjective(
            lam1=1.0, lam2=1.0, lam3=1.0, u_incorrect=10.0, u_cost=10.0, u_change=10.0
        )
        # incorrect = 3 covered - 2 corrected = 1; cover = 3; cost = 1; change = 1
        expected = (10 - 1) + 3 + (10 - 1) + (10 - 1)
        assert objective([ev], cfg, x_aff) == expected

    def test_four_term_normalizer_violation(self):
        _, oracle, ds, x_aff, triple = hand_setup()
        ev = evaluate_triple(triple, x_aff, ds, oracle, no_bins())
        cfg = FourTermObjective(
            lam1=100.0, lam2=1.0, lam3=1.0, u_incorrect=0.5, u_cost=1.0, u_change=1.0
        )
        with pytest.raises(NormalizerViolation):
            objective([ev], cfg, x_aff)

    def test_normalizers_must_be_positive(self):
        with pytest.raises(ValueError):
            FourTermObjective(1.0, 1.0, 1.0, 0.0, 1.0, 1.0)

    def test_four_term_normalizers_scale_with_eps1(self):
        rng = np.random.default_rng(2)
        ground = synthetic_ground(rng, 8, 15)
        u_inc, u_cost, u_change = four_term_normalizers(ground, eps1=4)
        max_inc = max(t.covered_count - t.corrected_count for t in ground)
        assert u_inc == max(1.0, 4.0 * max_inc)
        assert u_cost == max(1.0, 4.0 * max(t.recourse_cost for t in ground))
        assert u_change >= 4.0  # every synthetic triple changes one feature
        cfg = FourTermObjective(1.0, 1.0, 1.0, u_inc, u_cost, u_change)
        for k in range(1, 5):
            objective_exact(ground[:k], cfg, 15)  # must not raise


class TestEvaluateMany:
    def test_worker_count_does_not_change_results(self):
        rng = np.random.default_rng(53)
        ds = random_cat_dataset(rng, max_rows=30, max_features=4)
        oracle = random_linear_oracle(rng, ds.schema)
        x_aff = affected_set(oracle, ds.raw)
        pool = tuple(
            itemset([(f, int(v))])
            for f in range(len(ds.schema))
            for v in np.unique(ds.codes[:, f])
        )
        ground = generate_original(CandidateSets.shared(pool), 4)
        seq = GroundSetEvaluator(x_aff, ds, oracle, no_bins()).evaluate_many(
            ground.triples, workers=1
        )
        par = GroundSetEvaluator(x_aff, ds, oracle, no_bins()).evaluate_many(
            ground.triples, workers=4
        )
        assert len(seq) == len(par)
        for a, b in zip(seq, par):
            assert a.triple == b.triple
            assert np.array_equal(a.covered_mask, b.covered_mask)
            assert np.array_equal(a.corrected_mask, b.corrected_mask)
            assert a.recourse_cost == b.recourse_cost


def reduction_setup(seed, max_rows=25):
    rng = np.random.default_rng(seed)
    ds = random_cat_dataset(rng, max_rows=max_rows, max_features=4)
    oracle = random_linear_oracle(rng, ds.schema)
    x_aff = affected_set(oracle, ds.raw)
    pool = tuple(
        itemset([(f, int(v))])
        for f in range(len(ds.schema))
        for v in np.unique(ds.codes[:, f])
    )
    ground = generate_original(CandidateSets.shared(pool), 4)
    return ds, oracle, x_aff, ground


def kept_prefix_counts(result):
    """Corrected-count after each evaluated prefix, using only kept triples."""
    kept_ids = {e.triple.gen_index for e in result.kept}
    n_aff = result.evaluated[0].covered_mask.shape[0] if result.evaluated else 0
    union = np.zeros(n_aff, dtype=bool)
    out = []
    for ev in result.evaluated:
        if ev.triple.gen_index in kept_ids:
            union |= ev.corrected_mask
        out.append(int(union.sum()))
    return out


class TestVReduce:
    def test_modes_agree_at_every_prefix(self):
        for seed in range(20):
            ds, oracle, x_aff, ground = reduction_setup(seed)
            if not len(ground):
                continue
            budget = max(1, len(ground) // 2)
            add_all = v_reduce(ground, budget, "add-all", x_aff, ds, oracle, no_bins())
            gain = v_reduce(ground, budget, "acc-gain", x_aff, ds, oracle, no_bins())
            assert kept_prefix_counts(add_all) == kept_prefix_counts(gain)
            assert len(gain.kept) <= len(gain.evaluated)
            assert len(add_all.kept) == len(add_all.evaluated)

    def test_budget_slices_generation_prefix(self):
        ds, oracle, x_aff, ground = reduction_setup(7)
        budget = max(1, len(ground) - 2)
        result = v_reduce(ground, budget, "add-all", x_aff, ds, oracle, no_bins())
        assert result.evaluated_count == min(budget, len(ground))
        got = [e.triple for e in result.evaluated]
        assert got == ground.triples[: result.evaluated_count]

    def test_budget_larger_than_ground_set(self):
        ds, oracle, x_aff, ground = reduction_setup(9)
        result = v_reduce(ground, len(ground) + 50, "acc-gain", x_aff, ds, oracle, no_bins())
        assert result.evaluated_count == len(ground)

    def test_acc_gain_keeps_only_gainers(self):
        for seed in range(10):
            ds, oracle, x_aff, ground = reduction_setup(seed + 100)
            if not len(ground):
                continue
            result = v_reduce(ground, len(ground), "acc-gain", x_aff, ds, oracle, no_bins())
            union = np.zeros(len(x_aff), dtype=bool)
            for ev in result.kept:
                assert (ev.corrected_mask & ~union).any()
                union |= ev.corrected_mask

    def test_validation(self):
        ds, oracle, x_aff, ground = reduction_setup(3)
        with pytest.raises(ValueError):
            v_reduce(ground, 0, "add-all", x_aff, ds, oracle, no_bins())
        with pytest.raises(ValueError):
            v_reduce(ground, 5, "keep-some", x_aff, ds, oracle, no_bins())

    def test_trace_accuracy_is_monotone_and_final(self):
        ds, oracle, x_aff, ground = reduction_setup(11)
        result = v_reduce(ground, max(1, len(ground)), "acc-gain", x_aff, ds, oracle, no_bins())
        accs = [row.acc_percent for row in result.trace]
        assert accs == sorted(accs)
        assert result.trace[-1].evaluated == result.evaluated_count
        walls = [row.wall_seconds for row in result.trace]
        assert all(b >= a for a, b in zip(walls, walls[1:]))
        if len(x_aff):
            assert accs[-1] == pytest.approx(result.prefix_acc)

    def test_injected_clock_is_used(self):
        ds, oracle, x_aff, ground = reduction_setup(13)
        ticks = iter(range(1000))
        result = v_reduce(
            ground, max(1, len(ground)), "add-all", x_aff, ds, oracle, no_bins(),
            clock=lambda: float(next(ticks)),
        )
        assert result.trace[-1].wall_seconds == float(len(result.trace) - 1)
