"""Shared builders for the test suite.

Most tests run on small all-categorical datasets where the discretized code
of a cell equals its raw category index, so brute-force oracles can work
directly on the integer matrix without touching binning.
"""

import numpy as np
import pytest

from recourse_rules.dataset import BinningSpec, DiscretizedDataset, RawDataset
from recourse_rules.evaluation import EvaluatedTriple
from recourse_rules.generation import Triple
from recourse_rules.itemsets import itemset
from recourse_rules.model import MlpWeights, ModelOracle
from recourse_rules.schema import (
    Categorical,
    Feature,
    FeatureEncoding,
    FeatureSchema,
    InputEncoding,
)


def cat_schema(value_counts, actionable=None):
    """Categorical features f0..fk with categories v0..vN each."""
    feats = []
    for i, n in enumerate(value_counts):
        act = True if actionable is None else bool(actionable[i])
        values = tuple(f"v{j}" for j in range(n))
        feats.append(Feature(f"f{i}", Categorical(values), act))
    return FeatureSchema(tuple(feats))


def dataset_from_codes(codes, value_counts=None, actionable=None):
    codes = np.asarray(codes, dtype=np.int32)
    if value_counts is None:
        value_counts = [
            max(2, int(codes[:, j].max()) + 1) for j in range(codes.shape[1])
        ]
    schema = cat_schema(value_counts, actionable)
    rows = tuple(tuple(f"v{int(c)}" for c in row) for row in codes)
    return DiscretizedDataset(schema, codes, RawDataset(schema, rows))


def random_cat_dataset(rng, max_rows=8, max_features=4, max_values=3):
    n_rows = int(rng.integers(1, max_rows + 1))
    n_feat = int(rng.integers(1, max_features + 1))
    value_counts = [int(rng.integers(2, max_values + 1)) for _ in range(n_feat)]
    codes = np.column_stack(
        [rng.integers(0, vc, size=n_rows) for vc in value_counts]
    ).astype(np.int32)
    return dataset_from_codes(codes, value_counts)


def onehot_encoding(schema):
    per, col = [], 0
    for f in schema.features:
        n = len(f.kind.values)
        per.append(FeatureEncoding(f.name, "onehot", tuple(range(col, col + n))))
        col += n
    return InputEncoding(tuple(per))


def linear_oracle(schema, scores, bias=0.0):
    """One dense layer with a softmax head over an all-onehot encoding.

    `scores` lists per-feature weight sequences in category order; class 1 is
    favorable and wins exactly when the summed score plus bias is positive.
    """
    flat = np.array([w for per_feature in scores for w in per_feature], dtype=float)
    w = np.vstack([np.zeros_like(flat), flat])
    b = np.array([0.0, float(bias)])
    weights = MlpWeights(((w, b),), favorable_class=1, encoding=onehot_encoding(schema))
    return ModelOracle(weights, schema)


def random_linear_oracle(rng, schema, bias_range=(-2.0, 2.0)):
    scores = [
        [float(rng.uniform(-1.5, 1.5)) for _ in f.kind.values]
        for f in schema.features
    ]
    bias = float(rng.uniform(*bias_range))
    return linear_oracle(schema, scores, bias)


def no_bins():
    return BinningSpec({}, {})


def synthetic_triple(gen_index, outer_value, inner_value=0, then_value=1):
    """A structurally valid triple keyed only by its outer group and index."""
    return Triple(
        outer=itemset([(0, outer_value)]),
        inner=itemset([(1, inner_value)]),
        then=itemset([(1, then_value)]),
        gen_index=gen_index,
    )


def synthetic_ground(rng, n_triples, n_aff, n_outers=3, density=0.3):
    """Evaluated triples with random masks; corrected is kept inside covered."""
    out = []
    for g in range(n_triples):
        covered = rng.random(n_aff) < max(density, 0.05) * 2
        corrected = covered & (rng.random(n_aff) < 0.6)
        triple = synthetic_triple(g, int(rng.integers(0, n_outers)))
        out.append(
            EvaluatedTriple(
                triple,
                covered.astype(bool),
                corrected.astype(bool),
                recourse_cost=float(rng.integers(1, 4)),
            )
        )
    return out


@pytest.fixture(scope="session")
def fixture_dir(tmp_path_factory):
    from recourse_rules.fixtures import copy_fixture

    return copy_fixture(tmp_path_factory.mktemp("fixture"))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Repeat the acceptance-criteria verdict lines after the test summary."""
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.line(line)
