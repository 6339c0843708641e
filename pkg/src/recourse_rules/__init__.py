"""Two-level recourse rule sets for tabular black-box classifiers.

The engine mines frequent itemsets over a discretized dataset, generates a
ground set of Outer-If/Inner-If/Then recourse triples, evaluates their
coverage, correctness and cost against the affected population, and selects
a small, constrained rule set by deterministic local search. Ground-set
generation and evaluation offer pruned variants (RL-Reduction,
Then-Generation, V-Reduction, V-Selection) that trade completeness for
speed without touching the result contracts.
"""

from .dataset import BinningSpec, DiscretizedDataset, RawDataset, discretize, fit_bins, load_dataset
from .errors import (
    ConfigError,
    EngineError,
    IncompatibleRuns,
    NormalizerViolation,
    NotCovered,
    SchemaError,
    StageFailure,
    ThresholdBelowFloor,
)
from .evaluation import (
    EvaluatedTriple,
    FourTermObjective,
    SetMetrics,
    SimplifiedObjective,
    evaluate_triple,
    metrics,
    objective,
    v_reduce,
)
from .generation import (
    CandidateSets,
    GroundSet,
    Triple,
    generate_original,
    generate_rl_reduced,
    generate_then,
    rl_reduce,
)
from .itemsets import Item, ItemSet, apriori, itemset
from .model import AffectedSet, MlpWeights, ModelOracle, affected_set, apply_then, load_model, save_model
from .optimizer import OptimizerConfig, RecourseSet, early_gate, maximize, v_select
from .pipeline import RunConfig, RunReport, compare, run, validate_config
from .schema import Categorical, Continuous, Feature, FeatureSchema, load_sidecar, save_sidecar

__version__ = "0.1.0"

__all__ = [
    "AffectedSet",
    "BinningSpec",
    "CandidateSets",
    "Categorical",
    "ConfigError",
    "Continuous",
    "DiscretizedDataset",
    "EngineError",
    "EvaluatedTriple",
    "Feature",
    "FeatureSchema",
    "FourTermObjective",
    "GroundSet",
    "IncompatibleRuns",
    "Item",
    "ItemSet",
    "MlpWeights",
    "ModelOracle",
    "NormalizerViolation",
    "NotCovered",
    "OptimizerConfig",
    "RawDataset",
    "RecourseSet",
    "RunConfig",
    "RunReport",
    "SchemaError",
    "SetMetrics",
    "SimplifiedObjective",
    "StageFailure",
    "ThresholdBelowFloor",
    "Triple",
    "affected_set",
    "apply_then",
    "apriori",
    "compare",
    "discretize",
    "early_gate",
    "evaluate_triple",
    "fit_bins",
    "generate_original",
    "generate_rl_reduced",
    "generate_then",
    "itemset",
    "load_dataset",
    "load_model",
    "load_sidecar",
    "maximize",
    "metrics",
    "objective",
    "rl_reduce",
    "run",
    "save_model",
    "save_sidecar",
    "v_reduce",
    "v_select",
    "validate_config",
    "__version__",
]
