"""Stage 2: triple evaluation, recourse metrics, objectives and V-Reduction.

Evaluating a triple answers three questions about the affected population:
who it covers (satisfies both If conditions), who it corrects (the Then
substitution flips the model to the favorable class), and what that change
costs. Correctness and the objective are computed in tandem from the same
model calls.

Modified inputs depend only on the (inner, then) pair, never on the outer
subgroup, so flip results are cached per pair and shared across all triples
that reuse it. Coverage masks are cached per itemset. Accuracy comparisons
happen on integer corrected-counts, never on floating-point percentages, so
the acc-gain gate in V-Reduction cannot flake at boundaries.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .dataset import BinningSpec, DiscretizedDataset
from .errors import NormalizerViolation
from .generation import GroundSet, Triple
from .itemsets import ItemSet, itemset_mask
from .model import AffectedSet, ModelOracle, apply_items


@dataclass
class EvaluatedTriple:
    """A triple plus its coverage, correction and cost statistics.

    covered_mask/corrected_mask are boolean arrays over positions in X_aff;
    recourse_cost is what each corrected individual pays (identical within a
    triple: the cost counts actually-changed features, and coverage pins the
    current bin of every Inner-If feature).
    """

    triple: Triple
    covered_mask: np.ndarray
    corrected_mask: np.ndarray
    recourse_cost: float

    @property
    def covered(self) -> list[int]:
        return [int(i) for i in np.flatnonzero(self.covered_mask)]

    @property
    def corrected(self) -> list[int]:
        return [int(i) for i in np.flatnonzero(self.corrected_mask)]

    @property
    def cost_per_corrected(self) -> dict[int, float]:
        return {i: self.recourse_cost for i in self.corrected}

    @property
    def covered_count(self) -> int:
        return int(self.covered_mask.sum())

    @property
    def corrected_count(self) -> int:
        return int(self.corrected_mask.sum())


@dataclass(frozen=True)
class SetMetrics:
    acc: float  # percentage of X_aff with a successful recourse
    cost: float | None  # average cheapest successful recourse; None when nobody corrected


@dataclass(frozen=True)
class SimplifiedObjective:
    """acc(R) - lambda * cost(R), clamped at zero."""

    lam: float = 0.0


@dataclass(frozen=True)
class FourTermObjective:
    """Weighted incorrect-recourse / cover / feature-cost / feature-change form.

    Normalizers keep each subtracted term non-negative over every feasible
    subset of the evaluated ground set.
    """

    lam1: float
    lam2: float
    lam3: float
    u_incorrect: float
    u_cost: float
    u_change: float

    def __post_init__(self):
        if min(self.u_incorrect, self.u_cost, self.u_change) <= 0:
            raise ValueError("normalizers must be positive")


ObjectiveConfig = SimplifiedObjective | FourTermObjective


class GroundSetEvaluator:
    """Evaluates triples against X_aff with shared itemset and flip caches."""

    def __init__(
        self,
        x_aff: AffectedSet,
        dataset: DiscretizedDataset,
        oracle: ModelOracle,
        binning: BinningSpec,
        cost_weights: dict[int, float] | None = None,
    ):
        self.x_aff = x_aff
        self.n_aff = len(x_aff)
        idx = list(x_aff.indices)
        self.aff_codes = dataset.codes[idx] if idx else np.zeros((0, len(dataset.schema)), dtype=np.int32)
        self.aff_rows = [dataset.raw.rows[i] for i in idx]
        self.oracle = oracle
        self.binning = binning
        self.schema = dataset.schema
        self.cost_weights = cost_weights or {}
        self._masks: dict[tuple, np.ndarray] = {}
        self._flips: dict[tuple, np.ndarray] = {}

    def mask(self, iset: ItemSet) -> np.ndarray:
        m = self._masks.get(iset.items)
        if m is None:
            m = itemset_mask(self.aff_codes, iset)
            self._masks[iset.items] = m
        return m

    def flip_mask(self, inner: ItemSet, then: ItemSet) -> np.ndarray:
        """True at X_aff positions satisfying `inner` whose Then substitution flips."""
        key = (inner.items, then.items)
        m = self._flips.get(key)
        if m is None:
            m = self._compute_flip(inner, then)
            self._flips[key] = m
        return m

    def _compute_flip(self, inner: ItemSet, then: ItemSet) -> np.ndarray:
        flips = np.zeros(self.n_aff, dtype=bool)
        rows = np.flatnonzero(self.mask(inner))
        if rows.size:
            modified = [
                apply_items(self.aff_rows[i], then, self.binning, self.schema) for i in rows
            ]
            flips[rows] = self.oracle.favorable_batch(modified)
        return flips

    def triple_cost(self, triple: Triple) -> float:
        return float(sum(self.cost_weights.get(f, 1.0) for f in triple.changed_features()))

    def evaluate(self, triple: Triple) -> EvaluatedTriple:
        covered = self.mask(triple.outer) & self.mask(triple.inner)
        corrected = covered & self.flip_mask(triple.inner, triple.then)
        return EvaluatedTriple(triple, covered, corrected, self.triple_cost(triple))

    def evaluate_many(self, triples, workers: int = 1) -> list[EvaluatedTriple]:
        """Evaluate in gen order; flip computation may fan out over threads.

        Results are identical for any worker count: each (inner, then) flip
        mask is a pure function of its pair, and the per-triple combination
        replays sequentially.
        """
        if workers > 1:
            pending, seen = [], set()
            for t in triples:
                key = (t.inner.items, t.then.items)
                if key not in seen and key not in self._flips:
                    seen.add(key)
                    pending.append((t.inner, t.then))
            # itemset masks fill sequentially first: dict writes stay single-threaded
            for inner, _ in pending:
                self.mask(inner)
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = pool.map(lambda p: self._compute_flip(*p), pending)
                for (inner, then), m in zip(pending, results):
                    self._flips[(inner.items, then.items)] = m
        return [self.evaluate(t) for t in triples]


def evaluate_triple(
    triple: Triple,
    x_aff: AffectedSet,
    dataset: DiscretizedDataset,
    oracle: ModelOracle,
    binning: BinningSpec,
    cost_weights: dict[int, float] | None = None,
) -> EvaluatedTriple:
    return GroundSetEvaluator(x_aff, dataset, oracle, binning, cost_weights).evaluate(triple)


# --- set-level metrics ---


def union_corrected(evaluated) -> np.ndarray | None:
    mask = None
    for t in evaluated:
        mask = t.corrected_mask.copy() if mask is None else mask | t.corrected_mask
    return mask


def acc_fraction(evaluated, n_aff: int) -> Fraction:
    if n_aff == 0:
        return Fraction(0)
    mask = union_corrected(evaluated)
    count = 0 if mask is None else int(mask.sum())
    return Fraction(100 * count, n_aff)


def cost_fraction(evaluated) -> Fraction | None:
    """Average over corrected individuals of their cheapest correcting triple."""
    best: dict[int, Fraction] = {}
    for t in evaluated:
        c = Fraction(t.recourse_cost)
        for i in np.flatnonzero(t.corrected_mask):
            i = int(i)
            if i not in best or c < best[i]:
                best[i] = c
    if not best:
        return None
    return sum(best.values()) / len(best)


def metrics(evaluated, x_aff: AffectedSet) -> SetMetrics:
    acc = acc_fraction(evaluated, len(x_aff))
    cost = cost_fraction(evaluated)
    return SetMetrics(float(acc), None if cost is None else float(cost))


# --- objectives ---


def objective_exact(evaluated, cfg: ObjectiveConfig, n_aff: int) -> Fraction:
    """Exact-rational objective value; the optimizer compares these directly."""
    if isinstance(cfg, SimplifiedObjective):
        acc = acc_fraction(evaluated, n_aff)
        cost = cost_fraction(evaluated)
        value = acc if cost is None else acc - Fraction(cfg.lam) * cost
        return max(Fraction(0), value)
    incorrect = sum(t.covered_count - t.corrected_count for t in evaluated)
    cover_mask = None
    for t in evaluated:
        cover_mask = t.covered_mask.copy() if cover_mask is None else cover_mask | t.covered_mask
    cover = 0 if cover_mask is None else int(cover_mask.sum())
    feature_cost = sum(Fraction(t.recourse_cost) for t in evaluated)
    feature_change = sum(len(t.triple.changed_features()) for t in evaluated)
    value = (
        Fraction(cfg.lam1) * (Fraction(cfg.u_incorrect) - incorrect)
        + cover
        + Fraction(cfg.lam2) * (Fraction(cfg.u_cost) - feature_cost)
        + Fraction(cfg.lam3) * (Fraction(cfg.u_change) - feature_change)
    )
    if value < 0:
        raise NormalizerViolation(
            f"four-term objective went negative ({float(value):g}); raise the normalizers"
        )
    return value


def objective(evaluated, cfg: ObjectiveConfig, x_aff: AffectedSet) -> float:
    return float(objective_exact(evaluated, cfg, len(x_aff)))


def four_term_normalizers(evaluated, eps1: int) -> tuple[float, float, float]:
    """Normalizers sized from the evaluated ground set: eps1-scaled per-triple maxima."""
    max_inc = max((t.covered_count - t.corrected_count for t in evaluated), default=0)
    max_cost = max((t.recourse_cost for t in evaluated), default=0.0)
    max_change = max((len(t.triple.changed_features()) for t in evaluated), default=0)
    return (
        max(1.0, float(eps1 * max_inc)),
        max(1.0, float(eps1 * max_cost)),
        max(1.0, float(eps1 * max_change)),
    )


# --- V-Reduction ---


@dataclass
class TraceRow:
    wall_seconds: float
    stage: str
    evaluated: int | None = None
    kept: int | None = None
    acc_percent: float | None = None
    cost: float | None = None
    objective: float | None = None


@dataclass
class ReducedGroundSet:
    """Outcome of V-Reduction: the evaluated prefix and the kept subset."""

    source: GroundSet
    evaluated: list[EvaluatedTriple]  # prefix, gen order
    kept: list[EvaluatedTriple]
    evaluated_count: int
    mode: str  # "add-all" | "acc-gain"
    trace: list[TraceRow] = field(default_factory=list)

    @property
    def prefix_acc(self) -> float:
        n = self.evaluated[0].covered_mask.shape[0] if self.evaluated else 0
        return float(acc_fraction(self.evaluated, n)) if n else 0.0


TRACE_EVERY = 100  # evaluations between trace samples


def v_reduce(
    ground: GroundSet,
    budget: int,
    mode: str,
    x_aff: AffectedSet,
    dataset: DiscretizedDataset,
    oracle: ModelOracle,
    binning: BinningSpec,
    cost_weights: dict[int, float] | None = None,
    workers: int = 1,
    clock=None,
) -> ReducedGroundSet:
    """Evaluate the first min(budget, |V|) triples and keep a subset.

    "add-all" keeps every evaluated triple; "acc-gain" keeps a triple only if
    it corrects someone no earlier kept triple corrected, which leaves the
    cumulative accuracy of the kept set equal to the full prefix's at every
    step. The trace records the accuracy-vs-evaluations curve.
    """
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    if mode not in ("add-all", "acc-gain"):
        raise ValueError(f"unknown V-Reduction mode {mode!r}")
    evaluator = GroundSetEvaluator(x_aff, dataset, oracle, binning, cost_weights)
    start = time.perf_counter()
    if clock is None:
        clock = lambda: time.perf_counter() - start

    prefix = ground.triples[: min(budget, len(ground.triples))]
    evaluated = evaluator.evaluate_many(prefix, workers=workers)

    n_aff = len(x_aff)
    kept: list[EvaluatedTriple] = []
    trace: list[TraceRow] = []
    union = np.zeros(n_aff, dtype=bool)
    count = 0

    def record(i):
        acc = 100.0 * count / n_aff if n_aff else 0.0
        trace.append(TraceRow(clock(), "stage2", evaluated=i, kept=len(kept), acc_percent=acc))

    for i, ev in enumerate(evaluated, start=1):
        gained = int((ev.corrected_mask & ~union).sum())
        if gained > 0:
            union |= ev.corrected_mask
            count += gained
            kept.append(ev)
            record(i)
        elif mode == "add-all":
            kept.append(ev)
        if i % TRACE_EVERY == 0:
            record(i)
    record(len(evaluated))
    return ReducedGroundSet(ground, evaluated, kept, len(evaluated), mode, trace)
