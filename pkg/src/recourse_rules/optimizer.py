"""Stage 3: V-Selection and local-search maximization under set constraints.

The search is a deterministic first-improvement local search over single-move
neighborhoods: add one triple, delete one, or exchange one-out-one-in. A move
is taken iff it keeps the solution feasible (at most eps1 triples, at most
eps3 distinct subgroup descriptors) and raises the exact-rational objective
by more than delta. Scan order is fixed (additions by gen_index, deletions by
position, exchanges position-major then gen_index), so the trajectory replays
identically on identical inputs. Multi-element exchanges and restarts are
deliberately out of scope.

When the objective is plain recourse accuracy (lambda = 0) the scans run on a
stacked corrected-mask matrix: a move's exact objective delta is an integer
count of newly corrected individuals, so the vectorized scan accepts exactly
the move the sequential scan would. With lambda > 0 the accuracy/cost
trade-off is still evaluated exactly, but incrementally: a candidate's value
is derived from the base subset's per-individual cheapest-cost table instead
of re-aggregating the whole subset per probe.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .evaluation import (
    EvaluatedTriple,
    ObjectiveConfig,
    SetMetrics,
    SimplifiedObjective,
    TraceRow,
    acc_fraction,
    cost_fraction,
    objective_exact,
)

CONVERGED = "converged"
BOUND_REACHED = "bound-reached"
BUDGET_EXHAUSTED = "budget-exhausted"


@dataclass(frozen=True)
class OptimizerConfig:
    eps1: int = 20
    eps3: int = 10
    delta: float = 1e-9  # minimum objective improvement for a move
    bound_tolerance: float = 0.0
    wall_clock_budget: float | None = None  # seconds; None disables the check
    seed: int = 0  # echoed into artifacts; the search draws no randomness

    def __post_init__(self):
        if self.eps1 < 1 or self.eps3 < 1:
            raise ValueError("eps1 and eps3 must be positive")
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.bound_tolerance < 0:
            raise ValueError("bound_tolerance must be non-negative")


@dataclass
class RecourseSet:
    triples: list[EvaluatedTriple]
    metrics: SetMetrics
    objective_value: float
    termination: str
    accepted_moves: int = 0


def v_select(evaluated: Sequence[EvaluatedTriple], s: int) -> list[EvaluatedTriple]:
    """Keep the s best triples by corrected-count, ties to the earliest generated.

    When s covers the whole input, no sorting occurs and the input order is
    preserved.
    """
    if s < 1:
        raise ValueError(f"s must be >= 1, got {s}")
    if s >= len(evaluated):
        return list(evaluated)
    ranked = sorted(evaluated, key=lambda e: (-e.corrected_count, e.triple.gen_index))
    return ranked[:s]


def early_gate(acc_of_v: float, target: float) -> bool:
    """True when Stage 3 is worth running: the ground set's accuracy caps acc(R)."""
    return acc_of_v >= target


class _Search:
    """Shared state for one maximize() call."""

    def __init__(self, cands, cfg: OptimizerConfig, obj: ObjectiveConfig):
        self.cands = cands
        self.cfg = cfg
        self.obj = obj
        self.n_aff = int(cands[0].covered_mask.shape[0])
        self.in_r: list[int] = []  # positions into cands, insertion order
        self.cur = Fraction(0)
        self.delta = Fraction(cfg.delta)
        simplified = isinstance(obj, SimplifiedObjective)
        self.fast = simplified and obj.lam == 0
        self.semi = simplified and obj.lam != 0
        if self.fast or self.semi:
            self.corrected = np.stack([e.corrected_mask for e in cands])
            self.counts = self.corrected.sum(axis=1)
            outer_keys: dict[tuple, int] = {}
            self.outer_ids = np.array(
                [outer_keys.setdefault(e.triple.outer.items, len(outer_keys)) for e in cands]
            )
        if self.fast:
            # objective gain of g newly corrected rows is 100*g/n_aff; the
            # smallest accepted g solves that against delta exactly
            self.gain_min = (
                math.floor(self.delta * self.n_aff / 100) + 1 if self.n_aff else 1
            )
        if self.semi:
            self.lam = Fraction(obj.lam)
            self.cost_fr = [Fraction(e.recourse_cost) for e in cands]
            self.corr_idx = [
                [int(i) for i in np.flatnonzero(e.corrected_mask)] for e in cands
            ]

    def f(self, subset) -> Fraction:
        return objective_exact(subset, self.obj, self.n_aff)

    def selected(self) -> list[EvaluatedTriple]:
        return [self.cands[j] for j in self.in_r]

    def _cost_state(self, positions):
        """Union mask and per-individual cheapest cost over a base subset."""
        union = np.zeros(self.n_aff, dtype=bool)
        best: dict[int, Fraction] = {}
        for j in positions:
            union |= self.cands[j].corrected_mask
            c = self.cost_fr[j]
            for i in self.corr_idx[j]:
                held = best.get(i)
                if held is None or c < held:
                    best[i] = c
        return union, best, sum(best.values(), Fraction(0))

    def _value_with(self, state, pos) -> Fraction:
        """objective_exact(base + [cands[pos]]) from the base's cost state."""
        union, best, total = state
        gained = int((self.cands[pos].corrected_mask & ~union).sum())
        c = self.cost_fr[pos]
        for i in self.corr_idx[pos]:
            held = best.get(i)
            if held is None:
                total += c
            elif c < held:
                total += c - held
        count = len(best) + gained
        if count == 0:
            return Fraction(0)
        acc = Fraction(100 * count, self.n_aff) if self.n_aff else Fraction(0)
        return max(Fraction(0), acc - self.lam * total / count)

    def _feasible_candidates(self, base_positions) -> np.ndarray:
        """Mask of candidates joinable to the base without breaking eps3."""
        base_ids = self.outer_ids[base_positions] if base_positions else np.empty(0, dtype=int)
        distinct = np.unique(base_ids)
        ok = np.isin(self.outer_ids, distinct)
        if distinct.size < self.cfg.eps3:
            ok[:] = True
        ok[base_positions] = False  # membership, not a constraint, but same skip
        ok[self.in_r] = False
        return ok

    def init_singleton(self):
        if self.fast:
            best_pos = int(np.argmax(self.counts))  # first max wins ties
        else:
            best_val = None
            best_pos = 0
            for pos, cand in enumerate(self.cands):
                val = self.f([cand])
                if best_val is None or val > best_val:
                    best_pos, best_val = pos, val
        self.in_r = [best_pos]
        self.cur = self.f([self.cands[best_pos]])

    def try_additions(self) -> bool:
        if len(self.in_r) >= self.cfg.eps1:
            return False
        if self.fast:
            union = np.zeros(self.n_aff, dtype=bool)
            for j in self.in_r:
                union |= self.cands[j].corrected_mask
            gains = (self.corrected & ~union).sum(axis=1)
            ok = self._feasible_candidates(self.in_r) & (gains >= self.gain_min)
            hits = np.flatnonzero(ok)
            if hits.size == 0:
                return False
            pos = int(hits[0])
            self.in_r.append(pos)
            self.cur = self.f(self.selected())
            return True
        if self.semi:
            state = self._cost_state(self.in_r)
            for pos in np.flatnonzero(self._feasible_candidates(self.in_r)):
                val = self._value_with(state, int(pos))
                if val > self.cur + self.delta:
                    self.in_r.append(int(pos))
                    self.cur = val
                    return True
            return False
        member = set(self.in_r)
        current = self.selected()
        outer_set = {e.triple.outer.items for e in current}
        for pos, cand in enumerate(self.cands):
            if pos in member:
                continue
            if cand.triple.outer.items not in outer_set and len(outer_set) >= self.cfg.eps3:
                continue
            val = self.f(current + [cand])
            if val > self.cur + self.delta:
                self.in_r.append(pos)
                self.cur = val
                return True
        return False

    def try_deletions(self) -> bool:
        if self.fast:
            return False  # accuracy is monotone: a deletion can never gain
        for k in range(len(self.in_r)):
            subset = [self.cands[j] for i, j in enumerate(self.in_r) if i != k]
            val = self.f(subset)
            if val > self.cur + self.delta:
                del self.in_r[k]
                self.cur = val
                return True
        return False

    def try_exchanges(self) -> bool:
        for k in range(len(self.in_r)):
            base_positions = [j for i, j in enumerate(self.in_r) if i != k]
            if self.fast:
                union = np.zeros(self.n_aff, dtype=bool)
                for j in base_positions:
                    union |= self.cands[j].corrected_mask
                base_count = int(union.sum())
                cur_count = base_count + int(
                    (self.cands[self.in_r[k]].corrected_mask & ~union).sum()
                )
                gains = (self.corrected & ~union).sum(axis=1)
                ok = self._feasible_candidates(base_positions)
                ok &= base_count + gains - cur_count >= self.gain_min
                hits = np.flatnonzero(ok)
                if hits.size == 0:
                    continue
                self.in_r[k] = int(hits[0])
                self.cur = self.f(self.selected())
                return True
            if self.semi:
                state = self._cost_state(base_positions)
                for pos in np.flatnonzero(self._feasible_candidates(base_positions)):
                    val = self._value_with(state, int(pos))
                    if val > self.cur + self.delta:
                        self.in_r[k] = int(pos)
                        self.cur = val
                        return True
                continue
            member = set(self.in_r)
            base = [self.cands[j] for j in base_positions]
            base_outers = {e.triple.outer.items for e in base}
            for pos, cand in enumerate(self.cands):
                if pos in member:
                    continue
                if cand.triple.outer.items not in base_outers and len(base_outers) >= self.cfg.eps3:
                    continue
                val = self.f(base + [cand])
                if val > self.cur + self.delta:
                    self.in_r[k] = pos
                    self.cur = val
                    return True
        return False


def maximize(
    ground: Sequence[EvaluatedTriple],
    cfg: OptimizerConfig,
    obj: ObjectiveConfig,
    acc_of_v: float | Fraction,
    clock=None,
    trace: list[TraceRow] | None = None,
) -> RecourseSet:
    """Local search from the best feasible singleton.

    Terminates when no single move improves the objective by > delta
    (converged), when acc(R) >= acc_of_v - bound_tolerance (the ground set's
    accuracy is an upper bound, so nothing more can be gained), or when the
    wall-clock budget runs out, checked between accepted moves.
    """
    start = time.perf_counter()
    if clock is None:
        clock = lambda: time.perf_counter() - start
    cands = sorted(ground, key=lambda e: e.triple.gen_index)
    if not cands:
        return RecourseSet([], SetMetrics(0.0, None), 0.0, CONVERGED)

    search = _Search(cands, cfg, obj)
    bound = Fraction(acc_of_v) - Fraction(cfg.bound_tolerance)

    def record():
        if trace is None:
            return
        sub = search.selected()
        acc = acc_fraction(sub, search.n_aff)
        cost = cost_fraction(sub)
        trace.append(
            TraceRow(
                clock(),
                "stage3",
                kept=len(sub),
                acc_percent=float(acc),
                cost=None if cost is None else float(cost),
                objective=float(search.cur),
            )
        )

    search.init_singleton()
    accepted = 0
    record()
    termination = None
    if acc_fraction(search.selected(), search.n_aff) >= bound:
        termination = BOUND_REACHED
    while termination is None:
        if cfg.wall_clock_budget is not None and clock() > cfg.wall_clock_budget:
            termination = BUDGET_EXHAUSTED
            break
        if not (search.try_additions() or search.try_deletions() or search.try_exchanges()):
            termination = CONVERGED
            break
        accepted += 1
        record()
        if acc_fraction(search.selected(), search.n_aff) >= bound:
            termination = BOUND_REACHED

    final = search.selected()
    acc = acc_fraction(final, search.n_aff)
    cost = cost_fraction(final)
    return RecourseSet(
        final,
        SetMetrics(float(acc), None if cost is None else float(cost)),
        float(search.cur),
        termination,
        accepted,
    )
