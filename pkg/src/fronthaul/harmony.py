"""Hierarchical harmony search for fronthaul bit allocation

Stage 1 searches one bit count per AP, shared by all UEs of that AP, under
the per-UE budget floor(b_max / K). Stage 2 refines the bits of one AP at a
time across its UEs under the budget K * b_AP,m while every other AP is held
at its current best. The stage drivers take the search operator as an
argument so the comparator metaheuristics run through the same hierarchy.
"""

import logging
from contextlib import nullcontext
from typing import Callable, ContextManager, Iterable, List, NamedTuple, Optional, Sequence

import numpy as np

from .errors import InfeasibleAllocationError
from .models import (
    BitAllocation,
    ChannelStatistics,
    Harmony,
    HSParams,
    Objective,
    QuantizationProfile,
    SystemConfig,
)
from .sinr import AllocationEvaluator


logger = logging.getLogger(__name__)

Evaluate = Callable[[np.ndarray], float]


class StageProblem:
    """Integer vector search with entries in [0, max_bits] and a sum budget"""

    def __init__(self, dim: int, budget: int, max_bits: int, evaluate: Evaluate,
                 seeds: Iterable[np.ndarray] = (),
                 calibration: Callable[[], ContextManager] = nullcontext):
        self.dim = dim
        self.budget = budget
        self.max_bits = max_bits
        self.evaluate = evaluate
        self.seeds = [np.asarray(seed, dtype=np.int64) for seed in seeds]
        self.calibration = calibration

    @property
    def entry_cap(self) -> int:
        return min(self.max_bits, self.budget)

    def random_vector(self, rng: np.random.Generator) -> np.ndarray:
        return random_vector(self.dim, self.budget, self.max_bits, rng)


class SearchOutcome(NamedTuple):
    best: np.ndarray
    best_eval: float
    trace: List[float]


class StageResult(NamedTuple):
    """Best allocation of a stage, its evaluation and the best-so-far trace"""

    allocation: object
    best_eval: float
    trace: List[float]


SearchOperator = Callable[[StageProblem, object, np.random.Generator], SearchOutcome]


def repair(candidate: Sequence[int], budget: int, rng: np.random.Generator) -> np.ndarray:
    """Remove single bits from random positive entries until the sum fits the budget

    Each step draws ``rng.integers(n)`` over the current positive positions.
    """
    vector = np.array(candidate, dtype=np.int64)
    if np.any(vector < 0):
        raise ValueError(f"candidate entries must be non-negative, got {vector.tolist()}")
    excess = int(vector.sum()) - budget
    while excess > 0:
        positive = np.flatnonzero(vector)
        vector[positive[rng.integers(positive.size)]] -= 1
        excess -= 1
    return vector


def random_vector(dim: int, budget: int, max_bits: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform entries on [0, min(max_bits, budget)], then repaired"""
    cap = min(max_bits, budget)
    return repair(rng.integers(0, cap + 1, size=dim), budget, rng)


class HarmonyMemory:
    """Harmonies kept sorted by evaluation, best first

    Sorting is stable so harmonies with equal evaluations keep their order.
    """

    def __init__(self, capacity: int, max_bits: int, rows: Optional[List[Harmony]] = None):
        self.capacity = capacity
        self.max_bits = max_bits
        self.rows: List[Harmony] = sorted(rows or [], key=lambda row: -row.evaluation)

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def is_full(self) -> bool:
        return len(self.rows) >= self.capacity

    @property
    def best(self) -> Harmony:
        return self.rows[0]

    @property
    def worst(self) -> Harmony:
        return self.rows[-1]

    def variables(self) -> np.ndarray:
        """Rows stacked into an N_HM x dim matrix"""
        return np.stack([row.variables for row in self.rows])

    def evaluations(self) -> List[float]:
        return [row.evaluation for row in self.rows]


def initial_memory(problem: StageProblem, params: HSParams, rng: np.random.Generator) -> HarmonyMemory:
    """Seeds first, then random feasible vectors, each evaluated once"""
    rows = []
    for seed in problem.seeds[: params.hm_size]:
        vector = repair(np.minimum(seed, problem.max_bits), problem.budget, rng)
        rows.append(Harmony(variables=vector, evaluation=problem.evaluate(vector)))
    while len(rows) < params.hm_size:
        vector = problem.random_vector(rng)
        rows.append(Harmony(variables=vector, evaluation=problem.evaluate(vector)))
    return HarmonyMemory(params.hm_size, problem.max_bits, rows)


def improvise(memory: HarmonyMemory, params: HSParams, budget: int, rng: np.random.Generator) -> np.ndarray:
    """New candidate by memory consideration with probability D, else at random

    Memory consideration takes entry i from a row drawn uniformly and
    independently for every position.
    """
    stored = memory.variables()
    dim = stored.shape[1]
    if rng.random() < params.hmcr:
        picks = rng.integers(len(memory), size=dim)
        candidate = stored[picks, np.arange(dim)]
    else:
        candidate = rng.integers(0, min(memory.max_bits, budget) + 1, size=dim)
    return repair(candidate, budget, rng)


def update_memory(memory: HarmonyMemory, new: Harmony) -> HarmonyMemory:
    """Replace the worst row when ``new`` is strictly better, otherwise keep memory"""
    if new.evaluation <= memory.worst.evaluation:
        return memory
    return HarmonyMemory(memory.capacity, memory.max_bits, memory.rows[:-1] + [new])


def harmony_search(problem: StageProblem, params: HSParams, rng: np.random.Generator) -> SearchOutcome:
    """Initialize the memory, then improvise and update N_iter times

    The trace holds the best evaluation after initialization and after every
    improvisation, so it has N_iter + 1 entries.
    """
    memory = initial_memory(problem, params, rng)
    trace = [memory.best.evaluation]
    for iteration in range(params.iterations):
        vector = improvise(memory, params, problem.budget, rng)
        memory = update_memory(memory, Harmony(variables=vector, evaluation=problem.evaluate(vector)))
        trace.append(memory.best.evaluation)
        logger.debug("HS iteration %d: best %.6f, worst %.6f", iteration + 1,
                     memory.best.evaluation, memory.worst.evaluation)
    return SearchOutcome(memory.best.variables.copy(), memory.best.evaluation, trace)


def equal_ap_bits(config: SystemConfig) -> np.ndarray:
    """AP vector of the equal allocation floor(b_max / (M K))"""
    return np.full(config.num_aps, config.equal_bits, dtype=np.int64)


def expand_ap_bits(ap_bits: np.ndarray, num_ues: int) -> np.ndarray:
    return np.repeat(np.asarray(ap_bits, dtype=np.int64).reshape(-1, 1), num_ues, axis=1)


def ap_level_problem(evaluator: AllocationEvaluator, config: SystemConfig, seeded: bool = True) -> StageProblem:
    """Stage-1 problem, seeded with the equal allocation unless ``seeded`` is False"""
    return StageProblem(
        dim=config.num_aps,
        budget=config.ue_budget,
        max_bits=evaluator.profile.max_bits,
        evaluate=lambda ap_bits: evaluator(expand_ap_bits(ap_bits, config.num_ues)),
        seeds=[equal_ap_bits(config)] if seeded else [],
        calibration=evaluator.calibration,
    )


def search_ap_level(search: SearchOperator, params, evaluator: AllocationEvaluator,
                    config: SystemConfig, rng: np.random.Generator, seeded: bool = True) -> StageResult:
    """Run ``search`` on the Stage-1 problem and return the best AP vector

    Unseeded searches start from random feasible vectors only.
    """
    outcome = search(ap_level_problem(evaluator, config, seeded), params, rng)
    logger.info("Stage 1 finished: AP bits %s, evaluation %.6f", outcome.best.tolist(), outcome.best_eval)
    return StageResult(outcome.best, outcome.best_eval, outcome.trace)


def search_ue_level(search: SearchOperator, params, outer_cycles: int, ap_bits: np.ndarray,
                    evaluator: AllocationEvaluator, config: SystemConfig,
                    rng: np.random.Generator) -> StageResult:
    """Refine each AP's UE split in turn, for ``outer_cycles`` sweeps over the APs

    Every per-AP search starts from a fresh population seeded with that AP's
    current row, so the best evaluation never drops.
    """
    current = expand_ap_bits(ap_bits, config.num_ues)
    best_eval = None
    trace: List[float] = []
    for cycle in range(outer_cycles):
        for m in range(config.num_aps):
            def evaluate(row: np.ndarray, m: int = m) -> float:
                candidate = current.copy()
                candidate[m] = row
                return evaluator(candidate)

            problem = StageProblem(
                dim=config.num_ues,
                budget=config.num_ues * int(ap_bits[m]),
                max_bits=evaluator.profile.max_bits,
                evaluate=evaluate,
                seeds=[current[m].copy()],
                calibration=evaluator.calibration,
            )
            outcome = search(problem, params, rng)
            current[m] = outcome.best
            best_eval = outcome.best_eval
            trace.extend(outcome.trace)
        logger.debug("Stage 2 cycle %d: evaluation %.6f", cycle + 1, best_eval)
    logger.info("Stage 2 finished: evaluation %.6f", best_eval)
    return StageResult(BitAllocation(bits=current), best_eval, trace)


def init_stage1_memory(stats: ChannelStatistics, config: SystemConfig, profile: QuantizationProfile,
                       params: HSParams, objective: Objective, rng: np.random.Generator,
                       evaluator: Optional[AllocationEvaluator] = None) -> HarmonyMemory:
    """Initial Stage-1 harmony memory, the equal allocation included"""
    evaluator = evaluator or AllocationEvaluator(stats, config, profile, objective)
    return initial_memory(ap_level_problem(evaluator, config), params, rng)


def improvise_stage1(memory: HarmonyMemory, params: HSParams, budget: int,
                     rng: np.random.Generator) -> np.ndarray:
    """New Stage-1 AP vector"""
    return improvise(memory, params, budget, rng)


def run_stage1(stats: ChannelStatistics, config: SystemConfig, profile: QuantizationProfile,
               params: HSParams, objective: Objective, rng: np.random.Generator,
               evaluator: Optional[AllocationEvaluator] = None) -> StageResult:
    """Harmony search over the AP-level bit vector, bits shared by the UEs of an AP

    Returns:
        StageResult with the AP bit vector, its evaluation and the trace
    """
    evaluator = evaluator or AllocationEvaluator(stats, config, profile, objective)
    return search_ap_level(harmony_search, params, evaluator, config, rng)


def run_stage2(stats: ChannelStatistics, config: SystemConfig, profile: QuantizationProfile,
               params: HSParams, objective: Objective, ap_bits: np.ndarray, rng: np.random.Generator,
               evaluator: Optional[AllocationEvaluator] = None) -> StageResult:
    """Harmony search over the UE bits of one AP at a time, starting from ``ap_bits``

    Raises:
        InfeasibleAllocationError: If ``ap_bits`` exceeds the Stage-1 budget

    Returns:
        StageResult with the full BitAllocation, its evaluation and the trace
    """
    evaluator = evaluator or AllocationEvaluator(stats, config, profile, objective)
    ap_bits = np.asarray(ap_bits, dtype=np.int64)
    if int(ap_bits.sum()) > config.ue_budget:
        raise InfeasibleAllocationError(
            f"AP bits {ap_bits.tolist()} exceed the Stage-1 budget {config.ue_budget}"
        )
    return search_ue_level(harmony_search, params, params.outer_cycles, ap_bits, evaluator, config, rng)
