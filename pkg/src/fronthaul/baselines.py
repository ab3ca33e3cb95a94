"""Reference allocators: exhaustive search, equal split and comparator metaheuristics"""

import logging
import math
from functools import partial
from itertools import combinations
from typing import Callable, List, NamedTuple, Optional, Tuple

import numpy as np
from ortools.sat.python import cp_model

from .errors import EnumerationCapError, FronthaulError
from .harmony import (
    SearchOutcome,
    StageProblem,
    StageResult,
    expand_ap_bits,
    repair,
    search_ap_level,
    search_ue_level,
)
from .models import (
    BitAllocation,
    ChannelStatistics,
    GAParams,
    GATwoStage,
    Objective,
    PSOParams,
    PSOTwoStage,
    QuantizationProfile,
    SAParams,
    SATwoStage,
    SystemConfig,
    TwoStageParams,
)
from .sinr import AllocationEvaluator


logger = logging.getLogger(__name__)

DEFAULT_ENUMERATION_CAP = 1_000_000
LISTED_SA_MOVES = (40, 100)
"""Stage-1 and Stage-2 move counts as listed for the annealing comparator"""


def equal_allocation(config: SystemConfig) -> BitAllocation:
    """floor(b_max / (M K)) bits on every link"""
    return BitAllocation(
        bits=np.full((config.num_aps, config.num_ues), config.equal_bits, dtype=np.int64)
    )


def count_allocations(dim: int, budget: int, max_bits: int) -> int:
    """Number of integer vectors with entries in [0, max_bits] and sum <= budget

    Stars and bars with slack, with inclusion-exclusion over the entries that
    exceed the cap. Reduces to C(budget + dim, dim) when max_bits >= budget.
    """
    cap = min(max_bits, budget)
    total = 0
    for j in range(dim + 1):
        remaining = budget - j * (cap + 1)
        if remaining < 0:
            break
        total += (-1) ** j * math.comb(dim, j) * math.comb(remaining + dim, dim)
    return total


class _SolutionCollector(cp_model.CpSolverSolutionCallback):
    """Stores every solution found by the solver"""

    def __init__(self, variables: List[cp_model.IntVar]):
        super().__init__()
        self._variables = variables
        self.solutions: List[List[int]] = []

    def on_solution_callback(self) -> None:
        self.solutions.append([self.Value(var) for var in self._variables])


class AllocationEnumerator:
    """Enumerates the feasible set of a budgeted integer vector with CP-SAT"""

    def __init__(self, dim: int, budget: int, max_bits: int):
        """
        Initialize the enumeration model

        Args:
            dim: Vector length
            budget: Upper bound on the sum of the entries
            max_bits: Upper bound on every entry
        """
        self.dim = dim
        self.budget = budget
        self.max_bits = max_bits
        self.model = cp_model.CpModel()
        self.x: List[cp_model.IntVar] = []

    def build_model(self) -> None:
        """Build the variables and the budget constraint"""
        self._create_variables()
        self._add_budget_constraint()

    def _create_variables(self) -> None:
        cap = min(self.max_bits, self.budget)
        self.x = [self.model.NewIntVar(0, cap, f"b_{i}") for i in range(self.dim)]

    def _add_budget_constraint(self) -> None:
        self.model.Add(sum(self.x) <= self.budget)

    def enumerate(self) -> np.ndarray:
        """Every feasible vector, one per row, in lexicographic order

        Raises:
            FronthaulError: If the solver stops before the enumeration is complete
        """
        if not self.x:
            self.build_model()
        solver = cp_model.CpSolver()
        solver.parameters.enumerate_all_solutions = True
        solver.parameters.num_workers = 1
        collector = _SolutionCollector(self.x)
        status = solver.Solve(self.model, collector)
        if status != cp_model.OPTIMAL:
            raise FronthaulError(f"enumeration ended with solver status {solver.StatusName(status)}")
        solutions = np.array(collector.solutions, dtype=np.int64).reshape(-1, self.dim)
        return solutions[np.lexsort(solutions.T[::-1])]


class ExhaustiveResult(NamedTuple):
    allocation: object
    best_eval: float
    enumerated: int


def exhaustive_search(dim: int, budget: int, max_bits: int, evaluate: Callable[[np.ndarray], float],
                      cap: int = DEFAULT_ENUMERATION_CAP) -> Tuple[np.ndarray, float, int]:
    """Evaluate every feasible vector and keep the first best one

    Raises:
        EnumerationCapError: If the feasible set is larger than ``cap``
        FronthaulError: If the enumeration disagrees with the counting formula
    """
    expected = count_allocations(dim, budget, max_bits)
    if expected > cap:
        raise EnumerationCapError(expected, cap)
    enumerator = AllocationEnumerator(dim, budget, max_bits)
    enumerator.build_model()
    vectors = enumerator.enumerate()
    if len(vectors) != expected:
        raise FronthaulError(f"enumerated {len(vectors)} vectors, counting formula gives {expected}")
    logger.debug("Enumerated %d vectors of length %d under budget %d", len(vectors), dim, budget)

    best, best_eval = vectors[0], -math.inf
    for vector in vectors:
        value = evaluate(vector)
        if value > best_eval:
            best, best_eval = vector, value
    return best.copy(), best_eval, len(vectors)


def ap_exhaustive(stats: ChannelStatistics, config: SystemConfig, profile: QuantizationProfile,
                  objective: Objective, cap: int = DEFAULT_ENUMERATION_CAP,
                  evaluator: Optional[AllocationEvaluator] = None) -> ExhaustiveResult:
    """Best AP-level vector under floor(b_max / K), bits shared by all UEs of an AP"""
    evaluator = evaluator or AllocationEvaluator(stats, config, profile, objective)
    best, best_eval, count = exhaustive_search(
        config.num_aps,
        config.ue_budget,
        profile.max_bits,
        lambda ap_bits: evaluator(expand_ap_bits(ap_bits, config.num_ues)),
        cap,
    )
    logger.info("AP exhaustive search: %d candidates, best %s (%.6f)", count, best.tolist(), best_eval)
    return ExhaustiveResult(best, best_eval, count)


def full_exhaustive(stats: ChannelStatistics, config: SystemConfig, profile: QuantizationProfile,
                    objective: Objective, cap: int = DEFAULT_ENUMERATION_CAP,
                    evaluator: Optional[AllocationEvaluator] = None) -> ExhaustiveResult:
    """Global optimum over every feasible M x K allocation"""
    evaluator = evaluator or AllocationEvaluator(stats, config, profile, objective)
    shape = (config.num_aps, config.num_ues)
    best, best_eval, count = exhaustive_search(
        config.num_aps * config.num_ues,
        config.bit_budget,
        profile.max_bits,
        lambda flat: evaluator(flat.reshape(shape)),
        cap,
    )
    logger.info("Full exhaustive search: %d candidates, best %.6f", count, best_eval)
    return ExhaustiveResult(BitAllocation(bits=best.reshape(shape)), best_eval, count)


def _seed_vectors(problem: StageProblem, size: int, rng: np.random.Generator) -> List[np.ndarray]:
    """Seeds first, topped up with random feasible vectors"""
    vectors = [repair(np.minimum(seed, problem.max_bits), problem.budget, rng) for seed in problem.seeds[:size]]
    while len(vectors) < size:
        vectors.append(problem.random_vector(rng))
    return vectors


def _initial_population(problem: StageProblem, size: int, rng: np.random.Generator) -> List[Tuple[np.ndarray, float]]:
    members = [(vector, problem.evaluate(vector)) for vector in _seed_vectors(problem, size, rng)]
    return sorted(members, key=lambda member: -member[1])


def _breed(first: np.ndarray, second: np.ndarray, rate: float, problem: StageProblem,
           rng: np.random.Generator) -> np.ndarray:
    """Uniform crossover, per-gene resampling mutation, repair"""
    mask = rng.random(problem.dim) < 0.5
    child = np.where(mask, first, second)
    mutate = rng.random(problem.dim) < rate
    child[mutate] = rng.integers(0, problem.entry_cap + 1, size=int(mutate.sum()))
    return repair(child, problem.budget, rng)


def genetic_search(problem: StageProblem, params: GAParams, rng: np.random.Generator,
                   elitist: bool = False) -> SearchOutcome:
    """Steady-state GA, or the elitist variant breeding every parent pair

    The steady-state variant picks parents by binary tournament and lets a
    child replace the worst member only when strictly better. The elitist
    variant keeps the fittest members of parents and offspring together.
    """
    population = _initial_population(problem, params.population, rng)
    rate = params.mutation_rate if params.mutation_rate is not None else 1.0 / problem.dim
    pairs = list(combinations(range(len(population)), 2)) or [(0, 0)]
    trace = [population[0][1]]
    for generation in range(params.generations):
        if elitist:
            children = []
            for index in range(params.offspring):
                i, j = pairs[index % len(pairs)]
                child = _breed(population[i][0], population[j][0], rate, problem, rng)
                children.append((child, problem.evaluate(child)))
            population = sorted(population + children, key=lambda member: -member[1])[: params.population]
        else:
            for _ in range(params.offspring):
                i = int(rng.integers(len(population), size=2).min())
                j = int(rng.integers(len(population), size=2).min())
                child = _breed(population[i][0], population[j][0], rate, problem, rng)
                value = problem.evaluate(child)
                if value > population[-1][1]:
                    population = sorted(population[:-1] + [(child, value)], key=lambda member: -member[1])
        trace.append(population[0][1])
        logger.debug("GA generation %d: best %.6f", generation + 1, population[0][1])
    best, best_eval = population[0]
    return SearchOutcome(best.copy(), best_eval, trace)


def pso_search(problem: StageProblem, params: PSOParams, rng: np.random.Generator) -> SearchOutcome:
    """Integer PSO: continuous positions, rounded and repaired at evaluation"""
    cap = problem.entry_cap
    members = _seed_vectors(problem, params.swarm_size, rng)
    positions = np.array(members, dtype=float)
    velocities = np.zeros_like(positions)
    personal = [(vector, problem.evaluate(vector)) for vector in members]
    leader = max(range(len(personal)), key=lambda index: personal[index][1])
    best, best_eval = personal[leader]
    trace = [best_eval]
    for iteration in range(params.iterations):
        r1 = rng.random(positions.shape)
        r2 = rng.random(positions.shape)
        targets = np.array([vector for vector, _ in personal], dtype=float)
        velocities = (
            params.inertia * velocities
            + params.cognitive * r1 * (targets - positions)
            + params.social * r2 * (best - positions)
        )
        velocities = np.clip(velocities, -cap, cap)
        positions = np.clip(positions + velocities, 0, cap)
        for index in range(len(positions)):
            vector = repair(np.rint(positions[index]).astype(np.int64), problem.budget, rng)
            value = problem.evaluate(vector)
            if value > personal[index][1]:
                personal[index] = (vector, value)
            if value > best_eval:
                best, best_eval = vector, value
        trace.append(best_eval)
        logger.debug("PSO iteration %d: best %.6f", iteration + 1, best_eval)
    return SearchOutcome(np.asarray(best).copy(), best_eval, trace)


def neighbor(vector: np.ndarray, problem: StageProblem, rng: np.random.Generator) -> np.ndarray:
    """Shift one bit from a random positive position to another position below the cap

    The sum never changes, so a feasible vector stays feasible.
    """
    candidate = vector.copy()
    positive = np.flatnonzero(candidate)
    if positive.size == 0:
        return candidate
    source = positive[rng.integers(positive.size)]
    receivers = np.flatnonzero(candidate < problem.entry_cap)
    targets = receivers[receivers != source]
    if targets.size == 0:
        return candidate
    candidate[source] -= 1
    candidate[targets[rng.integers(targets.size)]] += 1
    return candidate


def annealing_search(problem: StageProblem, params: SAParams, rng: np.random.Generator) -> SearchOutcome:
    """Single-trajectory annealing with Metropolis acceptance and geometric cooling

    Without a fixed start temperature, a run of neighbor moves around the
    start point sets it so that the mean worsening move is accepted with
    probability ``initial_acceptance``. Those evaluations are booked as
    calibration. A zero temperature never accepts a worse move.
    """
    current = _seed_vectors(problem, 1, rng)[0]
    current_eval = problem.evaluate(current)
    best, best_eval = current, current_eval

    temperature = params.initial_temperature
    if temperature is None:
        with problem.calibration():
            deltas = [problem.evaluate(neighbor(current, problem, rng)) - current_eval
                      for _ in range(params.calibration_moves)]
        worse = [-delta for delta in deltas if delta < 0]
        temperature = float(np.mean(worse)) / -math.log(params.initial_acceptance) if worse else 0.0
        logger.debug("SA start temperature %.6g from %d worsening calibration moves", temperature, len(worse))
    cooling = params.final_ratio ** (1.0 / max(params.iterations, 1))

    trace = [best_eval]
    for _ in range(params.iterations):
        candidate = neighbor(current, problem, rng)
        value = problem.evaluate(candidate)
        delta = value - current_eval
        if delta >= 0 or (temperature > 0 and rng.random() < math.exp(delta / temperature)):
            current, current_eval = candidate, value
            if current_eval > best_eval:
                best, best_eval = current, current_eval
        temperature *= cooling
        trace.append(best_eval)
    return SearchOutcome(best.copy(), best_eval, trace)


def _two_stage(search, params: TwoStageParams, stats: ChannelStatistics, config: SystemConfig,
               profile: QuantizationProfile, objective: Objective, rng: np.random.Generator,
               evaluator: Optional[AllocationEvaluator]) -> StageResult:
    evaluator = evaluator or AllocationEvaluator(stats, config, profile, objective)
    first = search_ap_level(search, params.stage1, evaluator, config, rng, seeded=False)
    second = search_ue_level(search, params.stage2, params.outer_cycles, first.allocation,
                             evaluator, config, rng)
    return StageResult(second.allocation, second.best_eval, first.trace + second.trace)


def ga_allocate(stats: ChannelStatistics, config: SystemConfig, profile: QuantizationProfile,
                params: GATwoStage, objective: Objective, elitist: bool,
                rng: np.random.Generator, evaluator: Optional[AllocationEvaluator] = None) -> StageResult:
    """Genetic algorithm through the two-stage hierarchy"""
    search = partial(genetic_search, elitist=elitist)
    return _two_stage(search, params, stats, config, profile, objective, rng, evaluator)


def pso_allocate(stats: ChannelStatistics, config: SystemConfig, profile: QuantizationProfile,
                 params: PSOTwoStage, objective: Objective,
                 rng: np.random.Generator, evaluator: Optional[AllocationEvaluator] = None) -> StageResult:
    """Integer particle swarm through the two-stage hierarchy"""
    return _two_stage(pso_search, params, stats, config, profile, objective, rng, evaluator)


def sa_allocate(stats: ChannelStatistics, config: SystemConfig, profile: QuantizationProfile,
                params: SATwoStage, objective: Objective,
                rng: np.random.Generator, evaluator: Optional[AllocationEvaluator] = None) -> StageResult:
    """Simulated annealing through the two-stage hierarchy"""
    logger.info(
        "SA budget: %d + %d x %d x %d evaluations (listed move counts %d / %d)",
        params.stage1.evaluations, params.outer_cycles, config.num_aps, params.stage2.evaluations,
        *LISTED_SA_MOVES,
    )
    return _two_stage(annealing_search, params, stats, config, profile, objective, rng, evaluator)
