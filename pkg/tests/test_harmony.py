import numpy as np
import pytest

from src.fronthaul.errors import InfeasibleAllocationError
from src.fronthaul.harmony import (
    HarmonyMemory,
    StageProblem,
    equal_ap_bits,
    harmony_search,
    improvise,
    improvise_stage1,
    init_stage1_memory,
    initial_memory,
    random_vector,
    repair,
    run_stage1,
    run_stage2,
    update_memory,
)
from src.fronthaul.models import BitAllocation, Harmony, HSParams, Objective
from src.fronthaul.sinr import AllocationEvaluator, evaluate_allocation


class CountingObjective:
    """Negative squared distance to a target vector, counting calls"""

    def __init__(self, target):
        self.target = np.asarray(target)
        self.calls = 0

    def __call__(self, vector):
        self.calls += 1
        return -float(np.sum((np.asarray(vector) - self.target) ** 2))


def _memory(rows, capacity=None, max_bits=12):
    harmonies = [Harmony(variables=np.asarray(row), evaluation=value) for row, value in rows]
    return HarmonyMemory(capacity or len(harmonies), max_bits, harmonies)


@pytest.mark.parametrize("candidate, budget", [([5, 5, 5], 9), ([0, 0, 7], 3), ([12, 1, 0, 4], 20), ([2, 2], 0)])
def test_repair_feasible_and_monotone(candidate, budget):
    rng = np.random.default_rng(0)
    repaired = repair(candidate, budget, rng)
    assert repaired.sum() == min(sum(candidate), budget)
    assert np.all(repaired <= np.asarray(candidate))
    assert np.all(repaired >= 0)


def test_repair_rejects_negative():
    with pytest.raises(ValueError):
        repair([1, -1], 5, np.random.default_rng(0))


def test_random_vector_feasible():
    rng = np.random.default_rng(1)
    for _ in range(200):
        vector = random_vector(4, 8, 12, rng)
        assert vector.sum() <= 8
        assert vector.max() <= 8


def test_memory_sorted_and_stable():
    memory = _memory([([1, 0], 0.5), ([0, 1], 0.9), ([2, 2], 0.5)])
    assert memory.evaluations() == [0.9, 0.5, 0.5]
    assert memory.variables()[1].tolist() == [1, 0]
    assert memory.best.evaluation == 0.9
    assert memory.worst.variables.tolist() == [2, 2]
    assert memory.is_full


def test_update_replaces_worst_only_when_strictly_better():
    memory = _memory([([1, 0], 0.9), ([0, 1], 0.2)])
    same = update_memory(memory, Harmony(variables=np.array([3, 3]), evaluation=0.2))
    assert same.evaluations() == [0.9, 0.2]
    better = update_memory(memory, Harmony(variables=np.array([3, 3]), evaluation=0.5))
    assert better.evaluations() == [0.9, 0.5]
    assert better.worst.variables.tolist() == [3, 3]
    assert len(better) == 2


def test_memory_consideration_copies_columns():
    memory = _memory([([1, 2, 3], 1.0), ([1, 2, 3], 0.5)])
    candidate = improvise(memory, HSParams(hm_size=2, hmcr=1.0, iterations=0), 10, np.random.default_rng(0))
    assert candidate.tolist() == [1, 2, 3]


def test_memory_consideration_rate():
    rng = np.random.default_rng(2)
    memory = _memory([([0, 0, 0, 0], 0.0)] * 5)
    params = HSParams(hm_size=5, hmcr=0.9, iterations=0)
    draws = 4000
    zeros = sum(not improvise(memory, params, 40, rng).any() for _ in range(draws))
    assert 0.88 < zeros / draws < 0.92


def test_improvised_candidates_feasible():
    rng = np.random.default_rng(3)
    memory = _memory([([6, 6, 0], 1.0), ([0, 6, 6], 0.5)], max_bits=6)
    params = HSParams(hm_size=2, hmcr=0.5, iterations=0)
    for _ in range(200):
        candidate = improvise_stage1(memory, params, 7, rng)
        assert candidate.sum() <= 7
        assert candidate.max() <= 6


def test_initial_memory_seeds_first():
    objective = CountingObjective([2, 2, 2])
    problem = StageProblem(3, 9, 12, objective, seeds=[np.array([1, 1, 1])])
    memory = initial_memory(problem, HSParams(hm_size=4, iterations=0), np.random.default_rng(4))
    assert len(memory) == 4
    assert objective.calls == 4
    assert any(row.variables.tolist() == [1, 1, 1] for row in memory.rows)


def test_harmony_search_trace_and_ledger():
    objective = CountingObjective([3, 0, 5, 1])
    problem = StageProblem(4, 10, 12, objective)
    params = HSParams(hm_size=6, hmcr=0.9, iterations=40)
    outcome = harmony_search(problem, params, np.random.default_rng(5))
    assert len(outcome.trace) == params.iterations + 1
    assert all(b >= a for a, b in zip(outcome.trace, outcome.trace[1:]))
    assert objective.calls == params.evaluations
    assert outcome.best_eval == outcome.trace[-1]
    assert outcome.best.sum() <= 10


def test_harmony_search_reproducible():
    params = HSParams(hm_size=5, iterations=20)
    results = [
        harmony_search(StageProblem(3, 9, 12, CountingObjective([4, 4, 1])), params, np.random.default_rng(6))
        for _ in range(2)
    ]
    assert results[0].best.tolist() == results[1].best.tolist()
    assert results[0].trace == results[1].trace


def test_stage1_dominates_equal(desk_stats, desk_config, profile):
    params = HSParams(hm_size=10, hmcr=0.9, iterations=30)
    evaluator = AllocationEvaluator(desk_stats, desk_config, profile, Objective.TOTAL)
    result = run_stage1(desk_stats, desk_config, profile, params, Objective.TOTAL, np.random.default_rng(7), evaluator)
    equal = evaluate_allocation(BitAllocation.from_ap_bits(equal_ap_bits(desk_config), 4), desk_stats,
                                desk_config, profile)
    assert result.best_eval >= equal.total_se
    assert result.allocation.sum() <= desk_config.ue_budget
    assert evaluator.evaluations == params.hm_size + params.iterations
    assert all(b >= a for a, b in zip(result.trace, result.trace[1:]))


def test_stage1_memory_holds_equal_split(desk_stats, desk_config, profile):
    memory = init_stage1_memory(desk_stats, desk_config, profile, HSParams(hm_size=10, iterations=30),
                                Objective.TOTAL, np.random.default_rng(8))
    assert len(memory) == 10
    assert any(row.variables.tolist() == [2, 2, 2, 2] for row in memory.rows)


def test_stage2_ledger_and_budgets(desk_stats, desk_config, profile):
    rng = np.random.default_rng(9)
    first = run_stage1(desk_stats, desk_config, profile, HSParams(hm_size=10, iterations=30), Objective.TOTAL, rng)
    params = HSParams(hm_size=5, hmcr=0.9, iterations=10, outer_cycles=2)
    evaluator = AllocationEvaluator(desk_stats, desk_config, profile, Objective.TOTAL)
    second = run_stage2(desk_stats, desk_config, profile, params, Objective.TOTAL, first.allocation, rng, evaluator)
    assert evaluator.evaluations == params.outer_cycles * desk_config.num_aps * params.evaluations
    bits = second.allocation.bits
    assert np.all(bits.sum(axis=1) <= desk_config.num_ues * first.allocation)
    assert second.best_eval >= first.best_eval - 1e-12
    assert second.best_eval == pytest.approx(evaluate_allocation(bits, desk_stats, desk_config, profile).total_se)


def test_stage2_maxmin(desk_stats, desk_config, profile):
    rng = np.random.default_rng(10)
    ap_bits = equal_ap_bits(desk_config)
    start = evaluate_allocation(BitAllocation.from_ap_bits(ap_bits, 4), desk_stats, desk_config, profile)
    result = run_stage2(desk_stats, desk_config, profile, HSParams(hm_size=5, iterations=10, outer_cycles=2),
                        Objective.MAXMIN, ap_bits, rng)
    assert result.best_eval >= start.min_se - 1e-12


def test_stage2_rejects_overspent_ap_bits(desk_stats, desk_config, profile):
    with pytest.raises(InfeasibleAllocationError):
        run_stage2(desk_stats, desk_config, profile, HSParams(hm_size=5, iterations=10), Objective.TOTAL,
                   np.array([3, 3, 3, 3]), np.random.default_rng(0))
