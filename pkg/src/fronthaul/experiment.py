"""Trial orchestration: scenario drops, method dispatch and sweeps"""

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from typing import List, NamedTuple, Optional, Tuple, Union

import numpy as np

from .baselines import (
    ap_exhaustive,
    equal_allocation,
    full_exhaustive,
    ga_allocate,
    pso_allocate,
    sa_allocate,
)
from .channel import build_statistics, make_geometry
from .errors import EnumerationCapError
from .harmony import equal_ap_bits, run_stage1, run_stage2
from .models import (
    BitAllocation,
    ChannelStatistics,
    EvaluationReport,
    ExperimentSpec,
    Objective,
    QuantizationProfile,
    SweepKind,
    SystemConfig,
    TrialRecord,
)
from .quantization import default_profile
from .sinr import AllocationEvaluator, evaluate_allocation
from .streams import stable_key, substream


logger = logging.getLogger(__name__)

METAHEURISTIC_METHODS = ["hs", "ga", "ga_elitist", "pso", "pso10", "sa"]
CONVERGENCE_METHODS = ["stage1", "ap_exhaustive"]
HIERARCHICAL_METHODS = ("stage1+2", "hs")

SweepValue = Union[float, str, None]


class SweepPoint(NamedTuple):
    index: int
    name: str
    value: SweepValue


class MethodOutcome(NamedTuple):
    allocation: BitAllocation
    report: EvaluationReport
    evaluations: int
    trace: List[float]


class ConvergenceResult(NamedTuple):
    """Stage-1 trace of one trial next to the AP-level optimum"""

    trial: int
    trace: List[float]
    ap_bits: List[int]
    optimum: float
    optimum_bits: List[int]

    @property
    def gap(self) -> float:
        """Relative shortfall of the final Stage-1 evaluation"""
        if self.optimum <= 0:
            return 0.0
        return max(0.0, (self.optimum - self.trace[-1]) / self.optimum)


def sweep_points(spec: ExperimentSpec) -> List[SweepPoint]:
    """Points the experiment visits, in order"""
    if spec.sweep == SweepKind.OBJECTIVE:
        return [SweepPoint(i, spec.sweep.value, objective.value) for i, objective in enumerate(Objective)]
    if spec.sweep in (SweepKind.NUM_UES, SweepKind.NUM_ANTENNAS, SweepKind.DISPLACEMENT):
        return [SweepPoint(i, spec.sweep.value, float(value)) for i, value in enumerate(spec.sweep_values)]
    return [SweepPoint(0, spec.sweep.value, None)]


def system_for_point(spec: ExperimentSpec, point: SweepPoint) -> SystemConfig:
    """System template with the swept quantity applied"""
    scenario = spec.scenario
    if spec.sweep == SweepKind.NUM_UES:
        num_ues = int(point.value)
        changes = {"num_ues": num_ues}
        if scenario.pilot_follows_ues:
            changes["pilot_length"] = num_ues
        return scenario.system.replace(**changes)
    if spec.sweep == SweepKind.NUM_ANTENNAS:
        return scenario.system.replace(antennas_per_ap=int(point.value))
    return scenario.system


def objective_for_point(spec: ExperimentSpec, point: SweepPoint) -> Objective:
    if spec.sweep == SweepKind.OBJECTIVE:
        return Objective(point.value)
    return spec.objective


def draw_statistics(spec: ExperimentSpec, point: SweepPoint, trial: int) -> Tuple[SystemConfig, ChannelStatistics]:
    """UE drop and shadowing of one trial

    The scenario stream depends on the trial only, so sweep points of one
    trial share their drop wherever the sweep leaves the geometry alone.
    """
    system = system_for_point(spec, point)
    scenario = spec.scenario
    displacement = point.value if spec.sweep == SweepKind.DISPLACEMENT else scenario.displacement_m
    rng = substream(spec.seed, "scenario", trial)
    geometry = make_geometry(
        system.num_aps,
        system.num_ues,
        rng,
        ap_area_m=scenario.ap_area_m,
        ue_area_m=scenario.ue_area_m,
        displacement_m=displacement,
        direction=scenario.direction,
    )
    return system, build_statistics(geometry, system, rng)


def allocate(method: str, stats: ChannelStatistics, system: SystemConfig, profile: QuantizationProfile,
             objective: Objective, spec: ExperimentSpec, rng: np.random.Generator) -> MethodOutcome:
    """Run one allocation method on one instance

    Raises:
        EnumerationCapError: If an exhaustive method exceeds the enumeration cap
    """
    evaluator = AllocationEvaluator(stats, system, profile, objective)
    harmony = spec.harmony
    comparators = spec.comparators
    trace: List[float] = []

    if method == "equal":
        allocation = equal_allocation(system)
        evaluator(allocation)
    elif method == "stage1":
        result = run_stage1(stats, system, profile, harmony.stage1, objective, rng, evaluator)
        allocation, trace = BitAllocation.from_ap_bits(result.allocation, system.num_ues), result.trace
    elif method == "stage2":
        result = run_stage2(stats, system, profile, harmony.stage2, objective, equal_ap_bits(system),
                            rng, evaluator)
        allocation, trace = result.allocation, result.trace
    elif method in ("stage1+2", "hs"):
        first = run_stage1(stats, system, profile, harmony.stage1, objective, rng, evaluator)
        second = run_stage2(stats, system, profile, harmony.stage2, objective, first.allocation,
                            rng, evaluator)
        allocation, trace = second.allocation, first.trace + second.trace
    elif method == "ap_exhaustive":
        result = ap_exhaustive(stats, system, profile, objective, spec.enumeration_cap, evaluator)
        allocation = BitAllocation.from_ap_bits(result.allocation, system.num_ues)
    elif method == "full_exhaustive":
        result = full_exhaustive(stats, system, profile, objective, spec.enumeration_cap, evaluator)
        allocation = result.allocation
    elif method in ("ga", "ga_elitist"):
        result = ga_allocate(stats, system, profile, getattr(comparators, method), objective,
                             method == "ga_elitist", rng, evaluator)
        allocation, trace = result.allocation, result.trace
    elif method in ("pso", "pso10"):
        result = pso_allocate(stats, system, profile, getattr(comparators, method), objective, rng, evaluator)
        allocation, trace = result.allocation, result.trace
    elif method == "sa":
        result = sa_allocate(stats, system, profile, comparators.sa, objective, rng, evaluator)
        allocation, trace = result.allocation, result.trace
    else:
        raise ValueError(f"Unknown method '{method}'")

    evaluator.log_statistics()
    report = evaluate_allocation(allocation, stats, system, profile, objective)
    return MethodOutcome(allocation, report, evaluator.evaluations, trace)


def run_trial(spec: ExperimentSpec, point: SweepPoint, trial: int) -> List[TrialRecord]:
    """Every configured method on one drop of one sweep point"""
    system, stats = draw_statistics(spec, point, trial)
    objective = objective_for_point(spec, point)
    profile = default_profile(system.max_bits)
    keep_trace = spec.record_allocations or spec.sweep == SweepKind.CONVERGENCE
    records = []
    for method in spec.methods:
        rng = allocator_stream(spec, point, trial, method)
        common = dict(trial=trial, method=method, sweep_name=point.name, sweep_value=point.value,
                      objective=objective)
        start = time.perf_counter()
        try:
            outcome = allocate(method, stats, system, profile, objective, spec, rng)
        except EnumerationCapError as e:
            logger.info("Trial %d: %s refused (%s)", trial, method, e)
            records.append(TrialRecord(refused=str(e), **common))
            continue
        elapsed_ms = (time.perf_counter() - start) * 1000 if spec.record_timing else None
        records.append(TrialRecord(
            total_se=outcome.report.total_se,
            min_se=outcome.report.min_se,
            eval_count=outcome.evaluations,
            wall_ms=elapsed_ms,
            allocation=outcome.allocation.as_lists() if spec.record_allocations else None,
            per_ue_se=outcome.report.per_ue_se.tolist() if spec.record_allocations else None,
            trace=outcome.trace if keep_trace else None,
            **common,
        ))
    logger.info("Trial %d at %s=%s done", trial, point.name, point.value)
    return records


def allocator_stream(spec: ExperimentSpec, point: SweepPoint, trial: int, method: str) -> np.random.Generator:
    """Allocator substream of one method on one trial

    Stage 1+2 draws from the stage1 stream, so its Stage 1 repeats the stage1
    search exactly and Stage 2 continues from that allocation.
    """
    key = "stage1" if method in HIERARCHICAL_METHODS else method
    return substream(spec.seed, "allocator", trial, point.index, stable_key(key))


def _run_task(task: Tuple[ExperimentSpec, SweepPoint, int]) -> List[TrialRecord]:
    return run_trial(*task)


def run_experiment(spec: ExperimentSpec) -> List[TrialRecord]:
    """Every sweep point x trial x method, in that nesting order

    Records do not depend on the number of workers or on execution order.
    """
    tasks = [(spec, point, trial) for point in sweep_points(spec) for trial in range(spec.trials)]
    logger.info("Running %d trials x %d methods", len(tasks), len(spec.methods))
    if spec.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            batches = list(pool.map(_run_task, tasks))
    else:
        batches = [_run_task(task) for task in tasks]
    return [record for batch in batches for record in batch]


def run_convergence(spec: ExperimentSpec, trials: Optional[int] = None) -> List[ConvergenceResult]:
    """Stage-1 traces against the AP-level exhaustive optimum, one per trial"""
    point = sweep_points(spec)[0]
    results = []
    for trial in range(trials if trials is not None else spec.trials):
        system, stats = draw_statistics(spec, point, trial)
        profile = default_profile(system.max_bits)
        objective = objective_for_point(spec, point)
        rng = allocator_stream(spec, point, trial, "stage1")
        stage1 = run_stage1(stats, system, profile, spec.harmony.stage1, objective, rng)
        optimum = ap_exhaustive(stats, system, profile, objective, spec.enumeration_cap)
        results.append(ConvergenceResult(
            trial=trial,
            trace=stage1.trace,
            ap_bits=stage1.allocation.tolist(),
            optimum=optimum.best_eval,
            optimum_bits=optimum.allocation.tolist(),
        ))
    return results
