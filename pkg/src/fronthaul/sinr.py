"""Closed-form uplink SINR under fronthaul quantization

Every UE is combined at the CPU with one scalar weight per AP. For a fixed
allocation the weights maximizing a UE's SINR solve a generalized Rayleigh
quotient whose numerator matrix has rank one, so the optimum is available
in closed form and evaluation of a whole allocation is vectorized over UEs.
"""

import logging
import math
from contextlib import contextmanager
from typing import Dict, Iterator, Tuple, Union

import numpy as np

from .errors import DomainError, InfeasibleAllocationError
from .models import (
    BitAllocation,
    ChannelStatistics,
    EvaluationReport,
    Objective,
    QuantizationProfile,
    ReceiverFilter,
    SINRComponents,
    SystemConfig,
    UEMatrices,
)
from .quantization import omega_matrix, rho_array


logger = logging.getLogger(__name__)

Bits = Union[BitAllocation, np.ndarray]


class DegenerateUEError(DomainError):
    """No AP forwards any bit of this UE, so its SINR is zero"""


def bit_matrix(bits: Bits) -> np.ndarray:
    """Plain integer matrix behind an allocation"""
    if isinstance(bits, BitAllocation):
        return bits.bits
    return np.asarray(bits, dtype=np.int64)


def check_allocation(bits: Bits, stats: ChannelStatistics, config: SystemConfig,
                     profile: QuantizationProfile) -> np.ndarray:
    """Validate an allocation against the budget and the per-link cap

    Returns:
        The integer bit matrix

    Raises:
        InfeasibleAllocationError: On a shape mismatch, a negative or too large
            entry, or a total above the bit budget
    """
    matrix = bit_matrix(bits)
    if matrix.shape != stats.beta.shape:
        raise InfeasibleAllocationError(
            f"allocation shape {matrix.shape} does not match {stats.beta.shape}"
        )
    if matrix.size and (matrix.min() < 0 or matrix.max() > profile.max_bits):
        raise InfeasibleAllocationError(
            f"link bits must be in 0..{profile.max_bits}, got {matrix.min()}..{matrix.max()}"
        )
    total = int(matrix.sum())
    if total > config.bit_budget:
        raise InfeasibleAllocationError(f"allocation uses {total} bits, budget is {config.bit_budget}")
    return matrix


def build_ue_matrices(k: int, stats: ChannelStatistics, bits: Bits, profile: QuantizationProfile,
                      config: SystemConfig) -> UEMatrices:
    """Diagonal matrices gamma_k, Gamma_k, Omega_k and D_kk' of UE k

    Raises:
        IndexError: If k is not a valid UE index
    """
    if not 0 <= k < stats.num_ues:
        raise IndexError(f"UE index {k} out of range 0..{stats.num_ues - 1}")
    matrix = bit_matrix(bits)
    gamma_vec = stats.gamma[:, k]
    interference = np.stack([
        np.diag(gamma_vec * stats.beta[:, other]) for other in range(stats.num_ues)
    ]).astype(complex)
    return UEMatrices(
        gamma_vec=gamma_vec.astype(complex),
        gamma_diag=np.diag(gamma_vec).astype(complex),
        omega=omega_matrix(matrix[:, k], profile).astype(complex),
        interference=interference,
    )


def aux_matrices(mats: UEMatrices, config: SystemConfig) -> Tuple[np.ndarray, np.ndarray]:
    """Numerator A_k and diagonal denominator B_k of the UE's Rayleigh quotient

    SINR_k = u^H A_k u / u^H B_k u holds exactly for any filter u.

    Raises:
        DegenerateUEError: If every entry of Omega_k is zero
    """
    omega = mats.omega
    if not np.any(np.diag(omega).real > 0):
        raise DegenerateUEError("all links of this UE carry zero bits")
    n = config.antennas_per_ap
    identity = np.eye(omega.shape[0])
    a = math.sqrt(n) * omega @ mats.gamma_vec
    numerator = np.outer(a, a.conj())
    load = mats.interference.sum(axis=0)
    denominator = (
        n * (identity - omega.conj().T) @ mats.gamma_diag @ mats.gamma_diag
        + load
        + (config.noise_power / config.uplink_power) * mats.gamma_diag
    ) @ omega
    return numerator, denominator


def optimal_filter(A: np.ndarray, B: np.ndarray) -> ReceiverFilter:
    """Unit-norm maximizer of u^H A u / u^H B u for a rank-one A = a a^H

    The maximizer is proportional to B^-1 a. A diagonal B is inverted entrywise
    on its support, coordinates outside it are zeroed.
    """
    size = A.shape[0]
    diagonal = np.real(np.diag(A))
    if not np.any(diagonal > 0):
        return ReceiverFilter(weights=np.full(size, 1 / math.sqrt(size)), degenerate=True)
    pivot = int(np.argmax(diagonal))
    a = A[:, pivot] / math.sqrt(diagonal[pivot])
    b_diag = np.diag(B)
    if np.count_nonzero(B - np.diag(b_diag)) == 0:
        support = np.real(b_diag) > 0
        direction = np.zeros(size, dtype=complex)
        direction[support] = a[support] / b_diag[support]
    else:
        direction = np.linalg.solve(B, a)
    norm = np.linalg.norm(direction)
    if norm == 0:
        return ReceiverFilter(weights=np.full(size, 1 / math.sqrt(size)), degenerate=True)
    return ReceiverFilter(weights=direction / norm)


def rayleigh_quotient(u: np.ndarray, A: np.ndarray, B: np.ndarray) -> float:
    denominator = np.real(np.vdot(u, B @ u))
    if denominator <= 0:
        return 0.0
    return float(np.real(np.vdot(u, A @ u)) / denominator)


def sinr_components(k: int, stats: ChannelStatistics, bits: Bits, filter: ReceiverFilter,
                    config: SystemConfig, profile: QuantizationProfile) -> SINRComponents:
    """Powers of the desired signal, beamforming uncertainty, interference,
    noise and quantization noise seen by UE k after combining"""
    matrix = bit_matrix(bits)
    rho = rho_array(matrix[:, k], profile)
    omega = 1.0 - rho
    gamma = stats.gamma[:, k]
    beta = stats.beta
    weight_power = np.abs(filter.weights) ** 2
    n = config.antennas_per_ap
    p_u = config.uplink_power
    noise_power = config.noise_power

    desired = p_u * n ** 2 * abs(np.sum(filter.weights * omega * gamma)) ** 2
    beamforming = p_u * n * np.sum(weight_power * omega ** 2 * gamma * beta[:, k])
    others = beta.sum(axis=1) - beta[:, k]
    interference = p_u * n * np.sum(weight_power * omega ** 2 * gamma * others)
    noise = noise_power * n * np.sum(weight_power * omega ** 2 * gamma)
    input_power = quantizer_input_power(k, stats, config)
    quantization = np.sum(weight_power * rho * omega * input_power)
    return SINRComponents(
        desired=float(desired),
        beamforming=float(beamforming),
        interference=float(interference),
        noise=float(noise),
        quantization=float(quantization),
    )


def quantizer_input_power(k: int, stats: ChannelStatistics, config: SystemConfig) -> np.ndarray:
    """Per-AP power of the MRC output quantized for UE k"""
    gamma = stats.gamma[:, k]
    n = config.antennas_per_ap
    p_u = config.uplink_power
    return (
        p_u * n ** 2 * gamma ** 2
        + p_u * n * gamma * stats.beta.sum(axis=1)
        + config.noise_power * n * gamma
    )


def sinr_of_ue(k: int, stats: ChannelStatistics, bits: Bits, filter: ReceiverFilter,
               config: SystemConfig, profile: QuantizationProfile) -> float:
    """SINR of UE k from its five received-signal components"""
    if filter.degenerate:
        return 0.0
    return sinr_components(k, stats, bits, filter, config, profile).sinr


def sinr_compact(k: int, stats: ChannelStatistics, bits: Bits, filter: ReceiverFilter,
                 config: SystemConfig, profile: QuantizationProfile) -> float:
    """SINR of UE k from the matrix form with all terms collected"""
    if filter.degenerate:
        return 0.0
    mats = build_ue_matrices(k, stats, bits, profile, config)
    n = config.antennas_per_ap
    p_u = config.uplink_power
    u = filter.weights
    omega = mats.omega
    gamma_sq = mats.gamma_diag @ mats.gamma_diag
    numerator = p_u * n ** 2 * np.vdot(u, omega @ np.outer(mats.gamma_vec, mats.gamma_vec.conj()) @ omega @ u)
    total = (
        p_u * n ** 2 * gamma_sq
        + p_u * n * mats.interference.sum(axis=0)
        + config.noise_power * n * mats.gamma_diag
    )
    denominator = np.vdot(u, total @ omega @ u) - np.vdot(u, omega @ (p_u * n ** 2 * gamma_sq) @ omega @ u)
    if np.real(denominator) <= 0:
        return 0.0
    return float(np.real(numerator) / np.real(denominator))


def component_residual(k: int, stats: ChannelStatistics, bits: Bits, filter: ReceiverFilter,
                       config: SystemConfig, profile: QuantizationProfile) -> float:
    """Relative gap between the componentwise and the compact SINR"""
    componentwise = sinr_of_ue(k, stats, bits, filter, config, profile)
    compact = sinr_compact(k, stats, bits, filter, config, profile)
    scale = max(abs(componentwise), abs(compact))
    if scale == 0:
        return 0.0
    return abs(componentwise - compact) / scale


def evaluate_allocation(bits: Bits, stats: ChannelStatistics, config: SystemConfig,
                        profile: QuantizationProfile, objective: Objective = Objective.TOTAL) -> EvaluationReport:
    """Optimal filters, SINR and SE of every UE for one allocation

    The report carries total and minimum SE regardless of ``objective``;
    the objective only selects ``report.value``.

    Raises:
        InfeasibleAllocationError: If the allocation breaks the budget or the link cap
    """
    matrix = check_allocation(bits, stats, config, profile)
    num_aps = matrix.shape[0]
    rho = rho_array(matrix, profile)
    omega = 1.0 - rho
    gamma = stats.gamma
    n = config.antennas_per_ap
    load = stats.beta.sum(axis=1, keepdims=True)
    per_link = n * rho * gamma ** 2 + gamma * load + (config.noise_power / config.uplink_power) * gamma
    a = math.sqrt(n) * omega * gamma
    b_diag = per_link * omega

    weights = np.where(omega > 0, math.sqrt(n) * gamma / per_link, 0.0)
    norms = np.linalg.norm(weights, axis=0)
    degenerate = norms == 0
    weights = np.where(degenerate, 1 / math.sqrt(num_aps), weights / np.where(degenerate, 1.0, norms))

    numerator = np.sum(a * weights, axis=0) ** 2
    denominator = np.sum(b_diag * weights ** 2, axis=0)
    sinr = np.where(degenerate, 0.0, numerator / np.where(degenerate, 1.0, denominator))
    se = np.log2(1.0 + sinr)
    return EvaluationReport(
        per_ue_sinr=sinr,
        per_ue_se=se,
        total_se=float(se.sum()),
        min_se=float(se.min()),
        filters=[
            ReceiverFilter(weights=weights[:, k], degenerate=bool(degenerate[k]))
            for k in range(matrix.shape[1])
        ],
    )


class AllocationEvaluator:
    """Memoized evaluate_allocation with an evaluation ledger

    Every request counts towards ``evaluations``, cache hits included, so the
    ledger equals the number of candidates a search produced.
    """

    def __init__(self, stats: ChannelStatistics, config: SystemConfig,
                 profile: QuantizationProfile, objective: Objective = Objective.TOTAL):
        self.stats = stats
        self.config = config
        self.profile = profile
        self.objective = objective
        self.evaluations = 0
        self.calibration_evaluations = 0
        self.cache_hits = 0
        self._calibrating = False
        self._cache: Dict[Tuple[Tuple[int, ...], bytes], EvaluationReport] = {}

    def report(self, bits: Bits) -> EvaluationReport:
        matrix = np.ascontiguousarray(bit_matrix(bits), dtype=np.int64)
        if self._calibrating:
            self.calibration_evaluations += 1
        else:
            self.evaluations += 1
        key = (matrix.shape, matrix.tobytes())
        cached = self._cache.get(key)
        if cached is not None:
            self.cache_hits += 1
            return cached
        report = evaluate_allocation(matrix, self.stats, self.config, self.profile, self.objective)
        self._cache[key] = report
        return report

    def __call__(self, bits: Bits) -> float:
        return self.report(bits).value(self.objective)

    @contextmanager
    def calibration(self) -> Iterator["AllocationEvaluator"]:
        """Count requests made inside the block as calibration, not search"""
        previous = self._calibrating
        self._calibrating = True
        try:
            yield self
        finally:
            self._calibrating = previous

    def log_statistics(self) -> None:
        logger.debug(
            "Evaluator: %d evaluations, %d calibration, %d cache hits, %d distinct allocations",
            self.evaluations, self.calibration_evaluations, self.cache_hits, len(self._cache),
        )
