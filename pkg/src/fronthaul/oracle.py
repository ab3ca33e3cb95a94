"""Monte-Carlo and eigensolver oracles for the closed-form SINR"""

import logging
import math
from typing import List, Optional

import numpy as np
import scipy.linalg

from .channel import estimator_gain, gamma_from_beta
from .errors import OracleFailure
from .models import (
    ChannelRealization,
    ChannelStatistics,
    ComponentEstimates,
    Estimate,
    InstanceCheck,
    QuantizationProfile,
    ReceiverFilter,
    SystemConfig,
    ValidationReport,
)
from .quantization import rho_array
from .sinr import (
    Bits,
    DegenerateUEError,
    aux_matrices,
    bit_matrix,
    build_ue_matrices,
    component_residual,
    evaluate_allocation,
    quantizer_input_power,
    rayleigh_quotient,
    sinr_components,
)


logger = logging.getLogger(__name__)

SAMPLES_PER_BATCH = 1 << 21
"""Complex channel coefficients held in memory per Monte-Carlo batch"""


def complex_normal(rng: np.random.Generator, size, variance=1.0) -> np.ndarray:
    """Circularly symmetric complex Gaussian draws CN(0, variance)"""
    scale = np.sqrt(np.asarray(variance, dtype=float) / 2)
    return scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def sample_realizations(stats: ChannelStatistics, config: SystemConfig, rng: np.random.Generator,
                        count: int = 1) -> ChannelRealization:
    """Draw ``count`` channel realizations and their LMMSE estimates

    The estimate is formed from a simulated projected pilot observation
    y = sqrt(tau_p p_p) g + w, not drawn from its known distribution.
    """
    num_aps, num_ues = stats.beta.shape
    shape = (count, num_aps, num_ues, config.antennas_per_ap)
    g = np.sqrt(stats.beta)[None, :, :, None] * complex_normal(rng, shape)
    pilot_noise = complex_normal(rng, shape, config.noise_power)
    observation = math.sqrt(config.pilot_length * config.pilot_power) * g + pilot_noise
    g_hat = estimator_gain(stats.beta, config)[None, :, :, None] * observation
    return ChannelRealization(g=g, g_hat=g_hat, e=g - g_hat)


def sample_realization(stats: ChannelStatistics, config: SystemConfig,
                       rng: np.random.Generator) -> ChannelRealization:
    """One realization with arrays of shape (M, K, N)"""
    batch = sample_realizations(stats, config, rng, count=1)
    return ChannelRealization(g=batch.g[0], g_hat=batch.g_hat[0], e=batch.e[0])


def _mean_estimate(samples: np.ndarray) -> Estimate:
    samples = np.asarray(samples, dtype=float)
    return Estimate(mean=float(samples.mean()), stderr=float(samples.std(ddof=1) / math.sqrt(samples.size)))


def estimate_components(k: int, stats: ChannelStatistics, bits: Bits, filter: ReceiverFilter,
                        config: SystemConfig, profile: QuantizationProfile, num_samples: int,
                        rng: Optional[np.random.Generator] = None) -> ComponentEstimates:
    """Monte-Carlo estimates of the five received-signal powers of UE k

    Quantization noise is the AQNM variance rho(1 - rho) applied to the
    sampled quantizer input power.

    Args:
        k: UE index
        stats: Channel statistics the realizations are drawn from
        bits: Allocation fixing rho per link
        filter: CPU combining vector of UE k
        config: System parameters
        profile: Quantizer distortion table
        num_samples: Number of channel realizations, at least 1000
        rng: Random stream, fresh entropy when omitted

    Returns:
        ComponentEstimates with sample means and standard errors
    """
    if num_samples < 1000:
        raise ValueError(f"num_samples must be at least 1000, got {num_samples}")
    rng = rng if rng is not None else np.random.default_rng()
    num_aps, num_ues = stats.beta.shape
    rho = rho_array(bit_matrix(bits)[:, k], profile)
    omega = 1.0 - rho
    u = np.asarray(filter.weights)
    scaled = u * omega
    sqrt_power = math.sqrt(config.uplink_power)
    others = np.arange(num_ues) != k
    batch_size = max(1, SAMPLES_PER_BATCH // (num_aps * num_ues * config.antennas_per_ap))

    desired, interference, noise, quantization, input_power = [], [], [], [], []
    remaining = num_samples
    while remaining > 0:
        count = min(batch_size, remaining)
        remaining -= count
        draw = sample_realizations(stats, config, rng, count)
        estimate_k = draw.g_hat[:, :, k, :]
        inner = np.einsum("smn,smjn->smj", estimate_k.conj(), draw.g)
        data_noise = complex_normal(rng, (count, num_aps, config.antennas_per_ap), config.noise_power)
        symbols = complex_normal(rng, (count, num_ues))
        noise_inner = np.einsum("smn,smn->sm", estimate_k.conj(), data_noise)

        combined = sqrt_power * np.einsum("m,smj->sj", scaled, inner)
        desired.append(combined[:, k])
        interference.append(np.sum(np.abs(combined[:, others]) ** 2, axis=1))
        noise.append(np.abs(noise_inner @ scaled) ** 2)
        quantizer_input = sqrt_power * np.einsum("smj,sj->sm", inner, symbols) + noise_inner
        power = np.abs(quantizer_input) ** 2
        input_power.append(power)
        quantization.append(power @ (np.abs(u) ** 2 * rho * omega))

    desired = np.concatenate(desired)
    mean_signal = desired.mean()
    desired_estimate = Estimate(
        mean=float(abs(mean_signal) ** 2),
        stderr=float(2 * abs(mean_signal) * np.std(desired, ddof=1) / math.sqrt(num_samples)),
    )
    beamforming_samples = np.abs(desired - mean_signal) ** 2
    input_power = np.concatenate(input_power)
    estimates = ComponentEstimates(
        desired=desired_estimate,
        beamforming=_mean_estimate(beamforming_samples),
        interference=_mean_estimate(np.concatenate(interference)),
        noise=_mean_estimate(np.concatenate(noise)),
        quantization=_mean_estimate(np.concatenate(quantization)),
        input_power=[_mean_estimate(input_power[:, m]) for m in range(num_aps)],
        num_samples=num_samples,
    )
    logger.debug("Monte-Carlo estimates for UE %d over %d samples", k, num_samples)
    return estimates


def dominant_generalized_eigvec(A: np.ndarray, B: np.ndarray, tol: float = 1e-12,
                                max_iter: int = 10_000) -> np.ndarray:
    """Dominant eigenvector of B^-1 A by power iteration

    Iterates until successive Rayleigh quotients u^H A u / u^H B u differ by
    less than ``tol`` relative to the quotient.

    Raises:
        OracleFailure: If B is singular, the iteration collapses to zero, or it
            does not converge within ``max_iter`` iterations
    """
    try:
        transfer = scipy.linalg.solve(B, A)
    except (scipy.linalg.LinAlgError, ValueError) as e:
        raise OracleFailure(f"denominator matrix is not invertible: {e}") from e
    size = A.shape[0]
    vector = np.ones(size, dtype=complex) / math.sqrt(size)
    previous = None
    for _ in range(max_iter):
        image = transfer @ vector
        norm = np.linalg.norm(image)
        if norm == 0:
            raise OracleFailure("power iteration collapsed to the zero vector")
        vector = image / norm
        quotient = rayleigh_quotient(vector, A, B)
        if previous is not None and abs(quotient - previous) <= tol * abs(quotient):
            pivot = int(np.argmax(np.abs(vector)))
            return vector * np.exp(-1j * np.angle(vector[pivot]))
        previous = quotient
    raise OracleFailure(f"power iteration did not converge in {max_iter} iterations")


def random_instance(rng: np.random.Generator, max_aps: int = 4, max_ues: int = 4,
                    max_antennas: int = 8, max_link_bits: int = 5):
    """Small random (stats, config, bits) triple for closed-form checks"""
    num_aps = int(rng.integers(1, max_aps + 1))
    num_ues = int(rng.integers(1, max_ues + 1))
    antennas = int(rng.integers(1, max_antennas + 1))
    bits = rng.integers(0, max_link_bits + 1, size=(num_aps, num_ues))
    config = SystemConfig(
        num_aps=num_aps,
        num_ues=num_ues,
        antennas_per_ap=antennas,
        bit_budget=int(bits.sum()),
        pilot_length=num_ues,
        pilot_power=1.0,
        uplink_power=1.0,
        noise_power=float(rng.uniform(0.1, 1.0)),
    )
    beta = rng.uniform(0.1, 1.0, size=(num_aps, num_ues))
    stats = ChannelStatistics(beta=beta, gamma=gamma_from_beta(beta, config))
    return stats, config, bits


def check_instance(index: int, k: int, stats: ChannelStatistics, config: SystemConfig, bits: Bits,
                   profile: QuantizationProfile, num_samples: int, rng: np.random.Generator,
                   sigmas: float = 3.0) -> InstanceCheck:
    """Run every closed-form check on UE k of one instance"""
    report = evaluate_allocation(bits, stats, config, profile)
    filter = report.filters[k]
    closed = sinr_components(k, stats, bits, filter, config, profile).as_dict()
    estimates = estimate_components(k, stats, bits, filter, config, profile, num_samples, rng)
    passed = sum(
        estimate.agrees_with(closed[name], sigmas) for name, estimate in estimates.components().items()
    )
    mean_input = quantizer_input_power(k, stats, config)
    power_passed = 0
    for m, estimate in enumerate(estimates.input_power):
        if estimate.agrees_with(float(mean_input[m]), sigmas):
            power_passed += 1
        else:
            logger.debug("Instance %d: quantizer input power of AP %d outside band", index, m)

    filter_error = 0.0
    try:
        A, B = aux_matrices(build_ue_matrices(k, stats, bits, profile, config), config)
    except DegenerateUEError:
        pass
    else:
        support = np.real(np.diag(B)) > 0
        A_s, B_s = A[np.ix_(support, support)], B[np.ix_(support, support)]
        reference = rayleigh_quotient(dominant_generalized_eigvec(A_s, B_s), A_s, B_s)
        achieved = rayleigh_quotient(np.asarray(filter.weights), A, B)
        filter_error = abs(achieved - reference) / max(abs(reference), 1e-300)
    return InstanceCheck(
        index=index,
        num_aps=stats.num_aps,
        num_ues=stats.num_ues,
        antennas_per_ap=config.antennas_per_ap,
        ue=k,
        mc_passed=passed,
        mc_checks=len(closed),
        residual=component_residual(k, stats, bits, filter, config, profile),
        filter_error=filter_error,
        power_passed=power_passed,
        power_checks=len(estimates.input_power),
    )


def run_validation(num_instances: int, num_samples: int, rng: np.random.Generator,
                   profile: QuantizationProfile,
                   extra: Optional[List[tuple]] = None) -> ValidationReport:
    """Closed-form validation over random small instances

    Args:
        num_instances: Random instances to draw (M, K <= 4, N <= 8)
        num_samples: Monte-Carlo realizations per instance
        rng: Oracle random stream
        profile: Quantizer distortion table
        extra: Additional (stats, config, bits) instances checked on UE 0

    Returns:
        ValidationReport
    """
    checks = []
    for index in range(num_instances):
        stats, config, bits = random_instance(rng)
        k = int(rng.integers(stats.num_ues))
        checks.append(check_instance(index, k, stats, config, bits, profile, num_samples, rng))
        logger.info("Instance %d: %d/%d components within band", index, checks[-1].mc_passed,
                    checks[-1].mc_checks)
    for offset, (stats, config, bits) in enumerate(extra or []):
        index = num_instances + offset
        checks.append(check_instance(index, 0, stats, config, bits, profile, num_samples, rng))
        logger.info("Scenario instance %d: %d/%d components within band", index,
                    checks[-1].mc_passed, checks[-1].mc_checks)
    return ValidationReport(instances=checks, num_samples=num_samples)
