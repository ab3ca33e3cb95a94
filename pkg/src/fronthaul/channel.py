"""Large-scale channel statistics from scenario geometry"""

import logging
import math
from typing import Tuple, Union

import numpy as np

from .errors import DomainError
from .models import ChannelStatistics, Geometry, SystemConfig


logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

UPWARD = (0.0, 1.0)
DIAGONAL = (math.sqrt(0.5), math.sqrt(0.5))


def pathloss_db(distance_m: ArrayLike, carrier_ghz: float, shadow_db: ArrayLike = 0.0) -> ArrayLike:
    """Path loss 36.7 log10(d) + 22.7 + 26 log10(f_c) + shadowing, in dB

    Args:
        distance_m: AP-UE distance in meters, scalar or array
        carrier_ghz: Carrier frequency in GHz
        shadow_db: Shadow fading realization in dB, broadcast against distance

    Raises:
        DomainError: If any distance or the carrier frequency is not positive
    """
    distance = np.asarray(distance_m, dtype=float)
    if np.any(distance <= 0):
        raise DomainError(f"distance must be positive, got {distance_m}")
    if carrier_ghz <= 0:
        raise DomainError(f"carrier frequency must be positive, got {carrier_ghz}")
    loss = 36.7 * np.log10(distance) + 22.7 + 26.0 * math.log10(carrier_ghz) + shadow_db
    if np.ndim(loss) == 0:
        return float(loss)
    return loss


def beta_from_geometry(geometry: Geometry, config: SystemConfig, rng: np.random.Generator) -> np.ndarray:
    """Linear large-scale gains with one shadowing draw per AP-UE pair"""
    distances = geometry.distances(config.min_distance_m)
    shadow = rng.normal(0.0, config.shadowing_std_db, size=distances.shape)
    loss = pathloss_db(distances, config.carrier_freq / 1e9, shadow)
    return 10.0 ** (-loss / 10.0)


def gamma_from_beta(beta: ArrayLike, config: SystemConfig) -> ArrayLike:
    """LMMSE estimate variance tau_p p_p beta^2 / (sigma^2 + tau_p p_p beta)"""
    pilot_energy = config.pilot_length * config.pilot_power
    beta = np.asarray(beta, dtype=float)
    gamma = pilot_energy * beta ** 2 / (config.noise_power + pilot_energy * beta)
    if gamma.ndim == 0:
        return float(gamma)
    return gamma


def estimator_gain(beta: ArrayLike, config: SystemConfig) -> ArrayLike:
    """LMMSE coefficient c = sqrt(tau_p p_p) beta / (sigma^2 + tau_p p_p beta)"""
    pilot_energy = config.pilot_length * config.pilot_power
    beta = np.asarray(beta, dtype=float)
    return math.sqrt(pilot_energy) * beta / (config.noise_power + pilot_energy * beta)


def build_statistics(geometry: Geometry, config: SystemConfig, rng: np.random.Generator) -> ChannelStatistics:
    """Draw shadowing and return the validated beta / gamma pair"""
    beta = beta_from_geometry(geometry, config, rng)
    stats = ChannelStatistics(beta=beta, gamma=gamma_from_beta(beta, config))
    logger.debug(
        "Channel statistics: beta in [%.3e, %.3e], gamma/beta in [%.3f, %.3f]",
        beta.min(), beta.max(),
        (stats.gamma / stats.beta).min(), (stats.gamma / stats.beta).max(),
    )
    return stats


def ap_grid(num_aps: int, area_side_m: float) -> np.ndarray:
    """Cell centres of a ceil(sqrt(M)) square grid over a centred square area

    Four APs in a 1 km square land on (+-250 m, +-250 m).
    """
    per_side = math.ceil(math.sqrt(num_aps))
    cell = area_side_m / per_side
    centres = -area_side_m / 2 + cell * (np.arange(per_side) + 0.5)
    xs, ys = np.meshgrid(centres, centres)
    return np.column_stack([xs.ravel(), ys.ravel()])[:num_aps]


def area_center(displacement_m: float, direction: Tuple[float, float]) -> np.ndarray:
    """Centre of the UE drop area displaced along a unit direction"""
    return displacement_m * np.asarray(direction, dtype=float)


def direction_from_label(label: str) -> Tuple[float, float]:
    """Unit vector for 'upward', 'diagonal' or an angle in degrees

    Raises:
        DomainError: If the label is neither a known name nor a number
    """
    normalized = label.strip().lower()
    if normalized == "upward":
        return UPWARD
    if normalized == "diagonal":
        return DIAGONAL
    try:
        angle = math.radians(float(normalized))
    except ValueError as e:
        raise DomainError(f"direction must be 'upward', 'diagonal' or degrees, got '{label}'") from e
    return (math.cos(angle), math.sin(angle))


def drop_ues(
    num_ues: int,
    area_side_m: float,
    center: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    """K positions uniform over an axis-aligned square"""
    offsets = rng.uniform(-area_side_m / 2, area_side_m / 2, size=(num_ues, 2))
    return offsets + center


def make_geometry(
    num_aps: int,
    num_ues: int,
    rng: np.random.Generator,
    ap_area_m: float = 1000.0,
    ue_area_m: float = 1000.0,
    displacement_m: float = 0.0,
    direction: Tuple[float, float] = UPWARD,
) -> Geometry:
    """Grid APs plus one uniform UE drop"""
    aps = ap_grid(num_aps, ap_area_m)
    ues = drop_ues(num_ues, ue_area_m, area_center(displacement_m, direction), rng)
    return Geometry(
        ap_positions=[tuple(p) for p in aps.tolist()],
        ue_positions=[tuple(p) for p in ues.tolist()],
    )
