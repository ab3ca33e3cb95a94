"""Additive quantization noise model: bits to distortion and linear gain"""

from functools import lru_cache
from typing import List, Tuple

import numpy as np

from .errors import DomainError
from .models import QuantizationProfile


PUBLISHED_RHO: Tuple[float, ...] = (0.3634, 0.1188, 0.03744, 0.01154, 0.003490)
"""Distortion of the optimal uniform quantizer for 1..5 bits, Gaussian input"""

EXTENDED_RHO: Tuple[float, ...] = (
    1.040e-3,
    3.043e-4,
    8.769e-5,
    2.492e-5,
    6.997e-6,
    1.944e-6,
    5.355e-7,
)
"""Same construction continued for 6..12 bits by step-size search"""

MAX_BITS = len(PUBLISHED_RHO) + len(EXTENDED_RHO)

PROVENANCE_ZERO = "zero-rate convention"
PROVENANCE_PUBLISHED = "published"
PROVENANCE_EXTENDED = "optimal-uniform step search"


@lru_cache(maxsize=None)
def default_profile(max_bits: int = MAX_BITS) -> QuantizationProfile:
    """Distortion table truncated at ``max_bits``

    Raises:
        DomainError: If max_bits is outside 1..12
    """
    if not 1 <= max_bits <= MAX_BITS:
        raise DomainError(f"max_bits must be in 1..{MAX_BITS}, got {max_bits}")
    table = (1.0,) + PUBLISHED_RHO + EXTENDED_RHO
    return QuantizationProfile(rho_table=table[: max_bits + 1])


def rho_of_bits(bits: int, profile: QuantizationProfile) -> float:
    """Distortion rho(b); a zero-bit link conveys nothing so rho(0) = 1

    Raises:
        DomainError: If bits is negative or above the profile's max_bits
    """
    if bits < 0 or bits > profile.max_bits:
        raise DomainError(f"bits must be in 0..{profile.max_bits}, got {bits}")
    return profile.rho_table[int(bits)]


def rho_array(bits: np.ndarray, profile: QuantizationProfile) -> np.ndarray:
    """Elementwise rho(b) for an integer array of any shape"""
    bits = np.asarray(bits)
    if bits.size and (bits.min() < 0 or bits.max() > profile.max_bits):
        raise DomainError(
            f"bits must be in 0..{profile.max_bits}, got range {bits.min()}..{bits.max()}"
        )
    return profile.as_array()[bits.astype(np.int64)]


def omega_matrix(bits_for_ue: np.ndarray, profile: QuantizationProfile) -> np.ndarray:
    """Diagonal M x M matrix of AQNM gains 1 - rho(b_mk) for one UE"""
    return np.diag(1.0 - rho_array(np.asarray(bits_for_ue).reshape(-1), profile))


def quantizer_table(profile: QuantizationProfile) -> List[dict]:
    """Rows of b, rho, gain and noise factor with the origin of every value"""
    rows = []
    for bits, rho in enumerate(profile.rho_table):
        if bits == 0:
            provenance = PROVENANCE_ZERO
        elif bits <= len(PUBLISHED_RHO):
            provenance = PROVENANCE_PUBLISHED
        else:
            provenance = PROVENANCE_EXTENDED
        rows.append({
            "bits": bits,
            "rho": rho,
            "gain": 1.0 - rho,
            "noise_factor": rho * (1.0 - rho),
            "provenance": provenance,
        })
    return rows
