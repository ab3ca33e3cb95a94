"""Data models for the fronthaul bit allocation problem"""

import math
from enum import Enum
from typing import Generic, List, Optional, Tuple, TypeVar, Union

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationInfo,
    field_validator,
    model_validator,
)


BOLTZMANN = 1.380649e-23
"""Boltzmann constant in J/K"""

METHODS = (
    "equal",
    "stage1",
    "stage2",
    "stage1+2",
    "hs",
    "ap_exhaustive",
    "full_exhaustive",
    "ga",
    "ga_elitist",
    "pso",
    "pso10",
    "sa",
)
"""Allocation method identifiers accepted by the runner and the CLI"""


class Objective(str, Enum):
    """Scalar the allocators maximize"""

    TOTAL = "total"
    MAXMIN = "maxmin"


class SweepKind(str, Enum):
    """Experiment families the runner knows how to sweep"""

    NONE = "none"
    NUM_UES = "num_ues"
    NUM_ANTENNAS = "num_antennas"
    DISPLACEMENT = "displacement"
    OBJECTIVE = "objective"
    METAHEURISTICS = "metaheuristics"
    CONVERGENCE = "convergence"


def _as_float_array(value, ndim: int) -> np.ndarray:
    array = np.array(value, dtype=float)
    if array.ndim != ndim:
        raise ValueError(f"Expected a {ndim}-D array, got shape {array.shape}")
    array.setflags(write=False)
    return array


class SystemConfig(BaseModel):
    """Physical system parameters, all powers in linear watts"""

    model_config = ConfigDict(frozen=True)

    num_aps: int = Field(4, ge=1, description="Number of access points M")
    num_ues: int = Field(8, ge=1, description="Number of user equipments K")
    antennas_per_ap: int = Field(64, ge=1, description="Antennas per AP N")
    bit_budget: int = Field(64, ge=0, description="Total fronthaul bit budget b_max")
    max_bits: int = Field(12, ge=1, le=12, description="Upper bound on bits of a single link")
    pilot_length: int = Field(8, ge=1, description="Pilot length tau_p in symbols")
    pilot_power: float = Field(..., gt=0, description="Pilot transmit power p_p [W]")
    uplink_power: float = Field(..., gt=0, description="Uplink data power p_u [W]")
    noise_power: float = Field(..., gt=0, description="Receiver noise power sigma_n^2 [W]")
    bandwidth: float = Field(20e6, gt=0, description="System bandwidth [Hz]")
    carrier_freq: float = Field(2.1e9, gt=0, description="Carrier frequency [Hz]")
    noise_figure_db: float = Field(9.0, description="Receiver noise figure [dB]")
    shadowing_std_db: float = Field(4.0, ge=0, description="Log-normal shadowing std [dB]")
    min_distance_m: float = Field(1.0, gt=0, description="AP-UE distance floor [m]")

    @field_validator("pilot_length")
    @classmethod
    def validate_pilot_length(cls, v: int, info: ValidationInfo) -> int:
        """Orthogonal pilots need at least one symbol per UE"""
        num_ues = info.data.get("num_ues")
        if num_ues is not None and v < num_ues:
            raise ValueError(
                f"pilot_length ({v}) must be at least num_ues ({num_ues}) for orthogonal pilots"
            )
        return v

    @classmethod
    def from_physical(
        cls,
        ue_power_dbm: float = 15.0,
        pilot_power_dbm: Optional[float] = None,
        noise_temperature_k: float = 290.0,
        **fields,
    ) -> "SystemConfig":
        """Build a config from dBm powers, deriving the thermal noise power

        Args:
            ue_power_dbm: Uplink data power in dBm
            pilot_power_dbm: Pilot power in dBm (defaults to the data power)
            noise_temperature_k: Noise temperature T_0 in kelvin
            **fields: Any other SystemConfig field

        Returns:
            Validated SystemConfig
        """
        if pilot_power_dbm is None:
            pilot_power_dbm = ue_power_dbm
        bandwidth = fields.get("bandwidth", cls.model_fields["bandwidth"].default)
        noise_figure_db = fields.get("noise_figure_db", cls.model_fields["noise_figure_db"].default)
        fields.setdefault("pilot_length", fields.get("num_ues", cls.model_fields["num_ues"].default))
        return cls(
            uplink_power=dbm_to_watts(ue_power_dbm),
            pilot_power=dbm_to_watts(pilot_power_dbm),
            noise_power=thermal_noise_watts(bandwidth, noise_figure_db, noise_temperature_k),
            **fields,
        )

    def replace(self, **changes) -> "SystemConfig":
        """Copy with changes, re-running every validator"""
        return SystemConfig(**{**self.model_dump(), **changes})

    @property
    def ue_budget(self) -> int:
        """Stage-1 per-UE budget floor(b_max / K)"""
        return self.bit_budget // self.num_ues

    @property
    def equal_bits(self) -> int:
        """Bits per link under equal allocation, floor(b_max / (M K)) capped at max_bits"""
        return min(self.bit_budget // (self.num_aps * self.num_ues), self.max_bits)


def dbm_to_watts(dbm: float) -> float:
    """Convert dBm to watts"""
    return 10 ** (dbm / 10) / 1000


def db_to_linear(db: float) -> float:
    """Convert a dB ratio to linear scale"""
    return 10 ** (db / 10)


def thermal_noise_watts(bandwidth: float, noise_figure_db: float, temperature_k: float = 290.0) -> float:
    """Noise power BW * k_B * T_0 * N_f in watts"""
    return bandwidth * BOLTZMANN * temperature_k * db_to_linear(noise_figure_db)


class Geometry(BaseModel):
    """Planar AP and UE positions in meters"""

    model_config = ConfigDict(frozen=True)

    ap_positions: List[Tuple[float, float]] = Field(..., min_length=1, description="AP coordinates")
    ue_positions: List[Tuple[float, float]] = Field(..., min_length=1, description="UE coordinates")

    def distances(self, floor: float = 1.0) -> np.ndarray:
        """M x K matrix of AP-UE distances, clipped below at ``floor``"""
        aps = np.asarray(self.ap_positions, dtype=float)
        ues = np.asarray(self.ue_positions, dtype=float)
        raw = np.linalg.norm(aps[:, None, :] - ues[None, :, :], axis=-1)
        return np.maximum(raw, floor)


class ChannelStatistics(BaseModel):
    """Large-scale gains beta and estimate variances gamma, both M x K"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    beta: np.ndarray = Field(..., description="Linear large-scale fading gains")
    gamma: np.ndarray = Field(..., description="Linear LMMSE estimate variances")

    @field_validator("beta", "gamma", mode="before")
    @classmethod
    def validate_matrix(cls, v) -> np.ndarray:
        """Coerce to a read-only 2-D float array of positive entries"""
        array = _as_float_array(v, 2)
        if not np.all(array > 0):
            raise ValueError("Channel statistics must be strictly positive")
        return array

    @model_validator(mode="after")
    def validate_estimation_quality(self) -> "ChannelStatistics":
        """Estimate variance is strictly below the channel gain"""
        if self.beta.shape != self.gamma.shape:
            raise ValueError(f"beta {self.beta.shape} and gamma {self.gamma.shape} differ in shape")
        if not np.all(self.gamma < self.beta):
            raise ValueError("gamma must be strictly smaller than beta for every AP-UE pair")
        return self

    @property
    def num_aps(self) -> int:
        return self.beta.shape[0]

    @property
    def num_ues(self) -> int:
        return self.beta.shape[1]


class QuantizationProfile(BaseModel):
    """Distortion rho(b) of the optimal uniform quantizer, indexed by bit count"""

    model_config = ConfigDict(frozen=True)

    rho_table: Tuple[float, ...] = Field(..., min_length=2, description="rho(b) for b = 0..max_bits")

    @field_validator("rho_table")
    @classmethod
    def validate_table(cls, v: Tuple[float, ...]) -> Tuple[float, ...]:
        """rho(0) = 1, then strictly decreasing inside (0, 1)"""
        if v[0] != 1.0:
            raise ValueError(f"rho(0) must be 1, got {v[0]}")
        for bits, (previous, current) in enumerate(zip(v, v[1:]), start=1):
            if not 0.0 < current < 1.0:
                raise ValueError(f"rho({bits}) = {current} outside (0, 1)")
            if current >= previous:
                raise ValueError(f"rho must strictly decrease, rho({bits}) = {current}")
        return v

    @property
    def max_bits(self) -> int:
        return len(self.rho_table) - 1

    def as_array(self) -> np.ndarray:
        return np.asarray(self.rho_table, dtype=float)


class BitAllocation(BaseModel):
    """M x K matrix of non-negative integer bits per AP-UE link"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    bits: np.ndarray = Field(..., description="Integer bit matrix b[m][k]")

    @field_validator("bits", mode="before")
    @classmethod
    def validate_bits(cls, v) -> np.ndarray:
        """Coerce to a read-only non-negative int64 matrix"""
        raw = np.asarray(v)
        if raw.ndim != 2:
            raise ValueError(f"Bit allocation must be 2-D, got shape {raw.shape}")
        array = raw.astype(np.int64)
        if not np.array_equal(array, raw):
            raise ValueError("Bit allocation entries must be integers")
        if np.any(array < 0):
            raise ValueError("Bit allocation entries must be non-negative")
        array.setflags(write=False)
        return array

    @classmethod
    def from_ap_bits(cls, ap_bits, num_ues: int) -> "BitAllocation":
        """Expand an AP-level vector uniformly to every UE"""
        column = np.asarray(ap_bits, dtype=np.int64).reshape(-1, 1)
        return cls(bits=np.repeat(column, num_ues, axis=1))

    @property
    def total(self) -> int:
        return int(self.bits.sum())

    @property
    def ap_view(self) -> Optional[np.ndarray]:
        """Per-AP vector when every UE of each AP shares the same bits"""
        if np.all(self.bits == self.bits[:, :1]):
            return self.bits[:, 0].copy()
        return None

    def as_lists(self) -> List[List[int]]:
        return self.bits.tolist()


class UEMatrices(BaseModel):
    """Per-UE diagonal matrices feeding the SINR expressions"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    gamma_vec: np.ndarray = Field(..., description="Column k of gamma, length M")
    gamma_diag: np.ndarray = Field(..., description="diag(gamma_k), M x M")
    omega: np.ndarray = Field(..., description="diag(1 - rho(b_mk)), M x M")
    interference: np.ndarray = Field(..., description="K x M x M stack of diag(gamma_mk beta_mk')")


class ReceiverFilter(BaseModel):
    """Unit-norm CPU combining vector of one UE"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    weights: np.ndarray = Field(..., description="Complex weights u_k, length M")
    degenerate: bool = Field(False, description="No AP forwards this UE; SINR is zero")

    @field_validator("weights", mode="before")
    @classmethod
    def validate_weights(cls, v) -> np.ndarray:
        """Unit Euclidean norm"""
        array = np.array(v, dtype=complex).reshape(-1)
        norm = np.linalg.norm(array)
        if not math.isclose(norm, 1.0, rel_tol=1e-9):
            raise ValueError(f"Receiver filter must have unit norm, got {norm}")
        array.setflags(write=False)
        return array


class SINRComponents(BaseModel):
    """Closed-form powers of the five received-signal terms of one UE"""

    model_config = ConfigDict(frozen=True)

    desired: float = Field(..., ge=0)
    beamforming: float = Field(..., ge=0)
    interference: float = Field(..., ge=0)
    noise: float = Field(..., ge=0)
    quantization: float = Field(..., ge=0)

    @property
    def sinr(self) -> float:
        denominator = self.beamforming + self.interference + self.noise + self.quantization
        if denominator <= 0:
            return 0.0
        return self.desired / denominator

    def as_dict(self) -> dict:
        return self.model_dump()


class EvaluationReport(BaseModel):
    """Per-UE and aggregate spectral efficiency of one allocation"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    per_ue_sinr: np.ndarray = Field(..., description="Length-K SINR values")
    per_ue_se: np.ndarray = Field(..., description="Length-K SE values [bit/s/Hz]")
    total_se: float = Field(..., ge=0)
    min_se: float = Field(..., ge=0)
    filters: List[ReceiverFilter] = Field(..., description="One combining vector per UE")

    @model_validator(mode="after")
    def validate_consistency(self) -> "EvaluationReport":
        """SE, total and minimum agree with the per-UE SINR"""
        if len(self.filters) != self.per_ue_sinr.size:
            raise ValueError("One receiver filter per UE is required")
        if not np.allclose(self.per_ue_se, np.log2(1.0 + self.per_ue_sinr), rtol=1e-12, atol=0):
            raise ValueError("per_ue_se must equal log2(1 + per_ue_sinr)")
        if not math.isclose(self.total_se, float(self.per_ue_se.sum()), rel_tol=1e-12, abs_tol=1e-15):
            raise ValueError("total_se must equal the sum of per_ue_se")
        if self.min_se != float(self.per_ue_se.min()):
            raise ValueError("min_se must equal the minimum of per_ue_se")
        return self

    def value(self, objective: Objective) -> float:
        """Scalar the allocators maximize under ``objective``"""
        return self.total_se if objective == Objective.TOTAL else self.min_se


class Harmony(BaseModel):
    """Candidate bit vector paired with its evaluation"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    variables: np.ndarray = Field(..., description="Integer bit vector")
    evaluation: float = Field(..., description="Objective value of the expanded allocation")


class HSParams(BaseModel):
    """Harmony search parameters of one stage"""

    hm_size: int = Field(..., ge=1, description="Harmony memory size N_HM")
    hmcr: float = Field(0.9, ge=0, le=1, description="Harmony memory considering rate D")
    iterations: int = Field(..., ge=0, description="Improvisations N_iter")
    outer_cycles: int = Field(1, ge=1, description="Outer cycles N_iter^o (Stage 2 only)")

    @property
    def evaluations(self) -> int:
        return self.hm_size + self.iterations


class HarmonySettings(BaseModel):
    """Parameters of both stages of the hierarchical harmony search"""

    stage1: HSParams = Field(default_factory=lambda: HSParams(hm_size=10, hmcr=0.9, iterations=30))
    stage2: HSParams = Field(
        default_factory=lambda: HSParams(hm_size=5, hmcr=0.9, iterations=10, outer_cycles=2)
    )


class GAParams(BaseModel):
    """Genetic algorithm budget of one stage"""

    population: int = Field(..., ge=1, description="Population size")
    offspring: int = Field(1, ge=1, description="Offspring generated per generation")
    generations: int = Field(..., ge=0, description="Number of generations")
    mutation_rate: Optional[float] = Field(
        None, ge=0, le=1, description="Per-gene mutation probability, 1/dimension when unset"
    )

    @property
    def evaluations(self) -> int:
        return self.population + self.offspring * self.generations


class PSOParams(BaseModel):
    """Integer particle swarm budget of one stage"""

    swarm_size: int = Field(..., ge=1, description="Number of particles, all moved every iteration")
    iterations: int = Field(..., ge=0, description="Swarm iterations")
    inertia: float = Field(0.7, ge=0, description="Velocity inertia weight")
    cognitive: float = Field(1.5, ge=0, description="Attraction to the personal best")
    social: float = Field(1.5, ge=0, description="Attraction to the swarm best")

    @property
    def evaluations(self) -> int:
        return self.swarm_size * (1 + self.iterations)


class SAParams(BaseModel):
    """Simulated annealing budget and cooling schedule of one stage"""

    iterations: int = Field(..., ge=0, description="Neighbor moves")
    initial_temperature: Optional[float] = Field(
        None, ge=0, description="Fixed start temperature; calibrated from neighbor moves when unset"
    )
    initial_acceptance: float = Field(0.8, gt=0, lt=1, description="Target acceptance of worse calibration moves")
    calibration_moves: int = Field(100, ge=1, description="Neighbor moves used to calibrate the start temperature")
    final_ratio: float = Field(1e-3, gt=0, le=1, description="Final to initial temperature ratio")

    @property
    def evaluations(self) -> int:
        return 1 + self.iterations


P = TypeVar("P", bound=BaseModel)


class TwoStageParams(BaseModel, Generic[P]):
    """Per-stage parameters of a comparator run through the two-stage hierarchy"""

    stage1: P
    stage2: P
    outer_cycles: int = Field(2, ge=1, description="Stage-2 outer cycles")


class GATwoStage(TwoStageParams[GAParams]):
    """Genetic algorithm budgets of both stages"""


class PSOTwoStage(TwoStageParams[PSOParams]):
    """Particle swarm budgets of both stages"""


class SATwoStage(TwoStageParams[SAParams]):
    """Simulated annealing budgets of both stages"""


def _ga(stage1: Tuple[int, int, int], stage2: Tuple[int, int, int]) -> GATwoStage:
    return GATwoStage(
        stage1=GAParams(population=stage1[0], offspring=stage1[1], generations=stage1[2]),
        stage2=GAParams(population=stage2[0], offspring=stage2[1], generations=stage2[2]),
    )


def _pso(stage1: Tuple[int, int], stage2: Tuple[int, int]) -> PSOTwoStage:
    return PSOTwoStage(
        stage1=PSOParams(swarm_size=stage1[0], iterations=stage1[1]),
        stage2=PSOParams(swarm_size=stage2[0], iterations=stage2[1]),
    )


class ComparatorSettings(BaseModel):
    """Budgets of the comparator metaheuristics, matched to the harmony search ledger"""

    ga: GATwoStage = Field(default_factory=lambda: _ga((10, 1, 30), (5, 1, 10)))
    ga_elitist: GATwoStage = Field(
        default_factory=lambda: _ga((10, 45, 30), (5, 10, 10))
    )
    pso: PSOTwoStage = Field(default_factory=lambda: _pso((10, 3), (5, 2)))
    pso10: PSOTwoStage = Field(default_factory=lambda: _pso((10, 30), (5, 20)))
    sa: SATwoStage = Field(
        default_factory=lambda: SATwoStage(
            stage1=SAParams(iterations=39), stage2=SAParams(iterations=14)
        )
    )


class ScenarioSettings(BaseModel):
    """Drop geometry plus the system template every trial starts from"""

    system: SystemConfig
    ap_area_m: float = Field(1000.0, gt=0, description="Side of the square AP area")
    ue_area_m: float = Field(1000.0, gt=0, description="Side of the square UE drop area")
    displacement_m: float = Field(0.0, ge=0, description="Offset of the UE area centre")
    direction: Tuple[float, float] = Field((0.0, 1.0), description="Unit displacement direction")
    pilot_follows_ues: bool = Field(
        True, description="Set tau_p = K whenever a sweep changes the number of UEs"
    )

    @field_validator("direction")
    @classmethod
    def validate_direction(cls, v: Tuple[float, float]) -> Tuple[float, float]:
        """Normalize to a unit vector"""
        norm = math.hypot(*v)
        if norm == 0:
            raise ValueError("Displacement direction must be non-zero")
        return (v[0] / norm, v[1] / norm)


MAX_SWEEP_UES = 256
MAX_SWEEP_ANTENNAS = 1024


class ExperimentSpec(BaseModel):
    """Everything run_experiment needs to reproduce a figure's data"""

    scenario: ScenarioSettings
    sweep: SweepKind = Field(SweepKind.NONE, description="Swept quantity")
    sweep_values: List[float] = Field(default_factory=list, description="Points of the sweep")
    trials: int = Field(100, ge=1, description="UE drops per sweep point")
    seed: int = Field(0, ge=0, description="Root seed of every random substream")
    methods: List[str] = Field(default_factory=lambda: ["equal", "stage1", "stage1+2"], min_length=1)
    objective: Objective = Field(Objective.TOTAL, description="Scalar the allocators maximize")
    harmony: HarmonySettings = Field(default_factory=HarmonySettings)
    comparators: ComparatorSettings = Field(default_factory=ComparatorSettings)
    enumeration_cap: int = Field(1_000_000, ge=1, description="Largest exhaustive enumeration")
    record_allocations: bool = Field(False, description="Store allocation and per-UE SE per record")
    record_timing: bool = Field(False, description="Store wall time per record")
    workers: int = Field(1, ge=1, description="Parallel trial workers")

    @field_validator("methods")
    @classmethod
    def validate_methods(cls, v: List[str]) -> List[str]:
        """Known identifiers, no duplicates"""
        normalized = [method.lower().strip() for method in v]
        unknown = [method for method in normalized if method not in METHODS]
        if unknown:
            raise ValueError(f"Unknown methods {unknown}; choose from {', '.join(METHODS)}")
        if len(normalized) != len(set(normalized)):
            raise ValueError("Duplicate methods found")
        return normalized

    @model_validator(mode="after")
    def validate_sweep(self) -> "ExperimentSpec":
        """Sweep values present and inside their caps"""
        values = self.sweep_values
        if self.sweep in (SweepKind.NUM_UES, SweepKind.NUM_ANTENNAS, SweepKind.DISPLACEMENT) and not values:
            raise ValueError(f"Sweep '{self.sweep.value}' needs sweep_values")
        if self.sweep == SweepKind.NUM_UES:
            _check_integer_range(values, 1, MAX_SWEEP_UES, "num_ues")
        elif self.sweep == SweepKind.NUM_ANTENNAS:
            _check_integer_range(values, 1, MAX_SWEEP_ANTENNAS, "num_antennas")
        elif self.sweep == SweepKind.DISPLACEMENT:
            if any(value < 0 for value in values):
                raise ValueError("Displacement sweep values must be non-negative")
        return self


def _check_integer_range(values: List[float], low: int, high: int, name: str) -> None:
    for value in values:
        if value != int(value) or not low <= value <= high:
            raise ValueError(f"{name} sweep values must be integers in [{low}, {high}], got {value}")


class TrialRecord(BaseModel):
    """Outcome of one method on one trial of one sweep point"""

    trial: int = Field(..., ge=0)
    method: str
    sweep_name: str
    sweep_value: Optional[Union[float, str]] = None
    objective: Objective = Objective.TOTAL
    total_se: Optional[float] = Field(None, ge=0, description="Total SE, unset when refused")
    min_se: Optional[float] = Field(None, ge=0, description="Minimum SE, unset when refused")
    eval_count: int = Field(0, ge=0)
    wall_ms: Optional[float] = Field(None, ge=0, description="Wall time of the method, unset unless timed")
    refused: Optional[str] = Field(None, description="Reason the method declined to run")
    allocation: Optional[List[List[int]]] = None
    per_ue_se: Optional[List[float]] = None
    trace: Optional[List[float]] = None

    @model_validator(mode="after")
    def validate_se(self) -> "TrialRecord":
        """Total SE never below the minimum SE"""
        if self.refused is None:
            if self.total_se is None or self.min_se is None:
                raise ValueError("Completed records need total_se and min_se")
            if self.total_se < self.min_se - 1e-12:
                raise ValueError(f"total_se {self.total_se} below min_se {self.min_se}")
        return self


class ChannelRealization(BaseModel):
    """Small-scale channel draws: true channels, LMMSE estimates and errors

    Arrays have shape (samples, M, K, N).
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    g: np.ndarray = Field(..., description="True channels")
    g_hat: np.ndarray = Field(..., description="LMMSE channel estimates")
    e: np.ndarray = Field(..., description="Estimation errors g - g_hat")


class Estimate(BaseModel):
    """Monte-Carlo sample mean with its standard error"""

    model_config = ConfigDict(frozen=True)

    mean: float
    stderr: float = Field(..., ge=0)

    def agrees_with(self, value: float, sigmas: float = 3.0) -> bool:
        """True when ``value`` lies within ``sigmas`` standard errors"""
        return abs(self.mean - value) <= sigmas * self.stderr


class ComponentEstimates(BaseModel):
    """Monte-Carlo counterparts of SINRComponents plus the quantizer input power"""

    model_config = ConfigDict(frozen=True)

    desired: Estimate
    beamforming: Estimate
    interference: Estimate
    noise: Estimate
    quantization: Estimate
    input_power: List[Estimate] = Field(..., description="Per-AP quantizer input power")
    num_samples: int = Field(..., ge=1)

    def components(self) -> dict:
        return {
            "desired": self.desired,
            "beamforming": self.beamforming,
            "interference": self.interference,
            "noise": self.noise,
            "quantization": self.quantization,
        }


class InstanceCheck(BaseModel):
    """Closed-form versus oracle checks on one random instance"""

    index: int
    num_aps: int
    num_ues: int
    antennas_per_ap: int
    ue: int
    mc_passed: int = Field(..., ge=0)
    mc_checks: int = Field(..., ge=0)
    residual: float = Field(..., ge=0, description="Componentwise vs compact SINR, relative")
    filter_error: float = Field(..., ge=0, description="Closed-form vs power-iteration quotient, relative")
    power_passed: int = Field(0, ge=0, description="APs whose quantizer input power lies within the band")
    power_checks: int = Field(0, ge=0, description="APs whose quantizer input power was checked")


class ValidationReport(BaseModel):
    """Outcome of the closed-form validation suite"""

    instances: List[InstanceCheck]
    num_samples: int
    min_pass_rate: float = 0.95
    residual_tolerance: float = 1e-9
    filter_tolerance: float = 1e-10

    @property
    def mc_pass_rate(self) -> float:
        checks = sum(item.mc_checks for item in self.instances)
        if checks == 0:
            return 1.0
        return sum(item.mc_passed for item in self.instances) / checks

    @property
    def power_pass_rate(self) -> float:
        checks = sum(item.power_checks for item in self.instances)
        if checks == 0:
            return 1.0
        return sum(item.power_passed for item in self.instances) / checks

    @property
    def max_residual(self) -> float:
        return max((item.residual for item in self.instances), default=0.0)

    @property
    def max_filter_error(self) -> float:
        return max((item.filter_error for item in self.instances), default=0.0)

    @property
    def passed(self) -> bool:
        return (
            self.mc_pass_rate >= self.min_pass_rate
            and self.power_pass_rate >= self.min_pass_rate
            and self.max_residual <= self.residual_tolerance
            and self.max_filter_error <= self.filter_tolerance
        )
