"""Configuration file loading and validation"""

import logging
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .channel import direction_from_label
from .errors import ConfigError, DomainError
from .experiment import CONVERGENCE_METHODS, METAHEURISTIC_METHODS
from .models import (
    ComparatorSettings,
    ExperimentSpec,
    GATwoStage,
    HarmonySettings,
    HSParams,
    Objective,
    PSOTwoStage,
    SAParams,
    SATwoStage,
    ScenarioSettings,
    SweepKind,
    SystemConfig,
)


logger = logging.getLogger(__name__)

SECTIONS = {"system", "scenario", "harmony", "comparators", "experiment"}

PRESETS: Dict[str, Dict[str, object]] = {
    "table3": {},
    "desk": {"antennas_per_ap": 16, "trials": 20},
    "massive": {"num_aps": 100, "num_ues": 20, "antennas_per_ap": 32, "bit_budget": 4000, "trials": 10},
}

FIELD_TO_KEY = {
    "bandwidth": "bandwidth_mhz",
    "carrier_freq": "carrier_freq_ghz",
    "uplink_power": "ue_power_dbm",
    "pilot_power": "pilot_power_dbm",
    "direction": "displacement_direction",
}


class ConfigFile(BaseModel):
    """Flat view of every key a configuration file may set"""

    model_config = ConfigDict(extra="forbid")

    preset: Literal["table3", "desk", "massive"] = "table3"

    # [system]
    num_aps: int = Field(4, ge=1)
    num_ues: int = Field(8, ge=1)
    antennas_per_ap: int = Field(64, ge=1)
    bit_budget: int = Field(64, ge=0)
    max_bits: int = Field(12, ge=1, le=12)
    pilot_length: Optional[int] = Field(None, ge=1, description="Defaults to num_ues")
    ue_power_dbm: float = 15.0
    pilot_power_dbm: Optional[float] = Field(None, description="Defaults to ue_power_dbm")
    bandwidth_mhz: float = Field(20.0, gt=0)
    carrier_freq_ghz: float = Field(2.1, gt=0)
    noise_figure_db: float = 9.0
    noise_temperature_k: float = Field(290.0, gt=0)
    shadowing_std_db: float = Field(4.0, ge=0)
    min_distance_m: float = Field(1.0, gt=0)

    # [scenario]
    ap_area_m: float = Field(1000.0, gt=0)
    ue_area_m: float = Field(1000.0, gt=0)
    displacement_m: float = Field(0.0, ge=0)
    displacement_direction: str = "upward"
    pilot_follows_ues: bool = True

    # [harmony]
    stage1_memory_size: int = Field(10, ge=1)
    stage1_hmcr: float = Field(0.9, ge=0, le=1)
    stage1_iterations: int = Field(30, ge=0)
    stage2_memory_size: int = Field(5, ge=1)
    stage2_hmcr: float = Field(0.9, ge=0, le=1)
    stage2_iterations: int = Field(10, ge=0)
    outer_cycles: int = Field(2, ge=1)

    # [comparators]
    ga_mutation_rate: Optional[float] = Field(None, ge=0, le=1)
    pso_inertia: float = Field(0.7, ge=0)
    pso_cognitive: float = Field(1.5, ge=0)
    pso_social: float = Field(1.5, ge=0)
    sa_initial_acceptance: float = Field(0.8, gt=0, lt=1)
    sa_calibration_moves: int = Field(100, ge=1)
    sa_final_ratio: float = Field(1e-3, gt=0, le=1)

    # [experiment]
    sweep: SweepKind = SweepKind.NONE
    sweep_values: List[float] = Field(default_factory=list)
    trials: int = Field(100, ge=1)
    seed: int = Field(0, ge=0)
    methods: Optional[List[str]] = None
    objective: Objective = Objective.TOTAL
    enumeration_cap: int = Field(1_000_000, ge=1)
    record_allocations: bool = False
    record_timing: bool = False
    workers: int = Field(1, ge=1)

    @field_validator("sweep_values", "methods", mode="before")
    @classmethod
    def split_list(cls, v):
        """Comma separated values"""
        if isinstance(v, str):
            return [item.strip() for item in v.split(",") if item.strip()]
        return v


def read_pairs(text: str) -> Tuple[Dict[str, str], Dict[str, int]]:
    """Key/value strings and the line of every key

    Raises:
        ConfigError: On a malformed line, an unknown section or a repeated key
    """
    values: Dict[str, str] = {}
    lines: Dict[str, int] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]") or line[1:-1].strip() not in SECTIONS:
                raise ConfigError(f"unknown section {line}", line=number)
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", line=number)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in ConfigFile.model_fields:
            raise ConfigError("unknown key", key=key, line=number)
        if key in values:
            raise ConfigError(f"duplicate key, first set on line {lines[key]}", key=key, line=number)
        values[key] = value
        lines[key] = number
    return values, lines


def _config_error(error: ValidationError, lines: Dict[str, int]) -> ConfigError:
    detail = error.errors()[0]
    field = str(detail["loc"][0]) if detail["loc"] else None
    key = FIELD_TO_KEY.get(field, field)
    return ConfigError(detail["msg"], key=key, line=lines.get(key))


def _default_methods(sweep: SweepKind) -> List[str]:
    if sweep == SweepKind.METAHEURISTICS:
        return list(METAHEURISTIC_METHODS)
    if sweep == SweepKind.CONVERGENCE:
        return list(CONVERGENCE_METHODS)
    return ["equal", "stage1", "stage1+2"]


def build_settings(values: Dict[str, str], lines: Optional[Dict[str, int]] = None) -> Tuple[SystemConfig, ExperimentSpec]:
    """Preset defaults overridden by ``values``, converted to validated models

    Raises:
        ConfigError: Naming the offending key and its line when known
    """
    lines = lines or {}
    preset = values.get("preset", "table3")
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset '{preset}', choose from {', '.join(PRESETS)}",
                          key="preset", line=lines.get("preset"))
    try:
        cfg = ConfigFile.model_validate({**PRESETS[preset], **values})
        system = SystemConfig.from_physical(
            ue_power_dbm=cfg.ue_power_dbm,
            pilot_power_dbm=cfg.pilot_power_dbm,
            noise_temperature_k=cfg.noise_temperature_k,
            num_aps=cfg.num_aps,
            num_ues=cfg.num_ues,
            antennas_per_ap=cfg.antennas_per_ap,
            bit_budget=cfg.bit_budget,
            max_bits=cfg.max_bits,
            pilot_length=cfg.pilot_length if cfg.pilot_length is not None else cfg.num_ues,
            bandwidth=cfg.bandwidth_mhz * 1e6,
            carrier_freq=cfg.carrier_freq_ghz * 1e9,
            noise_figure_db=cfg.noise_figure_db,
            shadowing_std_db=cfg.shadowing_std_db,
            min_distance_m=cfg.min_distance_m,
        )
        try:
            direction = direction_from_label(cfg.displacement_direction)
        except DomainError as e:
            raise ConfigError(str(e), key="displacement_direction",
                              line=lines.get("displacement_direction")) from e
        scenario = ScenarioSettings(
            system=system,
            ap_area_m=cfg.ap_area_m,
            ue_area_m=cfg.ue_area_m,
            displacement_m=cfg.displacement_m,
            direction=direction,
            pilot_follows_ues=cfg.pilot_follows_ues and cfg.pilot_length is None,
        )
        harmony = HarmonySettings(
            stage1=HSParams(hm_size=cfg.stage1_memory_size, hmcr=cfg.stage1_hmcr,
                            iterations=cfg.stage1_iterations),
            stage2=HSParams(hm_size=cfg.stage2_memory_size, hmcr=cfg.stage2_hmcr,
                            iterations=cfg.stage2_iterations, outer_cycles=cfg.outer_cycles),
        )
        spec = ExperimentSpec(
            scenario=scenario,
            sweep=cfg.sweep,
            sweep_values=cfg.sweep_values,
            trials=cfg.trials,
            seed=cfg.seed,
            methods=cfg.methods if cfg.methods is not None else _default_methods(cfg.sweep),
            objective=cfg.objective,
            harmony=harmony,
            comparators=_comparators(cfg),
            enumeration_cap=cfg.enumeration_cap,
            record_allocations=cfg.record_allocations,
            record_timing=cfg.record_timing,
            workers=cfg.workers,
        )
    except ValidationError as e:
        raise _config_error(e, lines) from e
    return system, spec


def _comparators(cfg: ConfigFile) -> ComparatorSettings:
    """Default budgets with the configured operator settings applied"""
    defaults = ComparatorSettings()

    def ga(params: GATwoStage) -> GATwoStage:
        return GATwoStage(
            stage1=params.stage1.model_copy(update={"mutation_rate": cfg.ga_mutation_rate}),
            stage2=params.stage2.model_copy(update={"mutation_rate": cfg.ga_mutation_rate}),
            outer_cycles=cfg.outer_cycles,
        )

    def pso(params: PSOTwoStage) -> PSOTwoStage:
        update = {"inertia": cfg.pso_inertia, "cognitive": cfg.pso_cognitive, "social": cfg.pso_social}
        return PSOTwoStage(
            stage1=params.stage1.model_copy(update=update),
            stage2=params.stage2.model_copy(update=update),
            outer_cycles=cfg.outer_cycles,
        )

    update = {
        "initial_acceptance": cfg.sa_initial_acceptance,
        "calibration_moves": cfg.sa_calibration_moves,
        "final_ratio": cfg.sa_final_ratio,
    }
    return ComparatorSettings(
        ga=ga(defaults.ga),
        ga_elitist=ga(defaults.ga_elitist),
        pso=pso(defaults.pso),
        pso10=pso(defaults.pso10),
        sa=SATwoStage(
            stage1=SAParams(iterations=defaults.sa.stage1.iterations, **update),
            stage2=SAParams(iterations=defaults.sa.stage2.iterations, **update),
            outer_cycles=cfg.outer_cycles,
        ),
    )


def load_config_text(text: str) -> Tuple[SystemConfig, ExperimentSpec]:
    """Parse configuration file content"""
    values, lines = read_pairs(text)
    return build_settings(values, lines)


def parse_config(path: str | Path) -> Tuple[SystemConfig, ExperimentSpec]:
    """Load a configuration file; an empty file yields the table3 preset

    Raises:
        ConfigError: If the file is missing or any line is invalid
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read configuration file {path}: {e.strerror or e}") from e
    system, spec = load_config_text(text)
    logger.debug("Loaded %s: M=%d K=%d N=%d b_max=%d", path, system.num_aps, system.num_ues,
                 system.antennas_per_ap, system.bit_budget)
    return system, spec


def default_settings(preset: str = "table3") -> Tuple[SystemConfig, ExperimentSpec]:
    """Settings of a named preset with no overrides"""
    return build_settings({"preset": preset})


def apply_overrides(spec: ExperimentSpec, **changes) -> ExperimentSpec:
    """Re-validated copy of ``spec`` with every non-None change applied

    Raises:
        ConfigError: Naming the overridden field that failed validation
    """
    changes = {key: value for key, value in changes.items() if value is not None}
    if not changes:
        return spec
    try:
        return ExperimentSpec.model_validate({**dict(spec), **changes})
    except ValidationError as e:
        raise _config_error(e, {}) from e
