"""Phase-only reflectarray pattern synthesis with an integer particle swarm."""

from .errors import ConfigError, DomainError
from .geometry import (AngularGrid, ArrayGeometry, BeamSpec, level_to_phase,
                       optical_path_difference, phase_to_level)
from .synthesis import (PhaseProfile, single_beam_compensation, single_beam_profile,
                        superpose_profiles)
from .farfield import (FarFieldPattern, MaskSet, build_masks, compute_field,
                       compute_pattern, sll_objective)
from .pso import (BoundMode, Knowledge, OptimizationResult, PsoConfig, StageParams,
                  StageSchedule, SwarmState, init_swarm, run, stage_params, step)
from .config import ExperimentConfig, parse_config, load_config
from .experiment import EfficiencyReport, efficiency, run_experiment, sweep

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DomainError",
    "AngularGrid", "ArrayGeometry", "BeamSpec", "level_to_phase",
    "optical_path_difference", "phase_to_level",
    "PhaseProfile", "single_beam_compensation", "single_beam_profile", "superpose_profiles",
    "FarFieldPattern", "MaskSet", "build_masks", "compute_field", "compute_pattern",
    "sll_objective",
    "BoundMode", "Knowledge", "OptimizationResult", "PsoConfig", "StageParams",
    "StageSchedule", "SwarmState", "init_swarm", "run", "stage_params", "step",
    "ExperimentConfig", "parse_config", "load_config",
    "EfficiencyReport", "efficiency", "run_experiment", "sweep",
]
