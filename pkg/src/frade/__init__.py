"""Fractional-order advection-diffusion experiments.

Forward L1/central solves of multi-term Caputo diffusion problems,
weighted (Carleman-type) energy inequality evaluation, lateral Cauchy
continuation and separated-source reconstruction, plus a config-driven
experiment CLI.
"""

from .carleman import (
    BoxRegion,
    CarlemanReport,
    ExponentLadder,
    SweepResult,
    TermValue,
    check_weight_time_monotone,
    evaluate_lemma21,
    evaluate_lemma31,
    evaluate_thm11,
    evaluate_thm13,
    exponent_ladder,
    sweep_s,
    thread_pool_size,
)
from .config import ExperimentConfig, config_from_text, load_config
from .errors import (
    ConfigError,
    FamilyMismatchError,
    FradeError,
    GeometryError,
    GridError,
    HypothesisViolationError,
    NumericalFailureError,
    ParameterError,
)
from .expressions import compile_expression
from .frac_calc import (
    caputo_derivative,
    caputo_l1_array,
    l1_weights,
    rl_derivative,
    rl_derivative_array,
    rl_integral,
    rl_integral_array,
    weighted_l2_norm,
)
from .geometry import (
    BetaRule,
    CutoffField,
    LevelSetSpec,
    PseudoconvexField,
    WeightFamily,
    WeightParams,
    build_d,
    choose_beta,
    cutoff,
    level_values,
    phi,
    psi,
    regular_params,
    smoothstep,
    weight_field,
)
from .grids import (
    Domain,
    FractionalOrder,
    GridFunction,
    SpaceTimeGrid,
    TimeGrid,
    TimeSeries,
    sample,
)
from .inverse import (
    CauchyData,
    CauchyResult,
    SpaceField,
    StabilityFit,
    TargetRegion,
    add_noise,
    assemble_flux_map,
    cauchy_schedule,
    fit_holder,
    lateral_cauchy_solve,
    reconstruct_source,
    relative_l2_error,
    target_error,
)
from .solver import FadeProblem, apply_L, apply_L_tilde, boundary_flux, solve_fade

__version__ = "0.1.0"

__all__ = [
    "BetaRule",
    "BoxRegion",
    "CarlemanReport",
    "CauchyData",
    "CauchyResult",
    "ConfigError",
    "CutoffField",
    "Domain",
    "ExperimentConfig",
    "ExponentLadder",
    "FadeProblem",
    "FamilyMismatchError",
    "FractionalOrder",
    "FradeError",
    "GeometryError",
    "GridError",
    "GridFunction",
    "HypothesisViolationError",
    "LevelSetSpec",
    "NumericalFailureError",
    "ParameterError",
    "PseudoconvexField",
    "SpaceField",
    "SpaceTimeGrid",
    "StabilityFit",
    "SweepResult",
    "TargetRegion",
    "TermValue",
    "TimeGrid",
    "TimeSeries",
    "WeightFamily",
    "WeightParams",
    "add_noise",
    "apply_L",
    "apply_L_tilde",
    "assemble_flux_map",
    "boundary_flux",
    "build_d",
    "caputo_derivative",
    "caputo_l1_array",
    "cauchy_schedule",
    "check_weight_time_monotone",
    "choose_beta",
    "compile_expression",
    "config_from_text",
    "cutoff",
    "evaluate_lemma21",
    "evaluate_lemma31",
    "evaluate_thm11",
    "evaluate_thm13",
    "exponent_ladder",
    "fit_holder",
    "l1_weights",
    "lateral_cauchy_solve",
    "level_values",
    "load_config",
    "phi",
    "psi",
    "reconstruct_source",
    "regular_params",
    "relative_l2_error",
    "rl_derivative",
    "rl_derivative_array",
    "rl_integral",
    "rl_integral_array",
    "sample",
    "smoothstep",
    "solve_fade",
    "sweep_s",
    "target_error",
    "thread_pool_size",
    "weight_field",
    "weighted_l2_norm",
]
