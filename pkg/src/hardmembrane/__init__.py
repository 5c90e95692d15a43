"""Simulation and numerical verification toolkit for Brownian motion with a
hard membrane and its locally perturbed pre-limit diffusions."""

from .paths import (
    TimeGrid,
    Path,
    StepFunction,
    RngStream,
    sample_wiener,
    modulus_of_continuity,
    running_min,
)
from .reflection import (
    SkorokhodSolution,
    LadderPath,
    skorokhod_map,
    ladder_transform,
    occupation_local_time,
)
from .processes import (
    SkewParams,
    HardMembraneParams,
    HardMembranePath,
    KilledLadder,
    HitResult,
    sample_reflected_bm,
    sample_skew_bm,
    sample_hard_membrane,
    euler_sde,
    first_hitting,
    sample_killed_ladder,
    recommended_max_dt,
)
from .driftscale import (
    DriftSpec,
    Calibration,
    builtin_drift,
    scale_function,
    hitting_prob_analytic,
    laplace_asymptotic,
    layer_integral,
    calibrate_L,
    beta_from_alpha,
    inflated_L,
    crossing_split_limit,
    crossing_split_analytic,
)

__version__ = "0.1.0"

__all__ = [
    "TimeGrid", "Path", "StepFunction", "RngStream",
    "sample_wiener", "modulus_of_continuity", "running_min",
    "SkorokhodSolution", "LadderPath", "skorokhod_map", "ladder_transform",
    "occupation_local_time",
    "SkewParams", "HardMembraneParams", "HardMembranePath", "KilledLadder",
    "HitResult", "sample_reflected_bm", "sample_skew_bm",
    "sample_hard_membrane", "euler_sde", "first_hitting",
    "sample_killed_ladder", "recommended_max_dt",
    "DriftSpec", "Calibration", "builtin_drift", "scale_function",
    "hitting_prob_analytic", "laplace_asymptotic", "layer_integral",
    "calibrate_L", "beta_from_alpha", "inflated_L",
    "crossing_split_limit", "crossing_split_analytic",
    "__version__",
]
