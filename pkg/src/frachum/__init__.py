"""Minimum-energy regional controls for Riemann-Liouville time-fractional diffusion."""

from __future__ import annotations

from frachum.energy import (
    ConstraintMap,
    PenalizedIterate,
    adjoint_diagnostics,
    build_constraint_map,
    minimum_norm_oracle,
    penalized_solve,
)
from frachum.errors import (
    ConvergenceError,
    DegenerateActuatorError,
    DomainError,
    FracHUMError,
    GridMismatchError,
    IllPosedError,
    InfeasibleError,
    RankDeficiencyError,
    ScenarioError,
)
from frachum.estimators import HUMController, MinimumEnergyOracle, PenalizedController
from frachum.fracops import (
    Signal,
    TimeGrid,
    reflect,
    right_rl_integral,
    rl_derivative,
    rl_integral,
)
from frachum.hum import HUMProblem, HUMSolution, assemble_gramian, check_eec, solve_hum
from frachum.mlf import FracOrder, kernel_values, mittag_leffler, wright_density
from frachum.scenario import Scenario, parse_scenario
from frachum.solver import (
    ControlSignal,
    Trajectory,
    apply_H,
    apply_Hstar,
    backward_solve,
    forward_solve,
)
from frachum.spectral import (
    PointActuator,
    Region,
    SpectralBasis,
    SpectralField,
    TargetSubspace,
    ZoneActuator,
    build_target,
    extend,
    project,
    restrict,
)

__version__ = "0.1.0"

__all__ = [
    "ConstraintMap", "ControlSignal", "ConvergenceError", "DegenerateActuatorError",
    "DomainError", "FracHUMError", "FracOrder", "GridMismatchError", "HUMController",
    "HUMProblem", "HUMSolution", "IllPosedError", "InfeasibleError", "MinimumEnergyOracle",
    "PenalizedController", "PenalizedIterate", "PointActuator", "RankDeficiencyError",
    "Region", "Scenario", "ScenarioError", "Signal", "SpectralBasis", "SpectralField",
    "TargetSubspace", "TimeGrid", "Trajectory", "ZoneActuator", "adjoint_diagnostics",
    "apply_H", "apply_Hstar", "assemble_gramian", "backward_solve", "build_constraint_map",
    "build_target", "check_eec", "extend", "forward_solve", "kernel_values",
    "minimum_norm_oracle", "mittag_leffler", "parse_scenario", "penalized_solve",
    "project", "reflect", "restrict", "right_rl_integral", "rl_derivative", "rl_integral",
    "solve_hum", "wright_density",
]
