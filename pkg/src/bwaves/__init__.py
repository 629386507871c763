"""Traveling waves of a two-component Boussinesq system via constrained
minimization on the mass sphere, with bound verification and pseudospectral
time evolution."""

from .grid import Field, FieldPair, Grid
from .params import Coefficients, ModelParams, abcd_from_model, validate_solver_regime
from .functional import BoundsReport, bounds_report, lower_bound_m, mu0, upper_bound_m
from .minimizer import MinimizerConfig, MinimizerResult, minimize, suggest_grid
from .wave import Wave, WaveReport, build_wave, mirror, verify
from .evolver import EvolveConfig, EvolutionDiagnostics, evolve, step

__all__ = [
    "Field",
    "FieldPair",
    "Grid",
    "Coefficients",
    "ModelParams",
    "abcd_from_model",
    "validate_solver_regime",
    "BoundsReport",
    "bounds_report",
    "lower_bound_m",
    "mu0",
    "upper_bound_m",
    "MinimizerConfig",
    "MinimizerResult",
    "minimize",
    "suggest_grid",
    "Wave",
    "WaveReport",
    "build_wave",
    "mirror",
    "verify",
    "EvolveConfig",
    "EvolutionDiagnostics",
    "evolve",
    "step",
]

__version__ = "0.1.0"
