"""Split-step spectral simulator for the nonlinear Schrodinger equation

    i u_t + (1/2) Lap u = lam |u|^(p-1) u

with residual diagnostics for its conservation laws, the virial identity and
the pseudo-conformal law.
"""

from .diagnostics import DiagnosticSample, ResidualReport, sample
from .errors import ConfigError, NonFiniteFieldError
from .grid import Grid, make_grid
from .nonlinearity import Nonlinearity, check_assumptions
from .scenarios import ScenarioSpec, free_gaussian_exact, make_initial, soliton_exact
from .solver import RunConfig, TimeSeries, convergence_order, evolve, rk4_step, strang_step

__all__ = [
    "ConfigError",
    "DiagnosticSample",
    "Grid",
    "NonFiniteFieldError",
    "Nonlinearity",
    "ResidualReport",
    "RunConfig",
    "ScenarioSpec",
    "TimeSeries",
    "check_assumptions",
    "convergence_order",
    "evolve",
    "free_gaussian_exact",
    "make_grid",
    "make_initial",
    "rk4_step",
    "sample",
    "soliton_exact",
    "strang_step",
]
