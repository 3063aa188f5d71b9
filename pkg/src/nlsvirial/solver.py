"""Time integration of ``i u_t + (1/2) Lap u = lam |u|^(p-1) u`` on the periodic box.

Two integrators share the spectral Laplacian:

* Strang splitting (primary): half nonlinear phase rotation, exact free step,
  half nonlinear phase rotation. Both substeps preserve the discrete L^2 norm
  and the scheme is time reversible and second order.
* Classical RK4 on the semi-discretization ``u' = (i/2) Lap u - i f(u)``
  (oracle). Explicit, so it needs ``dt * k_max^2 / 2 <~ 2.8``; it does not
  conserve charge exactly.

Negative times are not integrated directly: if ``w`` solves the equation with
data ``conj(phi)`` then ``u(-t) = conj(w(t))``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .diagnostics import DiagnosticSample, sample
from .errors import ConfigError
from .grid import Grid, inverse_transform, make_grid, spectral_norm2, transform
from .nonlinearity import Nonlinearity
from .propagator import free_multiplier
from .scenarios import ScenarioSpec, make_initial

log = logging.getLogger(__name__)

INTEGRATORS = ("strang", "rk4-oracle")
RK4_STABILITY = 2.8


class StrangStepper:
    """Strang split step with the free multiplier cached for a fixed ``dt``."""

    def __init__(self, grid: Grid, nl: Nonlinearity, dt: float):
        self.grid, self.nl, self.dt = grid, nl, dt
        self.multiplier = free_multiplier(grid, dt)

    def __call__(self, u: np.ndarray) -> np.ndarray:
        half = 0.5 * self.dt
        u = self.nl.phase_rotation(u, half)
        u = inverse_transform(self.multiplier * transform(u))
        return self.nl.phase_rotation(u, half)


class RK4Stepper:
    def __init__(self, grid: Grid, nl: Nonlinearity, dt: float):
        self.grid, self.nl, self.dt = grid, nl, dt
        self.symbol = -0.5j * grid.k_squared

    def rhs(self, u: np.ndarray) -> np.ndarray:
        return inverse_transform(self.symbol * transform(u)) - 1j * self.nl.f_apply(u)

    def __call__(self, u: np.ndarray) -> np.ndarray:
        dt = self.dt
        k1 = self.rhs(u)
        k2 = self.rhs(u + 0.5 * dt * k1)
        k3 = self.rhs(u + 0.5 * dt * k2)
        k4 = self.rhs(u + dt * k3)
        return u + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def strang_step(grid: Grid, u: np.ndarray, nl: Nonlinearity, dt: float) -> np.ndarray:
    return StrangStepper(grid, nl, dt)(u)


def rk4_step(grid: Grid, u: np.ndarray, nl: Nonlinearity, dt: float) -> np.ndarray:
    return RK4Stepper(grid, nl, dt)(u)


def rk4_stable_dt(grid: Grid) -> float:
    """Largest ``dt`` inside the RK4 stability interval on the imaginary axis."""
    return 2 * RK4_STABILITY / grid.k_max**2


@dataclass(frozen=True)
class RunConfig:
    dim: int
    points: int
    half_width: float
    lam: float
    p: float
    dt: float
    t_end: float
    sample_every: int = 1
    initial: ScenarioSpec = field(default_factory=ScenarioSpec)
    integrator: str = "strang"
    boundary_mass_warn: float = 1e-8
    blowup_gradient_factor: float = 10.0
    store_snapshots: bool = False
    max_snapshots: int | None = None

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ConfigError(f"dt must be positive, got {self.dt!r}")
        if not (self.t_end > 0 and math.isfinite(self.t_end)):
            raise ConfigError(f"t_end must be positive, got {self.t_end!r}")
        if int(self.sample_every) != self.sample_every or self.sample_every < 1:
            raise ConfigError(f"sample_every must be an integer >= 1, got {self.sample_every!r}")
        if self.integrator not in INTEGRATORS:
            raise ConfigError(f"integrator must be one of {INTEGRATORS}, got {self.integrator!r}")
        if not self.boundary_mass_warn > 0 or not self.blowup_gradient_factor > 0:
            raise ConfigError("boundary_mass_warn and blowup_gradient_factor must be positive")
        n = self.t_end / self.dt
        if abs(n - round(n)) > 1e-8 * max(n, 1):
            raise ConfigError(f"t_end={self.t_end} is not a whole number of steps dt={self.dt}")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    @property
    def dt_sample(self) -> float:
        return self.dt * self.sample_every

    def grid(self) -> Grid:
        return make_grid(self.dim, self.points, self.half_width)

    def nonlinearity(self) -> Nonlinearity:
        return Nonlinearity(self.lam, self.p).validate_for(self.dim)

    def stepper(self, grid: Grid, nl: Nonlinearity, dt: float | None = None):
        cls = StrangStepper if self.integrator == "strang" else RK4Stepper
        return cls(grid, nl, self.dt if dt is None else dt)


@dataclass
class TimeSeries:
    times: np.ndarray
    samples: list[DiagnosticSample]
    snapshots: list[np.ndarray] | None
    status: str  # "completed" | "blowup" | "nonfinite"
    steps_taken: int
    abort_time: float | None = None
    warnings: list[dict] = field(default_factory=list)
    snapped_velocity: np.ndarray | None = None
    final_field: np.ndarray | None = None

    @property
    def completed(self) -> bool:
        return self.status == "completed"


def evolve(cfg: RunConfig, initial: np.ndarray | None = None) -> TimeSeries:
    """Step from 0 to ``t_end`` recording diagnostics every ``sample_every`` steps.

    Blow-up (``|grad u|`` beyond ``blowup_gradient_factor`` times its initial
    value) and non-finite values end the run early and are reported in
    ``status``, never raised.
    """
    grid = cfg.grid()
    nl = cfg.nonlinearity()
    snapped = None
    if initial is None:
        init = make_initial(cfg.initial, grid)
        u, snapped = init.values, init.snapped_velocity
    else:
        u = np.array(initial, dtype=complex).reshape(grid.shape)
    if cfg.integrator == "rk4-oracle" and cfg.dt > rk4_stable_dt(grid):
        log.warning("rk4 dt=%g exceeds the stability limit %g for this grid", cfg.dt, rk4_stable_dt(grid))

    step = cfg.stepper(grid, nl)
    k2 = sum(kj**2 for kj in grid.derivative_wavenumbers)
    volume, size = grid.cell_volume, grid.size

    first = sample(grid, u, nl, 0.0)
    grad_limit = cfg.blowup_gradient_factor * math.sqrt(first.grad_norm2)
    samples = [first]
    times = [0.0]
    snapshots = [u.copy()] if cfg.store_snapshots else None
    warnings: list[dict] = []
    status, abort_time, n = "completed", None, 0

    def check_boundary(s: DiagnosticSample):
        ratio = s.boundary_mass / s.charge if s.charge > 0 else 0.0
        if ratio > cfg.boundary_mass_warn:
            if not warnings:
                log.warning("boundary mass fraction %.3g exceeds %.3g at t=%g", ratio, cfg.boundary_mass_warn, s.t)
            warnings.append({"t": s.t, "kind": "boundary_mass", "value": ratio})

    check_boundary(first)
    for n in range(1, cfg.n_steps + 1):
        u = step(u)
        t = n * cfg.dt
        u_hat = transform(u)
        if not np.all(np.isfinite(u_hat)):
            status, abort_time = "nonfinite", t
            break
        grad = math.sqrt(volume / size * float(np.sum(k2 * np.abs(u_hat) ** 2)))
        if grad > grad_limit:
            status, abort_time = "blowup", t
            log.info("gradient norm %.4g exceeded %.4g at t=%g", grad, grad_limit, t)
            break
        if n % cfg.sample_every == 0:
            s = sample(grid, u, nl, t)
            samples.append(s)
            times.append(t)
            check_boundary(s)
            if snapshots is not None and (cfg.max_snapshots is None or len(snapshots) < cfg.max_snapshots):
                snapshots.append(u.copy())
    return TimeSeries(
        times=np.array(times),
        samples=samples,
        snapshots=snapshots,
        status=status,
        steps_taken=n,
        abort_time=abort_time,
        warnings=warnings,
        snapped_velocity=snapped,
        final_field=u,
    )


def run_to(cfg: RunConfig, u0: np.ndarray, dt: float) -> np.ndarray:
    """Bare stepping loop to ``t_end`` with step ``dt`` (no monitoring)."""
    grid, nl = cfg.grid(), cfg.nonlinearity()
    n = int(round(cfg.t_end / dt))
    if abs(n * dt - cfg.t_end) > 1e-9 * cfg.t_end:
        raise ConfigError(f"t_end={cfg.t_end} is not a whole number of steps dt={dt}")
    step = cfg.stepper(grid, nl, dt)
    u = np.array(u0, dtype=complex)
    for _ in range(n):
        u = step(u)
    return u


@dataclass
class ConvergenceResult:
    dts: np.ndarray
    errors: np.ndarray
    order: float
    constant: float
    reliable: bool
    reason: str = ""

    def error_model(self, dt: float) -> float:
        return self.constant * dt**self.order


def fit_order(dts: Sequence[float], errors: Sequence[float], floor: float = 0.0) -> ConvergenceResult:
    """Fit ``error = C dt^q``; flag the fit unreliable if errors sit at ``floor``
    or fail to shrink by at least ``sqrt(dt ratio)`` between ladder rungs."""
    dts = np.asarray(dts, dtype=float)
    errors = np.asarray(errors, dtype=float)
    order, intercept = np.polyfit(np.log(dts), np.log(np.maximum(errors, np.finfo(float).tiny)), 1)
    reliable, reason = True, ""
    idx = np.argsort(dts)
    shrink = errors[idx][1:] / np.maximum(errors[idx][:-1], np.finfo(float).tiny)
    needed = np.sqrt(dts[idx][1:] / dts[idx][:-1])
    if np.any(errors <= floor):
        reliable, reason = False, "errors at the roundoff floor"
    elif not np.all(shrink >= needed):
        reliable, reason = False, "errors do not decrease consistently with dt"
    return ConvergenceResult(dts, errors, float(order), float(np.exp(intercept)), reliable, reason)


def convergence_order(
    cfg: RunConfig,
    dts: Sequence[float],
    exact: Callable[[float, Grid], np.ndarray] | None = None,
) -> ConvergenceResult:
    """Least-squares slope of log L^2 error at ``t_end`` against log dt.

    The reference is ``exact(t_end, grid)`` when given, otherwise the same
    integrator run at a quarter of the smallest dt.
    """
    dts = sorted(float(d) for d in dts)
    if len(dts) < 3:
        raise ValueError("convergence_order needs at least 3 dt values")
    grid = cfg.grid()
    u0 = make_initial(cfg.initial, grid).values
    reference = exact(cfg.t_end, grid) if exact is not None else run_to(cfg, u0, dts[0] / 4)
    errors = [math.sqrt(grid.cell_volume * float(np.sum(np.abs(run_to(cfg, u0, dt) - reference) ** 2))) for dt in dts]
    floor = 10 * np.finfo(float).eps * math.sqrt(spectral_norm2(grid, transform(u0)))
    return fit_order(dts, errors, floor)
