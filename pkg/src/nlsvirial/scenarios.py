"""Initial data and closed-form reference solutions."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .grid import Grid, as_field

KINDS = ("gaussian", "sech", "boosted", "custom-file")


@dataclass(frozen=True)
class ScenarioSpec:
    """Initial condition description.

    ``boosted`` is a sech profile carrying the phase ``e^{i v.x}``; the other
    analytic kinds accept a velocity too. ``path`` is only used by
    ``custom-file`` (CSV field format, see :mod:`nlsvirial.fieldio`).
    """

    kind: str = "sech"
    amplitude: float = 1.0
    width: float = 1.0
    velocity: tuple[float, ...] = ()
    center: tuple[float, ...] = ()
    path: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"initial.kind must be one of {KINDS}, got {self.kind!r}")
        if not (np.isfinite(self.width) and self.width > 0):
            raise ConfigError(f"initial.width must be positive, got {self.width!r}")
        if not np.isfinite(self.amplitude):
            raise ConfigError("initial.amplitude must be finite")
        if self.kind == "custom-file" and not self.path:
            raise ConfigError("initial.path is required for kind 'custom-file'")

    def vectors(self, dim: int) -> tuple[np.ndarray, np.ndarray]:
        def expand(v, name):
            v = np.zeros(dim) if len(v) == 0 else np.asarray(v, dtype=float).ravel()
            if v.size == 1 and dim > 1:
                v = np.full(dim, v[0])
            if v.size != dim:
                raise ConfigError(f"initial.{name} needs {dim} components, got {v.size}")
            return v

        return expand(self.velocity, "velocity"), expand(self.center, "center")


def snap_velocity(grid: Grid, velocity) -> np.ndarray:
    """Nearest wavenumbers on the ``pi/L`` lattice, keeping the phase periodic."""
    dk = np.pi / grid.half_width
    return np.round(np.asarray(velocity, dtype=float) / dk) * dk


@dataclass
class InitialField:
    values: np.ndarray
    snapped_velocity: np.ndarray = field(default_factory=lambda: np.zeros(0))


def make_initial(spec: ScenarioSpec, grid: Grid) -> InitialField:
    if spec.kind == "custom-file":
        from .fieldio import read_field_csv

        return InitialField(read_field_csv(Path(spec.path), grid), np.zeros(grid.dim))

    velocity, center = spec.vectors(grid.dim)
    if np.any(np.abs(center) >= grid.half_width):
        raise ConfigError(f"initial.center {center.tolist()} lies outside the box")
    if 2 * spec.width < 8 * grid.dx:
        # fewer than 8 points across the profile width 2w
        raise ConfigError(f"initial.width {spec.width} is unresolved by dx = {grid.dx}")
    v = snap_velocity(grid, velocity)
    r2 = sum((xj - cj) ** 2 for xj, cj in zip(grid.coords, center))
    if spec.kind == "gaussian":
        profile = np.exp(-r2 / (2 * spec.width**2))
    else:
        profile = 1.0 / np.cosh(np.sqrt(r2) / spec.width)
    phase = np.exp(1j * sum(vj * xj for vj, xj in zip(v, grid.coords)))
    u = spec.amplitude * profile * phase * np.ones(grid.shape)
    return InitialField(as_field(grid, u), v)


def _require_1d(grid: Grid, what: str):
    if grid.dim != 1:
        raise ConfigError(f"{what} is only defined on 1D grids")


def soliton_exact(t: float, grid: Grid) -> np.ndarray:
    """``e^{it/2} sech(x)``, a standing wave for ``lam = -1, p = 3, n = 1``.

    Substituting into ``i u_t + u_xx / 2 = -|u|^2 u``: ``i u_t = -u/2`` and
    ``sech'' = sech - 2 sech^3``, so the left side is ``-sech^3 e^{it/2}``.
    """
    _require_1d(grid, "soliton_exact")
    return np.exp(0.5j * t) / np.cosh(grid.axis)


def free_gaussian_exact(t: float, grid: Grid) -> np.ndarray:
    """Free evolution of ``e^{-x^2/2}``: ``(1+it)^{-1/2} exp(-x^2 / (2(1+it)))``."""
    _require_1d(grid, "free_gaussian_exact")
    a = 1.0 + 1j * t
    return np.exp(-grid.axis**2 / (2 * a)) / np.sqrt(a)


def soliton_spec() -> ScenarioSpec:
    return ScenarioSpec(kind="sech")


def with_velocity(spec: ScenarioSpec, velocity) -> ScenarioSpec:
    return replace(spec, velocity=tuple(np.atleast_1d(velocity).tolist()))
