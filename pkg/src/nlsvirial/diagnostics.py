"""Scalar functionals of a field, time quadrature on sampled series, and the
residual evaluators for the conservation laws and virial-type identities.

Sign conventions:

* ``(f, g) = int f conj(g)``; ``cross = Im(xu, grad u) = Im int x u . conj(grad u)``.
* ``momentum = Im int conj(u) grad u``, so that a boost ``phi e^{i v.x}``
  carries momentum ``v * charge``.

Time quadrature works on uniformly sampled series ``g_0 .. g_m`` with spacing
``h``:

* cumulative: composite trapezoid, ``C_m = sum h (g_i + g_{i+1}) / 2``
* nested: trapezoid of the cumulative series
* weighted: ``sum (s_i + s_{i+1})/2 * (C_{i+1} - C_i)``

The weighted rule is the discrete product rule applied to ``s * C(s)``, which
makes ``weighted = t * cumulative - nested`` hold to roundoff for every input
series. A plain trapezoid of ``s * g(s)`` misses this by ``h^2 (g_1 - g_0) / 4``.
All three rules are second order.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .grid import Grid, integrate, transform, inverse_transform
from .nonlinearity import Nonlinearity

FIELD_NAMES = (
    "t",
    "charge",
    "kinetic",
    "potential_int",
    "energy",
    "momentum",
    "variance",
    "cross",
    "grad_norm2",
    "W_int",
    "J_norm2",
    "boundary_mass",
)


@dataclass(frozen=True)
class DiagnosticSample:
    t: float
    charge: float
    kinetic: float
    potential_int: float
    energy: float
    momentum: tuple[float, ...]
    variance: float
    cross: float
    grad_norm2: float
    W_int: float
    J_norm2: float
    boundary_mass: float

    def expansion_defect(self) -> float:
        """Relative defect of ``J_norm2 = variance + 2t cross + t^2 grad_norm2``."""
        t = self.t
        rhs = self.variance + 2 * t * self.cross + t * t * self.grad_norm2
        scale = max(abs(self.J_norm2), abs(self.variance), t * t * self.grad_norm2, 1e-300)
        return abs(self.J_norm2 - rhs) / scale

    def as_dict(self) -> dict:
        return asdict(self)


def sample(grid: Grid, u: np.ndarray, nl: Nonlinearity, t: float, shell_fraction: float = 0.05) -> DiagnosticSample:
    u_hat = transform(u)
    grads = [inverse_transform(1j * kj * u_hat) for kj in grid.derivative_wavenumbers]
    rho = np.abs(u) ** 2
    grad_norm2 = sum(integrate(grid, np.abs(d) ** 2) for d in grads)
    potential_int = integrate(grid, nl.v_density(u))
    kinetic = 0.5 * grad_norm2
    momentum = tuple(integrate(grid, np.imag(np.conj(u) * d)) for d in grads)
    variance = integrate(grid, grid.radius_squared * rho)
    cross = sum(integrate(grid, np.imag(xj * u * np.conj(d))) for xj, d in zip(grid.coords, grads))
    J_norm2 = sum(integrate(grid, np.abs(xj * u + 1j * t * d) ** 2) for xj, d in zip(grid.coords, grads))
    return DiagnosticSample(
        t=float(t),
        charge=integrate(grid, rho),
        kinetic=kinetic,
        potential_int=potential_int,
        energy=kinetic + potential_int,
        momentum=momentum,
        variance=variance,
        cross=cross,
        grad_norm2=grad_norm2,
        W_int=integrate(grid, nl.w_density(u, grid.dim)),
        J_norm2=J_norm2,
        boundary_mass=integrate(grid, rho[grid.boundary_shell(shell_fraction)]),
    )


def energy(grid: Grid, u: np.ndarray, nl: Nonlinearity) -> float:
    u_hat = transform(u)
    grad_norm2 = sum(integrate(grid, np.abs(inverse_transform(1j * kj * u_hat)) ** 2) for kj in grid.derivative_wavenumbers)
    return 0.5 * grad_norm2 + integrate(grid, nl.v_density(u))


def series(samples: Sequence[DiagnosticSample], name: str) -> np.ndarray:
    return np.array([getattr(s, name) for s in samples], dtype=float)


# -- time quadrature --------------------------------------------------------


def _spacing(times) -> float:
    times = np.asarray(times, dtype=float)
    if len(times) < 2:
        return 1.0
    steps = np.diff(times)
    h = float(steps[0])
    if h <= 0 or np.max(np.abs(steps - h)) > 1e-9 * max(h, 1.0):
        raise ValueError("time quadrature needs uniformly spaced samples")
    return h


def cumulative_series(g, h: float) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    out = np.zeros_like(g)
    out[1:] = np.cumsum(0.5 * h * (g[:-1] + g[1:]))
    return out


def nested_series(g, h: float) -> np.ndarray:
    return cumulative_series(cumulative_series(g, h), h)


def weighted_series(g, h: float) -> np.ndarray:
    """``int_0^t s g(s) ds`` by the discrete product rule (see module docs)."""
    g = np.asarray(g, dtype=float)
    c = cumulative_series(g, h)
    s = h * np.arange(len(g))
    out = np.zeros_like(g)
    out[1:] = np.cumsum(0.5 * (s[:-1] + s[1:]) * np.diff(c))
    return out


def cumulative_integral(g, h: float, t_index: int) -> float:
    return float(cumulative_series(g[: t_index + 1], h)[t_index])


def weighted_integral(g, h: float, t_index: int) -> float:
    return float(weighted_series(g[: t_index + 1], h)[t_index])


def nested_double_integral(g, h: float, t_index: int) -> float:
    return float(nested_series(g[: t_index + 1], h)[t_index])


# -- residuals --------------------------------------------------------------


@dataclass
class Initial:
    """Reference values at t = 0 entering the identities."""

    variance: float
    cross: float
    energy: float

    @classmethod
    def from_sample(cls, s: DiagnosticSample) -> "Initial":
        return cls(s.variance, s.cross, s.energy)


def _times_and_init(samples, init):
    t = series(samples, "t")
    if init is None:
        init = Initial.from_sample(samples[0])
    return t, _spacing(t), init


def residual_virial(samples, init: Initial | None = None) -> np.ndarray:
    """``variance - [V0 - 2t M0 + 2t^2 E0 - 2 int_0^t int_0^s W_int]``."""
    t, h, i0 = _times_and_init(samples, init)
    nested = nested_series(series(samples, "W_int"), h)
    predicted = i0.variance - 2 * t * i0.cross + 2 * t**2 * i0.energy - 2 * nested
    return series(samples, "variance") - predicted


def residual_pseudoconformal(samples, init: Initial | None = None) -> np.ndarray:
    """``J_norm2 + 2t^2 potential_int - V0 - 2 int_0^t s W_int ds``."""
    t, h, i0 = _times_and_init(samples, init)
    weighted = weighted_series(series(samples, "W_int"), h)
    lhs = series(samples, "J_norm2") + 2 * t**2 * series(samples, "potential_int")
    return lhs - i0.variance - 2 * weighted


def residual_cross(samples, init: Initial | None = None) -> np.ndarray:
    """``cross - M0 + 2t E0 - int_0^t W_int``."""
    t, h, i0 = _times_and_init(samples, init)
    cumulative = cumulative_series(series(samples, "W_int"), h)
    return series(samples, "cross") - i0.cross + 2 * t * i0.energy - cumulative


def residual_expansion(samples, init: Initial | None = None) -> np.ndarray:
    """``J_norm2 + 2t^2 potential_int - variance - 2t cross - 2t^2 E0``.

    Combines the exact algebraic expansion of ``|J(t)u|^2`` with energy
    conservation, so it is bounded by ``2 t^2 |E(t) - E0|`` plus roundoff.
    """
    t, _, i0 = _times_and_init(samples, init)
    return (
        series(samples, "J_norm2")
        + 2 * t**2 * series(samples, "potential_int")
        - series(samples, "variance")
        - 2 * t * series(samples, "cross")
        - 2 * t**2 * i0.energy
    )


def residual_algebraic(samples) -> np.ndarray:
    return np.array([s.expansion_defect() for s in samples])


def residual_conservation(samples, zero_base: float = 1e-8) -> dict[str, np.ndarray]:
    """Deviation from the t = 0 value; relative where that value is nonzero.

    Bases below ``zero_base`` in magnitude count as zero (a real initial field
    has roundoff-level momentum) and give absolute deviations.
    """
    out = {}
    for name in ("charge", "energy"):
        v = series(samples, name)
        base = v[0]
        out[name] = (v - base) / abs(base) if abs(base) > zero_base else v - base
    p = np.array([s.momentum for s in samples], dtype=float)
    dp = np.linalg.norm(p - p[0], axis=1)
    base = float(np.linalg.norm(p[0]))
    out["momentum"] = dp / base if base > zero_base else dp
    return out


def residual_ode(samples) -> dict[str, np.ndarray]:
    """Differential forms of the virial law by centered differences.

    ``r_var = d/dt variance + 2 cross`` and
    ``r_cross = d/dt cross + grad_norm2 + 2 potential_int - W_int``; the latter is
    the form consistent with the integrated cross identity and energy
    conservation (``2E = grad_norm2 + 2 potential_int``). Endpoints are NaN.
    """
    t = series(samples, "t")
    h = _spacing(t)
    var = series(samples, "variance")
    cross = series(samples, "cross")
    r_var = np.full(len(t), np.nan)
    r_cross = np.full(len(t), np.nan)
    if len(t) >= 3:
        r_var[1:-1] = (var[2:] - var[:-2]) / (2 * h) + 2 * cross[1:-1]
        r_cross[1:-1] = (
            (cross[2:] - cross[:-2]) / (2 * h)
            + series(samples, "grad_norm2")[1:-1]
            + 2 * series(samples, "potential_int")[1:-1]
            - series(samples, "W_int")[1:-1]
        )
    return {"ode_variance": r_var, "ode_cross": r_cross}


def consistency_chain(samples, init: Initial | None = None) -> np.ndarray:
    """``virial - (pseudoconformal - expansion - 2t cross_identity)``; zero to roundoff.

    Follows the route by which the virial identity is assembled from the
    pseudo-conformal law and the cross identity; requires the weighted rule
    to satisfy the discrete summation-by-parts identity exactly.
    """
    t = series(samples, "t")
    return (
        residual_virial(samples, init)
        - residual_pseudoconformal(samples, init)
        + residual_expansion(samples, init)
        + 2 * t * residual_cross(samples, init)
    )


# -- reports ----------------------------------------------------------------


@dataclass
class IdentityResidual:
    name: str
    times: np.ndarray
    values: np.ndarray
    tolerance: float
    scale: float = 1.0
    relative: bool = False
    note: str = ""
    max_abs: float = field(init=False)
    final_abs: float = field(init=False)

    def __post_init__(self):
        v = np.abs(np.asarray(self.values, dtype=float)) / self.scale
        finite = v[np.isfinite(v)]
        self.max_abs = float(finite.max()) if finite.size else 0.0
        self.final_abs = float(finite[-1]) if finite.size else 0.0
        if finite.size != np.count_nonzero(~np.isnan(self.values)):
            self.max_abs = float("inf")

    @property
    def passed(self) -> bool:
        return self.max_abs <= self.tolerance

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"


@dataclass
class ResidualReport:
    entries: list[IdentityResidual]
    metadata: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def __getitem__(self, name: str) -> IdentityResidual:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def names(self) -> list[str]:
        return [e.name for e in self.entries]


def tolerance_model(dt: float, dt_sample: float, t_end: float, c_step: float = 10.0, c_sample: float = 10.0) -> float:
    """Default residual tolerance ``max(C1 dt^2, C2 dts^2) * T`` (before scaling)."""
    return max(c_step * dt**2, c_sample * dt_sample**2) * t_end


def scale_of(lhs) -> tuple[float, bool]:
    """Relative measure when the identity's left side exceeds 1 in magnitude."""
    m = float(np.nanmax(np.abs(lhs))) if np.size(lhs) else 0.0
    return (m, True) if m > 1 else (1.0, False)
