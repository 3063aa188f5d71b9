"""Gauge-invariant power nonlinearity ``f(u) = lam |u|^(p-1) u`` and its densities.

With ``V(0) = 0`` and ``f = dV/d(conj z)`` the potential is fixed to the
real-valued ``V(z) = 2 lam |z|^(p+1) / (p+1)``, so that

    V'(z)   = 2 lam |z|^p                    (radial derivative)
    W(z)    = (n+2) V(z) - n V'(z) |z| / 2
            = lam |z|^(p+1) (2(n+2) - n(p+1)) / (p+1)

``W`` vanishes identically at the mass-critical power ``p = 1 + 4/n``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError


def _abs_power(z, exponent: float) -> np.ndarray:
    # |z|^exponent with 0 at z == 0, never evaluating 0**negative
    r = np.abs(np.asarray(z))
    out = np.zeros(r.shape, dtype=float)
    np.power(r, exponent, out=out, where=r > 0)
    return out


@dataclass(frozen=True)
class Nonlinearity:
    lam: float
    p: float

    def __post_init__(self):
        if not np.isfinite(self.lam):
            raise ConfigError(f"lambda must be finite, got {self.lam!r}")
        if not (np.isfinite(self.p) and self.p > 1):
            raise ConfigError(f"p must satisfy p > 1, got {self.p!r}")

    def validate_for(self, dim: int) -> "Nonlinearity":
        """Check the energy-subcritical range ``1 < p < 1 + 4/(n-2)_+``."""
        if dim >= 3 and not self.p < 1 + 4 / (dim - 2):
            raise ConfigError(f"p={self.p} is not below 1 + 4/(n-2) = {1 + 4 / (dim - 2)} for n={dim}")
        return self

    def mass_critical(self, dim: int) -> float:
        return 1.0 + 4.0 / dim

    def w_coefficient(self, dim: int) -> float:
        return 2.0 * (dim + 2) - dim * (self.p + 1.0)

    def f_apply(self, z):
        return self.lam * _abs_power(z, self.p - 1) * z

    def v_density(self, z):
        return 2.0 * self.lam / (self.p + 1.0) * _abs_power(z, self.p + 1)

    def vprime_density(self, z):
        return 2.0 * self.lam * _abs_power(z, self.p)

    def w_density(self, z, dim: int):
        return self.lam * self.w_coefficient(dim) / (self.p + 1.0) * _abs_power(z, self.p + 1)

    def phase_rotation(self, u: np.ndarray, tau: float) -> np.ndarray:
        """Exact flow of ``i u_t = f(u)`` over time ``tau``; ``|u|`` is invariant."""
        if self.lam == 0:
            return u
        return u * np.exp(-1j * (self.lam * tau) * _abs_power(u, self.p - 1))


@dataclass
class AssumptionReport:
    violations: dict[str, float]
    tolerances: dict[str, float]
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = all(self.violations[k] <= self.tolerances[k] for k in self.violations)

    def failing(self) -> list[str]:
        return [k for k, v in self.violations.items() if not v <= self.tolerances[k]]


def check_assumptions(nl: Nonlinearity, samples, rng=None, fd_step: float = 1e-6) -> AssumptionReport:
    """Evaluate the structural identities of ``f`` at the given complex samples.

    Roundoff-level identities are measured relative to ``|lam| |z|^p`` so the
    verdict does not depend on the sample magnitudes. Identities involving
    derivatives of ``V`` are checked by central differences (``fd_step``).
    """
    z = np.atleast_1d(np.asarray(samples, dtype=complex))
    if z.size == 0:
        raise ValueError("check_assumptions needs at least one sample")
    rng = np.random.default_rng(0) if rng is None else rng
    scale = np.maximum(abs(nl.lam) * _abs_power(z, nl.p), np.finfo(float).tiny)
    scale_v = np.maximum(abs(nl.lam) * _abs_power(z, nl.p + 1), np.finfo(float).tiny)
    fz = nl.f_apply(z)

    theta = rng.uniform(-np.pi, np.pi, z.shape)
    rot = np.exp(1j * theta)
    gauge = np.abs(nl.f_apply(rot * z) - rot * fz) / scale
    radial = np.abs(nl.v_density(rot * z) - nl.v_density(z)) / scale_v
    a2 = np.abs(np.imag(np.conj(z) * fz)) / scale_v
    pointwise = np.abs(fz * np.conj(z) - nl.vprime_density(z) * np.abs(z) / 2) / scale_v

    zero = np.array([0j])
    origin = max(abs(nl.f_apply(zero)[0]), abs(nl.v_density(zero)[0]))

    # f = dV/d(conj z) = (dV/dx + i dV/dy) / 2
    h = fd_step * np.maximum(np.abs(z), 1.0)
    dvx = (nl.v_density(z + h) - nl.v_density(z - h)) / (2 * h)
    dvy = (nl.v_density(z + 1j * h) - nl.v_density(z - 1j * h)) / (2 * h)
    wirtinger = np.abs(0.5 * (dvx + 1j * dvy) - fz) / np.maximum(scale, 1.0)

    # d/ds V(z(s)) = 2 Re(f(z) conj(z'(s))) along z(s) = z + s*w
    w = np.exp(1j * rng.uniform(-np.pi, np.pi, z.shape))
    dvs = (nl.v_density(z + h * w) - nl.v_density(z - h * w)) / (2 * h)
    chain = np.abs(dvs - 2 * np.real(fz * np.conj(w))) / np.maximum(scale, 1.0)

    violations = {
        "f(0)=0, V(0)=0": float(origin),
        "Im(conj(z) f(z)) = 0": float(a2.max()),
        "gauge f(e^{it}z) = e^{it}f(z)": float(gauge.max()),
        "V radial": float(radial.max()),
        "f(z) conj(z) = V'(z)|z|/2": float(pointwise.max()),
        "f = dV/d(conj z)": float(wirtinger.max()),
        "d/ds V(z(s)) = 2Re(f conj(z'))": float(chain.max()),
    }
    exact, fd = 1e-13, 1e-6
    tolerances = {k: (fd if k in ("f = dV/d(conj z)", "d/ds V(z(s)) = 2Re(f conj(z'))") else exact) for k in violations}
    return AssumptionReport(violations, tolerances)
