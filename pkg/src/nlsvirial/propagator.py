"""Free Schrodinger group, Galilean operator, quadratic phase, Yosida smoothing
and Duhamel residuals.

The free group is the solution operator of ``i u_t + (1/2) Lap u = 0``, i.e.
the Fourier multiplier ``exp(-i |k|^2 t / 2)``. Writing it as ``exp(i t Lap)``
would silently double the dispersion, so the half is used everywhere.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .grid import Grid, gradient, inverse_transform, multiply_by_x, norm, transform
from .nonlinearity import Nonlinearity


def free_multiplier(grid: Grid, t: float) -> np.ndarray:
    return np.exp(-0.5j * t * grid.k_squared)


def free_evolve(grid: Grid, u: np.ndarray, t: float) -> np.ndarray:
    if t == 0:
        return np.array(u, dtype=complex, copy=True)
    return inverse_transform(free_multiplier(grid, t) * transform(u))


def galilean_J(grid: Grid, u: np.ndarray, t: float) -> list[np.ndarray]:
    """Components ``x_j u + i t d_j u``."""
    xu = multiply_by_x(grid, u)
    if t == 0:
        return xu
    return [xj + 1j * t * dj for xj, dj in zip(xu, gradient(grid, u))]


def quad_phase(grid: Grid, u: np.ndarray, t: float) -> np.ndarray:
    """Multiply by ``exp(i |x|^2 / (2t))``."""
    if t == 0:
        raise ValueError("quadratic phase is undefined at t = 0")
    return np.exp(0.5j * grid.radius_squared / t) * u


def check_factorization(grid: Grid, u: np.ndarray, t: float) -> float:
    """Max-norm of ``J(t)u - M(t) (i t grad) M(-t) u`` over all components.

    ``M(-t)u`` is a chirp with local wavenumber ``|x|/|t|``; the residual is
    only small when the grid resolves that wavenumber over the support of
    ``u``, i.e. ``k_max = pi N / (2L)`` exceeds ``max |x| / |t|`` there.
    """
    if t == 0:
        raise ValueError("factorization check requires t != 0")
    lhs = galilean_J(grid, u, t)
    chirped = quad_phase(grid, u, -t)
    rhs = [quad_phase(grid, 1j * t * dj, t) for dj in gradient(grid, chirped)]
    return max(float(np.max(np.abs(a - b))) for a, b in zip(lhs, rhs))


def yosida_smooth(grid: Grid, u: np.ndarray, epsilon: float) -> np.ndarray:
    """Apply ``(1 - epsilon Lap)^{-1}``, the multiplier ``1 / (1 + epsilon |k|^2)``."""
    if epsilon < 0:
        raise ValueError(f"epsilon must be nonnegative, got {epsilon}")
    if epsilon == 0:
        return np.array(u, dtype=complex, copy=True)
    return inverse_transform(transform(u) / (1.0 + epsilon * grid.k_squared))


# Operators applied inside the Duhamel formula: A(s) acting on a field,
# returning its components. Identity gives the plain integral equation; J(s)
# and grad give the differentiated forms used in the proof of the virial law.
FieldOperator = Callable[[Grid, np.ndarray, float], Sequence[np.ndarray]]


def identity_operator(grid: Grid, u: np.ndarray, s: float) -> list[np.ndarray]:
    return [u]


def gradient_operator(grid: Grid, u: np.ndarray, s: float) -> list[np.ndarray]:
    return gradient(grid, u)


def _check_samples(snapshots, times) -> float:
    if len(snapshots) < 2 or len(snapshots) != len(times):
        raise ValueError("Duhamel residual needs at least 2 aligned snapshots")
    steps = np.diff(np.asarray(times, dtype=float))
    h = float(steps[0])
    if h <= 0 or np.max(np.abs(steps - h)) > 1e-9 * max(h, 1.0):
        raise ValueError("Duhamel residual needs uniformly spaced sample times")
    if times[0] != 0:
        raise ValueError("sample times must start at 0")
    return h


def _vector_norm(grid: Grid, parts) -> float:
    return float(np.sqrt(sum(norm(grid, c) ** 2 for c in parts)))


def duhamel_residual(
    grid: Grid,
    snapshots: Sequence[np.ndarray],
    times: Sequence[float],
    nl: Nonlinearity,
    t_index: int,
    operator: FieldOperator = identity_operator,
) -> float:
    """L^2 norm of ``A u(t) - U(t) A phi + i Q(t)`` at ``t = times[t_index]``.

    ``Q(t)`` is the composite trapezoid approximation of
    ``int_0^t U(t-s) A(s) f(u(s)) ds`` with terms summed left to right over
    the sample index.
    """
    h = _check_samples(snapshots, times)
    if t_index == 0:
        return 0.0
    t = float(times[t_index])
    phi = snapshots[0]
    lhs = operator(grid, snapshots[t_index], t)
    free = [free_evolve(grid, c, t) for c in operator(grid, phi, 0.0)]
    acc = [np.zeros(grid.shape, dtype=complex) for _ in lhs]
    for j in range(t_index + 1):
        weight = 0.5 * h if j in (0, t_index) else h
        s = float(times[j])
        for a, c in zip(acc, operator(grid, nl.f_apply(snapshots[j]), s)):
            a += weight * free_evolve(grid, c, t - s)
    return _vector_norm(grid, [l - fr + 1j * q for l, fr, q in zip(lhs, free, acc)])


def duhamel_residual_series(
    grid: Grid,
    snapshots: Sequence[np.ndarray],
    times: Sequence[float],
    nl: Nonlinearity,
    operator: FieldOperator = identity_operator,
) -> np.ndarray:
    """Residual at every sample, via ``Q(t+h) = U(h)(Q(t) + h/2 F(t)) + h/2 F(t+h)``.

    Same trapezoid sum as :func:`duhamel_residual` evaluated in O(m) free
    evolutions instead of O(m^2); agrees with it to roundoff.
    """
    h = _check_samples(snapshots, times)
    step = free_multiplier(grid, h)
    phi_parts = [transform(c) for c in operator(grid, snapshots[0], 0.0)]
    out = np.zeros(len(times))
    q_hat = None
    prev_hat = None
    for m, (u, t) in enumerate(zip(snapshots, times)):
        t = float(t)
        f_hat = [transform(c) for c in operator(grid, nl.f_apply(u), t)]
        if m == 0:
            q_hat = [np.zeros(grid.shape, dtype=complex) for _ in f_hat]
            prev_hat = f_hat
            continue
        q_hat = [step * (q + 0.5 * h * p) + 0.5 * h * c for q, p, c in zip(q_hat, prev_hat, f_hat)]
        prev_hat = f_hat
        mult = free_multiplier(grid, t)
        lhs = operator(grid, u, t)
        parts = [l - inverse_transform(mult * ph - 1j * q) for l, ph, q in zip(lhs, phi_parts, q_hat)]
        out[m] = _vector_norm(grid, parts)
    return out
