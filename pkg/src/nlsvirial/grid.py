"""Periodic box discretization and spectral primitives.

Fields are plain complex numpy arrays of shape ``(N,) * dim`` (C order,
axis ``j`` is coordinate ``x_j``). The box ``[-L, L)^dim`` stands in for
R^dim, which is only legitimate while the solution stays localized.

Transform normalization: the forward transform is unnormalized and the
inverse carries ``1/N^dim`` (numpy's default "backward" convention). The
discrete Parseval identity therefore reads

    dx^dim * sum |u|^2 == dx^dim / N^dim * sum |u_hat|^2
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigError, NonFiniteFieldError


@dataclass(frozen=True)
class Grid:
    dim: int
    points: int
    half_width: float

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ConfigError(f"dim must be 1, 2 or 3, got {self.dim!r}")
        n = self.points
        if not isinstance(n, (int, np.integer)) or n < 8 or n & (n - 1):
            raise ConfigError(f"points must be a power of two >= 8, got {n!r}")
        if not (np.isfinite(self.half_width) and self.half_width > 0):
            raise ConfigError(f"half_width must be positive, got {self.half_width!r}")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points,) * self.dim

    @property
    def size(self) -> int:
        return self.points**self.dim

    @property
    def dx(self) -> float:
        return 2.0 * self.half_width / self.points

    @property
    def cell_volume(self) -> float:
        return self.dx**self.dim

    @cached_property
    def axis(self) -> np.ndarray:
        """1D coordinates ``-L + j*dx``."""
        return -self.half_width + self.dx * np.arange(self.points)

    @cached_property
    def axis_frequencies(self) -> np.ndarray:
        """1D angular frequencies in FFT ordering, spacing ``pi/L``."""
        return 2.0 * np.pi * np.fft.fftfreq(self.points, d=self.dx)

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.axis] * self.dim), indexing="ij", sparse=True))

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.axis_frequencies] * self.dim), indexing="ij", sparse=True))

    @cached_property
    def derivative_wavenumbers(self) -> tuple[np.ndarray, ...]:
        # Nyquist mode zeroed for odd derivatives so real data stay real.
        k = self.axis_frequencies.copy()
        k[self.points // 2] = 0.0
        return tuple(np.meshgrid(*([k] * self.dim), indexing="ij", sparse=True))

    @cached_property
    def k_squared(self) -> np.ndarray:
        return sum(kj**2 for kj in self.wavenumbers) * np.ones(self.shape)

    @cached_property
    def radius_squared(self) -> np.ndarray:
        return sum(xj**2 for xj in self.coords) * np.ones(self.shape)

    @property
    def k_max(self) -> float:
        return np.pi * self.points / (2.0 * self.half_width)

    def boundary_shell(self, fraction: float = 0.05) -> np.ndarray:
        """Boolean mask of points within ``fraction * 2L`` of any box face."""
        edge = self.half_width * (1.0 - 2.0 * fraction)
        mask = np.zeros(self.shape, dtype=bool)
        for xj in self.coords:
            mask |= np.abs(xj) >= edge
        return mask


def make_grid(dim: int, points: int, half_width: float) -> Grid:
    return Grid(int(dim), int(points), float(half_width))


def require_finite(u: np.ndarray, what: str = "field") -> np.ndarray:
    if not np.all(np.isfinite(u)):
        raise NonFiniteFieldError(f"{what} contains NaN or Inf values")
    return u


def as_field(grid: Grid, values) -> np.ndarray:
    """Coerce to a complex array on ``grid``; flat row-major input is reshaped."""
    u = np.asarray(values, dtype=complex)
    if u.shape != grid.shape:
        if u.size != grid.size:
            raise ConfigError(f"field has {u.size} values, grid needs {grid.size}")
        u = u.reshape(grid.shape)
    return require_finite(u)


def transform(u: np.ndarray) -> np.ndarray:
    return np.fft.fftn(u)


def inverse_transform(u_hat: np.ndarray) -> np.ndarray:
    return np.fft.ifftn(u_hat)


def spectral_norm2(grid: Grid, u_hat: np.ndarray) -> float:
    """Discrete L^2 norm squared computed from the spectrum (Parseval)."""
    return grid.cell_volume / grid.size * float(np.sum(np.abs(u_hat) ** 2))


def gradient(grid: Grid, u: np.ndarray, u_hat: np.ndarray | None = None) -> list[np.ndarray]:
    if u_hat is None:
        u_hat = transform(u)
    return [inverse_transform(1j * kj * u_hat) for kj in grid.derivative_wavenumbers]


def laplacian(grid: Grid, u: np.ndarray) -> np.ndarray:
    return inverse_transform(-grid.k_squared * transform(u))


def multiply_by_x(grid: Grid, u: np.ndarray) -> list[np.ndarray]:
    return [xj * u for xj in grid.coords]


def integrate(grid: Grid, density) -> float:
    """Rectangle rule ``dx^dim * sum``; spectrally accurate for smooth decaying data."""
    return grid.cell_volume * float(np.sum(density))


def inner(grid: Grid, f: np.ndarray, g: np.ndarray) -> complex:
    """L^2 scalar product ``(f, g) = int f * conj(g)``."""
    return grid.cell_volume * complex(np.sum(f * np.conj(g)))


def norm2(grid: Grid, u: np.ndarray) -> float:
    return integrate(grid, np.abs(u) ** 2)


def norm(grid: Grid, u: np.ndarray) -> float:
    return float(np.sqrt(norm2(grid, u)))
