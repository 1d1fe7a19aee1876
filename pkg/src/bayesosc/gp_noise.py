"""
Gaussian-process noise signals on a uniform time grid, and a harmonic
oscillator driven by them.

A signal f(t) has density proportional to

    exp(-1/2 (f - fbar)^T A^{-1} (f - fbar))

with A the autocorrelation matrix on the grid. Three kernels are provided:
white (``variance * delta_ij / dt``, so integrated impulses do not depend on
the grid), Ornstein-Uhlenbeck and squared-exponential.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy.linalg import solve_triangular

KINDS = ("white", "ornstein_uhlenbeck", "squared_exponential")
JITTER = 1e-10


class ConditioningError(np.linalg.LinAlgError):
    """Covariance could not be factorized even after diagonal jitter."""


@dataclass(frozen=True)
class GPKernel:
    kind: str = "ornstein_uhlenbeck"
    variance: float = 1.0
    correlation_time: float = 1.0
    mean: Union[float, Callable] = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}; expected one of {KINDS}")
        if not self.variance > 0:
            raise ValueError("variance must be positive")
        if self.kind != "white" and not self.correlation_time > 0:
            raise ValueError("correlation_time must be positive")

    def mean_on(self, t: np.ndarray) -> np.ndarray:
        if callable(self.mean):
            return np.asarray(self.mean(t), dtype=float) * np.ones_like(t)
        return np.full_like(t, float(self.mean))


@dataclass(frozen=True)
class TimeGrid:
    t0: float = 0.0
    dt: float = 0.01
    n: int = 100

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.n < 1:
            raise ValueError("grid needs at least one point")

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n)


def covariance_matrix(kernel: GPKernel, grid: TimeGrid) -> np.ndarray:
    t = grid.times
    lag = t[:, None] - t[None, :]
    if kernel.kind == "white":
        return np.eye(grid.n) * (kernel.variance / grid.dt)
    if kernel.kind == "ornstein_uhlenbeck":
        return kernel.variance * np.exp(-np.abs(lag) / kernel.correlation_time)
    return kernel.variance * np.exp(-(lag**2) / (2 * kernel.correlation_time**2))


def cholesky_factor(kernel: GPKernel, grid: TimeGrid) -> np.ndarray:
    """Lower-triangular factor of the covariance plus ``JITTER * variance`` on the diagonal."""
    cov = covariance_matrix(kernel, grid)
    cov[np.diag_indices_from(cov)] += JITTER * kernel.variance
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise ConditioningError(
            f"{kernel.kind} covariance on n={grid.n}, dt={grid.dt:g} is not factorizable: {exc}"
        ) from exc


def sample_paths(kernel: GPKernel, grid: TimeGrid, count: int, seed: int = 0) -> np.ndarray:
    """Draw ``count`` paths, returned as rows of a ``(count, n)`` array."""
    if count < 1:
        raise ValueError("count must be >= 1")
    L = cholesky_factor(kernel, grid)
    z = np.random.default_rng(seed).standard_normal((grid.n, count))
    return kernel.mean_on(grid.times)[None, :] + (L @ z).T


def whiten(paths: np.ndarray, kernel: GPKernel, grid: TimeGrid) -> np.ndarray:
    """Map paths back to standard-normal coordinates, ``L^{-1} (path - mean)``."""
    L = cholesky_factor(kernel, grid)
    centered = np.atleast_2d(paths) - kernel.mean_on(grid.times)[None, :]
    return solve_triangular(L, centered.T, lower=True).T


def empirical_stats(paths):
    """Unbiased sample mean and covariance across paths (rows)."""
    paths = np.atleast_2d(np.asarray(paths, dtype=float))
    if paths.shape[0] < 2:
        raise ValueError("need at least 2 paths")
    return paths.mean(axis=0), np.cov(paths, rowvar=False, ddof=1)


def autocorrelation(paths, max_lag: int) -> np.ndarray:
    """Pooled autocorrelation by lag, assuming stationarity along each path.

    Products ``(x_i - m)(x_{i+k} - m)`` are averaged over paths and all
    starting points, then divided by the lag-0 value.
    """
    x = np.atleast_2d(np.asarray(paths, dtype=float))
    n = x.shape[1]
    if not 0 <= max_lag < n:
        raise ValueError("max_lag must lie in [0, n)")
    x = x - x.mean()
    acov = np.array([np.mean(x[:, : n - k] * x[:, k:]) for k in range(max_lag + 1)])
    return acov / acov[0]


@dataclass
class OscillatorEnsemble:
    times: np.ndarray
    x: np.ndarray
    v: np.ndarray
    omega0: float
    mass: float

    def energy(self) -> np.ndarray:
        return 0.5 * self.mass * (self.v**2 + (self.omega0 * self.x) ** 2)


def drive_oscillator(
    omega0: float,
    mass: float,
    kernel: GPKernel | None,
    grid: TimeGrid,
    count: int,
    seed: int = 0,
    x0: float = 0.0,
    v0: float = 0.0,
) -> OscillatorEnsemble:
    """Integrate ``x'' = -omega0^2 x + f(t)/m`` with RK4 for each sampled force path.

    The force is held constant over each grid step, ``f(t) = f_i`` on
    ``[t_i, t_i + dt)``. ``kernel=None`` means no force. Positions and
    velocities are returned on the grid, shape ``(count, n)``.
    """
    if not (omega0 > 0 and mass > 0):
        raise ValueError("omega0 and mass must be positive")
    if omega0 * grid.dt > 0.1:
        raise ValueError(f"omega0*dt = {omega0 * grid.dt:.3g} exceeds 0.1; refine the grid")
    if kernel is None:
        force = np.zeros((count, grid.n))
    else:
        force = sample_paths(kernel, grid, count, seed)
    h = grid.dt
    w2 = omega0 * omega0
    x = np.empty((count, grid.n))
    v = np.empty((count, grid.n))
    x[:, 0], v[:, 0] = x0, v0
    for i in range(grid.n - 1):
        a = force[:, i] / mass
        xi, vi = x[:, i], v[:, i]
        k1x, k1v = vi, a - w2 * xi
        k2x, k2v = vi + 0.5 * h * k1v, a - w2 * (xi + 0.5 * h * k1x)
        k3x, k3v = vi + 0.5 * h * k2v, a - w2 * (xi + 0.5 * h * k2x)
        k4x, k4v = vi + h * k3v, a - w2 * (xi + h * k3x)
        x[:, i + 1] = xi + h / 6 * (k1x + 2 * k2x + 2 * k3x + k4x)
        v[:, i + 1] = vi + h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
    return OscillatorEnsemble(grid.times, x, v, omega0, mass)
