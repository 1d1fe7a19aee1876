"""
Durbin-Willshaw elastic net for planar TSP instances.

A closed ring of nodes ``w`` is pulled toward the cities ``phi`` by an
annealed Gaussian attraction while springs between neighbouring nodes keep
the ring short. The energy is

    E(w) = alpha/2 * sum_n |w[n+1] - w[n]|^2
           - beta/2 * sum_m log sum_n exp(-|w[n] - phi[m]|^2 / (2 K^2))

and the solver runs gradient descent on it while the width ``K`` shrinks.
At ``K = 1/sqrt(2)`` the Gaussian reduces to ``exp(-|w - phi|^2)``.

Cities and nodes are ``(n, 2)`` float arrays throughout.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np


class DivergenceError(FloatingPointError):
    """A gradient step produced non-finite node coordinates."""


@dataclass(frozen=True)
class ElasticNetParams:
    alpha: float = 0.2
    beta: float = 1.0
    node_ratio: float = 2.5

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if not self.node_ratio >= 1:
            raise ValueError("node_ratio must be >= 1")


@dataclass(frozen=True)
class AnnealSchedule:
    """Geometric annealing of the Gaussian width.

    ``k_start`` and ``k_min`` are fractions of the instance spread (the
    longer bounding-box side), so the same schedule works at any scale.
    ``step_size`` is in units of the inverse curvature bound: 1.0 is the
    largest step for which descent within a stage is guaranteed.
    """

    k_start: float = 0.2
    k_decay: float = 0.99
    k_min: float = 0.01
    iters_per_stage: int = 3
    step_size: float = 1.0

    def __post_init__(self):
        if not 0 < self.k_decay < 1:
            raise ValueError("k_decay must lie in (0, 1)")
        if not 0 < self.k_min < self.k_start:
            raise ValueError("need 0 < k_min < k_start")
        if self.iters_per_stage < 1:
            raise ValueError("iters_per_stage must be >= 1")
        if not self.step_size > 0:
            raise ValueError("step_size must be positive")

    def widths(self, spread: float = 1.0):
        k, out = self.k_start, []
        while k >= self.k_min * (1 - 1e-12):
            out.append(k * spread)
            k *= self.k_decay
        return out


@dataclass
class Tour:
    order: np.ndarray
    length: float


def as_points(points) -> np.ndarray:
    p = np.asarray(points, dtype=float)
    if p.ndim != 2 or p.shape[1] != 2:
        raise ValueError(f"expected an (n, 2) coordinate array, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValueError("coordinates must be finite")
    return p


def instance_spread(cities) -> float:
    c = as_points(cities)
    spread = float(np.ptp(c, axis=0).max())
    return spread if spread > 0 else 1.0


def init_ring(cities, params: ElasticNetParams = ElasticNetParams(), seed: int = 0) -> np.ndarray:
    """Place ``ceil(node_ratio * n_cities)`` nodes on a small circle around the centroid."""
    c = as_points(cities)
    if len(c) < 2:
        raise ValueError("elastic net needs at least 2 cities")
    m = math.ceil(params.node_ratio * len(c))
    spread = instance_spread(c)
    theta = 2 * np.pi * np.arange(m) / m
    ring = c.mean(axis=0) + 0.1 * spread * np.column_stack([np.cos(theta), np.sin(theta)])
    rng = np.random.default_rng(seed)
    jitter = rng.uniform(-1.0, 1.0, size=ring.shape) * (1e-3 * spread / np.sqrt(2))
    return ring + jitter


def sq_dists(nodes, cities) -> np.ndarray:
    """Squared distances, shape (n_cities, n_nodes)."""
    dx = cities[:, 0, None] - nodes[None, :, 0]
    dy = cities[:, 1, None] - nodes[None, :, 1]
    return dx * dx + dy * dy


def _next(w):
    return np.concatenate((w[1:], w[:1]))


def _prev(w):
    return np.concatenate((w[-1:], w[:-1]))


def _log_weights(nodes, cities, k):
    """Row-shifted Gaussian log-weights and the per-city shifts (max-subtraction)."""
    logits = sq_dists(nodes, cities) * (-0.5 / (k * k))
    shift = logits.max(axis=1, keepdims=True)
    return logits - shift, shift


def prior_energy(nodes, alpha: float) -> float:
    w = as_points(nodes)
    if len(w) < 2:
        raise ValueError("ring needs at least 2 nodes")
    d = _next(w) - w
    return 0.5 * alpha * float(np.sum(d * d))


def data_energy(nodes, cities, beta: float, k: float) -> float:
    if not k > 0:
        raise ValueError("k must be positive")
    w, c = as_points(nodes), as_points(cities)
    z, shift = _log_weights(w, c, k)
    lse = np.log(np.exp(z).sum(axis=1)) + shift[:, 0]
    return -0.5 * beta * float(lse.sum())


def total_energy(nodes, cities, params: ElasticNetParams, k: float) -> float:
    return prior_energy(nodes, params.alpha) + data_energy(nodes, cities, params.beta, k)


def responsibilities(nodes, cities, k: float) -> np.ndarray:
    """Soft city-to-node weights; row m is a distribution over nodes."""
    if not k > 0:
        raise ValueError("k must be positive")
    w, c = as_points(nodes), as_points(cities)
    return _softmax_rows(w, c, k)


def _softmax_rows(w, c, k):
    e = np.exp(_log_weights(w, c, k)[0])
    return e / e.sum(axis=1, keepdims=True)


def descent_direction(nodes, cities, params: ElasticNetParams, k: float, lam=None) -> np.ndarray:
    """Negative energy gradient with respect to every node."""
    if lam is None:
        lam = _softmax_rows(nodes, cities, k)
    pull = lam.T @ cities - lam.sum(axis=0)[:, None] * nodes
    tension = _next(nodes) - 2 * nodes + _prev(nodes)
    return params.beta / (2 * k * k) * pull + params.alpha * tension


def curvature_bound(lam, params: ElasticNetParams, k: float) -> float:
    """Upper bound on the energy Hessian's largest eigenvalue at weights ``lam``.

    The log-sum-exp covariance term only lowers the curvature, so the data
    part is bounded by its diagonal and the ring Laplacian by ``4 alpha``.
    """
    return params.beta / (2 * k * k) * float(lam.sum(axis=0).max()) + 4 * params.alpha


def update_step(nodes, cities, params: ElasticNetParams, k: float, step_size: float, lam=None) -> np.ndarray:
    """One gradient-descent step; returns new node positions."""
    w, c = as_points(nodes), np.asarray(cities, dtype=float)
    new = w + step_size * descent_direction(w, c, params, k, lam)
    _check_finite(new, k)
    return new


def _check_finite(w, k):
    bad = ~np.isfinite(w).all(axis=1)
    if bad.any():
        raise DivergenceError(f"node {int(np.flatnonzero(bad)[0])} diverged at k={k:g}")


@dataclass
class StageRecord:
    stage: int
    k: float
    prior_energy: float
    data_energy: float
    total: float
    tour_length: float
    iter_energies: list | None = None


@dataclass
class SolveResult:
    nodes: np.ndarray
    weights: np.ndarray
    trace: list
    tour: Tour


def solve(
    cities,
    params: ElasticNetParams = ElasticNetParams(),
    schedule: AnnealSchedule = AnnealSchedule(),
    seed: int = 0,
    record_iters: bool = False,
) -> SolveResult:
    """Anneal the ring onto the cities.

    Each stage runs ``iters_per_stage`` descent steps at fixed width with
    step ``schedule.step_size / curvature_bound``. ``trace`` holds one
    :class:`StageRecord` per stage; with ``record_iters`` the total energy
    before and after every iteration is also kept in ``iter_energies``.
    """
    c = as_points(cities)
    if len(c) < 2:
        raise ValueError("elastic net needs at least 2 cities")
    spread = instance_spread(c)
    w = init_ring(c, params, seed)
    trace = []
    for stage, k in enumerate(schedule.widths(spread)):
        energies = [total_energy(w, c, params, k)] if record_iters else None
        for _ in range(schedule.iters_per_stage):
            lam = _softmax_rows(w, c, k)
            colsum = lam.sum(axis=0)
            data_coef = params.beta / (2 * k * k)
            eta = schedule.step_size / (data_coef * colsum.max() + 4 * params.alpha)
            pull = lam.T @ c - colsum[:, None] * w
            w = w + eta * (data_coef * pull + params.alpha * (_next(w) - 2 * w + _prev(w)))
            if record_iters:
                energies.append(total_energy(w, c, params, k))
        _check_finite(w, k)
        pe, de = prior_energy(w, params.alpha), data_energy(w, c, params.beta, k)
        trace.append(StageRecord(stage, k, pe, de, pe + de, extract_tour(w, c).length, energies))
    k_final = trace[-1].k if trace else schedule.k_min * spread
    lam = responsibilities(w, c, k_final)
    return SolveResult(w, lam, trace, extract_tour(w, c))


def tour_length(cities, order) -> float:
    c = as_points(cities)[np.asarray(order)]
    if len(c) < 2:
        return 0.0
    d = _next(c) - c
    return float(np.sqrt((d * d).sum(axis=1)).sum())


def extract_tour(nodes, cities) -> Tour:
    """Read the city order off the ring.

    Each city goes to its nearest node (lowest node index on ties). Cities
    are visited in node order; several cities on one node are ordered by
    their projection on the local ring direction.
    """
    w, c = as_points(nodes), as_points(cities)
    nearest = np.argmin(sq_dists(w, c), axis=1)
    direction = _next(w) - _prev(w)
    proj = np.einsum("mk,mk->m", c - w[nearest], direction[nearest])
    order = np.lexsort((np.arange(len(c)), proj, nearest))
    return Tour(order, tour_length(c, order))


def nearest_neighbor_tour(cities, start: int = 0) -> Tour:
    c = as_points(cities)
    n = len(c)
    unvisited = np.ones(n, dtype=bool)
    order = [start]
    unvisited[start] = False
    for _ in range(n - 1):
        d = np.linalg.norm(c - c[order[-1]], axis=1)
        d[~unvisited] = np.inf
        nxt = int(np.argmin(d))
        order.append(nxt)
        unvisited[nxt] = False
    order = np.array(order)
    return Tour(order, tour_length(c, order))


def two_opt(cities, order) -> Tour:
    """First-improvement 2-opt until no improving segment reversal remains."""
    c = as_points(cities)
    route = list(order)
    n = len(route)
    dist = np.linalg.norm(c[:, None, :] - c[None, :, :], axis=2)
    improved = True
    while improved:
        improved = False
        for i in range(n - 1):
            for j in range(i + 2, n if i > 0 else n - 1):
                a, b = route[i], route[i + 1]
                cc, d = route[j], route[(j + 1) % n]
                delta = dist[a, cc] + dist[b, d] - dist[a, b] - dist[cc, d]
                if delta < -1e-12:
                    route[i + 1 : j + 1] = route[i + 1 : j + 1][::-1]
                    improved = True
    route = np.array(route)
    return Tour(route, tour_length(c, route))


def baseline_tours(cities, seed: int = 0):
    """Nearest-neighbour tour from city 0 and its 2-opt refinement.

    ``seed`` is accepted for interface symmetry; both baselines are deterministic.
    """
    c = as_points(cities)
    if len(c) < 3:
        raise ValueError("baselines need at least 3 cities")
    nn = nearest_neighbor_tour(c, 0)
    return nn, two_opt(c, nn.order)


def brute_force_tour(cities) -> Tour:
    """Exhaustive optimum with city 0 fixed first; for small instances only."""
    c = as_points(cities)
    n = len(c)
    if n > 10:
        raise ValueError("brute force limited to 10 cities")
    if n < 3:
        order = np.arange(n)
        return Tour(order, tour_length(c, order))
    best, best_len = None, np.inf
    for perm in itertools.permutations(range(1, n)):
        if perm[0] > perm[-1]:
            continue
        order = (0,) + perm
        length = tour_length(c, order)
        if length < best_len:
            best, best_len = order, length
    return Tour(np.array(best), best_len)
