"""
Dense density-matrix simulation of a truncated cavity mode (a qudit) coupled
to two-level qubits,

    H = hbar*omega_r*(a^dag a + 1/2)
        + sum_j [ hbar*delta_j/2 * sz_j + i*g_j * sy_j (a^dag - a) ],

with qubits sporadically reset to their ground state ``|0>``.

Tensor order is (cavity, qubit_1, ..., qubit_k) with the cavity index most
significant. Qubit level 0 is the ground state and ``sz = diag(-1, +1)``.
Two run modes share the observables: stochastic trajectories (unitary steps
plus Bernoulli resets with probability ``rate*dt``) and the deterministic
mean evolution

    drho/dt = -i/hbar [H, rho] + rate * sum_q (Tr_q(rho) (x) |0><0|_q - rho)

integrated with classical RK4.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import reduce
from typing import Optional, Sequence

import numpy as np

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-9
UNITARY_TOL = 1e-10

SIGMA_Y = np.array([[0.0, -1j], [1j, 0.0]])
SIGMA_Z = np.diag([-1.0, 1.0]).astype(complex)
SIGMA_PLUS = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)  # |1><0|
GROUND = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)


class SizeError(ValueError):
    """Joint Hilbert space exceeds the configured dimension cap."""


class ConfigError(ValueError):
    pass


class ConsistencyError(RuntimeError):
    """An internal numerical contract (e.g. unitarity) was violated."""


class TruncationError(RuntimeError):
    """Population in the highest retained cavity level exceeded the guard."""


@dataclass(frozen=True)
class QubitSpec:
    delta: float
    g: float

    def __post_init__(self):
        if not (np.isfinite(self.delta) and np.isfinite(self.g)):
            raise ValueError("qubit parameters must be finite")
        if self.g < 0:
            raise ValueError("coupling g must be non-negative")


@dataclass(frozen=True)
class CavityModel:
    d: int
    omega_r: float
    qubits: tuple = ()
    hbar: float = 1.0
    max_dim: int = 4096

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(self.qubits))
        if self.d < 2:
            raise ValueError("cavity truncation d must be >= 2")
        if not self.hbar > 0:
            raise ValueError("hbar must be positive")
        if self.dim > self.max_dim:
            raise SizeError(f"Hilbert dimension {self.dim} exceeds cap {self.max_dim}")

    @property
    def dims(self) -> tuple:
        return (self.d,) + (2,) * len(self.qubits)

    @property
    def dim(self) -> int:
        return self.d * 2 ** len(self.qubits)


@dataclass(frozen=True)
class ResetProcess:
    rate: float = 0.0
    targets: tuple = (0,)

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(sorted(set(self.targets))))
        if not self.rate >= 0:
            raise ValueError("reset rate must be non-negative")


@dataclass(frozen=True)
class SimConfig:
    dt: float
    t_max: float
    seed: int = 0
    n_trajectories: int = 1
    record_stride: int = 1
    # refuse runs whose top cavity level population exceeds this; None disables
    max_top_population: Optional[float] = 1e-3

    def __post_init__(self):
        if not (self.dt > 0 and self.t_max > 0):
            raise ConfigError("dt and t_max must be positive")
        if self.dt > self.t_max:
            raise ConfigError("dt must not exceed t_max")
        if self.n_trajectories < 1 or self.record_stride < 1:
            raise ConfigError("n_trajectories and record_stride must be >= 1")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_max / self.dt))


@dataclass
class ObservableSeries:
    times: np.ndarray
    qudit_populations: np.ndarray
    qubit_excitations: np.ndarray
    photon_number: np.ndarray
    purity: np.ndarray
    coherence_l1: np.ndarray
    # standard errors of each field, filled for trajectory ensembles
    stderr: Optional[dict] = field(default=None, repr=False)

    FIELDS = ("qudit_populations", "qubit_excitations", "photon_number", "purity", "coherence_l1")

    def qudit_excited(self) -> np.ndarray:
        """Population outside the cavity ground level."""
        return 1.0 - self.qudit_populations[:, 0]

    def csv_header(self) -> list:
        d = self.qudit_populations.shape[1]
        k = self.qubit_excitations.shape[1]
        return (
            ["time"]
            + [f"pop_{i}" for i in range(d)]
            + [f"qubit_exc_{j + 1}" for j in range(k)]
            + ["photon_number", "purity", "coherence_l1"]
        )

    def csv_rows(self):
        for i, t in enumerate(self.times):
            yield (
                [t]
                + list(self.qudit_populations[i])
                + list(self.qubit_excitations[i])
                + [self.photon_number[i], self.purity[i], self.coherence_l1[i]]
            )


@dataclass
class Operators:
    dims: tuple
    a: np.ndarray
    adag: np.ndarray
    number: np.ndarray
    sz: list
    sy: list
    sp: list
    sm: list
    identity: np.ndarray


def _embed(op: np.ndarray, slot: int, dims: Sequence[int]) -> np.ndarray:
    factors = [op if i == slot else np.eye(n) for i, n in enumerate(dims)]
    return reduce(np.kron, factors)


def destroy(d: int) -> np.ndarray:
    """Truncated annihilation operator, a|n> = sqrt(n)|n-1>."""
    return np.diag(np.sqrt(np.arange(1, d)), k=1).astype(complex)


def build_operators(model: CavityModel) -> Operators:
    dims = model.dims
    a = _embed(destroy(model.d), 0, dims)
    adag = a.conj().T
    k = len(model.qubits)
    sz = [_embed(SIGMA_Z, j + 1, dims) for j in range(k)]
    sy = [_embed(SIGMA_Y, j + 1, dims) for j in range(k)]
    sp = [_embed(SIGMA_PLUS, j + 1, dims) for j in range(k)]
    sm = [op.conj().T for op in sp]
    return Operators(dims, a, adag, adag @ a, sz, sy, sp, sm, np.eye(model.dim, dtype=complex))


def build_hamiltonian(model: CavityModel, ops: Operators | None = None) -> np.ndarray:
    ops = ops or build_operators(model)
    hbar = model.hbar
    H = hbar * model.omega_r * (ops.number + 0.5 * ops.identity)
    for q, sz, sy in zip(model.qubits, ops.sz, ops.sy):
        H = H + 0.5 * hbar * q.delta * sz + 1j * q.g * sy @ (ops.adag - ops.a)
    return H


def is_density_matrix(rho, tol_herm=HERMITIAN_TOL, tol_trace=TRACE_TOL, tol_psd=PSD_TOL) -> bool:
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        return False
    if np.abs(rho - rho.conj().T).max() > tol_herm:
        return False
    if abs(np.trace(rho) - 1) > tol_trace:
        return False
    return np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() >= -tol_psd


def product_state(*factors) -> np.ndarray:
    """Kronecker product of kets or density matrices, returned as a density matrix."""
    mats = []
    for f in factors:
        f = np.asarray(f, dtype=complex)
        mats.append(np.outer(f, f.conj()) if f.ndim == 1 else f)
    return reduce(np.kron, mats)


def basis(n: int, k: int) -> np.ndarray:
    v = np.zeros(n, dtype=complex)
    v[k] = 1.0
    return v


def partial_trace(rho, dims: Sequence[int], keep) -> np.ndarray:
    """Reduced density matrix on the subsystems listed in ``keep`` (in tensor order)."""
    dims = tuple(dims)
    keep = sorted({keep} if isinstance(keep, (int, np.integer)) else set(keep))
    n = len(dims)
    if not keep or any(not 0 <= k < n for k in keep):
        raise ValueError(f"invalid subsystem selector {keep!r} for {n} subsystems")
    rho = np.asarray(rho)
    if rho.shape != (int(np.prod(dims)),) * 2:
        raise ValueError("rho shape does not match dims")
    traced = [i for i in range(n) if i not in keep]
    t = rho.reshape(dims + dims)
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = list(letters[:n])
    col = list(letters[n : 2 * n])
    for i in traced:
        col[i] = row[i]
    out = "".join(row[i] for i in keep) + "".join(col[i] for i in keep)
    sub = int(np.prod([dims[i] for i in keep]))
    return np.einsum("".join(row) + "".join(col) + "->" + out, t).reshape(sub, sub)


def apply_reset(rho, qubit_index: int, dims: Sequence[int]) -> np.ndarray:
    """Trace out one qubit and put it back in ``|0><0|``.

    ``qubit_index`` counts qubits from 0; the qubit lives in tensor slot
    ``qubit_index + 1``.
    """
    dims = tuple(dims)
    slot = qubit_index + 1
    if not 1 <= slot < len(dims) or dims[slot] != 2:
        raise IndexError(f"no qubit {qubit_index} in dims {dims}")
    t = np.asarray(rho).reshape(dims + dims)
    n = len(dims)
    reduced = np.trace(t, axis1=slot, axis2=slot + n)
    out = np.zeros_like(t)
    idx = [slice(None)] * (2 * n)
    idx[slot] = 0
    idx[slot + n] = 0
    out[tuple(idx)] = reduced
    return out.reshape(rho.shape)


def _reset_superop_batch(rhos, qubit_index, dims):
    """apply_reset over a leading batch axis."""
    dims = tuple(dims)
    n = len(dims)
    slot = qubit_index + 1
    b = rhos.shape[0]
    t = rhos.reshape((b,) + dims + dims)
    reduced = np.trace(t, axis1=slot + 1, axis2=slot + n + 1)
    out = np.zeros_like(t)
    idx = [slice(None)] * (2 * n + 1)
    idx[slot + 1] = 0
    idx[slot + n + 1] = 0
    out[tuple(idx)] = reduced
    return out.reshape(rhos.shape)


class Propagator:
    """Exact step propagator ``exp(-i H dt / hbar)`` from an eigendecomposition."""

    def __init__(self, H: np.ndarray, dt: float, hbar: float = 1.0):
        herm = np.abs(H - H.conj().T).max()
        if herm > 1e-12 * max(1.0, np.abs(H).max()):
            raise ConsistencyError(f"Hamiltonian not Hermitian (max deviation {herm:.3g})")
        evals, evecs = np.linalg.eigh(H)
        self.energies = evals
        self.U = (evecs * np.exp(-1j * evals * dt / hbar)) @ evecs.conj().T
        self.Udag = self.U.conj().T
        check_unitary(self.U, 1e-12)


def check_unitary(U: np.ndarray, tol: float = UNITARY_TOL) -> None:
    dev = np.abs(U.conj().T @ U - np.eye(U.shape[0])).max()
    if dev > tol:
        raise ConsistencyError(f"propagator not unitary (max deviation {dev:.3g})")


def evolve_step(rho: np.ndarray, U, check: bool = True) -> np.ndarray:
    """``U rho U^dag`` for a step propagator (array or :class:`Propagator`)."""
    if isinstance(U, Propagator):
        return U.U @ rho @ U.Udag
    U = np.asarray(U)
    if check:
        check_unitary(U)
    return U @ rho @ U.conj().T


def _stability_check(H, dt, hbar):
    norm = np.abs(np.linalg.eigvalsh(H)).max()
    if norm * dt / hbar > 0.1:
        warnings.warn(
            f"||H|| dt / hbar = {norm * dt / hbar:.3g} exceeds 0.1; reduce dt",
            RuntimeWarning,
            stacklevel=3,
        )


def _validate_run(model, reset, rho0, config):
    for q in reset.targets:
        if not 0 <= q < len(model.qubits):
            raise ConfigError(f"reset target {q} is not a qubit of the model")
    if reset.rate * config.dt > 1:
        raise ConfigError(f"rate*dt = {reset.rate * config.dt:.3g} exceeds 1")
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (model.dim, model.dim) or not is_density_matrix(rho0):
        raise ConfigError("rho0 is not a valid density matrix on the joint space")
    return rho0


def _observables(rhos: np.ndarray, model: CavityModel, ops: Operators):
    """Observables for a batch of density matrices, shape (b, D, D)."""
    dims = model.dims
    n = len(dims)
    b = rhos.shape[0]
    t = rhos.reshape((b,) + dims + dims)
    # reduced cavity state: trace all qubit pairs
    red = t
    for _ in range(n - 1):
        m = red.ndim // 2  # 1 + subsystems remaining
        red = np.trace(red, axis1=m, axis2=red.ndim - 1)
    cav = red.reshape(b, model.d, model.d)
    pops = np.real(np.einsum("bii->bi", cav))
    exc = np.empty((b, len(model.qubits)))
    for j in range(len(model.qubits)):
        exc[:, j] = np.real(np.einsum("bij,ji->b", rhos, ops.sp[j] @ ops.sm[j]))
    photons = np.real(np.einsum("bij,ji->b", rhos, ops.number))
    purity = np.real(np.einsum("bij,bji->b", cav, cav))
    coh = np.abs(cav).sum(axis=(1, 2)) - np.abs(np.einsum("bii->bi", cav)).sum(axis=1)
    return pops, exc, photons, purity, coh


def _guard(pops, config, t):
    limit = config.max_top_population
    if limit is not None and pops[:, -1].max() > limit:
        raise TruncationError(
            f"top cavity level population {pops[:, -1].max():.3g} exceeds {limit:g} at t={t:g}; increase d"
        )


def _series(times, obs_list):
    arr = [np.array(x) for x in zip(*obs_list)]
    return ObservableSeries(np.array(times), *arr)


def _record_times(config):
    steps = np.arange(0, config.n_steps + 1, config.record_stride)
    return steps, steps * config.dt


def _ensemble(model, reset, rho0, config, seeds):
    """Run a batch of reset trajectories; returns per-trajectory observables (b, T, ...)."""
    rho0 = _validate_run(model, reset, rho0, config)
    ops = build_operators(model)
    H = build_hamiltonian(model, ops)
    _stability_check(H, config.dt, model.hbar)
    prop = Propagator(H, config.dt, model.hbar)
    n_steps = config.n_steps
    p_reset = reset.rate * config.dt
    draws = np.stack(
        [np.random.default_rng(s).random((n_steps, len(reset.targets))) for s in seeds]
    )
    rhos = np.repeat(rho0[None], len(seeds), axis=0)
    record_steps, times = _record_times(config)
    out = []
    rec = iter(record_steps)
    next_rec = next(rec)
    for step in range(n_steps + 1):
        if step == next_rec:
            obs = _observables(rhos, model, ops)
            # the guard looks at the batch-averaged state
            _guard(obs[0].mean(axis=0, keepdims=True), config, step * config.dt)
            out.append(obs)
            next_rec = next(rec, None)
        if step == n_steps:
            break
        rhos = prop.U @ rhos @ prop.Udag
        if p_reset > 0:
            for col, q in enumerate(reset.targets):
                hit = draws[:, step, col] < p_reset
                if hit.any():
                    rhos[hit] = _reset_superop_batch(rhos[hit], q, model.dims)
    return times, out


def run_trajectory(model: CavityModel, reset: ResetProcess, rho0, config: SimConfig) -> ObservableSeries:
    """One stochastic reset trajectory seeded by ``config.seed``."""
    times, out = _ensemble(model, reset, rho0, config, [config.seed])
    return _series(times, [tuple(x[0] for x in obs) for obs in out])


def trajectory_seeds(seed: int, n: int) -> list:
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(n)]


def run_ensemble(model: CavityModel, reset: ResetProcess, rho0, config: SimConfig, batch: int = 250) -> ObservableSeries:
    """Average of ``config.n_trajectories`` seeded trajectories with standard errors.

    Trajectory ``i`` uses seed ``trajectory_seeds(config.seed, n)[i]`` and is
    identical to :func:`run_trajectory` run with that seed.
    """
    seeds = trajectory_seeds(config.seed, config.n_trajectories)
    # streaming sums over trajectory batches
    total = total_sq = None
    times = None
    n = 0
    for start in range(0, len(seeds), batch):
        chunk = seeds[start : start + batch]
        times, out = _ensemble(model, reset, rho0, config, chunk)
        stacked = [np.stack([obs[f] for obs in out], axis=1) for f in range(5)]  # (b, T, ...)
        s = [x.sum(axis=0) for x in stacked]
        s2 = [(x * x).sum(axis=0) for x in stacked]
        total = s if total is None else [a + b for a, b in zip(total, s)]
        total_sq = s2 if total_sq is None else [a + b for a, b in zip(total_sq, s2)]
        n += len(chunk)
    means = [t / n for t in total]
    if n > 1:
        var = [np.maximum(q / n - m * m, 0.0) * n / (n - 1) for q, m in zip(total_sq, means)]
        se = [np.sqrt(v / n) for v in var]
    else:
        se = [np.zeros_like(m) for m in means]
    series = ObservableSeries(np.array(times), *means)
    series.stderr = dict(zip(ObservableSeries.FIELDS, se))
    return series


def lindblad_rhs(rho, H, hbar, rate, targets, dims):
    drho = (-1j / hbar) * (H @ rho - rho @ H)
    for q in targets:
        drho = drho + rate * (apply_reset(rho, q, dims) - rho)
    return drho


def run_mean_evolution(model: CavityModel, reset: ResetProcess, rho0, config: SimConfig) -> ObservableSeries:
    """Deterministic ensemble-average dynamics of the reset process, RK4 at step ``dt``."""
    rho = _validate_run(model, reset, rho0, config)
    ops = build_operators(model)
    H = build_hamiltonian(model, ops)
    _stability_check(H, config.dt, model.hbar)
    dt, hbar, dims = config.dt, model.hbar, model.dims
    rate = reset.rate
    targets = reset.targets if rate > 0 else ()

    def f(r):
        return lindblad_rhs(r, H, hbar, rate, targets, dims)

    record_steps, times = _record_times(config)
    record = set(record_steps.tolist())
    out = []
    for step in range(config.n_steps + 1):
        if step in record:
            obs = _observables(rho[None], model, ops)
            _guard(obs[0], config, step * dt)
            out.append(tuple(x[0] for x in obs))
        if step == config.n_steps:
            break
        k1 = f(rho)
        k2 = f(rho + 0.5 * dt * k1)
        k3 = f(rho + 0.5 * dt * k2)
        k4 = f(rho + dt * k3)
        rho = rho + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
    return _series(times, out)


def evolve_states(model: CavityModel, reset: ResetProcess, rho0, config: SimConfig, mode: str = "mean"):
    """Yield ``(t, rho)`` at every step; ``mode`` is ``'mean'`` or ``'trajectory'``.

    Used for invariant checks that need the full density matrix.
    """
    rho = _validate_run(model, reset, rho0, config)
    ops = build_operators(model)
    H = build_hamiltonian(model, ops)
    dt, dims = config.dt, model.dims
    if mode == "trajectory":
        prop = Propagator(H, dt, model.hbar)
        draws = np.random.default_rng(config.seed).random((config.n_steps, len(reset.targets)))
    elif mode != "mean":
        raise ConfigError(f"unknown mode {mode!r}")
    targets = reset.targets if reset.rate > 0 else ()
    yield 0.0, rho
    for step in range(config.n_steps):
        if mode == "trajectory":
            rho = prop.U @ rho @ prop.Udag
            for col, q in enumerate(reset.targets):
                if draws[step, col] < reset.rate * dt:
                    rho = apply_reset(rho, q, dims)
        else:
            def f(r):
                return lindblad_rhs(r, H, model.hbar, reset.rate, targets, dims)

            k1 = f(rho)
            k2 = f(rho + 0.5 * dt * k1)
            k3 = f(rho + 0.5 * dt * k2)
            k4 = f(rho + dt * k3)
            rho = rho + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        yield (step + 1) * dt, rho
