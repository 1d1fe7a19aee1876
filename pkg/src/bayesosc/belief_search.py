"""
Discrete Bayes filter for single-object search over N cells.

The object sits in one unknown cell. Each step we interrogate one cell and
read a binary sensor with detection probability ``p_detect`` (object in the
cell) and false-alarm probability ``p_false`` (object elsewhere). The belief
is the posterior over the object's cell; controls are chosen to drive its
Shannon entropy (bits) down.

Beliefs are plain 1-D float arrays. Actions are cell indices, observations
are 0/1 integers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

NORM_TOL = 1e-12
# relative slack used when comparing expected entropies for ties
TIE_TOL = 1e-12
MAX_TREE_NODES = 10**6


class ContradictionError(ValueError):
    """The observation has zero probability under the current belief."""


class SearchBudgetError(ValueError):
    """Exhaustive policy tree exceeds the node budget."""


@dataclass(frozen=True)
class MeasurementModel:
    """Bernoulli sensor: P(y=1 | object here) and P(y=1 | object elsewhere)."""

    p_detect: float
    p_false: float

    def __post_init__(self):
        for name in ("p_detect", "p_false"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0) or not np.isfinite(v):
                raise ValueError(f"{name}={v!r} outside [0, 1]")

    @property
    def informative(self) -> bool:
        return self.p_detect != self.p_false

    def likelihood(self, n_cells: int, action: int, obs: int) -> np.ndarray:
        """Vector of P(obs | action, object in cell x) over x."""
        p_hit = self.p_detect if obs == 1 else 1.0 - self.p_detect
        p_miss = self.p_false if obs == 1 else 1.0 - self.p_false
        lik = np.full(n_cells, p_miss)
        lik[action] = p_hit
        return lik


@dataclass
class TrajectoryRecord:
    actions: list = field(default_factory=list)
    observations: list = field(default_factory=list)
    beliefs: list = field(default_factory=list)
    entropies: list = field(default_factory=list)

    def __len__(self):
        return len(self.actions)

    def __eq__(self, other):
        if not isinstance(other, TrajectoryRecord):
            return NotImplemented
        return (
            self.actions == other.actions
            and self.observations == other.observations
            and self.entropies == other.entropies
            and len(self.beliefs) == len(other.beliefs)
            and all(np.array_equal(a, b) for a, b in zip(self.beliefs, other.beliefs))
        )


def uniform_belief(n_cells: int) -> np.ndarray:
    if n_cells < 1:
        raise ValueError("need at least one cell")
    return np.full(n_cells, 1.0 / n_cells)


def validate_belief(belief) -> np.ndarray:
    b = np.asarray(belief, dtype=float)
    if b.ndim != 1 or b.size < 1:
        raise ValueError("belief must be a non-empty 1-D vector")
    if not np.all(np.isfinite(b)) or np.any(b < 0):
        raise ValueError("belief entries must be finite and non-negative")
    if abs(b.sum() - 1.0) > NORM_TOL:
        raise ValueError(f"belief sums to {b.sum()!r}, not 1")
    return b


def _check_action(n_cells: int, action: int) -> int:
    a = int(action)
    if a != action or not 0 <= a < n_cells:
        raise IndexError(f"action {action!r} outside [0, {n_cells})")
    return a


def bayes_update(belief, action: int, obs: int, model: MeasurementModel) -> np.ndarray:
    """Posterior after reading ``obs`` at cell ``action``.

    The evidence P(obs) is the sum of the unnormalized posterior; if it
    vanishes the observation contradicts the belief and
    :class:`ContradictionError` is raised.
    """
    b = validate_belief(belief)
    a = _check_action(b.size, action)
    if obs not in (0, 1):
        raise ValueError(f"observation must be 0 or 1, got {obs!r}")
    unnorm = model.likelihood(b.size, a, obs) * b
    evidence = unnorm.sum()
    if evidence <= 0.0:
        raise ContradictionError(
            f"observation y={obs} at cell {a} has zero probability under the belief"
        )
    post = unnorm / evidence
    # one more pass keeps the sum within a couple of ulps of 1
    return post / post.sum()


def shannon_entropy(belief) -> float:
    """Entropy in bits, with 0 log 0 = 0."""
    b = validate_belief(belief)
    nz = b[b > 0]
    h = -float(np.sum(nz * np.log2(nz)))
    return min(max(h, 0.0), np.log2(b.size))


def observation_prob(belief, action: int, obs: int, model: MeasurementModel) -> float:
    b = np.asarray(belief, dtype=float)
    return float(np.dot(model.likelihood(b.size, action, obs), b))


def _outcomes(belief: np.ndarray, action: int, model: MeasurementModel):
    """(P(y), posterior) for y in (0, 1), skipping impossible outcomes."""
    out = []
    for y in (0, 1):
        unnorm = model.likelihood(belief.size, action, y) * belief
        p_y = unnorm.sum()
        if p_y > 0.0:
            post = unnorm / p_y
            out.append((float(p_y), post / post.sum()))
    return out


def expected_posterior_entropy(belief, action: int, model: MeasurementModel) -> float:
    """Sum over y of P(y | action) * H(posterior after y)."""
    b = validate_belief(belief)
    a = _check_action(b.size, action)
    return sum(p * shannon_entropy(post) for p, post in _outcomes(b, a, model))


def _argmin_lowest(values: Sequence[float]) -> int:
    values = np.asarray(values)
    best = values.min()
    tol = TIE_TOL * max(1.0, abs(best))
    return int(np.flatnonzero(values <= best + tol)[0])


def greedy_entropy_policy(belief, model: MeasurementModel) -> int:
    """Cell minimizing the one-step expected posterior entropy (lowest index on ties)."""
    b = validate_belief(belief)
    scores = [expected_posterior_entropy(b, a, model) for a in range(b.size)]
    return _argmin_lowest(scores)


def tree_size(n_cells: int, horizon: int) -> int:
    """Number of action/observation nodes in a full depth-``horizon`` search tree."""
    return sum((2 * n_cells) ** k for k in range(1, horizon + 1))


def _optimal_value(belief: np.ndarray, model: MeasurementModel, horizon: int):
    if horizon == 0:
        return None, shannon_entropy(belief)
    scores = []
    for a in range(belief.size):
        total = 0.0
        for p, post in _outcomes(belief, a, model):
            total += p * _optimal_value(post, model, horizon - 1)[1]
        scores.append(total)
    best = _argmin_lowest(scores)
    return best, scores[best]


def brute_force_policy(belief, model: MeasurementModel, horizon: int):
    """Exact finite-horizon entropy minimization by exhaustive tree search.

    Returns ``(first_action, expected_terminal_entropy)`` of the optimal
    adaptive plan. Raises :class:`SearchBudgetError` when the tree would
    exceed ``MAX_TREE_NODES`` nodes.
    """
    b = validate_belief(belief)
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    size = tree_size(b.size, horizon)
    if size > MAX_TREE_NODES:
        raise SearchBudgetError(
            f"search tree has {size} nodes for N={b.size}, horizon={horizon}; "
            f"budget is {MAX_TREE_NODES}"
        )
    return _optimal_value(b, model, horizon)


def policy_expected_entropy(belief, model: MeasurementModel, policy, horizon: int) -> float:
    """Exact expected entropy after ``horizon`` steps of a feedback policy."""
    b = validate_belief(belief)
    if horizon == 0:
        return shannon_entropy(b)
    a = policy(b, model)
    return sum(
        p * policy_expected_entropy(post, model, policy, horizon - 1)
        for p, post in _outcomes(b, a, model)
    )


PolicyFn = Callable[[np.ndarray, MeasurementModel], int]


def resolve_policy(policy: Union[str, PolicyFn], horizon: int = 2) -> PolicyFn:
    if callable(policy):
        return policy
    if policy == "greedy":
        return greedy_entropy_policy
    if policy == "brute_force":
        return lambda b, m: brute_force_policy(b, m, horizon)[0]
    raise ValueError(f"unknown policy {policy!r}; expected 'greedy' or 'brute_force'")


def simulate_search(
    n_cells: int,
    true_cell: int,
    model: MeasurementModel,
    policy: Union[str, PolicyFn] = "greedy",
    max_steps: int = 100,
    seed: int = 0,
    stop_threshold: float = 0.99,
    prior=None,
    horizon: int = 2,
) -> TrajectoryRecord:
    """Run one seeded search episode against an object hidden at ``true_cell``.

    Stops after ``max_steps`` updates or once the largest posterior entry
    reaches ``stop_threshold``.
    """
    if n_cells < 1:
        raise ValueError("n_cells must be >= 1")
    if not 0 <= true_cell < n_cells:
        raise ValueError(f"true_cell {true_cell} outside [0, {n_cells})")
    if max_steps < 0:
        raise ValueError("max_steps must be >= 0")
    if not 0.0 < stop_threshold <= 1.0:
        raise ValueError("stop_threshold must lie in (0, 1]")
    choose = resolve_policy(policy, horizon)
    belief = uniform_belief(n_cells) if prior is None else validate_belief(prior)
    if belief.size != n_cells:
        raise ValueError("prior length does not match n_cells")

    rng = np.random.default_rng(seed)
    rec = TrajectoryRecord()
    for _ in range(max_steps):
        if belief.max() >= stop_threshold:
            break
        a = int(choose(belief, model))
        p_one = model.p_detect if a == true_cell else model.p_false
        y = int(rng.random() < p_one)
        belief = bayes_update(belief, a, y, model)
        rec.actions.append(a)
        rec.observations.append(y)
        rec.beliefs.append(belief)
        rec.entropies.append(shannon_entropy(belief))
    return rec
