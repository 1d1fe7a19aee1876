import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bayesosc.elastic_net import (
    AnnealSchedule,
    DivergenceError,
    ElasticNetParams,
    baseline_tours,
    brute_force_tour,
    data_energy,
    descent_direction,
    extract_tour,
    init_ring,
    prior_energy,
    responsibilities,
    solve,
    total_energy,
    tour_length,
    update_step,
)

SQUARE = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
K_UNIT = 1 / math.sqrt(2)


def polygon(n, radius=0.5):
    t = 2 * np.pi * np.arange(n) / n
    return 0.5 + radius * np.column_stack([np.cos(t), np.sin(t)])


def loop_data_energy(nodes, cities, beta, k):
    total = 0.0
    for phi in cities:
        total += math.log(sum(math.exp(-((w[0] - phi[0]) ** 2 + (w[1] - phi[1]) ** 2) / (2 * k * k)) for w in nodes))
    return -0.5 * beta * total


def test_init_ring_square():
    ring = init_ring(SQUARE, ElasticNetParams(node_ratio=2.5), seed=0)
    assert ring.shape == (10, 2)
    r = np.linalg.norm(ring - [0.5, 0.5], axis=1)
    assert np.all(r <= 0.1 * math.sqrt(2) + 1e-3)
    np.testing.assert_allclose(ring.mean(axis=0), [0.5, 0.5], atol=1e-3)


def test_init_ring_seeded_and_two_cities():
    a = init_ring(SQUARE, seed=5)
    np.testing.assert_array_equal(a, init_ring(SQUARE, seed=5))
    ring = init_ring([[0, 0], [2, 0]])
    assert ring.shape == (5, 2)
    np.testing.assert_allclose(np.linalg.norm(ring - [1, 0], axis=1), 0.2, atol=2e-3)


def test_init_ring_rejects_single_city():
    with pytest.raises(ValueError):
        init_ring([[0.0, 0.0]])


def test_prior_energy():
    assert prior_energy(np.ones((5, 2)), 1.0) == 0.0
    assert prior_energy(SQUARE, 1.0) == pytest.approx(2.0, abs=1e-15)
    assert prior_energy(SQUARE, 2.0) == pytest.approx(2 * prior_energy(SQUARE, 1.0), abs=1e-15)


def test_data_energy_examples():
    assert data_energy([[0.3, 0.4]], [[0.3, 0.4]], 1.0, K_UNIT) == pytest.approx(0.0, abs=1e-15)
    d = 1.7
    assert data_energy([[0.0, 0.0]], [[d, 0.0]], 2.0, K_UNIT) == pytest.approx(d * d, rel=1e-14)
    nodes = np.array([[0.0, 0.0], [1.0, 1.0]])
    cities = np.array([[0.2, 0.1], [0.9, 0.3], [0.5, 0.5]])
    dup = np.vstack([nodes, nodes[:1]])
    # doubling every node doubles each inner sum
    both = np.vstack([nodes, nodes])
    beta = 1.3
    diff = data_energy(nodes, cities, beta, 0.4) - data_energy(both, cities, beta, 0.4)
    assert diff == pytest.approx(len(cities) * beta / 2 * math.log(2), rel=1e-12)
    # a city equidistant from a node and its duplicate
    one_city = np.array([[0.0, 0.5]])
    diff1 = data_energy(nodes[:1], one_city, beta, 0.3) - data_energy(dup[[0, 2]], one_city, beta, 0.3)
    assert diff1 == pytest.approx(beta / 2 * math.log(2), rel=1e-12)


def test_data_energy_matches_loop():
    rng = np.random.default_rng(1)
    nodes, cities = rng.random((7, 2)), rng.random((4, 2))
    for k in (0.1, 0.5, K_UNIT):
        assert data_energy(nodes, cities, 0.7, k) == pytest.approx(loop_data_energy(nodes, cities, 0.7, k), rel=1e-12)


def test_data_energy_far_city_finite():
    e = data_energy([[0.0, 0.0], [0.1, 0.0]], [[1000.0, 0.0]], 1.0, 0.01)
    assert np.isfinite(e) and e > 1e9
    # nearest node dominates: -(1/2)*(-(999.9^2)/(2e-4))
    assert e == pytest.approx(0.5 * 999.9**2 / 2e-4, rel=1e-9)


def test_responsibilities_examples():
    lam = responsibilities([[0.2, 0.2]], SQUARE, 0.3)
    np.testing.assert_array_equal(lam, np.ones((4, 1)))
    lam = responsibilities([[0, 0], [2, 0]], [[1.0, 5.0]], 0.7)
    np.testing.assert_allclose(lam, [[0.5, 0.5]], atol=1e-15)
    rng = np.random.default_rng(2)
    nodes, cities = rng.random((12, 2)), rng.random((6, 2))
    lam = responsibilities(nodes, cities, 1e-3)
    nearest = np.argmin(((cities[:, None] - nodes[None]) ** 2).sum(-1), axis=1)
    np.testing.assert_allclose(lam, np.eye(12)[nearest], atol=1e-6)


def test_responsibilities_stable_far_away():
    # every squared distance is shifted by ~1e6; naive exp would give 0/0
    nodes = np.array([[0.0, 0.0], [0.0, 1.0], [0.0, 2.0]])
    near = responsibilities(nodes, [[0.5, 0.8]], 0.5)
    far = responsibilities(nodes + [1000.0, 0.0], [[1000.5, 0.8]], 0.5)
    assert np.all(np.isfinite(responsibilities(nodes, [[1e3, 0.0]], 0.01)))
    np.testing.assert_allclose(near, far, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1e-3, 2.0))
def test_responsibility_rows_sum_to_one(seed, k):
    rng = np.random.default_rng(seed)
    lam = responsibilities(rng.normal(size=(9, 2)), rng.normal(size=(5, 2)) * 3, k)
    np.testing.assert_allclose(lam.sum(axis=1), 1.0, atol=1e-12)
    assert np.all((lam >= 0) & (lam <= 1))


def fd_gradient(nodes, cities, params, k):
    h = 1e-6 * k
    g = np.zeros_like(nodes)
    for idx in np.ndindex(nodes.shape):
        up, dn = nodes.copy(), nodes.copy()
        up[idx] += h
        dn[idx] -= h
        g[idx] = (total_energy(up, cities, params, k) - total_energy(dn, cities, params, k)) / (2 * h)
    return g


@pytest.mark.parametrize("seed", range(10))
def test_gradient_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    k = 10 ** rng.uniform(-2, 0)
    cities = rng.random((6, 2))
    nodes = cities[rng.integers(0, 6, 15)] + rng.normal(scale=k, size=(15, 2))
    params = ElasticNetParams(alpha=rng.uniform(0.05, 1), beta=rng.uniform(0.5, 2))
    g = -descent_direction(nodes, cities, params, k)
    fd = fd_gradient(nodes, cities, params, k)
    assert np.linalg.norm(g - fd) / np.linalg.norm(fd) < 1e-6


def test_update_step_zero_and_one_dimensional():
    rng = np.random.default_rng(0)
    nodes, cities = rng.random((5, 2)), rng.random((3, 2))
    np.testing.assert_array_equal(update_step(nodes, cities, ElasticNetParams(), 0.2, 0.0), nodes)
    # one node, one city: w <- w + eta * beta/(2k^2) * (phi - w)
    w = np.array([[0.0, 0.0]])
    phi = np.array([[3.0, 4.0]])
    p = ElasticNetParams(alpha=1.0, beta=2.0)
    new = update_step(w, phi, p, 1.0, 0.1)
    # single-node ring: tension term cancels (w_next = w_prev = w)
    np.testing.assert_allclose(new, [[0.3, 0.4]], atol=1e-15)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_update_step_divergence():
    with pytest.raises(DivergenceError, match="node"):
        update_step(np.zeros((3, 2)), [[1.0, 1.0]], ElasticNetParams(), 1e-160, 1.0)


def test_solve_square_and_determinism():
    r1 = solve(SQUARE, seed=3)
    assert r1.tour.length == pytest.approx(4.0, abs=1e-12)
    assert sorted(r1.tour.order) == [0, 1, 2, 3]
    r2 = solve(SQUARE, seed=3)
    assert [s.total for s in r1.trace] == [s.total for s in r2.trace]
    np.testing.assert_allclose(r1.weights.sum(axis=1), 1.0, atol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_energy_non_increasing_within_stage(seed):
    cities = np.random.default_rng(seed).random((12, 2))
    res = solve(cities, seed=seed, record_iters=True)
    for stage in res.trace:
        e = np.asarray(stage.iter_energies)
        assert np.all(np.diff(e) <= 1e-9 * np.maximum(1.0, np.abs(e[1:])))


def test_translation_equivariance():
    rng = np.random.default_rng(4)
    cities = rng.random((8, 2))
    nodes = rng.random((20, 2))
    shift = np.array([3.5, -7.25])
    p = ElasticNetParams()
    assert prior_energy(nodes + shift, p.alpha) == pytest.approx(prior_energy(nodes, p.alpha), abs=1e-9)
    assert data_energy(nodes + shift, cities + shift, p.beta, 0.1) == pytest.approx(
        data_energy(nodes, cities, p.beta, 0.1), abs=1e-9
    )
    a = solve(cities, seed=1)
    b = solve(cities + shift, seed=1)
    np.testing.assert_allclose(b.nodes - shift, a.nodes, atol=1e-6)
    np.testing.assert_array_equal(a.tour.order, b.tour.order)


def test_extract_tour_identity_and_reverse():
    nodes = polygon(12)
    cities = nodes[[0, 2, 3, 5, 8, 10]]
    t = extract_tour(nodes, cities)
    np.testing.assert_array_equal(t.order, np.arange(6))
    rev = extract_tour(nodes[::-1], cities)
    np.testing.assert_array_equal(rev.order, np.arange(6)[::-1])
    assert rev.length == pytest.approx(t.length, rel=1e-14)


def test_extract_tour_same_node_ordered_along_ring():
    nodes = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    cities = np.array([[1.1, 0.1], [0.9, -0.1], [0.0, 1.0]])
    t = extract_tour(nodes, cities)
    # both near node 1 whose ring direction is +y
    np.testing.assert_array_equal(t.order, [1, 0, 2])


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 8), st.integers(1, 20))
def test_extract_tour_valid_and_bounded(seed, n, m):
    rng = np.random.default_rng(seed)
    cities = rng.random((n, 2))
    t = extract_tour(rng.random((m, 2)), cities)
    assert sorted(t.order) == list(range(n))
    assert t.length == pytest.approx(tour_length(cities, t.order))
    if n >= 3:
        assert t.length >= brute_force_tour(cities).length - 1e-12


def test_baselines():
    tri = np.array([[0.0, 0.0], [3.0, 0.0], [0.0, 4.0]])
    nn, opt2 = baseline_tours(tri)
    assert nn.length == pytest.approx(12.0) and opt2.length == pytest.approx(12.0)
    rng = np.random.default_rng(9)
    for _ in range(20):
        c = rng.random((rng.integers(3, 9), 2))
        nn, opt2 = baseline_tours(c)
        assert opt2.length <= nn.length + 1e-12
        assert opt2.length >= brute_force_tour(c).length - 1e-12
        assert sorted(opt2.order) == list(range(len(c)))


def test_schedule_validation():
    with pytest.raises(ValueError):
        AnnealSchedule(k_decay=1.0)
    with pytest.raises(ValueError):
        AnnealSchedule(k_start=0.01, k_min=0.1)
    with pytest.raises(ValueError):
        ElasticNetParams(node_ratio=0.5)
