import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bayesosc.belief_search import (
    ContradictionError,
    MeasurementModel,
    SearchBudgetError,
    bayes_update,
    brute_force_policy,
    expected_posterior_entropy,
    greedy_entropy_policy,
    shannon_entropy,
    simulate_search,
    uniform_belief,
)

PERFECT = MeasurementModel(1.0, 0.0)


def test_bayes_update_perfect_hit():
    post = bayes_update(uniform_belief(3), 0, 1, PERFECT)
    np.testing.assert_allclose(post, [1, 0, 0], atol=1e-15)


def test_bayes_update_perfect_miss():
    post = bayes_update(uniform_belief(3), 0, 0, PERFECT)
    np.testing.assert_allclose(post, [0, 0.5, 0.5], atol=1e-15)


def test_bayes_update_two_cell_enumeration():
    # joint: P(x=0, y=1) = 0.5*0.8, P(x=1, y=1) = 0.5*0.2
    post = bayes_update([0.5, 0.5], 0, 1, MeasurementModel(0.8, 0.2))
    np.testing.assert_allclose(post, [0.8, 0.2], atol=1e-15)


def test_bayes_update_contradiction():
    with pytest.raises(ContradictionError):
        bayes_update([0.0, 1.0], 0, 1, PERFECT)


def test_bayes_update_rejects_bad_action():
    with pytest.raises(IndexError):
        bayes_update(uniform_belief(3), 3, 1, PERFECT)


def test_measurement_model_bounds():
    with pytest.raises(ValueError):
        MeasurementModel(1.2, 0.1)


@pytest.mark.parametrize(
    "belief, expected",
    [
        (uniform_belief(4), 2.0),
        ([0, 1, 0], 0.0),
        ([0.6, 0.3, 0.1], 1.29546184423832),
    ],
)
def test_shannon_entropy(belief, expected):
    assert shannon_entropy(belief) == pytest.approx(expected, abs=1e-10)


def test_expected_entropy_examples():
    assert expected_posterior_entropy([0.5, 0.5], 0, PERFECT) == 0.0
    assert expected_posterior_entropy(uniform_belief(3), 0, PERFECT) == pytest.approx(2 / 3, abs=1e-14)
    b = np.array([0.2, 0.5, 0.3])
    m = MeasurementModel(0.4, 0.4)
    for a in range(3):
        assert expected_posterior_entropy(b, a, m) == pytest.approx(shannon_entropy(b), abs=1e-14)


def test_greedy_examples():
    assert greedy_entropy_policy(uniform_belief(5), MeasurementModel(0.9, 0.1)) == 0
    # scores from enumeration: 0.32451, 0.41417, 0.82647
    assert greedy_entropy_policy([0.6, 0.3, 0.1], PERFECT) == 0
    assert greedy_entropy_policy([0.1, 0.9], PERFECT) == 0


def test_brute_force_examples():
    assert brute_force_policy([0.5, 0.5], PERFECT, 1)[1] == 0.0
    # value from an independent enumeration over all adaptive depth-2 plans
    action, value = brute_force_policy(uniform_belief(4), PERFECT, 2)
    assert value == pytest.approx(0.5, abs=1e-14)
    assert action == 0


def test_brute_force_budget():
    with pytest.raises(SearchBudgetError):
        brute_force_policy(uniform_belief(10), PERFECT, 6)


def _random_belief(rng, n):
    b = rng.dirichlet(np.ones(n))
    return b / b.sum()


beliefs = st.integers(1, 6).flatmap(
    lambda n: st.lists(st.floats(0.0, 1.0), min_size=n, max_size=n).filter(lambda v: sum(v) > 1e-3)
)
probs = st.floats(0.0, 1.0)


@settings(max_examples=200, deadline=None)
@given(beliefs, probs, probs, st.data())
def test_update_normalized(raw, pd, pf, data):
    b = np.array(raw) / np.sum(raw)
    b /= b.sum()
    m = MeasurementModel(pd, pf)
    a = data.draw(st.integers(0, b.size - 1))
    y = data.draw(st.integers(0, 1))
    try:
        post = bayes_update(b, a, y, m)
    except ContradictionError:
        return
    assert abs(post.sum() - 1) <= 1e-12
    assert np.all(post >= 0)


@settings(max_examples=200, deadline=None)
@given(beliefs, probs, probs, st.data())
def test_entropy_contraction(raw, pd, pf, data):
    b = np.array(raw) / np.sum(raw)
    b /= b.sum()
    a = data.draw(st.integers(0, b.size - 1))
    m = MeasurementModel(pd, pf)
    assert expected_posterior_entropy(b, a, m) <= shannon_entropy(b) + 1e-12


@settings(max_examples=100, deadline=None)
@given(beliefs, probs, st.data())
def test_uninformative_fixed_point(raw, p, data):
    b = np.array(raw) / np.sum(raw)
    b /= b.sum()
    a = data.draw(st.integers(0, b.size - 1))
    y = data.draw(st.integers(0, 1))
    m = MeasurementModel(p, p)
    if (p == 0 and y == 1) or (p == 1 and y == 0):
        return
    np.testing.assert_allclose(bayes_update(b, a, y, m), b, atol=1e-12)


def test_greedy_matches_horizon_one():
    rng = np.random.default_rng(3)
    for _ in range(100):
        n = rng.integers(1, 7)
        b = _random_belief(rng, n)
        m = MeasurementModel(rng.random(), rng.random())
        assert greedy_entropy_policy(b, m) == brute_force_policy(b, m, 1)[0]


def test_filter_matches_joint_enumeration_small():
    m = MeasurementModel(0.7, 0.2)
    prior = np.array([0.1, 0.2, 0.3, 0.4])
    for actions in itertools.product(range(4), repeat=2):
        for ys in itertools.product((0, 1), repeat=2):
            b = prior
            for a, y in zip(actions, ys):
                b = bayes_update(b, a, y, m)
            joint = prior.copy()
            for a, y in zip(actions, ys):
                for x in range(4):
                    p1 = m.p_detect if x == a else m.p_false
                    joint[x] *= p1 if y else 1 - p1
            np.testing.assert_allclose(b, joint / joint.sum(), atol=1e-12)


@pytest.mark.parametrize("seed", range(20))
@pytest.mark.parametrize("true_cell", range(5))
def test_simulate_perfect_detector_terminates(seed, true_cell):
    rec = simulate_search(5, true_cell, PERFECT, max_steps=50, seed=seed)
    assert len(rec) <= 4
    assert rec.beliefs[-1][true_cell] == 1.0
    assert rec.entropies[-1] == 0.0


def test_simulate_uninformative_stays_uniform():
    rec = simulate_search(3, 1, MeasurementModel(0.5, 0.5), max_steps=10, seed=4)
    assert len(rec) == 10
    for b in rec.beliefs:
        np.testing.assert_allclose(b, uniform_belief(3), atol=1e-15)


def test_simulate_deterministic():
    m = MeasurementModel(0.8, 0.15)
    r1 = simulate_search(6, 2, m, max_steps=30, seed=11)
    r2 = simulate_search(6, 2, m, max_steps=30, seed=11)
    assert r1 == r2
    assert all(e == shannon_entropy(b) for e, b in zip(r1.entropies, r1.beliefs))


def test_simulate_brute_force_policy_runs():
    rec = simulate_search(4, 3, MeasurementModel(0.9, 0.1), policy="brute_force", horizon=2, max_steps=20, seed=0)
    assert max(rec.beliefs[-1]) >= 0.99 or len(rec) == 20


def test_simulate_validation():
    with pytest.raises(ValueError):
        simulate_search(3, 5, PERFECT)
    with pytest.raises(ValueError):
        simulate_search(3, 0, PERFECT, policy="nope")
