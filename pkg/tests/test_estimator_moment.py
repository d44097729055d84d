from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rwre_mle.env_model import BetaEnv, Environment, TwoPointKnown, sample_env
from rwre_mle.errors import EmptyHistory, NonInvertible
from rwre_mle.estimator_moment import (HistoryStats, forward_moments_beta,
                                       forward_moments_two_point_free,
                                       forward_moments_two_point_known, history_stats,
                                       invert_beta, invert_beta_moments,
                                       invert_two_point_known, invert_two_point_known_moments,
                                       v_hat)
from rwre_mle.rwre_sim import HistoryLog, run_to_hit


def brute_force(positions):
    """Recompute H(t, X_t) from scratch at every t."""
    out = {}
    for t in range(len(positions) - 1):
        x = positions[t]
        prior = [positions[s + 1] - positions[s] for s in range(t) if positions[s] == x]
        h = (prior.count(-1), prior.count(1))
        left, right = out.get(h, (0, 0))
        move = positions[t + 1] - x
        out[h] = (left + (move < 0), right + (move > 0))
    return out


def test_three_step_path():
    log = HistoryLog(np.array([0, 1, 0]), np.array([1, -1, 1]))
    assert history_stats(log).counts == {(0, 0): (1, 1), (0, 1): (0, 1)}


def test_deterministic_right_walk():
    _, log = run_to_hit(Environment.constant(1.0, -3, 5), 5, np.random.default_rng(0))
    assert history_stats(log).counts == {(0, 0): (0, 5)}


@pytest.mark.parametrize("seed", range(50))
def test_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    fam = TwoPointKnown(0.4, 0.7, 0.3) if seed % 2 else BetaEnv(5.0, 1.0)
    n = int(rng.integers(1, 15))
    env = sample_env(fam, (-200, n), rng)
    counts, log = run_to_hit(env, n, rng)
    positions = log.positions.tolist() + [n]
    stats = history_stats(log)
    assert stats.counts == brute_force(positions)
    assert stats.total == counts.t_n


def test_v_hat():
    stats = HistoryStats({(0, 0): (3, 7)})
    assert v_hat(stats, (0, 0), 1) == (Fraction(7, 10), 10)
    assert v_hat(stats, (0, 0), 1)[0] + v_hat(stats, (0, 0), -1)[0] == 1
    with pytest.raises(EmptyHistory):
        v_hat(stats, (1, 0), 1)


def test_two_point_inversion_examples():
    assert invert_two_point_known_moments(0.61, 0.4, 0.7)[0] == pytest.approx(0.3, abs=1e-12)
    assert invert_two_point_known_moments(0.7, 0.4, 0.7) == (0.0, False)
    assert invert_two_point_known_moments(0.75, 0.4, 0.7) == (0.0, True)
    assert invert_two_point_known_moments(0.35, 0.4, 0.7) == (1.0, True)


def test_beta_inversion_exact():
    a, b = invert_beta_moments(Fraction(1, 6), Fraction(2, 7))
    assert abs(a - 5) < 1e-12 and abs(b - 1) < 1e-12


def test_beta_inversion_degenerate():
    with pytest.raises(NonInvertible):
        invert_beta_moments(Fraction(1, 3), Fraction(1, 3))


@given(p=st.floats(0, 1))
def test_two_point_round_trip(p):
    v = forward_moments_two_point_known(p, 0.4, 0.7)
    assert abs(invert_two_point_known_moments(v, 0.4, 0.7)[0] - p) < 1e-12


@given(alpha=st.floats(0.1, 50), beta=st.floats(0.1, 50))
def test_beta_round_trip(alpha, beta):
    u, v = forward_moments_beta(alpha, beta)
    a, b = invert_beta_moments(u, v)
    assert abs(a - alpha) < 1e-12 * max(1, alpha) * 1e2
    assert abs(b - beta) < 1e-12 * max(1, beta) * 1e2


def test_beta_round_trip_table_truth():
    u, v = forward_moments_beta(5.0, 1.0)
    a, b = invert_beta_moments(u, v)
    assert abs(a - 5) < 1e-12 and abs(b - 1) < 1e-12


def test_forward_two_point_free():
    m1, m2, m3 = forward_moments_two_point_free(0.3, 0.4, 0.7)
    assert m1 == pytest.approx(0.61)
    assert m2 == pytest.approx(0.391 / 0.61)
    assert m3 == pytest.approx((0.3 * 0.064 + 0.7 * 0.343) / 0.391)
    assert abs(m2 - 0.6410) < 1e-4 and abs(m3 - 0.6631) < 1e-4
    assert forward_moments_two_point_free(1.0, 0.4, 0.7) == pytest.approx((0.4, 0.4, 0.4))


def test_simulated_v_hat(ex1):
    rng = np.random.default_rng(3)
    env = sample_env(ex1, (-10_000, 10_000), rng)
    _, log = run_to_hit(env, 10_000, rng)
    v, m = v_hat(history_stats(log), (0, 0), 1)
    assert abs(float(v) - 0.61) < 0.02
    res = invert_two_point_known(history_stats(log), 0.4, 0.7)
    assert 0.0 <= res.theta_tilde[0] <= 1.0


def test_invert_beta_result_satisfies_forward_map(ex3):
    rng = np.random.default_rng(4)
    env = sample_env(ex3, (-10_000, 5000), rng)
    _, log = run_to_hit(env, 5000, rng)
    res = invert_beta(history_stats(log))
    u, v = forward_moments_beta(*res.theta_tilde)
    assert abs(u - res.v_hats_used[0][2]) < 1e-12 and abs(v - res.v_hats_used[1][2]) < 1e-12
