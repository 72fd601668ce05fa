import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import chain_times_linear_solve, first_stage_brute_force
from relaycode.errors import NeverCompletes
from relaycode.markov import ChannelParams, NetworkState, enumerate_states, solve_completion_times, t_non_sys, transition_table
from relaycode.systematic import (
    expected_uncoded_gain,
    first_stage_distribution,
    first_stage_distribution_product,
    outcome_probabilities,
    t_sys,
)

probability = st.floats(0.0, 1.0, allow_nan=False)


@given(probability, probability, probability)
def test_outcome_probabilities_sum_to_one(p1, p2, p3):
    assert math.fsum(outcome_probabilities(ChannelParams(p1, p2, p3))) == pytest.approx(1.0, abs=1e-12)


def test_q_at_origin():
    params = ChannelParams(0.3, 0.6, 0.2, m=5)
    assert first_stage_distribution(params)[NetworkState(0, 0, 0)] == pytest.approx((0.3 * 0.6) ** 5)


def test_q_concentrates_on_completion_without_direct_losses():
    dist = first_stage_distribution(ChannelParams(0.0, 0.4, 0.7, m=6))
    assert math.fsum(q for s, q in dist.items() if s.i == 6) == pytest.approx(1.0, abs=1e-12)


def test_q_m1_example():
    dist = first_stage_distribution(ChannelParams(0.2, 0.2, 0.2, m=1))
    assert dist[NetworkState(1, 0, 0)] == pytest.approx(0.16)
    assert dist[NetworkState(0, 1, 0)] == pytest.approx(0.032)
    assert dist[NetworkState(1, 1, 1)] == pytest.approx(0.768)
    assert dist[NetworkState(0, 0, 0)] == pytest.approx(0.04)


@pytest.mark.parametrize("m", [1, 2, 3])
@pytest.mark.parametrize("p", [(0.2, 0.2, 0.2), (0.6, 0.1, 0.7), (1.0, 0.5, 0.0), (0.3, 1.0, 0.4)])
def test_q_matches_enumeration(m, p):
    params = ChannelParams(*p, m=m)
    brute = first_stage_brute_force(*p, m)
    multinomial = first_stage_distribution(params)
    product = first_stage_distribution_product(params)
    for s in enumerate_states(m):
        assert multinomial[s] == pytest.approx(brute.get(tuple(s), 0.0), abs=1e-12)
        assert product[s] == pytest.approx(multinomial[s], abs=1e-12)
    assert set(brute) <= set(map(tuple, enumerate_states(m)))


def test_two_forms_agree_large_m():
    rng = np.random.default_rng(4)
    for m in (16, 40, 61, 70):
        params = ChannelParams(*map(float, rng.random(3)), m=m)
        a = first_stage_distribution(params)
        b = first_stage_distribution_product(params)
        assert max(abs(a[s] - b[s]) for s in a) <= 1e-12
        assert math.fsum(a.values()) == pytest.approx(1.0, abs=1e-12)


def test_t_sys_examples():
    for p2, p3 in [(0.2, 0.2), (0.0, 1.0), (1.0, 0.0)]:
        assert t_sys(ChannelParams(0.0, p2, p3, m=8)) == pytest.approx(8.0, abs=1e-9)
    assert t_sys(ChannelParams(0.2, 1.0, 0.2, m=8)) == pytest.approx(10.0, abs=1e-9)
    # 1 + 0.032 * 25/24 + 0.04 * 155/144
    expected = 1 + 0.032 * 25 / 24 + 0.04 * 155 / 144
    assert t_sys(ChannelParams(0.2, 0.2, 0.2, m=1)) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("m", [2, 3])
@pytest.mark.parametrize("p", [(0.2, 0.2, 0.2), (0.8, 0.3, 0.6)])
def test_t_sys_against_independent_routes(m, p):
    params = ChannelParams(*p, m=m)
    states = enumerate_states(m)
    times = chain_times_linear_solve(states, transition_table(params), m)
    brute = first_stage_brute_force(*p, m)
    oracle = m + sum(q * times[NetworkState(*s)] for s, q in brute.items())
    assert t_sys(params) == pytest.approx(oracle, rel=1e-10)


def test_t_sys_never_completes():
    with pytest.raises(NeverCompletes):
        t_sys(ChannelParams(1.0, 1.0, 0.5, m=4))


@pytest.mark.parametrize(
    "p, fraction",
    [((1.0, 0.2, 0.2), 0.64), ((0.2, 0.0, 0.2), 0.16), ((0.0, 0.3, 0.3), 0.0)],
)
def test_uncoded_gain_examples(p, fraction):
    gain = expected_uncoded_gain(ChannelParams(*p, m=8))
    assert gain.fraction == pytest.approx(fraction, abs=1e-15)
    assert gain.expected_gain == pytest.approx(8 * fraction, abs=1e-14)


def test_uncoded_gain_monotone():
    grid = [n / 20 for n in range(21)]
    for a, b in itertools.product(grid, repeat=2):
        f_p1 = [expected_uncoded_gain(ChannelParams(x, a, b)).fraction for x in grid]
        f_p2 = [expected_uncoded_gain(ChannelParams(a, x, b)).fraction for x in grid]
        f_p3 = [expected_uncoded_gain(ChannelParams(a, b, x)).fraction for x in grid]
        assert all(y >= x for x, y in zip(f_p1, f_p1[1:]))
        assert all(y <= x for x, y in zip(f_p2, f_p2[1:]))
        assert all(y <= x for x, y in zip(f_p3, f_p3[1:]))
        assert all(0 <= f <= 1 for f in f_p1)


def test_stage_one_cannot_finish_early():
    # The receiver gains at most one dof per first-stage slot, so M is a floor.
    for p in [(0.2, 0.2, 0.2), (0.9, 0.1, 0.1), (0.5, 0.5, 0.5)]:
        params = ChannelParams(*p, m=6)
        assert t_sys(params) >= 6
        assert t_sys(params) >= t_non_sys(params) - 1e-12
