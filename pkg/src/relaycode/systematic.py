"""Closed-form analysis of the relay that forwards uncoded packets in stage one."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .markov import (
    ChannelParams,
    NetworkState,
    _raise_never_completes,
    completion_times,
    enumerate_states,
)

# Exact integer binomials are used up to this M; beyond it, log-gamma.
_EXACT_BINOMIAL_MAX = 60


@dataclass(frozen=True)
class UncodedGain:
    """Expected extra uncoded packets at the receiver from a systematic relay."""

    expected_gain: float
    fraction: float


def outcome_probabilities(params: ChannelParams):
    """Per-packet stage-one outcome probabilities.

    Returns (receiver only, relay only, both, neither). "Both" includes the
    relay forwarding a packet the receiver missed directly.
    """
    p1, p2, p3 = params.p1, params.p2, params.p3
    receiver_only = (1.0 - p1) * p2
    relay_only = (1.0 - p2) * p1 * p3
    both = (1.0 - p2) * (1.0 - p1 * p3)
    neither = p1 * p2
    return receiver_only, relay_only, both, neither


def _binom(n: int, r: int, exact: bool) -> float:
    if r < 0 or r > n:
        return 0.0
    if exact:
        return float(math.comb(n, r))
    return math.exp(math.lgamma(n + 1) - math.lgamma(r + 1) - math.lgamma(n - r + 1))


def _power(base: float, exponent: int) -> float:
    # 0**0 is 1, matching an empty product.
    return base**exponent if exponent else 1.0


def first_stage_distribution(params: ChannelParams) -> dict:
    """Probability of each (i, j, k) after the M uncoded broadcasts.

    Multinomial over the four per-packet outcomes; states with zero
    probability are kept so the support matches ``enumerate_states``.
    """
    m = params.m
    a, b, c, d = outcome_probabilities(params)
    exact = m <= _EXACT_BINOMIAL_MAX
    dist = {}
    for s in enumerate_states(m):
        n_a, n_b, n_c = s.i - s.k, s.j - s.k, s.k
        n_d = m - n_a - n_b - n_c
        coef = _binom(m, n_a, exact) * _binom(m - n_a, n_b, exact) * _binom(m - n_a - n_b, n_c, exact)
        dist[s] = coef * _power(a, n_a) * _power(b, n_b) * _power(c, n_c) * _power(d, n_d)
    return dist


def first_stage_distribution_product(params: ChannelParams) -> dict:
    """Same distribution, written as the three-binomial product Qa * Qb * Qc * (P1 P2)^rest."""
    m = params.m
    p1, p2, p3 = params.p1, params.p2, params.p3
    exact = m <= _EXACT_BINOMIAL_MAX
    dist = {}
    for i, j, k in enumerate_states(m):
        qa = _binom(m, i - k, exact) * _power((1 - p1) * p2, i - k)
        qb = _binom(m - i + k, j - k, exact) * _power((1 - p2) * p1 * p3, j - k)
        qc = _binom(m - i - j + 2 * k, k, exact) * _power((1 - p2) * (1 - p1 * p3), k)
        dist[NetworkState(i, j, k)] = qa * qb * qc * _power(p1 * p2, m - i - j + k)
    return dist


def t_sys(params: ChannelParams) -> float:
    """Mean completion time with a systematic relay.

    Stage one always lasts M slots (the receiver gains at most one dof per
    slot), after which the chain continues from the first-stage state.
    """
    times = completion_times(params)
    dist = first_stage_distribution(params)
    terms = []
    for s, q in dist.items():
        if q <= 0.0:
            continue
        if math.isinf(times[s]):
            _raise_never_completes(times, s)
        terms.append(q * times[s])
    return params.m + math.fsum(terms)


def expected_uncoded_gain(params: ChannelParams) -> UncodedGain:
    fraction = params.p1 * (1.0 - params.p2) * (1.0 - params.p3)
    return UncodedGain(expected_gain=params.m * fraction, fraction=fraction)
