"""Exact (i, j, k) Markov chain for the relay network with a coding relay.

``i`` counts degrees of freedom at the receiver, ``j`` at the relay and
``k`` those shared by both. One step is one slot in which the source
broadcasts a packet and the relay, with no processing lag, sends a
combination of everything it holds (including the packet just received).
Every generic combination is assumed innovative whenever it can be.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from enum import IntEnum
from typing import NamedTuple

from .errors import AbsorbingState, InvalidState, NeverCompletes


@dataclass(frozen=True)
class ChannelParams:
    """Erasure probabilities of the three links and the packet count M.

    p1: source -> receiver, p2: source -> relay, p3: relay -> receiver.
    """

    p1: float
    p2: float
    p3: float
    m: int = 8

    def __post_init__(self):
        for name in ("p1", "p2", "p3"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and 0.0 <= value <= 1.0):
                raise ValueError(f"{name} must be a probability in [0, 1], got {value!r}")
        if isinstance(self.m, bool) or not isinstance(self.m, int) or self.m < 1:
            raise ValueError(f"packet count m must be a positive integer, got {self.m!r}")


class NetworkState(NamedTuple):
    i: int
    j: int
    k: int


class StateDelta(NamedTuple):
    di: int
    dj: int
    dk: int


class LinkPattern(NamedTuple):
    """Which of the three links delivered in a slot."""

    sr: bool
    sd: bool
    rd: bool


# Index c-1 holds transmission pattern "Case c".
PATTERNS = (
    LinkPattern(True, False, True),
    LinkPattern(True, True, False),
    LinkPattern(True, True, True),
    LinkPattern(True, False, False),
    LinkPattern(False, True, False),
    LinkPattern(False, False, True),
    LinkPattern(False, True, True),
    LinkPattern(False, False, False),
)


class CaseFamily(IntEnum):
    UNION_FULL = 1  # i+j-k = M, k < min(i, j)
    RELAY_FULL = 2  # i+j-k = M, k = i < M, hence j = M
    ABSORBING = 3  # i = M
    RELAY_AHEAD = 4  # i+j-k < M, relay holds a dof the receiver lacks
    RELAY_CONTAINED = 5  # i+j-k < M, k = j: relay knowledge inside receiver's


def _d(*rows):
    return tuple(StateDelta(*row) for row in rows)


DELTAS = {
    CaseFamily.UNION_FULL: _d(
        (1, 1, 2), (1, 1, 2), (2, 1, 3), (0, 1, 1), (1, 0, 1), (1, 0, 1), (2, 0, 2), (0, 0, 0)
    ),
    CaseFamily.RELAY_FULL: _d(
        (1, 0, 1), (1, 0, 1), (2, 0, 2), (0, 0, 0), (1, 0, 1), (1, 0, 1), (2, 0, 2), (0, 0, 0)
    ),
    CaseFamily.RELAY_AHEAD: _d(
        (1, 1, 1), (1, 1, 1), (2, 1, 2), (0, 1, 0), (1, 0, 0), (1, 0, 1), (2, 0, 1), (0, 0, 0)
    ),
    CaseFamily.RELAY_CONTAINED: _d(
        (1, 1, 1), (1, 1, 1), (1, 1, 1), (0, 1, 0), (1, 0, 0), (0, 0, 0), (1, 0, 0), (0, 0, 0)
    ),
}


def is_valid(s: NetworkState, m: int) -> bool:
    i, j, k = s
    return 0 <= i <= m and 0 <= j <= m and 0 <= k <= min(i, j) and i + j - k <= m


def enumerate_states(m: int) -> list[NetworkState]:
    """All valid states, ordered lexicographically."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return [
        NetworkState(i, j, k)
        for i in range(m + 1)
        for j in range(m + 1)
        for k in range(min(i, j) + 1)
        if i + j - k <= m
    ]


def pattern_probability(pattern: LinkPattern, params: ChannelParams) -> float:
    sr = 1.0 - params.p2 if pattern.sr else params.p2
    sd = 1.0 - params.p1 if pattern.sd else params.p1
    rd = 1.0 - params.p3 if pattern.rd else params.p3
    return sr * sd * rd


def classify_state(s: NetworkState, m: int) -> CaseFamily:
    if not is_valid(s, m):
        raise InvalidState(f"{tuple(s)} is not a valid state for M={m}")
    i, j, k = s
    if i == m:
        return CaseFamily.ABSORBING
    if i + j - k == m:
        if k < min(i, j):
            return CaseFamily.UNION_FULL
        return CaseFamily.RELAY_FULL  # k = i < M forces j = M
    if k < min(i, j) or k == i < j:
        return CaseFamily.RELAY_AHEAD
    return CaseFamily.RELAY_CONTAINED


def deltas_for(family: CaseFamily, pattern: LinkPattern) -> StateDelta:
    if family == CaseFamily.ABSORBING:
        raise AbsorbingState("absorbing states have no transition deltas")
    return DELTAS[CaseFamily(family)][PATTERNS.index(pattern)]


def apply_delta(s: NetworkState, d: StateDelta, m: int) -> NetworkState:
    i = min(s.i + d.di, m)
    j = min(s.j + d.dj, m)
    k = min(s.k + d.dk, i, j)
    return NetworkState(i, j, k)


def transition_table(params: ChannelParams) -> dict:
    """Successor distribution of every valid state.

    Returns ``{state: [(successor, probability), ...]}``; only successors
    with positive probability are listed and absorbing states carry a
    single self-loop.
    """
    m = params.m
    probs = [pattern_probability(p, params) for p in PATTERNS]
    table = {}
    for s in enumerate_states(m):
        family = classify_state(s, m)
        if family == CaseFamily.ABSORBING:
            table[s] = [(s, 1.0)]
            continue
        grouped = defaultdict(list)
        for prob, delta in zip(probs, DELTAS[family]):
            if prob > 0.0:
                grouped[apply_delta(s, delta, m)].append(prob)
        table[s] = [(succ, math.fsum(ps)) for succ, ps in grouped.items()]
    return table


class CompletionTimeTable(dict):
    """Expected remaining slots until absorption, keyed by NetworkState.

    States that cannot reach absorption map to ``math.inf``.
    """

    def __init__(self, params: ChannelParams, values):
        super().__init__(values)
        self.params = params

    def stuck_state(self, start: NetworkState):
        """First reachable state from ``start`` that can never be left, if any."""
        table = transition_table(self.params)
        seen = {start}
        frontier = [start]
        while frontier:
            s = frontier.pop()
            succs = table[s]
            if len(succs) == 1 and succs[0][0] == s and s.i < self.params.m:
                return s
            for succ, _ in succs:
                if succ not in seen:
                    seen.add(succ)
                    frontier.append(succ)
        return None


def _raise_never_completes(times: CompletionTimeTable, start: NetworkState):
    m = times.params.m
    stuck = times.stuck_state(start) or start
    family = classify_state(stuck, m)
    raise NeverCompletes(
        f"receiver never completes from {tuple(start)}: state {tuple(stuck)} "
        f"({family.name.lower()}) is trapped with M={m}",
        state=stuck,
        family=family,
    )


def completion_times(params: ChannelParams) -> CompletionTimeTable:
    """Solve the recursion for every state, leaving ``inf`` where it diverges.

    Every non-self successor has a strictly larger i+j+k, so a single pass
    in decreasing i+j+k order closes each self-loop exactly.
    """
    table = transition_table(params)
    m = params.m
    order = sorted(table, key=lambda s: (s.i + s.j + s.k, s), reverse=True)
    times = {}
    for s in order:
        if s.i == m:
            times[s] = 0.0
            continue
        exit_prob = []
        weighted = []
        for succ, prob in table[s]:
            if succ == s:
                continue
            exit_prob.append(prob)
            weighted.append(prob * times[succ])
        leave = math.fsum(exit_prob)
        if leave <= 0.0:
            times[s] = math.inf
        else:
            times[s] = (1.0 + math.fsum(weighted)) / leave
    return CompletionTimeTable(params, times)


def solve_completion_times(params: ChannelParams) -> CompletionTimeTable:
    """Completion-time table; raises NeverCompletes if (0,0,0) cannot finish."""
    times = completion_times(params)
    start = NetworkState(0, 0, 0)
    if math.isinf(times[start]):
        _raise_never_completes(times, start)
    return times


def t_non_sys(params: ChannelParams) -> float:
    """Mean completion time with a relay that always sends random combinations."""
    return solve_completion_times(params)[NetworkState(0, 0, 0)]
