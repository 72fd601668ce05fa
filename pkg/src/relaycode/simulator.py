"""Slotted Monte-Carlo simulation of the source / relay / receiver protocol.

Link outcomes come from a counter-based hash of (master seed, trial, slot,
link), so a trial's realization does not depend on which other trials run,
in what order, or under which relay policy. Two field modes exist:

* infinite: generic coding, tracked through subspace dimensions only;
* finite: real coding vectors over GF(2^m) and online Gaussian elimination.
"""

from __future__ import annotations

import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .coding import DecoderState, encode, random_coefficients, uncoded_packet
from .errors import NeverCompletes
from .field import FieldSpec
from .markov import ChannelParams

DEFAULT_MAX_SLOTS = 10**7

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_COEFFICIENT_STREAM = np.uint64(0xC0EFF1C1E47)
# Column order of the per-slot uniforms.
_SR, _SD, _RD = 0, 1, 2


class RelayPolicy(str, Enum):
    SYSTEMATIC = "systematic"
    NON_SYSTEMATIC = "non-systematic"


@dataclass(frozen=True)
class SimConfig:
    params: ChannelParams
    relay_policy: RelayPolicy = RelayPolicy.NON_SYSTEMATIC
    field: FieldSpec | None = None  # None selects the infinite-field mode
    relay_lag: bool = False
    trials: int = 1000
    master_seed: int = 0
    payload_length: int = 1
    max_slots: int = DEFAULT_MAX_SLOTS

    def __post_init__(self):
        object.__setattr__(self, "relay_policy", RelayPolicy(self.relay_policy))
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.payload_length < 1:
            raise ValueError("payload_length must be >= 1")
        if self.max_slots < 1:
            raise ValueError("max_slots must be >= 1")

    @property
    def field_label(self) -> str:
        return "inf" if self.field is None else f"2^{self.field.m}"


@dataclass(frozen=True)
class TrialResult:
    completion_slots: int
    u_count: int
    relay_queue_final: int
    trace: tuple | None = None  # (i, j, k) after every slot, when recorded


@dataclass(frozen=True)
class BatchResult:
    mean_completion: float
    stderr_completion: float
    mean_u: float
    stderr_u: float
    trials: int


@dataclass(frozen=True)
class UncodedGap:
    """Paired estimate of E[U_sys - U_non_sys] from matched batches."""

    gap: float
    stderr: float
    systematic: BatchResult
    non_systematic: BatchResult


def _splitmix64(x):
    x = x + _GOLDEN
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def trial_keys(master_seed: int, trial_indices) -> np.ndarray:
    seed = np.array([master_seed & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
    idx = np.asarray(trial_indices, dtype=np.uint64)
    return _splitmix64(_splitmix64(seed) ^ idx)


def link_uniforms(keys: np.ndarray, slots) -> np.ndarray:
    """Uniforms in [0, 1) with trailing axis (source->relay, source->receiver, relay->receiver).

    ``keys`` and ``slots`` broadcast against each other.
    """
    slots = np.asarray(slots, dtype=np.uint64)
    counters = slots[..., None] * np.uint64(4) + np.arange(3, dtype=np.uint64)
    h = _splitmix64(_splitmix64(keys[..., None] + counters * _GOLDEN))
    return (h >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def _check_reachable(params: ChannelParams):
    if params.p1 == 1.0 and (params.p2 == 1.0 or params.p3 == 1.0):
        raise NeverCompletes(
            "receiver is unreachable: direct link always erased and relay path cut "
            f"(p1={params.p1}, p2={params.p2}, p3={params.p3})"
        )


def _infinite_mode(config: SimConfig, trial_indices, record: bool = False):
    """Vectorized dimension bookkeeping for a set of trials.

    Per trial the state is (i, j, u) with u = dim of the union of receiver
    and relay knowledge, so the shared count is k = i + j - u. A generic
    combination drawn from a space S is innovative to a receiver space D
    exactly when S is not contained in D, i.e. dim(D & S) < dim S.
    """
    params = config.params
    m = params.m
    systematic = config.relay_policy is RelayPolicy.SYSTEMATIC
    lag = config.relay_lag
    s_sr, s_sd, s_rd = 1.0 - params.p2, 1.0 - params.p1, 1.0 - params.p3

    keys = trial_keys(config.master_seed, trial_indices)
    n = keys.size
    i = np.zeros(n, dtype=np.int64)
    j = np.zeros(n, dtype=np.int64)
    u = np.zeros(n, dtype=np.int64)
    uncoded = np.zeros(n, dtype=np.int64)
    got_prev = np.zeros(n, dtype=bool)
    direct_prev = np.zeros(n, dtype=bool)
    completion = np.zeros(n, dtype=np.int64)
    active = np.arange(n)
    trace = []
    t = 0
    while active.size:
        t += 1
        if t > config.max_slots:
            raise NeverCompletes(f"no completion within {config.max_slots} slots")
        draws = link_uniforms(keys[active], t)
        sr = draws[:, _SR] < s_sr
        sd = draws[:, _SD] < s_sd
        rd = draws[:, _RD] < s_rd
        ia, ja, ua, uc = i[active], j[active], u[active], uncoded[active]

        # Source: fresh p_t in stage one, a generic combination afterwards.
        # Either way it lies outside the union unless the union is everything.
        ni = ia + sd
        nj = ja + (sr & (ja < m))
        nu = ua + ((sd | sr) & (ua < m))
        if t <= m:
            uc = uc + sd

        if systematic and not lag and t <= m:
            fwd = sr & rd & ~sd
            ni = ni + fwd
            uc = uc + fwd
        elif systematic and lag and t <= m + 1:
            if t >= 2:
                fwd = got_prev[active] & rd & ~direct_prev[active]
                ni = ni + fwd
                uc = uc + fwd
        elif lag:
            # Relay codes over what it held before this slot.
            span = ua + (sd & (ua < m))
            ni = ni + (rd & (ja > 0) & (ni < span))
        else:
            ni = ni + (rd & (nj > 0) & (ni < nu))

        if lag:
            got_prev[active] = sr & (t <= m)
            direct_prev[active] = sd
        i[active], j[active], u[active], uncoded[active] = ni, nj, nu, uc
        if record:
            trace.append((int(ni[0]), int(nj[0]), int(ni[0] + nj[0] - nu[0])))
        done = ni >= m
        completion[active[done]] = t
        active = active[~done]
    return completion, uncoded, j, trace


_BLOCK = 64


def _finite_trial(
    config: SimConfig, trial_index: int, record: bool = False, first_block=None
) -> TrialResult:
    params = config.params
    field = config.field
    m = params.m
    systematic = config.relay_policy is RelayPolicy.SYSTEMATIC
    lag = config.relay_lag
    s_sr, s_sd, s_rd = 1.0 - params.p2, 1.0 - params.p1, 1.0 - params.p3

    key = trial_keys(config.master_seed, [trial_index])
    rng = random.Random(int(_splitmix64(key ^ _COEFFICIENT_STREAM)[0]))
    length = config.payload_length
    originals = [[rng.getrandbits(field.m) for _ in range(length)] for _ in range(m)]
    receiver = DecoderState(m, length, field)
    relay = DecoderState(m, length, field)

    block = _BLOCK
    draws = first_block
    pending = None  # uncoded packet the lagged systematic relay will forward
    trace = []
    t = 0
    while True:
        t += 1
        if t > config.max_slots:
            raise NeverCompletes(f"no completion within {config.max_slots} slots")
        if (t - 1) % block == 0 and not (t == 1 and draws is not None):
            draws = link_uniforms(key[:, None], np.arange(t, t + block))[0].tolist()
        u_sr, u_sd, u_rd = draws[(t - 1) % block]
        sr, sd, rd = u_sr < s_sr, u_sd < s_sd, u_rd < s_rd

        if t <= m:
            src = uncoded_packet(originals, t - 1)
        else:
            src = encode(originals, random_coefficients(m, rng, field), field)

        relay_pkt = None
        if lag:
            if systematic and t <= m + 1:
                relay_pkt = pending
            else:
                relay_pkt = relay.recombine(rng)
            pending = src if (sr and t <= m) else None
        if sr:
            relay.receive(src)
        if not lag:
            if systematic and t <= m:
                relay_pkt = src if sr else None
            else:
                relay_pkt = relay.recombine(rng)

        if sd:
            receiver.receive(src)
        if rd and relay_pkt is not None:
            receiver.receive(relay_pkt)

        if record:
            union = DecoderState(m, length, field)
            for pkt in receiver.basis() + relay.basis():
                union.receive(pkt)
            trace.append((receiver.rank, relay.rank, receiver.rank + relay.rank - union.rank))
        if receiver.is_complete:
            break

    decoded = receiver.decode()
    if decoded != [tuple(p) for p in originals]:
        raise RuntimeError(f"trial {trial_index}: decoded payloads differ from the originals")
    return TrialResult(
        completion_slots=t,
        u_count=len(receiver.uncoded_indices),
        relay_queue_final=relay.rank,
        trace=tuple(trace) if record else None,
    )


def run_trial(config: SimConfig, trial_index: int, record: bool = False) -> TrialResult:
    """Simulate one transmission of M packets; ``record`` keeps the per-slot (i, j, k)."""
    _check_reachable(config.params)
    if config.field is not None:
        return _finite_trial(config, trial_index, record)
    completion, uncoded, relay, trace = _infinite_mode(config, [trial_index], record)
    return TrialResult(
        completion_slots=int(completion[0]),
        u_count=int(uncoded[0]),
        relay_queue_final=int(relay[0]),
        trace=tuple(trace) if record else None,
    )


def _finite_chunk(config: SimConfig, indices, prefetch: int = 1024):
    results = []
    slots = np.arange(1, _BLOCK + 1)
    for start in range(0, len(indices), prefetch):
        part = indices[start : start + prefetch]
        blocks = link_uniforms(trial_keys(config.master_seed, part)[:, None], slots).tolist()
        results.extend(_finite_trial(config, idx, first_block=b) for idx, b in zip(part, blocks))
    return [r.completion_slots for r in results], [r.u_count for r in results]


def simulate(config: SimConfig, workers: int = 1):
    """Per-trial completion times and uncoded counts, in trial-index order."""
    _check_reachable(config.params)
    indices = np.arange(config.trials)
    if config.field is None:
        completion, uncoded, _, _ = _infinite_mode(config, indices)
        return completion, uncoded
    if workers <= 1 or config.trials < 2 * workers:
        comp, unc = _finite_chunk(config, indices.tolist())
    else:
        chunks = [c.tolist() for c in np.array_split(indices, workers * 4)]
        comp, unc = [], []
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for c, u in pool.map(_finite_chunk, [config] * len(chunks), chunks):
                comp.extend(c)
                unc.extend(u)
    return np.asarray(comp, dtype=np.int64), np.asarray(unc, dtype=np.int64)


def _mean_stderr(values) -> tuple:
    values = [float(v) for v in values]
    n = len(values)
    mean = math.fsum(values) / n
    if n < 2:
        return mean, math.nan
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var / n)


def run_batch(config: SimConfig, workers: int = 1) -> BatchResult:
    completion, uncoded = simulate(config, workers)
    mean_t, se_t = _mean_stderr(completion)
    mean_u, se_u = _mean_stderr(uncoded)
    return BatchResult(mean_t, se_t, mean_u, se_u, config.trials)


def measure_uncoded_gap(
    systematic_config: SimConfig, non_systematic_config: SimConfig, workers: int = 1
) -> UncodedGap:
    """Estimate E[U_sys - U_non_sys] from two configs that differ only in relay policy.

    With equal seeds both batches see identical link outcomes trial by trial,
    and the standard error is computed from the paired differences.
    """
    if systematic_config.relay_policy is not RelayPolicy.SYSTEMATIC:
        raise ValueError("first config must use the systematic relay")
    if non_systematic_config.relay_policy is not RelayPolicy.NON_SYSTEMATIC:
        raise ValueError("second config must use the non-systematic relay")
    from dataclasses import replace

    if replace(systematic_config, relay_policy=RelayPolicy.NON_SYSTEMATIC) != non_systematic_config:
        raise ValueError("configs must be identical apart from the relay policy")
    comp_s, unc_s = simulate(systematic_config, workers)
    comp_n, unc_n = simulate(non_systematic_config, workers)
    gap, stderr = _mean_stderr(unc_s - unc_n)
    sys_batch = BatchResult(*_mean_stderr(comp_s), *_mean_stderr(unc_s), systematic_config.trials)
    non_batch = BatchResult(
        *_mean_stderr(comp_n), *_mean_stderr(unc_n), non_systematic_config.trials
    )
    return UncodedGap(gap, stderr, sys_batch, non_batch)
