"""Independent reference computations used by several test modules."""

import itertools

import numpy as np


def generic_step(state, sr, sd, rd, m):
    """One slot of generic coding, from subspace dimensions alone.

    u = dim(D + R). The source packet lies outside D + R unless u = M; the
    relay's zero-lag combination is drawn from R' and is innovative for the
    receiver iff R' is not inside D', i.e. dim(D' & R') < dim R'.
    """
    i, j, k = state
    u = i + j - k
    i2 = min(i + sd, m)
    j2 = j + (1 if sr and j < m else 0)
    u2 = u + (1 if (sd or sr) and u < m else 0)
    if rd and j2 > 0 and i2 + j2 - u2 < j2:
        i2 += 1
    return (i2, j2, i2 + j2 - u2)


def chain_times_linear_solve(states, table, m):
    """Expected absorption times by a dense linear solve of (I - P_TT) T = 1."""
    transient = [s for s in states if s[0] < m]
    index = {s: n for n, s in enumerate(transient)}
    a = np.eye(len(transient))
    for s in transient:
        for succ, prob in table[s]:
            if succ in index:
                a[index[s], index[succ]] -= prob
    t = np.linalg.solve(a, np.ones(len(transient)))
    out = {s: 0.0 for s in states if s[0] == m}
    out.update({s: t[index[s]] for s in transient})
    return out


def first_stage_brute_force(p1, p2, p3, m):
    """Enumerate all 8^M link realizations of the systematic first stage."""
    dist = {}
    links = list(itertools.product((True, False), repeat=3))
    for realization in itertools.product(links, repeat=m):
        prob = 1.0
        i = j = k = 0
        for sr, sd, rd in realization:
            prob *= (1 - p2 if sr else p2) * (1 - p1 if sd else p1) * (1 - p3 if rd else p3)
            to_receiver = sd or (sr and rd)
            i += to_receiver
            j += sr
            k += to_receiver and sr
        dist[(i, j, k)] = dist.get((i, j, k), 0.0) + prob
    return dist
