"""Stage 1: user-to-AP assignment and NOMA pairing.

Users start on the AP with the strongest LoS link that still has room.  Each
AP's users are then paired greedily by a weighted score of channel
correlation and gain difference, and the worst-rate user is repeatedly swapped
with users or free slots of other APs while that raises the stage-1 sum rate.
"""

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import CapacityError
from .metrics import Schedule, sic_order, stage_sum_rate

HOLE = None


def los_gains(chan):
    """``K x B`` LoS link strengths ``||h_{kb,0}||^2`` (zero when blocked)."""
    return np.sum(np.abs(chan.los_vectors()) ** 2, axis=-1)


def initial_partition(chan, num_chains):
    """Assign users, strongest first, to their best AP that still has a vacancy.

    Returns a tuple of B sorted user tuples.
    """
    gains = los_gains(chan)
    K, B = gains.shape
    cap = 2 * num_chains
    if K > B * cap:
        raise CapacityError(f"{K} users exceed the capacity 2*B*N = {B * cap}")
    parts = [[] for _ in range(B)]
    for k in sic_order(gains.max(axis=1, initial=0.0)):
        open_aps = [b for b in range(B) if len(parts[b]) < cap]
        b = max(open_aps, key=lambda b: (gains[k, b], -b))
        parts[b].append(k)
    return tuple(tuple(sorted(p)) for p in parts)


def correlation(h_i, h_j):
    """Normalized absolute inner product; 0 if either vector vanishes."""
    ni, nj = np.linalg.norm(h_i), np.linalg.norm(h_j)
    if ni == 0.0 or nj == 0.0:
        return 0.0
    return float(min(1.0, abs(np.vdot(h_i, h_j)) / (ni * nj)))


def gain_difference(h_i, h_j):
    return float(abs(np.vdot(h_i, h_i).real - np.vdot(h_j, h_j).real))


def min_max_normalize(values):
    """Map values onto [0, 1]; a constant input maps to zeros."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("min_max_normalize needs at least one value")
    lo, hi = v.min(), v.max()
    if hi == lo:
        return np.zeros_like(v)
    return (v - lo) / (hi - lo)


def best_pair(users, vectors, w1):
    """Pair maximizing ``w1*Corr + (1-w1)*Diff`` (both min-max normalized over
    the candidates); ties go to the lexicographically smallest pair."""
    cands = list(combinations(sorted(users), 2))
    corr = [correlation(vectors[i], vectors[j]) for i, j in cands]
    diff = [gain_difference(vectors[i], vectors[j]) for i, j in cands]
    score = w1 * min_max_normalize(corr) + (1.0 - w1) * min_max_normalize(diff)
    return cands[int(np.argmax(score))]


def group_ap(users, b, chan, num_chains, w1):
    """Groups of one AP in RF-chain order: pairs in formation order, then
    singletons by descending ordering gain."""
    users = list(users)
    if len(users) > 2 * num_chains:
        raise CapacityError(f"AP {b}: {len(users)} users exceed 2N = {2 * num_chains}")
    gain = chan.ordering_gain[:, b]
    by_gain = [users[i] for i in sic_order([gain[k] for k in users])]
    pairs = []
    free = set(users)
    if len(users) > num_chains:
        vectors = chan.los_vectors()[:, b]
        for _ in range(len(users) - num_chains):
            i, j = best_pair(free, vectors, w1)
            pairs.append((i, j))
            free -= {i, j}
    return pairs + [(k,) for k in by_gain if k in free]


def group_users(partition, chan, num_chains, w1, aps=None, previous=None):
    """Schedule for a partition; only APs in ``aps`` are regrouped when a
    ``previous`` schedule supplies the others."""
    K, B = chan.num_users, chan.num_aps
    aps = range(B) if aps is None or previous is None else aps
    groups = {}
    if previous is not None:
        for (b, n), members in previous.groups().items():
            if b not in aps:
                groups[(b, n)] = members
    for b in aps:
        for n, members in enumerate(group_ap(partition[b], b, chan, num_chains, w1)):
            groups[(b, n)] = members
    return Schedule.from_groups(K, B, num_chains, groups)


def partition_of(schedule):
    return tuple(tuple(schedule.users_on(b)) for b in range(schedule.num_aps))


def swap(partition, k, target=HOLE, dest_ap=None):
    """Move user k to another AP, either trading places with user ``target`` or
    filling a free slot of ``dest_ap``."""
    src = next(b for b, users in enumerate(partition) if k in users)
    parts = [set(p) for p in partition]
    if target is not HOLE:
        dst = next(b for b, users in enumerate(partition) if target in users)
        if dst == src:
            raise ValueError("swap partners must sit on different APs")
        parts[src].discard(k)
        parts[src].add(target)
        parts[dst].discard(target)
        parts[dst].add(k)
    else:
        if dest_ap is None or dest_ap == src:
            raise ValueError("hole swap needs a different destination AP")
        parts[src].discard(k)
        parts[dest_ap].add(k)
    return tuple(tuple(sorted(p)) for p in parts)


@dataclass
class MwcsResult:
    schedule: Schedule
    sum_rate: float
    accepted: int
    iterations: int
    trace: list = field(default_factory=list)


def mwcs(chan, params, num_chains, initial=None):
    """Worst-connection swapping from ``initial`` (or the strongest-link partition).

    Each iteration takes the lowest-rate user of the active set, tries every
    swap with users and holes of the other APs (regrouping the two APs
    involved), and keeps the best candidate only if it strictly raises the
    stage-1 sum rate.  Otherwise that user leaves the active set; an accepted
    swap restores the full set.
    """
    B = chan.num_aps
    cap = 2 * num_chains
    part = initial if initial is not None else initial_partition(chan, num_chains)
    sched = group_users(part, chan, num_chains, params.w1)
    report = stage_sum_rate(chan, sched, params)
    value = report.sum_rate
    active = set(range(chan.num_users))
    trace = [{"iteration": 0, "sum_rate": value, "worst": None, "accepted": True}]
    accepted = iterations = 0
    while active:
        iterations += 1
        worst = min(active, key=lambda k: (report.rates[k], k))
        src = int(sched.ap[worst])
        best = None
        for b in range(B):
            if b == src:
                continue
            targets = list(part[b]) + ([HOLE] if len(part[b]) < cap else [])
            for tgt in targets:
                cand_part = swap(part, worst, tgt, b)
                cand = group_users(cand_part, chan, num_chains, params.w1, aps=(src, b),
                                   previous=sched)
                cand_report = stage_sum_rate(chan, cand, params)
                if best is None or cand_report.sum_rate > best[2].sum_rate:
                    best = (cand_part, cand, cand_report)
        if best is not None and best[2].sum_rate > value:
            part, sched, report = best
            value = report.sum_rate
            active = set(range(chan.num_users))
            accepted += 1
            ok = True
        else:
            active.discard(worst)
            ok = False
        trace.append({"iteration": iterations, "sum_rate": value, "worst": int(worst),
                      "accepted": ok})
    return MwcsResult(sched, value, accepted, iterations, trace)


def fully_loaded_state_count(num_aps, num_chains):
    """Assignment-times-grouping count for ``K = 2BN`` users."""
    B, N = num_aps, num_chains
    K = 2 * B * N
    assign = math.factorial(K) // math.factorial(2 * N) ** B
    grouping = (math.factorial(2 * N) // (2 ** N * math.factorial(N))) ** B
    return assign * grouping
