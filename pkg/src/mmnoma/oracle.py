"""Brute-force references used to check the heuristics and the closed forms.

Nothing here calls into the algorithm being checked: the ray caster
re-derives blockage point by point, the received-signal expansion rebuilds
beams and combiners from the raw path parameters, and the exhaustive searches
walk the full feasible sets.
"""

import cmath
import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .arcs import TWO_PI, ArcSet
from .errors import EnumerationLimitError
from .metrics import Schedule, antenna_counts, stage_sum_rate

DEFAULT_CAP = 10 ** 6


# -- schedule enumeration ---------------------------------------------------------

def count_schedules(K, B, N, mode="constraints"):
    """Number of schedules ``enumerate_schedules`` would yield."""
    if mode == "constraints":
        # labeled chains, each holding at most two users; leftovers unscheduled
        @_memo
        def f(k, chains):
            if chains == 0:
                return 1
            return sum(math.comb(k, t) * f(k - t, chains - 1) for t in range(min(2, k) + 1))
        return f(K, B * N)
    if mode == "assign":
        def per_ap(s):
            # partitions of s users into at most N blocks of size <= 2
            return sum(math.factorial(s) // (2 ** j * math.factorial(j) * math.factorial(s - 2 * j))
                       for j in range(s // 2 + 1) if s - j <= N)

        @_memo
        def g(k, aps):
            if aps == 0:
                return 1 if k == 0 else 0
            return sum(math.comb(k, s) * per_ap(s) * g(k - s, aps - 1) for s in range(k + 1))
        return g(K, B)
    raise ValueError(f"unknown enumeration mode {mode!r}")


def _memo(fn):
    cache = {}

    def wrapped(*args):
        if args not in cache:
            cache[args] = fn(*args)
        return cache[args]
    return wrapped


def enumerate_schedules(K, B, N, mode="constraints", cap=DEFAULT_CAP):
    """Yield every schedule exactly once.

    ``mode="constraints"``: every assignment with at most one chain per user
    and at most two users per chain (users may stay unscheduled; chains are
    distinguishable).  ``mode="assign"``: every user is served, and each AP's
    users are split into at most N unordered groups of size <= 2; chains are
    numbered in order of each group's lowest user id.

    Raises ``EnumerationLimitError`` before yielding anything if the count
    exceeds ``cap``.
    """
    count = count_schedules(K, B, N, mode)
    if count > cap:
        raise EnumerationLimitError(count, cap)
    if mode == "constraints":
        return _enum_constraints(K, B, N)
    return _enum_assign(K, B, N)


def _enum_constraints(K, B, N):
    ap = [-1] * K
    ch = [-1] * K
    load = [[0] * N for _ in range(B)]

    def rec(k):
        if k == K:
            yield Schedule(ap, ch, B, N)
            return
        yield from rec(k + 1)
        for b in range(B):
            for n in range(N):
                if load[b][n] < 2:
                    load[b][n] += 1
                    ap[k], ch[k] = b, n
                    yield from rec(k + 1)
                    ap[k] = ch[k] = -1
                    load[b][n] -= 1
    return rec(0)


def _enum_assign(K, B, N):
    ap = [-1] * K
    ch = [-1] * K
    blocks = [[] for _ in range(B)]  # per AP: list of member lists

    def rec(k):
        if k == K:
            yield Schedule(ap, ch, B, N)
            return
        for b in range(B):
            for n, members in enumerate(blocks[b]):
                if len(members) == 1:
                    members.append(k)
                    ap[k], ch[k] = b, n
                    yield from rec(k + 1)
                    members.pop()
            if len(blocks[b]) < N:
                blocks[b].append([k])
                ap[k], ch[k] = b, len(blocks[b]) - 1
                yield from rec(k + 1)
                blocks[b].pop()
        ap[k] = ch[k] = -1
    return rec(0)


# -- exhaustive optimizers ----------------------------------------------------------

@dataclass
class OracleResult:
    value: float
    schedule: Schedule = None
    split: np.ndarray = None
    evaluated: int = 0


def exhaustive_schedule_opt(chan, params, num_chains, mode="assign", cap=DEFAULT_CAP):
    """Best stage-1 sum rate over all schedules (first maximum wins)."""
    best = OracleResult(-math.inf)
    for sched in enumerate_schedules(chan.num_users, chan.num_aps, num_chains, mode, cap):
        value = stage_sum_rate(chan, sched, params).sum_rate
        best.evaluated += 1
        if value > best.value:
            best.value, best.schedule = value, sched
    return best


def exhaustive_antenna_opt(chan, schedule, params, objective=None, cap=DEFAULT_CAP):
    """Best split over ``{M_min..M_AP-M_min}^Q`` in lexicographic order."""
    if objective is None:
        def objective(split):
            return stage_sum_rate(chan, schedule, params, split).sum_rate
    Q = len(schedule.pairs())
    m_min = chan.ap_antennas // 6
    values = range(m_min, chan.ap_antennas - m_min + 1)
    if len(values) ** Q > cap:
        raise EnumerationLimitError(len(values) ** Q, cap)
    best = OracleResult(-math.inf, schedule)
    for split in product(values, repeat=Q):
        value = objective(np.array(split, dtype=int))
        best.evaluated += 1
        if value > best.value:
            best.value, best.split = value, np.array(split, dtype=int)
    return best


def full_exhaustive(chan, params, num_chains, cap=DEFAULT_CAP):
    """Reference for the complete pipeline.

    Joint search over every schedule (all users served) and every split of
    its pairs under the stage-2 objective (uniform power, identity digital
    precoder); the best pair then gets ZF precoding and DC power allocation.
    ``value`` is the final sum rate of that schedule and split.
    """
    from .pipeline import stage3

    best = OracleResult(-math.inf)
    evaluated = 0
    for sched in enumerate_schedules(chan.num_users, chan.num_aps, num_chains, "assign", cap):
        ant = exhaustive_antenna_opt(chan, sched, params, cap=cap)
        evaluated += ant.evaluated
        if ant.value > best.value:
            best.value, best.schedule, best.split = ant.value, sched, ant.split
    M = antenna_counts(best.schedule, chan.ap_antennas, best.split)
    _, report = stage3(chan, best.schedule, M, params)
    return OracleResult(report.sum_rate, best.schedule, best.split, evaluated)


# -- ray-cast blockage ----------------------------------------------------------------

def _ray_blocked(user, blockers, ap_xy, phi):
    """Is the device at azimuth ``phi`` shadowed (own body or a blocker)?"""
    cx, cy = user.seat_position.x, user.seat_position.y
    r = user.body_radius
    px, py = cx + r * math.cos(phi), cy + r * math.sin(phi)
    dx, dy = ap_xy[0] - px, ap_xy[1] - py
    # own body: the ray heads into the disk when it points against the outward normal
    if dx * (px - cx) + dy * (py - cy) < 0.0:
        return True
    a = dx * dx + dy * dy
    for (bx, by, br) in blockers:
        fx, fy = px - bx, py - by
        half_b = fx * dx + fy * dy
        c = fx * fx + fy * fy - br * br
        disc = half_b * half_b - a * c
        if disc <= 0.0:
            continue
        root = math.sqrt(disc)
        t1, t2 = (-half_b - root) / a, (-half_b + root) / a
        if t1 < 1.0 and t2 > 0.0:
            return True
    return False


def _blocked_grid(user, blockers, ap_xy, phi):
    """Vectorized version of ``_ray_blocked`` for the coarse sweep."""
    c = np.array([user.seat_position.x, user.seat_position.y])
    u = np.stack([np.cos(phi), np.sin(phi)], axis=1)
    p = c + user.body_radius * u
    d = np.asarray(ap_xy) - p
    blocked = np.einsum("ij,ij->i", d, u) < 0.0
    a = np.einsum("ij,ij->i", d, d)
    for (bx, by, br) in blockers:
        f = p - np.array([bx, by])
        half_b = np.einsum("ij,ij->i", f, d)
        cc = np.einsum("ij,ij->i", f, f) - br * br
        disc = half_b * half_b - a * cc
        root = np.sqrt(np.maximum(disc, 0.0))
        t1, t2 = (-half_b - root) / a, (-half_b + root) / a
        blocked |= (disc > 0.0) & (t1 < 1.0) & (t2 > 0.0)
    return blocked


def _blockers(user, others, ap):
    ux, uy = user.seat_position.x, user.seat_position.y
    ax, ay = ap.position.x, ap.position.y
    d = math.hypot(ax - ux, ay - uy)
    reach = (user.seat_position.z - user.device_height) / (ap.position.z - user.device_height) * d
    out = []
    for o in others:
        ox, oy = o.seat_position.x, o.seat_position.y
        if (o.seat_position.z >= user.seat_position.z
                and math.hypot(ox - ux, oy - uy) <= reach
                and math.hypot(ax - ox, ay - oy) < d):
            out.append((ox, oy, o.body_radius))
    return out


def raycast_clear_set(user, others, ap, samples=100_000, refine=True):
    """Clear azimuths found by testing ``samples`` evenly spaced device
    positions; with ``refine`` every clear/blocked transition is bisected
    down to ~1e-13 rad."""
    if samples < 10 ** 4:
        raise ValueError("raycast_clear_set needs at least 1e4 samples")
    ap_xy = (ap.position.x, ap.position.y)
    blockers = _blockers(user, others, ap)
    step = TWO_PI / samples
    state = ~_blocked_grid(user, blockers, ap_xy, np.arange(samples) * step)
    if all(state):
        return ArcSet.full()
    if not any(state):
        return ArcSet.empty()

    def edge(i):
        lo, hi = i * step, (i + 1) * step
        if not refine:
            return hi
        s_lo = bool(state[i])
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if (not _ray_blocked(user, blockers, ap_xy, mid)) == s_lo:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    starts, ends = [], []
    for i in np.flatnonzero(state != np.roll(state, -1)):
        i = int(i)
        (starts if state[(i + 1) % samples] else ends).append(edge(i))
    arcs = ArcSet.empty()
    for s in starts:
        e = min((x for x in ends if x > s), default=min(ends) + TWO_PI)
        arcs = arcs | ArcSet.from_interval(s, e)
    return arcs


# -- direct received-signal expansion ------------------------------------------------------

def expand_received_signal(k, chan, schedule, antennas, powers, precoders=None):
    """Term-by-term powers of user k's received signal.

    Returns a dict with ``signal``, ``intra`` (stronger co-group users, still
    interfering after SIC), ``cancelled`` (weaker co-group users removed by
    SIC), ``inter_group``, ``inter_ap`` and the per-term lists.
    """
    K, B, Mm, Ma = chan.H.shape
    N = schedule.num_chains
    b_k, n_k = int(schedule.ap[k]), int(schedule.chain[k])
    out = {"signal": 0.0, "intra": 0.0, "cancelled": 0.0, "inter_group": 0.0, "inter_ap": 0.0}
    if b_k < 0:
        return out
    # SIC order straight from path parameters
    def strength(j):
        b = int(schedule.ap[j])
        pw = [chan.rho[j, b, l] * abs(chan.alpha[j, b, l]) ** 2 for l in range(chan.rho.shape[2])]
        return pw[0] if chan.los[j, b] else max(pw[1:], default=0.0)

    served = [j for j in range(K) if schedule.ap[j] >= 0]
    order = sorted(served, key=lambda j: (-strength(j), j))
    rank = {j: i for i, j in enumerate(order)}
    # user k's combiner toward its serving AP
    z = math.pi * math.cos(chan.aoa[k, b_k, 0])
    v = [cmath.exp(1j * i * z) / math.sqrt(Mm) for i in range(Mm)]

    def beam(b, n):
        members = sorted(j for j in served if schedule.ap[j] == b and schedule.chain[j] == n)
        w = [0j] * Ma
        pos, phase = 0, 0.0
        for j in members:
            step = math.pi * math.cos(chan.aod[j, b, 0])
            for i in range(int(antennas[j])):
                w[pos + i] = cmath.exp(1j * (phase + i * step)) / math.sqrt(Ma)
            pos += int(antennas[j])
            phase += int(antennas[j]) * step
        return w

    beams = {(b, n): beam(b, n) for b in range(B) for n in range(N)}
    for j in served:
        b, n = int(schedule.ap[j]), int(schedule.chain[j])
        H = chan.H[k, b]
        amp = 0j
        for m in range(N):
            g = 1.0 if precoders is None and m == n else (0.0 if precoders is None
                                                          else precoders[b][m, n])
            if g == 0:
                continue
            w = beams[(b, m)]
            for r_ in range(Mm):
                row = H[r_]
                acc = sum(row[c] * w[c] for c in range(Ma))
                amp += g * v[r_].conjugate() * acc
        term = powers[j] * abs(amp) ** 2
        if j == k:
            out["signal"] += term
        elif b == b_k and n == n_k:
            out["intra" if rank[j] < rank[k] else "cancelled"] += term
        elif b == b_k:
            out["inter_group"] += term
        else:
            out["inter_ap"] += term
    return out
