"""Stage 2: sub-array sizes for two-user groups by simulated annealing."""

import math
from dataclasses import dataclass, field

import numpy as np

from .metrics import stage_sum_rate


def split_bounds(ap_antennas):
    """Inclusive range of ``m_q``: ``[M_min, M_AP - M_min]`` with ``M_min = M_AP / 6``."""
    m_min = ap_antennas // 6
    return m_min, ap_antennas - m_min


def cooling_steps(t0, beta, eps1):
    """Number of temperature levels visited while ``T >= eps1``."""
    return math.ceil(math.log(eps1 / t0) / math.log(beta))


def neighbor(m, rng, lo, hi):
    """Resample between 1 and ``Q-1`` randomly chosen entries (exactly one
    when ``Q == 1``) uniformly from ``{lo, ..., hi}``.

    A resampled entry may land on its old value.
    """
    m = np.asarray(m, dtype=int)
    Q = len(m)
    count = 1 if Q <= 2 else int(rng.integers(1, Q))
    pos = rng.choice(Q, size=count, replace=False)
    out = m.copy()
    out[pos] = rng.integers(lo, hi + 1, size=count)
    return out


@dataclass
class SaResult:
    split: np.ndarray
    sum_rate: float
    evaluations: int
    coolings: int
    trace: list = field(default_factory=list)


def sa_allocate(chan, schedule, params, rng, objective=None):
    """Anneal the split vector of ``schedule``'s pairs.

    ``objective(split) -> float`` defaults to the stage-2 sum rate (uniform
    power, identity precoder).  Values are memoized per split so repeated
    visits are free.  The trace holds ``(T, current, best)`` per temperature.
    """
    pairs = schedule.pairs()
    Q = len(pairs)
    if objective is None:
        def objective(split):
            return stage_sum_rate(chan, schedule, params, split).sum_rate
    if Q == 0:
        return SaResult(np.zeros(0, dtype=int), float(objective(np.zeros(0, int))), 1, 0)
    memo = {}

    def value(split):
        key = tuple(int(x) for x in split)
        if key not in memo:
            memo[key] = float(objective(np.array(key)))
        return memo[key]

    lo, hi = split_bounds(chan.ap_antennas)
    m = np.full(Q, chan.ap_antennas // 2, dtype=int)
    cur = value(m)
    best_m, best = m.copy(), cur
    T = params.sa_t0
    trace = []
    coolings = 0
    while T >= params.sa_eps1:
        for _ in range(params.sa_tmax):
            cand = neighbor(m, rng, lo, hi)
            new = value(cand)
            if new >= cur:
                m, cur = cand, new
            else:
                delta = (cur - new) / cur if cur > 0 else 0.0
                if rng.random() < math.exp(-delta / T):
                    m, cur = cand, new
            if cur >= best:
                best_m, best = m.copy(), cur
        trace.append((T, cur, best))
        T *= params.sa_beta
        coolings += 1
    return SaResult(best_m, best, len(memo), coolings, trace)
