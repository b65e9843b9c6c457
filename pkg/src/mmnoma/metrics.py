"""Schedules, SIC ordering, interference terms and NOMA rates.

A user's received power from any scheduled user j is ``p_j * |h_{k b_j}^H g_{b_j n_j}|^2``.
Signals of co-group users that are stronger in the SIC order act as
intra-group interference; weaker co-group signals are cancelled.  Other
chains of the serving AP give inter-group interference, other APs inter-AP
interference.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import beam_splitting_beamformer
from .errors import ConstraintViolation


@dataclass
class Schedule:
    """User -> (AP, RF chain) assignment; ``-1`` marks an unscheduled user."""

    ap: np.ndarray
    chain: np.ndarray
    num_aps: int
    num_chains: int

    def __post_init__(self):
        self.ap = np.asarray(self.ap, dtype=int).copy()
        self.chain = np.asarray(self.chain, dtype=int).copy()

    @classmethod
    def empty(cls, num_users, num_aps, num_chains):
        return cls(-np.ones(num_users, int), -np.ones(num_users, int), num_aps, num_chains)

    @classmethod
    def from_tensor(cls, c):
        c = np.asarray(c)
        K, B, N = c.shape
        sched = cls.empty(K, B, N)
        for k, b, n in zip(*np.nonzero(c)):
            if sched.ap[k] >= 0:
                raise ConstraintViolation(f"user {k} scheduled on more than one chain")
            sched.ap[k], sched.chain[k] = b, n
        sched.validate()
        return sched

    @classmethod
    def from_groups(cls, num_users, num_aps, num_chains, groups):
        """``groups`` maps ``(b, n)`` to an iterable of user ids."""
        sched = cls.empty(num_users, num_aps, num_chains)
        for (b, n), users in groups.items():
            for k in users:
                sched.ap[k], sched.chain[k] = b, n
        sched.validate()
        return sched

    @property
    def num_users(self):
        return len(self.ap)

    @property
    def scheduled(self):
        return self.ap >= 0

    def tensor(self):
        c = np.zeros((self.num_users, self.num_aps, self.num_chains), dtype=int)
        k = np.nonzero(self.scheduled)[0]
        c[k, self.ap[k], self.chain[k]] = 1
        return c

    def validate(self):
        for k in range(self.num_users):
            if (self.ap[k] < 0) != (self.chain[k] < 0):
                raise ConstraintViolation(f"user {k}: half-scheduled")
            if self.ap[k] >= self.num_aps or self.chain[k] >= self.num_chains:
                raise ConstraintViolation(f"user {k}: AP/chain index out of range")
        counts = np.zeros((self.num_aps, self.num_chains), dtype=int)
        for k in np.nonzero(self.scheduled)[0]:
            counts[self.ap[k], self.chain[k]] += 1
        if counts.max(initial=0) > 2:
            raise ConstraintViolation("a NOMA group holds more than two users")
        return self

    def members(self, b, n):
        return [int(k) for k in np.nonzero((self.ap == b) & (self.chain == n))[0]]

    def users_on(self, b):
        return [int(k) for k in np.nonzero(self.ap == b)[0]]

    def groups(self):
        """Non-empty groups as ``{(b, n): [users ascending]}``."""
        out = {}
        for k in np.nonzero(self.scheduled)[0]:
            out.setdefault((int(self.ap[k]), int(self.chain[k])), []).append(int(k))
        return dict(sorted(out.items()))

    def pairs(self):
        """Two-user groups in (b, n) order as ``((b, n), (low_id, high_id))``."""
        return [(bn, tuple(u)) for bn, u in self.groups().items() if len(u) == 2]

    def canonical(self):
        """Hashable form that ignores chain labels within an AP."""
        per_ap = []
        for b in range(self.num_aps):
            groups = sorted(tuple(u) for (bb, _), u in self.groups().items() if bb == b)
            per_ap.append(tuple(groups))
        return tuple(per_ap)

    def copy(self):
        return Schedule(self.ap, self.chain, self.num_aps, self.num_chains)

    def __eq__(self, other):
        return (isinstance(other, Schedule) and np.array_equal(self.ap, other.ap)
                and np.array_equal(self.chain, other.chain))


def antenna_counts(schedule, ap_antennas, split=None):
    """Per-user sub-array sizes: the whole array for singletons, and for the
    q-th pair ``split[q]`` elements to its lower-id member and the rest to
    its partner (equal halves when ``split`` is None)."""
    M = np.zeros(schedule.num_users, dtype=int)
    M[schedule.scheduled] = ap_antennas
    pairs = schedule.pairs()
    if split is not None and len(split) != len(pairs):
        raise ValueError(f"split has {len(split)} entries for {len(pairs)} pairs")
    for q, (_, (lo, hi)) in enumerate(pairs):
        m = ap_antennas // 2 if split is None else int(split[q])
        M[lo], M[hi] = m, ap_antennas - m
    return M


def analog_beams(chan, schedule, antennas):
    """``B x N x M_AP`` beam-splitting beams; empty chains get a zero beam."""
    W = np.zeros((schedule.num_aps, schedule.num_chains, chan.ap_antennas), dtype=complex)
    for (b, n), users in schedule.groups().items():
        W[b, n] = beam_splitting_beamformer([chan.los_aod[k, b] for k in users],
                                            [antennas[k] for k in users], chan.ap_antennas)
    return W


def effective_vectors(chan, schedule, beams, csi="full"):
    """``K x B x N`` effective channels ``v_k^H H_kb w_bn`` with each user's
    combiner matched to its serving AP (zero rows for unscheduled users)."""
    Z = chan.combined_rows(csi)
    K = schedule.num_users
    heff = np.zeros((K, schedule.num_aps, schedule.num_chains), dtype=complex)
    on = np.nonzero(schedule.scheduled)[0]
    if len(on):
        rows = Z[on, schedule.ap[on]]  # |on| x B x M_AP
        heff[on] = np.einsum("kbm,bnm->kbn", rows, beams)
    return heff


def chain_gains(heff, precoders=None):
    """``|h_kb^H g_bn|^2`` for every user, AP and group column (identity precoder when None).

    ``heff[k, b]`` holds the row ``v^H H_kb W_b``, i.e. ``h_kb^H``; ``precoders[b]``
    is ``G_b`` with one column per NOMA group.
    """
    if precoders is None:
        return np.abs(heff) ** 2
    proj = np.einsum("kbn,bnm->kbm", heff, precoders)
    return np.abs(proj) ** 2


def sic_order(gains):
    """User indices sorted by descending gain, ties by ascending index."""
    gains = np.asarray(gains, dtype=float)
    return [int(k) for k in np.argsort(-gains, kind="stable")]


def sic_ranks(chan, schedule):
    """Position of each user in the global SIC order (gain to its serving AP)."""
    K = schedule.num_users
    g = np.full(K, -np.inf)
    on = schedule.scheduled
    g[on] = chan.ordering_gain[np.nonzero(on)[0], schedule.ap[on]]
    ranks = np.empty(K, dtype=int)
    ranks[sic_order(g)] = np.arange(K)
    return ranks


@dataclass
class LinkBudget:
    """Affine SINR model of the scheduled users.

    ``coupling[s, t]`` is the gain with which user t's power reaches user s as
    interference after SIC; ``direct[s]`` the own-signal gain.  Local index s
    refers to ``users[s]``.  ``pairs`` lists (stronger, weaker) local indices.
    """

    users: np.ndarray
    direct: np.ndarray
    coupling: np.ndarray
    intra: np.ndarray
    inter_group: np.ndarray
    inter_ap: np.ndarray
    pairs: list
    noise: float

    @property
    def size(self):
        return len(self.users)

    def denominators(self, p):
        """(D1, D2): interference-plus-noise with and without the own signal."""
        d2 = self.noise + self.coupling @ p
        return d2 + self.direct * p, d2

    def rates(self, p):
        d1, d2 = self.denominators(p)
        return np.log2(d1 / d2)

    def cross_rates(self, p):
        """Rate at which the stronger member of each pair decodes the weaker one."""
        d1, _ = self.denominators(p)
        return np.array([math.log2(1.0 + self.direct[s] * p[w] / d1[s]) for s, w in self.pairs])


def link_budget(gains, schedule, ranks, noise):
    on = np.nonzero(schedule.scheduled)[0]
    b, n = schedule.ap[on], schedule.chain[on]
    C = gains[on][:, b, n]  # C[s, t] = gain of t's chain at user s
    same_ap = b[:, None] == b[None, :]
    same_group = same_ap & (n[:, None] == n[None, :])
    r = ranks[on]
    stronger = r[None, :] < r[:, None]
    eye = np.eye(len(on), dtype=bool)
    intra = np.where(same_group & stronger & ~eye, C, 0.0)
    inter_group = np.where(same_ap & ~same_group, C, 0.0)
    inter_ap = np.where(~same_ap, C, 0.0)
    pairs = []
    for _, (u, v) in schedule.pairs():
        s, t = int(np.searchsorted(on, u)), int(np.searchsorted(on, v))
        pairs.append((s, t) if r[s] < r[t] else (t, s))
    return LinkBudget(on, np.diag(C).copy(), intra + inter_group + inter_ap, intra,
                      inter_group, inter_ap, pairs, float(noise))


@dataclass
class RateReport:
    rates: np.ndarray
    signal: np.ndarray
    intra: np.ndarray
    inter_group: np.ndarray
    inter_ap: np.ndarray
    cross: dict
    noise: float
    powers: np.ndarray = field(default=None)

    @property
    def sum_rate(self):
        return float(math.fsum(self.rates))

    @property
    def min_rate(self):
        return float(self.rates.min(initial=np.inf))

    def sic_slack(self):
        """``R_{k->i} - R_{i->i}`` per (stronger k, weaker i) pair."""
        return {ki: r - self.rates[ki[1]] for ki, r in self.cross.items()}

    def sic_feasible(self, tol=0.0):
        return all(v >= -tol for v in self.sic_slack().values())


def rate_report(budget, powers, num_users):
    """Full per-user breakdown for powers indexed by global user id."""
    p_all = np.asarray(powers, dtype=float)
    p = p_all[budget.users]
    K = num_users
    rates = np.zeros(K)
    sig = np.zeros(K)
    terms = [np.zeros(K) for _ in range(3)]
    if budget.size:
        rates[budget.users] = budget.rates(p)
        sig[budget.users] = budget.direct * p
        for out, mat in zip(terms, (budget.intra, budget.inter_group, budget.inter_ap)):
            out[budget.users] = mat @ p
    cross = {}
    for (s, w), r in zip(budget.pairs, budget.cross_rates(p) if budget.pairs else []):
        cross[(int(budget.users[s]), int(budget.users[w]))] = float(r)
    return RateReport(rates, sig, terms[0], terms[1], terms[2], cross, budget.noise, p_all)


def uniform_powers(schedule, total_power, num_users=None):
    """``total_power / K`` for every scheduled user."""
    K = num_users or schedule.num_users
    return np.where(schedule.scheduled, total_power / K, 0.0)


def evaluate(chan, schedule, antennas, powers, noise, precoders=None, csi="full"):
    """Rates of a complete allocation."""
    beams = analog_beams(chan, schedule, antennas)
    heff = effective_vectors(chan, schedule, beams, csi)
    gains = chain_gains(heff, precoders)
    budget = link_budget(gains, schedule, sic_ranks(chan, schedule), noise)
    return rate_report(budget, powers, schedule.num_users)


def stage_sum_rate(chan, schedule, params, split=None):
    """Sum rate under the stage-1/2 simplifications: uniform power
    ``p_total/K``, identity digital precoder, equal split unless ``split`` given."""
    M = antenna_counts(schedule, chan.ap_antennas, split)
    p = uniform_powers(schedule, params.total_power)
    return evaluate(chan, schedule, M, p, params.noise_power, None, params.stage_csi)


# -- per-user convenience wrappers ---------------------------------------------

def interference_terms(report, k):
    """(intra-group, inter-group, inter-AP) interference power at user k."""
    return float(report.intra[k]), float(report.inter_group[k]), float(report.inter_ap[k])


def user_rate(report, k):
    return float(report.rates[k])


def cross_rate(report, k, i):
    return report.cross.get((k, i), 0.0)


def sic_feasible(report, tol=0.0):
    return report.sic_feasible(tol)


def sum_rate(report):
    return report.sum_rate
