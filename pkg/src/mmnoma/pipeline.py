"""Three-stage NOMA allocation and the TDMA comparison on one channel realization."""

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .antenna import sa_allocate
from .metrics import (analog_beams, antenna_counts, chain_gains, effective_vectors,
                      link_budget, rate_report, sic_ranks, uniform_powers)
from .power import dc_power_allocate, zf_precoder
from .scheduling import mwcs


@dataclass
class SchemeResult:
    scheme: str
    sum_rate: float
    rates: np.ndarray
    feasible: bool
    schedule: object = None
    split: np.ndarray = None
    powers: np.ndarray = None
    traces: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)


def precoded_budget(chan, schedule, antennas, params):
    """Link model after analog beams, full-CSI effective channels and ZF."""
    beams = analog_beams(chan, schedule, antennas)
    heff = effective_vectors(chan, schedule, beams, "full")
    zf = zf_precoder(heff, schedule)
    gains = chain_gains(heff, zf.G)
    return link_budget(gains, schedule, sic_ranks(chan, schedule), params.noise_power), zf


def zf_uniform_sum_rate(chan, schedule, params, split=None):
    """Sum rate with ZF precoding and ``p_total/K`` per scheduled user."""
    M = antenna_counts(schedule, chan.ap_antennas, split)
    budget, _ = precoded_budget(chan, schedule, M, params)
    p = uniform_powers(schedule, params.total_power)
    return rate_report(budget, p, schedule.num_users).sum_rate


def stage3(chan, schedule, antennas, params, rate_min=None, init_count=None):
    """ZF precoder plus DC power allocation; returns (DcResult, RateReport)."""
    budget, _ = precoded_budget(chan, schedule, antennas, params)
    rmin = params.rate_min if rate_min is None else rate_min
    dc = dc_power_allocate(budget, params.total_power, rmin, params, init_count)
    p = np.zeros(schedule.num_users)
    p[budget.users] = dc.powers
    return dc, rate_report(budget, p, schedule.num_users)


def run_noma(chan, params, num_chains, rng, schedule=None):
    """MWCS scheduling, SA antenna split and DC power allocation."""
    t0 = time.perf_counter()
    sched_res = None
    if schedule is None:
        sched_res = mwcs(chan, params, num_chains)
        schedule = sched_res.schedule
    t1 = time.perf_counter()
    sa = sa_allocate(chan, schedule, params, rng)
    t2 = time.perf_counter()
    M = antenna_counts(schedule, chan.ap_antennas, sa.split)
    dc, report = stage3(chan, schedule, M, params)
    t3 = time.perf_counter()
    traces = {"sa": [list(t) for t in sa.trace[:: max(1, len(sa.trace) // 50)]],
              "dc": dc.trace}
    if sched_res is not None:
        traces["mwcs"] = sched_res.trace
        traces["mwcs_accepted"] = sched_res.accepted
    return SchemeResult("noma", report.sum_rate, report.rates, dc.feasible, schedule,
                        sa.split, report.powers, traces,
                        {"scheduling": t1 - t0, "antenna": t2 - t1, "power": t3 - t2})


def oma_slots(chan, schedule):
    """Per-slot schedules of the TDMA scheme.

    Slot s keeps every singleton plus the member of SIC rank s of each pair,
    so pairs are served one member at a time while singletons stay on.
    """
    ranks = sic_ranks(chan, schedule)
    pairs = schedule.pairs()
    if not pairs:
        return [schedule.copy()]
    slots = []
    for s in range(2):
        slot = schedule.copy()
        for _, (u, v) in pairs:
            strong, weak = (u, v) if ranks[u] < ranks[v] else (v, u)
            off = weak if s == 0 else strong
            slot.ap[off] = slot.chain[off] = -1
        slots.append(slot)
    return slots


def run_oma(chan, params, num_chains, schedule=None):
    """TDMA baseline on the NOMA schedule; each slot gets the full array per
    user and its own DC power allocation, and rates are averaged over slots."""
    t0 = time.perf_counter()
    if schedule is None:
        schedule = mwcs(chan, params, num_chains).schedule
    t1 = time.perf_counter()
    slots = oma_slots(chan, schedule)
    S = len(slots)
    paired = np.zeros(schedule.num_users, dtype=bool)
    for _, members in schedule.pairs():
        paired[list(members)] = True
    K = schedule.num_users
    rates = np.zeros(K)
    powers = np.zeros((S, K))
    feasible = True
    dc_traces = []
    for s, slot in enumerate(slots):
        M = antenna_counts(slot, chan.ap_antennas)
        active = np.flatnonzero(slot.scheduled)
        rmin = np.where(paired[active], params.rate_min * S, params.rate_min)
        dc, report = stage3(chan, slot, M, params, rmin)
        rates += report.rates / S
        powers[s] = report.powers
        feasible &= dc.feasible
        dc_traces.append(dc.trace)
    t2 = time.perf_counter()
    return SchemeResult("oma", math.fsum(rates), rates, bool(feasible), schedule, None,
                        powers, {"dc": dc_traces}, {"scheduling": t1 - t0, "power": t2 - t1})
