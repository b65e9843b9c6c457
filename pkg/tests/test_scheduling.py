import math

import numpy as np
import pytest

from helpers import small_config
from mmnoma.errors import CapacityError
from mmnoma.harness import realize
from mmnoma.metrics import stage_sum_rate
from mmnoma.oracle import count_schedules, exhaustive_schedule_opt
from mmnoma.scheduling import (HOLE, correlation, fully_loaded_state_count, gain_difference,
                               group_ap, group_users, initial_partition, los_gains,
                               min_max_normalize, mwcs, partition_of, swap)


def test_correlation_and_difference_examples():
    h = np.array([1 + 1j, 2 - 1j, 0.5j])
    assert correlation(h, h) == pytest.approx(1.0)
    assert gain_difference(h, h) == 0.0
    assert correlation(np.array([1, 0]), np.array([0, 1j])) == 0.0
    assert correlation(h, 2 * h) == pytest.approx(1.0)
    assert gain_difference(h, 2 * h) == pytest.approx(3 * np.vdot(h, h).real)
    assert correlation(h, np.zeros(3)) == 0.0


def test_min_max_normalize_examples():
    assert min_max_normalize([2, 4, 6]).tolist() == [0.0, 0.5, 1.0]
    assert min_max_normalize([7.0]).tolist() == [0.0]
    with pytest.raises(ValueError):
        min_max_normalize([])


def test_single_ap_takes_everyone():
    real = realize(small_config(users=4, aps=1), None, 0)
    assert initial_partition(real.chan, 2) == ((0, 1, 2, 3),)
    res = mwcs(real.chan, real.params, 2)
    # nothing to swap with: the initial grouping is returned
    assert res.accepted == 0
    assert res.schedule == group_users(((0, 1, 2, 3),), real.chan, 2, real.params.w1)


def test_initial_partition_prefers_strongest_ap(small_realization):
    chan = small_realization.chan
    part = initial_partition(chan, 2)
    gains = los_gains(chan)
    assert sorted(k for p in part for k in p) == list(range(chan.num_users))
    for b, users in enumerate(part):
        assert len(users) <= 4
        for k in users:
            # the chosen AP is the best one unless the best was already full
            best = int(np.argmax(gains[k]))
            assert b == best or len(part[best]) == 4


def test_capacity_error(small_realization):
    with pytest.raises(CapacityError):
        initial_partition(small_realization.chan, 1)


def test_group_ap_shapes(small_realization):
    chan = small_realization.chan
    assert all(len(g) == 1 for g in group_ap([0, 1], 0, chan, 2, 0.6))
    assert group_ap([3, 1], 0, chan, 1, 0.6) == [(1, 3)]
    groups = group_ap([0, 1, 2], 0, chan, 2, 0.6)
    assert len(groups) == 2 and len(groups[0]) == 2


def test_swap_moves():
    part = ((0, 1), (2,))
    assert swap(part, 0, HOLE, 1) == ((1,), (0, 2))
    assert swap(part, 0, 2) == ((1, 2), (0,))
    with pytest.raises(ValueError):
        swap(part, 0, 1)


def test_mwcs_trace_is_monotone(small_realization):
    chan, params = small_realization.chan, small_realization.params
    res = mwcs(chan, params, 2)
    values = [t["sum_rate"] for t in res.trace]
    assert all(b >= a for a, b in zip(values, values[1:]))
    assert res.sum_rate == pytest.approx(stage_sum_rate(chan, res.schedule, params).sum_rate)
    assert res.schedule.scheduled.all()
    assert partition_of(res.schedule) == tuple(tuple(res.schedule.users_on(b)) for b in range(2))


def test_oracle_bounds_mwcs(small_realization):
    chan, params = small_realization.chan, small_realization.params
    assert exhaustive_schedule_opt(chan, params, 2).value >= mwcs(chan, params, 2).sum_rate


def test_state_count_formula():
    assert fully_loaded_state_count(2, 2) == 630
    assert count_schedules(8, 2, 2, "assign") == 630
    assert fully_loaded_state_count(1, 2) == count_schedules(4, 1, 2, "assign") == 3
    assert fully_loaded_state_count(3, 1) == math.factorial(6) // 2 ** 3
