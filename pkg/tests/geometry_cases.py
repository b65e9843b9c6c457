"""Random single-user blockage configurations shared by the geometry tests."""

import math

import numpy as np

from mmnoma.arcs import TWO_PI
from mmnoma.venue import AccessPoint, Position3, UserPlacement

H_PERSON, H_MD, H_AP = 1.25, 0.70, 4.0


def random_configuration(rng, max_blockers=4):
    """A user at the origin, up to ``max_blockers`` neighbours and one AP."""
    r = rng.uniform(0.15, 0.3)
    user = UserPlacement(Position3(0.0, 0.0, H_PERSON), r, H_MD, 0.0)
    others = []
    for _ in range(rng.integers(0, max_blockers + 1)):
        for _attempt in range(20):
            rad = rng.uniform(0.15, 0.3)
            dist = rng.uniform(r + rad + 0.02, 1.6)
            ang = rng.uniform(0.0, TWO_PI)
            c = np.array([dist * math.cos(ang), dist * math.sin(ang)])
            if all(np.hypot(*(c - o.seat_position.xy)) > rad + o.body_radius + 0.02
                   for o in others):
                others.append(UserPlacement(Position3(c[0], c[1], H_PERSON + rng.uniform(0, 0.3)),
                                            rad, H_MD, 0.0))
                break
    ang = rng.uniform(0.0, TWO_PI)
    d = rng.uniform(2.0, 12.0)
    ap = AccessPoint(Position3(d * math.cos(ang), d * math.sin(ang), H_AP), 12, 2)
    return user, others, ap


def circular_distance(a, b):
    d = abs(a - b) % TWO_PI
    return min(d, TWO_PI - d)


def boundary_mismatch(analytic, sampled):
    """Largest distance from an arc endpoint of one set to the nearest of the other."""
    ea = analytic.boundaries()
    eb = sampled.boundaries()
    if len(ea) != len(eb):
        return math.inf
    worst = 0.0
    for x in ea:
        worst = max(worst, min(circular_distance(x, y) for y in eb))
    for y in eb:
        worst = max(worst, min(circular_distance(x, y) for x in ea))
    return worst
