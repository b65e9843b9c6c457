"""Venue data model and human-body line-of-sight blockage.

Everything here is 2D at the device plane: a seated person is a disk of
radius ``body_radius`` around the seat, and the mobile device sits on that
circle at the user's orientation azimuth.  The clear set of a (user, AP)
pair is the set of device azimuths for which the segment from the device to
the AP's horizontal projection crosses neither the user's own body nor the
shadow of a qualifying neighbour.
"""

import enum
import json
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .arcs import TWO_PI, ArcSet, wrap_angle
from .errors import ConfigurationError, GeometryError, ModelError

SCENARIO_SCHEMA_VERSION = 1

DEFAULT_H_AP = 4.0
DEFAULT_H_MD = 0.70
DEFAULT_H_PERSON = 1.25
DEFAULT_BODY_RADIUS = 0.27


class ScenarioWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Position3:
    x: float
    y: float
    z: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z)):
            raise ConfigurationError(f"position: non-finite coordinate {self}")

    @property
    def xy(self):
        return np.array([self.x, self.y])

    def horizontal_distance(self, other):
        return math.hypot(other.x - self.x, other.y - self.y)

    def azimuth_to(self, other):
        return wrap_angle(math.atan2(other.y - self.y, other.x - self.x))


@dataclass(frozen=True)
class UserPlacement:
    """A seated person.

    ``seat_position.z`` is the head height including the seat platform and
    ``device_height`` is the handset height including the same platform.
    """

    seat_position: Position3
    body_radius: float = DEFAULT_BODY_RADIUS
    device_height: float = DEFAULT_H_MD
    orientation_center: float = 0.0

    def __post_init__(self):
        if not self.body_radius > 0:
            raise ConfigurationError("body_radius: must be > 0")
        if not 0.0 <= self.orientation_center < TWO_PI:
            raise ConfigurationError("orientation_center: must lie in [0, 2*pi)")

    @property
    def height(self):
        return self.seat_position.z

    def device_point(self, azimuth):
        """Horizontal device location(s) for the given orientation azimuth(s)."""
        az = np.asarray(azimuth, dtype=float)
        pts = np.stack([np.cos(az), np.sin(az)], axis=-1) * self.body_radius
        return pts + self.seat_position.xy


@dataclass(frozen=True)
class AccessPoint:
    position: Position3
    antenna_count: int = 120
    rf_chain_count: int = 12

    def __post_init__(self):
        if self.antenna_count < 6 or self.antenna_count % 6:
            raise ConfigurationError("antenna_count: must be a positive multiple of 6")
        if self.rf_chain_count < 1:
            raise ConfigurationError("rf_chain_count: must be >= 1")


class OrientationKind(str, enum.Enum):
    TRIANGULAR = "triangular"
    UNIFORM = "uniform"
    FIXED = "fixed"


@dataclass(frozen=True)
class OrientationModel:
    """Law of the user's azimuth.

    ``TRIANGULAR`` is a symmetric triangular density of the given half-width
    around the seat's stage-facing direction, wrapped onto the circle.
    """

    kind: OrientationKind = OrientationKind.TRIANGULAR
    half_width: float = math.pi / 3

    def __post_init__(self):
        object.__setattr__(self, "kind", OrientationKind(self.kind))
        if self.kind is OrientationKind.TRIANGULAR and not 0 < self.half_width <= math.pi:
            raise ConfigurationError("orientation.half_width_rad: must lie in (0, pi]")

    def clear_probability(self, clear, center):
        """Probability that a sampled orientation falls inside ``clear``."""
        if self.kind is OrientationKind.FIXED:
            return 1.0 if clear.contains(center) else 0.0
        if self.kind is OrientationKind.UNIFORM:
            return clear.measure() / TWO_PI
        h = self.half_width

        def cdf(x):
            x = min(max(x, -h), h)
            if x <= 0:
                return (h + x) ** 2 / (2 * h * h)
            return 1.0 - (h - x) ** 2 / (2 * h * h)

        total = 0.0
        for s, e in clear.arcs:
            a = wrap_angle(s - center + math.pi) - math.pi
            b = a + (e - s)
            total += cdf(min(b, math.pi)) - cdf(a)
            if b > math.pi:
                total += cdf(b - TWO_PI) - cdf(-math.pi)
        return total


def sample_orientation(user, model, rng):
    """Draw one orientation azimuth for ``user`` under ``model``."""
    if model.kind is OrientationKind.FIXED:
        return user.orientation_center
    if model.kind is OrientationKind.UNIFORM:
        return wrap_angle(rng.uniform(0.0, TWO_PI))
    h = model.half_width
    return wrap_angle(user.orientation_center + rng.triangular(-h, 0.0, h))


@dataclass(frozen=True)
class VenueScenario:
    seats: tuple
    aps: tuple
    h_ap: float = DEFAULT_H_AP
    h_md: float = DEFAULT_H_MD
    h_person: float = DEFAULT_H_PERSON
    body_radius: float = DEFAULT_BODY_RADIUS
    orientation: OrientationModel = field(default_factory=OrientationModel)
    source: dict = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "seats", tuple(self.seats))
        object.__setattr__(self, "aps", tuple(self.aps))
        self.validate()

    def validate(self):
        problems = []
        if not self.seats:
            problems.append("seats: at least one seat required")
        if not self.aps:
            problems.append("ap_positions: at least one AP required")
        if self.h_ap <= self.h_md:
            problems.append("heights_m.h_ap: must exceed h_md")
        if self.h_person < self.h_md:
            problems.append("heights_m.h_person: must be >= h_md")
        for i, ap in enumerate(self.aps):
            for j, seat in enumerate(self.seats):
                p = seat.seat_position
                if ap.position.x == p.x and ap.position.y == p.y:
                    problems.append(f"ap_positions[{i}]: coincides with seat {j} horizontally")
                if seat.device_height >= ap.position.z:
                    problems.append(f"seats[{j}]: device above AP {i}")
        if problems:
            raise ConfigurationError(problems)

    @property
    def num_seats(self):
        return len(self.seats)

    @property
    def num_aps(self):
        return len(self.aps)

    def with_aps(self, aps):
        return VenueScenario(self.seats, tuple(aps), self.h_ap, self.h_md, self.h_person,
                             self.body_radius, self.orientation, self.source)

    @cached_property
    def _clear_cache(self):
        return {}

    def clear_set(self, seat, ap):
        """Clear set of seat index ``seat`` toward AP index ``ap``; every other
        seat is treated as occupied.  Results are memoized."""
        key = (seat, ap)
        cache = self._clear_cache
        if key not in cache:
            others = self.seats[:seat] + self.seats[seat + 1:]
            cache[key] = clear_set(self.seats[seat], self.aps[ap], others)
        return cache[key]


def generate_grid_venue(rows, cols, row_pitch, col_pitch, rake_per_row, ap_positions, *,
                        front_distance=None, h_ap=DEFAULT_H_AP, h_md=DEFAULT_H_MD,
                        h_person=DEFAULT_H_PERSON, body_radius=DEFAULT_BODY_RADIUS,
                        orientation=None, antenna_count=120, rf_chain_count=12):
    """Rectangular seating block facing a stage centred at the origin.

    Row ``r`` lies at ``y = front_distance + r * row_pitch`` (``front_distance``
    defaults to one row pitch) and columns are centred on ``x = 0``.  Row ``r``
    sits on a platform ``r * rake_per_row`` high, which raises both the head
    and the device.  AP positions given as ``(x, y)`` are mounted at ``h_ap``.
    """
    if rows < 1 or cols < 1:
        raise ConfigurationError("grid: rows and cols must be >= 1")
    if row_pitch <= 0 or col_pitch <= 0:
        raise ConfigurationError("grid: pitches must be > 0")
    if front_distance is None:
        front_distance = row_pitch
    seats = []
    for r in range(rows):
        platform = r * rake_per_row
        y = front_distance + r * row_pitch
        for c in range(cols):
            x = (c - (cols - 1) / 2.0) * col_pitch
            center = wrap_angle(math.atan2(-y, -x)) if (x or y) else 0.0
            seats.append(UserPlacement(Position3(x, y, h_person + platform), body_radius,
                                       h_md + platform, center))
    aps = [AccessPoint(_as_ap_position(p, h_ap), antenna_count, rf_chain_count)
           for p in ap_positions]
    return VenueScenario(tuple(seats), tuple(aps), h_ap, h_md, h_person, body_radius,
                         orientation or OrientationModel())


def _as_ap_position(p, h_ap):
    if isinstance(p, Position3):
        return p
    if len(p) == 2:
        return Position3(float(p[0]), float(p[1]), h_ap)
    return Position3(float(p[0]), float(p[1]), float(p[2]))


# -- blockage geometry --------------------------------------------------------

def self_body_clear_arcs(user, ap):
    """Device azimuths whose path to the AP clears the user's own body.

    With the device on the body circle, the path leaves the disk iff the AP
    lies beyond the tangent at the device point, i.e. ``cos(psi - phi) >= r/d``.
    """
    d = user.seat_position.horizontal_distance(ap.position)
    r = user.body_radius
    if d <= r:
        raise GeometryError("AP lies horizontally inside the user's body disk")
    toward_ap = user.seat_position.azimuth_to(ap.position)
    return ArcSet.from_center(toward_ap, math.acos(r / d))


def effective_shadow_distance(blocker_height, device_height, ap_height,
                              horizontal_distance_user_ap):
    """Horizontal reach of a blocker's shadow on the device-to-AP ray."""
    if ap_height <= device_height:
        raise ModelError("AP must be above the device")
    if blocker_height < device_height:
        raise ModelError("blocker shorter than the device height")
    return ((blocker_height - device_height) / (ap_height - device_height)
            * horizontal_distance_user_ap)


def shadow_candidates(user, others, ap):
    """Neighbours that can shadow ``user`` toward ``ap``.

    A neighbour qualifies when its seat lies within the effective shadow
    distance of the user's seat, it is at least as tall as the user, and it is
    strictly closer to the AP.
    """
    d = user.seat_position.horizontal_distance(ap.position)
    reach = effective_shadow_distance(user.height, user.device_height, ap.position.z, d)
    out = []
    for other in others:
        if other.height < user.height:
            continue
        if user.seat_position.horizontal_distance(other.seat_position) > reach:
            continue
        if other.seat_position.horizontal_distance(ap.position) >= d:
            continue
        out.append(other)
    return out


def nearby_user_clear_arcs(user, others, ap):
    """Device azimuths not shadowed by neighbouring bodies (AP view)."""
    clear = ArcSet.full()
    src = np.array([ap.position.x, ap.position.y])
    for other in shadow_candidates(user, others, ap):
        gap = user.seat_position.horizontal_distance(other.seat_position)
        if gap < user.body_radius + other.body_radius:
            warnings.warn(f"overlapping body disks ({gap:.3f} m apart)", ScenarioWarning,
                          stacklevel=2)
        blocked = _shadow_on_circle(user.seat_position.xy, user.body_radius,
                                    other.seat_position.xy, other.body_radius, src)
        clear = clear - blocked
    return clear


def clear_set(user, ap, others):
    """Azimuths with an unobstructed LoS path: self-body and neighbour sets intersected."""
    return self_body_clear_arcs(user, ap) & nearby_user_clear_arcs(user, others, ap)


def _shadow_on_circle(center, radius, blocker, blocker_radius, src):
    """Arcs of the circle (center, radius) whose points see ``src`` through the
    disk (blocker, blocker_radius).

    The shadow region is bounded by the two tangent lines from ``src`` and
    the blocker circle itself; its crossings with the device circle are the
    only places the blocked/clear state can flip, so the circle is split at
    those angles and each piece is classified at its midpoint.
    """
    pc = blocker - src
    dist = math.hypot(*pc)
    if dist <= blocker_radius:
        return ArcSet.full()
    base = math.atan2(pc[1], pc[0])
    spread = math.asin(blocker_radius / dist)
    cuts = []
    for direction in (base - spread, base + spread):
        u = np.array([math.cos(direction), math.sin(direction)])
        cuts.extend(_line_circle_angles(src, u, center, radius))
    cuts.extend(_circle_circle_angles(center, radius, blocker, blocker_radius))
    if not cuts:
        probe = center + radius * np.array([1.0, 0.0])
        hit = _segment_hits_disk(probe, src, blocker, blocker_radius)
        return ArcSet.full() if hit else ArcSet.empty()
    cuts = sorted(set(cuts))
    blocked = []
    for i, start in enumerate(cuts):
        end = cuts[i + 1] if i + 1 < len(cuts) else cuts[0] + TWO_PI
        if end - start <= 0.0:
            continue
        mid = 0.5 * (start + end)
        probe = center + radius * np.array([math.cos(mid), math.sin(mid)])
        if _segment_hits_disk(probe, src, blocker, blocker_radius):
            blocked.append(ArcSet.from_interval(start, end))
    out = ArcSet.empty()
    for piece in blocked:
        out = out | piece
    return out


def _line_circle_angles(origin, direction, center, radius):
    """Azimuths (about ``center``) where the line origin + t*direction meets the circle."""
    f = origin - center
    b = float(f @ direction)
    c = float(f @ f) - radius * radius
    disc = b * b - c
    if disc < 0.0:
        return []
    root = math.sqrt(disc)
    out = []
    for t in (-b - root, -b + root):
        p = f + t * direction
        out.append(wrap_angle(math.atan2(p[1], p[0])))
    return out


def _circle_circle_angles(c0, r0, c1, r1):
    delta = c1 - c0
    d = math.hypot(*delta)
    if d == 0.0 or d > r0 + r1 or d < abs(r0 - r1):
        return []
    base = math.atan2(delta[1], delta[0])
    cosang = (r0 * r0 + d * d - r1 * r1) / (2.0 * r0 * d)
    half = math.acos(min(1.0, max(-1.0, cosang)))
    return [wrap_angle(base - half), wrap_angle(base + half)]


def _segment_hits_disk(a, b, center, radius):
    ab = b - a
    denom = float(ab @ ab)
    t = 0.0 if denom == 0.0 else min(1.0, max(0.0, float((center - a) @ ab) / denom))
    closest = a + t * ab - center
    return float(closest @ closest) < radius * radius


# -- stochastic realization ---------------------------------------------------

@dataclass(frozen=True)
class BlockageOutcome:
    clear_set: ArcSet
    sampled_orientation: float
    los_indicator: int


@dataclass(frozen=True)
class BlockageRealization:
    """Per-user orientation draws and the K x B LoS indicator matrix."""

    seat_indices: tuple
    orientations: np.ndarray
    los: np.ndarray
    clear_sets: tuple  # K rows of B ArcSets

    def outcome(self, k, b):
        return BlockageOutcome(self.clear_sets[k][b], float(self.orientations[k]),
                               int(self.los[k, b]))


def realize_blockage(scenario, rng, seat_indices=None, blockage=True):
    """Sample one orientation per user (shared by all APs) and set the LoS flags.

    ``blockage=False`` keeps the orientation draws but forces every link clear.
    """
    if seat_indices is None:
        seat_indices = range(scenario.num_seats)
    seat_indices = tuple(int(s) for s in seat_indices)
    K, B = len(seat_indices), scenario.num_aps
    orient = np.empty(K)
    los = np.zeros((K, B), dtype=int)
    sets = []
    for k, s in enumerate(seat_indices):
        orient[k] = sample_orientation(scenario.seats[s], scenario.orientation, rng)
        row = []
        for b in range(B):
            cs = scenario.clear_set(s, b) if blockage else ArcSet.full()
            row.append(cs)
            los[k, b] = 1 if cs.contains(orient[k]) else 0
        sets.append(tuple(row))
    return BlockageRealization(seat_indices, orient, los, tuple(sets))


# -- scenario files -----------------------------------------------------------

def scenario_from_dict(data):
    """Build a scenario from its JSON form (see README for the schema)."""
    problems = []
    version = data.get("version", SCENARIO_SCHEMA_VERSION)
    if version != SCENARIO_SCHEMA_VERSION:
        problems.append(f"version: unsupported scenario schema {version}")
    heights = data.get("heights_m", {})
    h_ap = float(heights.get("h_ap", DEFAULT_H_AP))
    h_md = float(heights.get("h_md", DEFAULT_H_MD))
    h_person = float(heights.get("h_person", DEFAULT_H_PERSON))
    radius = float(data.get("body_radius_m", DEFAULT_BODY_RADIUS))
    orient = data.get("orientation", {})
    aps = data.get("ap_positions")
    if not aps:
        problems.append("ap_positions: required, non-empty list of [x, y] or [x, y, z]")
    if problems:
        raise ConfigurationError(problems)
    try:
        model = OrientationModel(orient.get("kind", "triangular"),
                                 float(orient.get("half_width_rad", math.pi / 3)))
    except ValueError as exc:
        raise ConfigurationError(f"orientation.kind: {exc}") from None
    ap_kw = dict(antenna_count=int(data.get("ap_antennas", 120)),
                 rf_chain_count=int(data.get("rf_chains", 12)))
    if "grid" in data:
        g = data["grid"]
        try:
            scenario = generate_grid_venue(
                int(g["rows"]), int(g["cols"]), float(g["row_pitch"]), float(g["col_pitch"]),
                float(g.get("rake_per_row", 0.0)), aps,
                front_distance=g.get("front_distance"), h_ap=h_ap, h_md=h_md,
                h_person=h_person, body_radius=radius, orientation=model, **ap_kw)
        except KeyError as exc:
            raise ConfigurationError(f"grid.{exc.args[0]}: required") from None
    elif "seats" in data:
        seats = []
        for i, s in enumerate(data["seats"]):
            platform = float(s[2]) if len(s) > 2 else 0.0
            x, y = float(s[0]), float(s[1])
            center = wrap_angle(math.atan2(-y, -x)) if (x or y) else 0.0
            seats.append(UserPlacement(Position3(x, y, h_person + platform), radius,
                                       h_md + platform, center))
        scenario = VenueScenario(tuple(seats),
                                 tuple(AccessPoint(_as_ap_position(p, h_ap), **ap_kw)
                                       for p in aps),
                                 h_ap, h_md, h_person, radius, model)
    else:
        raise ConfigurationError("seats|grid: one of them is required")
    object.__setattr__(scenario, "source", dict(data))
    return scenario


def load_scenario(path):
    with open(path) as fh:
        return scenario_from_dict(json.load(fh))


def default_scenario_dict():
    """A 6 x 10 raked lecture-hall block with three ceiling APs."""
    return {
        "version": SCENARIO_SCHEMA_VERSION,
        "grid": {"rows": 6, "cols": 10, "row_pitch": 0.9, "col_pitch": 0.6,
                 "rake_per_row": 0.15, "front_distance": 2.0},
        "ap_positions": [[-3.5, 3.0], [3.5, 3.0], [0.0, 8.5]],
        "heights_m": {"h_ap": DEFAULT_H_AP, "h_md": DEFAULT_H_MD, "h_person": DEFAULT_H_PERSON},
        "body_radius_m": DEFAULT_BODY_RADIUS,
        "orientation": {"kind": "triangular", "half_width_rad": math.pi / 3},
    }
