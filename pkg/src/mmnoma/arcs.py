"""Unions of disjoint angular intervals on the circle [0, 2*pi)."""

import math

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_angle(theta):
    """Map an angle (or array of angles) into [0, 2*pi)."""
    w = np.mod(theta, TWO_PI)
    if np.ndim(w) == 0:
        w = float(w)
        return 0.0 if w >= TWO_PI else w
    w[w >= TWO_PI] = 0.0
    return w


class ArcSet:
    """Finite union of half-open arcs ``[start, end)`` normalized to [0, 2*pi).

    Arcs are kept sorted, pairwise disjoint and non-touching; an arc crossing
    zero is stored as the two pieces ``[a, 2*pi)`` and ``[0, b)``.

    >>> ArcSet.from_interval(-0.5, 0.5).arcs
    ((0.0, 0.5), (5.783185307179586, 6.283185307179586))
    """

    __slots__ = ("arcs",)

    def __init__(self, arcs=()):
        self.arcs = _normalize(arcs)

    @classmethod
    def empty(cls):
        return cls()

    @classmethod
    def full(cls):
        return cls([(0.0, TWO_PI)])

    @classmethod
    def from_interval(cls, start, end):
        """Counter-clockwise arc from ``start`` to ``end`` (radians, unwrapped).

        ``end - start`` is the arc length; anything >= 2*pi is the full circle
        and anything <= 0 is empty.
        """
        length = end - start
        if length >= TWO_PI:
            return cls.full()
        if length <= 0.0:
            return cls.empty()
        a = wrap_angle(start)
        b = a + length
        if b <= TWO_PI:
            return cls([(a, b)])
        return cls([(a, TWO_PI), (0.0, b - TWO_PI)])

    @classmethod
    def from_center(cls, center, half_width):
        return cls.from_interval(center - half_width, center + half_width)

    # set algebra ---------------------------------------------------------

    def union(self, other):
        return ArcSet(self.arcs + other.arcs)

    def intersection(self, other):
        out = []
        i = j = 0
        a, b = self.arcs, other.arcs
        while i < len(a) and j < len(b):
            lo = max(a[i][0], b[j][0])
            hi = min(a[i][1], b[j][1])
            if hi > lo:
                out.append((lo, hi))
            if a[i][1] < b[j][1]:
                i += 1
            else:
                j += 1
        return ArcSet(out)

    def complement(self):
        out = []
        prev = 0.0
        for s, e in self.arcs:
            if s > prev:
                out.append((prev, s))
            prev = e
        if prev < TWO_PI:
            out.append((prev, TWO_PI))
        return ArcSet(out)

    def difference(self, other):
        return self.intersection(other.complement())

    __or__ = union
    __and__ = intersection

    def __sub__(self, other):
        return self.difference(other)

    def __invert__(self):
        return self.complement()

    # queries ---------------------------------------------------------------

    def measure(self):
        return math.fsum(e - s for s, e in self.arcs)

    def is_empty(self):
        return not self.arcs

    def is_full(self):
        return self.arcs == ((0.0, TWO_PI),)

    def contains(self, theta):
        """Membership test; accepts a scalar or an array of angles."""
        t = wrap_angle(np.asarray(theta, dtype=float))
        inside = np.zeros(np.shape(t), dtype=bool)
        for s, e in self.arcs:
            inside |= (t >= s) & (t < e)
        return bool(inside) if np.ndim(inside) == 0 else inside

    def __contains__(self, theta):
        return self.contains(theta)

    def rotate(self, delta):
        return ArcSet(
            piece
            for s, e in self.arcs
            for piece in ArcSet.from_interval(s + delta, e + delta).arcs
        )

    def boundaries(self):
        """Arc endpoints, ignoring the artificial cut at 0 == 2*pi."""
        if not self.arcs or self.is_full():
            return []
        pts = []
        for s, e in self.arcs:
            pts.append(s)
            pts.append(e)
        if self.arcs[0][0] == 0.0 and self.arcs[-1][1] == TWO_PI:
            pts = pts[1:-1]
        return pts

    def merged_arcs(self):
        """Arcs with the piece crossing zero rejoined as ``(a, b + 2*pi)``."""
        arcs = list(self.arcs)
        if len(arcs) >= 2 and arcs[0][0] == 0.0 and arcs[-1][1] == TWO_PI:
            first = arcs.pop(0)
            last = arcs.pop()
            arcs.append((last[0], first[1] + TWO_PI))
        return arcs

    def __eq__(self, other):
        return isinstance(other, ArcSet) and self.arcs == other.arcs

    def __hash__(self):
        return hash(self.arcs)

    def __len__(self):
        return len(self.arcs)

    def __iter__(self):
        return iter(self.arcs)

    def __repr__(self):
        body = ", ".join(f"[{s:.6f}, {e:.6f})" for s, e in self.arcs)
        return f"ArcSet({body})"

    def to_list(self):
        return [list(a) for a in self.arcs]


def _normalize(arcs):
    cleaned = []
    for s, e in arcs:
        s = float(s)
        e = float(e)
        if not (0.0 <= s <= TWO_PI and 0.0 <= e <= TWO_PI):
            raise ValueError(f"arc ({s}, {e}) outside [0, 2*pi]")
        if e > s:
            cleaned.append((s, e))
    cleaned.sort()
    merged = []
    for s, e in cleaned:
        if merged and s <= merged[-1][1]:
            if e > merged[-1][1]:
                merged[-1] = (merged[-1][0], e)
        else:
            merged.append((s, e))
    return tuple(merged)
