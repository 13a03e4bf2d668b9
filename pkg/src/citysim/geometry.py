"""Planar geometry primitives.

All coordinates are projected planar meters; distances are plain Euclidean.
Geodesic math is deliberately absent — projection happens before data reaches
this package.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import NamedTuple


class Point(NamedTuple):
    x: float
    y: float

    def dist(self, other: "Point") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def is_finite(self) -> bool:
        return math.isfinite(self.x) and math.isfinite(self.y)


@dataclass
class Polyline:
    """An open chain of >= 2 points with cached cumulative arc lengths."""

    points: tuple[Point, ...]
    _cum: tuple[float, ...] = field(init=False, repr=False)

    def __post_init__(self):
        pts = tuple(Point(float(p[0]), float(p[1])) for p in self.points)
        object.__setattr__(self, "points", pts)
        cum = [0.0]
        for a, b in zip(pts, pts[1:]):
            cum.append(cum[-1] + a.dist(b))
        object.__setattr__(self, "_cum", tuple(cum))

    @property
    def length(self) -> float:
        return self._cum[-1]

    def point_at(self, offset: float) -> Point:
        """Point at arc-length `offset`, clamped to the chain's extent."""
        pts, cum = self.points, self._cum
        if offset <= 0.0:
            return pts[0]
        if offset >= cum[-1]:
            return pts[-1]
        i = bisect_right(cum, offset) - 1
        seg = cum[i + 1] - cum[i]
        t = (offset - cum[i]) / seg if seg > 0 else 0.0
        a, b = pts[i], pts[i + 1]
        return Point(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t)

    def heading_at(self, offset: float) -> tuple[float, float]:
        """Unit direction of the segment containing `offset`."""
        pts, cum = self.points, self._cum
        if offset >= cum[-1]:
            i = len(pts) - 2
        else:
            i = max(0, bisect_right(cum, max(offset, 0.0)) - 1)
        a, b = pts[i], pts[i + 1]
        dx, dy = b.x - a.x, b.y - a.y
        n = math.hypot(dx, dy)
        if n == 0.0:
            return (0.0, 0.0)
        return (dx / n, dy / n)

    def nearest(self, p: Point) -> tuple[Point, float, float]:
        """Nearest point on the chain: returns (point, offset, distance)."""
        pts, cum = self.points, self._cum
        best_d2 = math.inf
        best_pt = pts[0]
        best_off = 0.0
        for i in range(len(pts) - 1):
            q, t = _project_on_segment(p, pts[i], pts[i + 1])
            d2 = (p.x - q.x) ** 2 + (p.y - q.y) ** 2
            if d2 < best_d2 - 1e-12:
                best_d2 = d2
                best_pt = q
                best_off = cum[i] + t * (cum[i + 1] - cum[i])
        return best_pt, best_off, math.sqrt(best_d2)


@dataclass
class Polygon:
    """A simple closed ring of >= 3 points; the closing edge is implicit."""

    ring: tuple[Point, ...]

    def __post_init__(self):
        object.__setattr__(
            self, "ring", tuple(Point(float(p[0]), float(p[1])) for p in self.ring)
        )

    @property
    def area(self) -> float:
        return abs(self.signed_area)

    @property
    def signed_area(self) -> float:
        ring = self.ring
        s = 0.0
        for i in range(len(ring)):
            a = ring[i]
            b = ring[(i + 1) % len(ring)]
            s += a.x * b.y - b.x * a.y
        return 0.5 * s

    @property
    def centroid(self) -> Point:
        ring = self.ring
        sa = self.signed_area
        if abs(sa) < 1e-12:
            # Degenerate ring: fall back to the vertex mean.
            n = len(ring)
            return Point(sum(p.x for p in ring) / n, sum(p.y for p in ring) / n)
        cx = cy = 0.0
        for i in range(len(ring)):
            a = ring[i]
            b = ring[(i + 1) % len(ring)]
            cross = a.x * b.y - b.x * a.y
            cx += (a.x + b.x) * cross
            cy += (a.y + b.y) * cross
        return Point(cx / (6.0 * sa), cy / (6.0 * sa))

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        xs = [p.x for p in self.ring]
        ys = [p.y for p in self.ring]
        return (min(xs), min(ys), max(xs), max(ys))

    def edges(self):
        ring = self.ring
        for i in range(len(ring)):
            yield ring[i], ring[(i + 1) % len(ring)]

    def is_simple(self) -> bool:
        """True when no two non-adjacent edges intersect."""
        edges = list(self.edges())
        n = len(edges)
        for i in range(n):
            for j in range(i + 1, n):
                if j == i + 1 or (i == 0 and j == n - 1):
                    continue
                if _segments_intersect(*edges[i], *edges[j]):
                    return False
        return True


def _project_on_segment(p: Point, a: Point, b: Point) -> tuple[Point, float]:
    """Closest point to p on segment ab, with the parameter t in [0, 1]."""
    vx, vy = b.x - a.x, b.y - a.y
    L2 = vx * vx + vy * vy
    if L2 == 0.0:
        return a, 0.0
    t = ((p.x - a.x) * vx + (p.y - a.y) * vy) / L2
    if t <= 0.0:
        return a, 0.0
    if t >= 1.0:
        return b, 1.0
    return Point(a.x + t * vx, a.y + t * vy), t


def point_segment_distance(p: Point, a: Point, b: Point) -> float:
    q, _ = _project_on_segment(p, a, b)
    return p.dist(q)


def _on_segment(p: Point, a: Point, b: Point, eps: float = 1e-9) -> bool:
    return point_segment_distance(p, a, b) <= eps


def _segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool:
    def orient(p, q, r):
        v = (q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x)
        if v > 1e-12:
            return 1
        if v < -1e-12:
            return -1
        return 0

    o1, o2 = orient(a, b, c), orient(a, b, d)
    o3, o4 = orient(c, d, a), orient(c, d, b)
    if o1 != o2 and o3 != o4:
        return True
    if o1 == 0 and _on_segment(c, a, b):
        return True
    if o2 == 0 and _on_segment(d, a, b):
        return True
    if o3 == 0 and _on_segment(a, c, d):
        return True
    if o4 == 0 and _on_segment(b, c, d):
        return True
    return False


def polyline_length(pl: Polyline) -> float:
    return pl.length


def point_in_polygon(p: Point, poly: Polygon) -> bool:
    """Even-odd containment test; points on the boundary count as inside."""
    ring = poly.ring
    n = len(ring)
    for i in range(n):
        if _on_segment(p, ring[i], ring[(i + 1) % n]):
            return True
    inside = False
    x, y = p.x, p.y
    j = n - 1
    for i in range(n):
        xi, yi = ring[i].x, ring[i].y
        xj, yj = ring[j].x, ring[j].y
        if (yi > y) != (yj > y):
            x_cross = xi + (y - yi) * (xj - xi) / (yj - yi)
            if x < x_cross:
                inside = not inside
        j = i
    return inside


def shared_boundary_length(a: Polygon, b: Polygon, eps: float = 1e-6) -> float:
    """Total length of collinear overlap between the two boundaries.

    Used to detect polygons that genuinely share a wall rather than merely
    touching at a corner.
    """
    total = 0.0
    for a1, a2 in a.edges():
        for b1, b2 in b.edges():
            total += _collinear_overlap(a1, a2, b1, b2, eps)
    return total


def _collinear_overlap(a1: Point, a2: Point, b1: Point, b2: Point, eps: float) -> float:
    ux, uy = a2.x - a1.x, a2.y - a1.y
    La = math.hypot(ux, uy)
    if La < eps:
        return 0.0
    ux, uy = ux / La, uy / La
    # Both endpoints of b must lie on the line through a.
    for q in (b1, b2):
        d = abs((q.x - a1.x) * uy - (q.y - a1.y) * ux)
        if d > eps:
            return 0.0
    t1 = (b1.x - a1.x) * ux + (b1.y - a1.y) * uy
    t2 = (b2.x - a1.x) * ux + (b2.y - a1.y) * uy
    lo, hi = min(t1, t2), max(t1, t2)
    overlap = min(La, hi) - max(0.0, lo)
    return max(0.0, overlap)
