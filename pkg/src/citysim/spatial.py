"""Uniform-grid spatial index over AOI polygons and road polylines.

The index is a pure accelerator: every query returns exactly what a
brute-force scan would, including tie-breaking, which the test suite checks
against linear-scan oracles.
"""

from __future__ import annotations

import math
from collections import defaultdict
from typing import Callable, Iterable

from .errors import NO_ROAD, SimError
from .geometry import Point, point_in_polygon
from .model import Aoi, MapBundle, Road


class SpatialIndex:
    def __init__(self, aois: Iterable[Aoi], roads: Iterable[Road], cell_size: float | None = None):
        self.aois = {a.id: a for a in aois}
        self.roads = {r.id: r for r in roads}

        xs: list[float] = []
        ys: list[float] = []
        for a in self.aois.values():
            x0, y0, x1, y1 = a.boundary.bbox
            xs += [x0, x1]
            ys += [y0, y1]
        for r in self.roads.values():
            for p in r.geometry.points:
                xs.append(p.x)
                ys.append(p.y)
        if not xs:
            xs, ys = [0.0], [0.0]
        self.x0, self.y0 = min(xs), min(ys)
        extent = max(max(xs) - self.x0, max(ys) - self.y0, 1.0)
        self.cell = cell_size or min(500.0, max(25.0, extent / 64.0))
        self.nx = int(extent / self.cell) + 2
        self.ny = self.nx

        self._aoi_cells: dict[tuple[int, int], list[int]] = defaultdict(list)
        for a in sorted(self.aois.values(), key=lambda a: a.id):
            x0, y0, x1, y1 = a.boundary.bbox
            for cx, cy in self._cells_in_bbox(x0, y0, x1, y1):
                self._aoi_cells[(cx, cy)].append(a.id)

        self._road_cells: dict[tuple[int, int], set[int]] = defaultdict(set)
        for r in self.roads.values():
            pts = r.geometry.points
            for a, b in zip(pts, pts[1:]):
                for cell in self._cells_in_bbox(
                    min(a.x, b.x), min(a.y, b.y), max(a.x, b.x), max(a.y, b.y)
                ):
                    self._road_cells[cell].add(r.id)

    def _cell_of(self, p: Point) -> tuple[int, int]:
        return (int((p.x - self.x0) // self.cell), int((p.y - self.y0) // self.cell))

    def _cells_in_bbox(self, x0, y0, x1, y1):
        c0x, c0y = self._cell_of(Point(x0, y0))
        c1x, c1y = self._cell_of(Point(x1, y1))
        for cx in range(c0x, c1x + 1):
            for cy in range(c0y, c1y + 1):
                yield (cx, cy)

    def containing_aoi(self, p: Point) -> int | None:
        """AOI whose polygon contains p; ties (overlaps, shared borders) go to
        the smallest id."""
        best = None
        for aid in self._aoi_cells.get(self._cell_of(p), ()):
            if best is not None and aid >= best:
                continue
            if point_in_polygon(p, self.aois[aid].boundary):
                best = aid
        return best

    def nearest_road(
        self, p: Point, predicate: Callable[[Road], bool] | None = None
    ) -> tuple[int, Point, float, float]:
        """Closest road satisfying ``predicate``.

        Returns (road_id, nearest point on geometry, offset, distance); ties
        in distance resolve to the lowest road id. Raises SimError(NO_ROAD)
        when no road qualifies.
        """
        cx, cy = self._cell_of(p)
        best_d = math.inf
        best: tuple[int, Point, float] | None = None
        seen: set[int] = set()
        max_ring = self.nx + self.ny + 2
        ring = 0
        while ring <= max_ring:
            for cell in self._ring_cells(cx, cy, ring):
                for rid in self._road_cells.get(cell, ()):
                    if rid in seen:
                        continue
                    seen.add(rid)
                    road = self.roads[rid]
                    if predicate is not None and not predicate(road):
                        continue
                    q, off, d = road.geometry.nearest(p)
                    if d < best_d or (d == best_d and best is not None and rid < best[0]):
                        best_d = d
                        best = (rid, q, off)
            # Unscanned cells lie at Chebyshev ring+1 or farther, hence at
            # least ring*cell away; strict inequality keeps exact-tie results
            # identical to a full scan.
            if best is not None and best_d < ring * self.cell:
                break
            ring += 1
        if best is None:
            raise SimError(NO_ROAD, "no road satisfies the predicate")
        return best[0], best[1], best[2], best_d

    def _ring_cells(self, cx: int, cy: int, ring: int):
        if ring == 0:
            yield (cx, cy)
            return
        for dx in range(-ring, ring + 1):
            yield (cx + dx, cy - ring)
            yield (cx + dx, cy + ring)
        for dy in range(-ring + 1, ring):
            yield (cx - ring, cy + dy)
            yield (cx + ring, cy + dy)

    def roads_near_bbox(self, x0, y0, x1, y1, radius: float) -> list[int]:
        """Candidate road ids for an expanded bbox (superset, exactness is
        the caller's job)."""
        out: set[int] = set()
        for cell in self._cells_in_bbox(x0 - radius, y0 - radius, x1 + radius, y1 + radius):
            out.update(self._road_cells.get(cell, ()))
        return sorted(out)


def build_index(bundle: MapBundle, cell_size: float | None = None) -> SpatialIndex:
    return SpatialIndex(bundle.aois.values(), bundle.roads.values(), cell_size)
