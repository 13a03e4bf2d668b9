"""Route planning over mode-specific road graphs.

Driving uses a directed edge graph: roads are nodes and junction movements
are transitions. Walking and biking use an undirected endpoint graph built
by snapping road endpoints together. Both minimize estimated travel time
``length / min(speed_limit, mode cap)`` and break exact ties by the
lexicographically smallest road-id sequence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from heapq import heappop, heappush

from .errors import NO_ROUTE, UNSUPPORTED_MODE, SimError
from .geometry import Point
from .model import Aoi, Connection, MapBundle

MODE_CAPS = {"drive": math.inf, "walk": 1.4, "bike": 4.0}

# Road endpoints closer than this snap to one graph node.
SNAP_TOLERANCE = 0.5


@dataclass
class RouteLeg:
    road_id: int
    direction: int  # +1 with the geometry, -1 against it
    entry_offset: float
    exit_offset: float

    @property
    def length(self) -> float:
        return abs(self.exit_offset - self.entry_offset)


@dataclass
class Route:
    mode: str
    legs: list[RouteLeg]
    origin_aoi: int
    dest_aoi: int
    total_length: float = 0.0
    estimated_time: float = 0.0
    dest_kind: str = "aoi"
    dest_id: int = 0

    def __post_init__(self):
        if not self.total_length:
            self.total_length = sum(leg.length for leg in self.legs)


def _mode_speed(limit: float, mode: str) -> float:
    return min(limit, MODE_CAPS[mode])


class RoutePlanner:
    """Prebuilt per-bundle graphs with a route cache keyed on
    (origin AOI, destination AOI, mode)."""

    def __init__(self, bundle: MapBundle):
        self.bundle = bundle
        self._drive_succ: dict[int, list[int]] = {}
        self._build_drive_graph()
        self._node_of: dict[tuple[int, int], int] = {}
        self._walk_adj: dict[int, list[tuple[int, int, int, float]]] = {}
        self._road_nodes: dict[int, tuple[int, int]] = {}
        self._build_walk_graph()
        self._cache: dict[tuple, Route | None] = {}

    # -- graph construction -------------------------------------------------

    def _build_drive_graph(self):
        succ: dict[int, set[int]] = {r: set() for r in self.bundle.roads}
        for junction in self.bundle.junctions.values():
            for m in junction.movements:
                a = self.bundle.roads.get(m.from_road)
                b = self.bundle.roads.get(m.to_road)
                if a and b and a.drivable and b.drivable:
                    succ[m.from_road].add(m.to_road)
        self._drive_succ = {r: sorted(s) for r, s in succ.items()}

    def _snap_node(self, p: Point) -> int:
        key = (round(p.x / SNAP_TOLERANCE), round(p.y / SNAP_TOLERANCE))
        node = self._node_of.get(key)
        if node is None:
            node = len(self._node_of)
            self._node_of[key] = node
            self._walk_adj[node] = []
        return node

    def _build_walk_graph(self):
        for rid in sorted(self.bundle.roads):
            road = self.bundle.roads[rid]
            if not road.walkable:
                continue
            a = self._snap_node(road.geometry.points[0])
            b = self._snap_node(road.geometry.points[-1])
            self._road_nodes[rid] = (a, b)
            self._walk_adj[a].append((b, rid, +1, road.length))
            self._walk_adj[b].append((a, rid, -1, road.length))

    # -- public API ----------------------------------------------------------

    def connections_for(self, aoi: Aoi, mode: str) -> list[Connection]:
        if mode == "drive":
            return [c for c in aoi.connections if c.drive_allowed]
        return [c for c in aoi.connections if c.walk_allowed]

    def plan(self, from_aoi: int, to: tuple[str, int], mode: str) -> Route:
        """Minimal-time route between AOI connection anchors.

        Raises SimError(UNSUPPORTED_MODE) for public transport and
        SimError(NO_ROUTE) when the destination cannot be reached.
        """
        if mode not in MODE_CAPS:
            raise SimError(UNSUPPORTED_MODE, f"mode {mode!r} is not simulated")
        dest_kind, dest_id = to
        if dest_kind == "poi":
            poi = self.bundle.pois.get(dest_id)
            if poi is None or poi.aoi_id is None:
                raise SimError(NO_ROUTE, f"POI {dest_id} is not on the map")
            dest_aoi = poi.aoi_id
        elif dest_kind == "aoi":
            if dest_id not in self.bundle.aois:
                raise SimError(NO_ROUTE, f"AOI {dest_id} is not on the map")
            dest_aoi = dest_id
        else:
            raise SimError(NO_ROUTE, f"unknown destination kind {dest_kind!r}")

        key = (from_aoi, dest_aoi, mode)
        if key in self._cache:
            route = self._cache[key]
        else:
            route = self._plan_uncached(from_aoi, dest_aoi, mode)
            self._cache[key] = route
        if route is None:
            raise SimError(NO_ROUTE, f"no {mode} route from AOI {from_aoi} to AOI {dest_aoi}")
        return Route(
            mode=route.mode,
            legs=list(route.legs),
            origin_aoi=route.origin_aoi,
            dest_aoi=route.dest_aoi,
            total_length=route.total_length,
            estimated_time=route.estimated_time,
            dest_kind=dest_kind,
            dest_id=dest_id,
        )

    def _plan_uncached(self, from_aoi: int, dest_aoi: int, mode: str) -> Route | None:
        origin = self.bundle.aois.get(from_aoi)
        dest = self.bundle.aois.get(dest_aoi)
        if origin is None or dest is None:
            return None
        if from_aoi == dest_aoi:
            return Route(mode, [], from_aoi, dest_aoi, 0.0, 0.0)
        src = self.connections_for(origin, mode)
        dst = self.connections_for(dest, mode)
        if not src or not dst:
            return None
        if mode == "drive":
            return self._plan_drive(src, dst, from_aoi, dest_aoi)
        return self._plan_walk(src, dst, from_aoi, dest_aoi, mode)

    # -- driving -------------------------------------------------------------

    def _offset_on(self, conn: Connection) -> float:
        _, off, _ = self.bundle.roads[conn.road_id].geometry.nearest(conn.point)
        return off

    def _plan_drive(self, src, dst, from_aoi, dest_aoi) -> Route | None:
        roads = self.bundle.roads
        src_anchors = [(c.road_id, self._offset_on(c)) for c in src]
        dst_anchors = [(c.road_id, self._offset_on(c)) for c in dst]
        dst_by_road: dict[int, float] = {}
        for rid, off in sorted(dst_anchors):
            if rid not in dst_by_road or off < dst_by_road[rid]:
                dst_by_road[rid] = off

        best: tuple[float, tuple, list[RouteLeg]] | None = None

        # Origin and destination anchored on the same road, destination ahead.
        for rid, off in src_anchors:
            if rid in dst_by_road and dst_by_road[rid] >= off:
                road = roads[rid]
                t = (dst_by_road[rid] - off) / _mode_speed(road.speed_limit, "drive")
                cand = (t, (rid,), [RouteLeg(rid, +1, off, dst_by_road[rid])])
                if best is None or (cand[0], cand[1]) < (best[0], best[1]):
                    best = cand

        # dist[road] = (time, path) at the moment the road is entered at
        # offset 0; seeded by driving each origin road to its end.
        heap: list[tuple[float, tuple, int]] = []
        entry_cost: dict[int, tuple[float, tuple]] = {}
        first_leg: dict[tuple, RouteLeg] = {}
        for rid, off in sorted(src_anchors):
            road = roads.get(rid)
            if road is None or not road.drivable:
                continue
            t0 = (road.length - off) / _mode_speed(road.speed_limit, "drive")
            for nxt in self._drive_succ.get(rid, ()):
                cand = (t0, (rid, nxt))
                prev = entry_cost.get(nxt)
                if prev is None or cand < prev:
                    entry_cost[nxt] = cand
                    first_leg[(rid, nxt)] = RouteLeg(rid, +1, off, road.length)
                    heappush(heap, (t0, (rid, nxt), nxt))

        parent: dict[tuple, tuple | None] = {}
        done: set[int] = set()
        while heap:
            t, path, rid = heappop(heap)
            if rid in done:
                continue
            if entry_cost.get(rid, (math.inf, ())) < (t, path):
                continue
            done.add(rid)
            parent[path] = path
            road = roads[rid]
            if rid in dst_by_road:
                total = t + dst_by_road[rid] / _mode_speed(road.speed_limit, "drive")
                if best is None or (total, path) < (best[0], best[1]):
                    legs = self._drive_legs(path, first_leg, dst_by_road[rid])
                    best = (total, path, legs)
            t_exit = t + road.length / _mode_speed(road.speed_limit, "drive")
            for nxt in self._drive_succ.get(rid, ()):
                if nxt in done:
                    continue
                cand = (t_exit, path + (nxt,))
                prev = entry_cost.get(nxt)
                if prev is None or cand < prev:
                    entry_cost[nxt] = cand
                    heappush(heap, (t_exit, path + (nxt,), nxt))

        if best is None:
            return None
        total_t, _, legs = best
        return Route(
            "drive",
            legs,
            from_aoi,
            dest_aoi,
            total_length=sum(l.length for l in legs),
            estimated_time=total_t,
        )

    def _drive_legs(self, path: tuple, first_leg: dict, final_exit: float) -> list[RouteLeg]:
        roads = self.bundle.roads
        lead = first_leg[(path[0], path[1])]
        legs = [RouteLeg(lead.road_id, +1, lead.entry_offset, lead.exit_offset)]
        for rid in path[1:-1]:
            legs.append(RouteLeg(rid, +1, 0.0, roads[rid].length))
        legs.append(RouteLeg(path[-1], +1, 0.0, final_exit))
        return legs

    # -- walking / biking ----------------------------------------------------

    def _plan_walk(self, src, dst, from_aoi, dest_aoi, mode) -> Route | None:
        roads = self.bundle.roads
        cap = MODE_CAPS[mode]
        src_anchors = [(c.road_id, self._offset_on(c)) for c in sorted(src, key=lambda c: c.road_id)]
        dst_anchors = [(c.road_id, self._offset_on(c)) for c in sorted(dst, key=lambda c: c.road_id)]

        best: tuple[float, tuple, list[RouteLeg]] | None = None

        # Same-road shortcuts.
        for rid_s, off_s in src_anchors:
            for rid_d, off_d in dst_anchors:
                if rid_s != rid_d:
                    continue
                road = roads[rid_s]
                t = abs(off_d - off_s) / min(road.speed_limit, cap)
                direction = +1 if off_d >= off_s else -1
                cand = (t, (rid_s,), [RouteLeg(rid_s, direction, off_s, off_d)])
                if best is None or (cand[0], cand[1]) < (best[0], best[1]):
                    best = cand

        # Seed the endpoint graph from both ends of every origin road.
        heap: list[tuple[float, tuple, int]] = []
        cost: dict[int, tuple[float, tuple]] = {}
        seed_leg: dict[tuple[tuple, int], list[RouteLeg]] = {}
        for rid, off in src_anchors:
            road = roads.get(rid)
            if road is None or rid not in self._road_nodes:
                continue
            v = min(road.speed_limit, cap)
            a, b = self._road_nodes[rid]
            for node, t0, leg in (
                (a, off / v, RouteLeg(rid, -1, off, 0.0)),
                (b, (road.length - off) / v, RouteLeg(rid, +1, off, road.length)),
            ):
                cand = (t0, (rid,))
                if node not in cost or cand < cost[node]:
                    cost[node] = cand
                    seed_leg[((rid,), node)] = [leg]
                    heappush(heap, (t0, (rid,), node))

        # Destination attachment costs per endpoint node.
        dst_at: dict[int, list[tuple[int, float, int, float]]] = {}
        for rid, off in dst_anchors:
            road = roads.get(rid)
            if road is None or rid not in self._road_nodes:
                continue
            v = min(road.speed_limit, cap)
            a, b = self._road_nodes[rid]
            dst_at.setdefault(a, []).append((rid, off / v, +1, off))
            dst_at.setdefault(b, []).append((rid, (road.length - off) / v, -1, off))

        parents: dict[tuple[tuple, int], tuple] = {}
        done: set[int] = set()
        while heap:
            t, path, node = heappop(heap)
            if node in done:
                continue
            if cost.get(node, (math.inf, ())) < (t, path):
                continue
            done.add(node)
            for rid, t_extra, direction, off in dst_at.get(node, ()):
                total = t + t_extra
                fpath = path + (rid,)
                entry = 0.0 if direction == +1 else roads[rid].length
                if best is None or (total, fpath) < (best[0], best[1]):
                    legs = self._walk_legs(path, node, seed_leg, parents)
                    legs.append(RouteLeg(rid, direction, entry, off))
                    best = (total, fpath, legs)
            for nbr, rid, direction, length in self._walk_adj.get(node, ()):
                if nbr in done:
                    continue
                road = roads[rid]
                t_new = t + length / min(road.speed_limit, cap)
                cand = (t_new, path + (rid,))
                if nbr not in cost or cand < cost[nbr]:
                    cost[nbr] = cand
                    parents[(path + (rid,), nbr)] = (path, node, rid, direction)
                    heappush(heap, (t_new, path + (rid,), nbr))

        if best is None:
            return None
        total_t, _, legs = best
        legs = _merge_degenerate_legs(legs)
        return Route(
            mode,
            legs,
            from_aoi,
            dest_aoi,
            total_length=sum(l.length for l in legs),
            estimated_time=total_t,
        )

    def _walk_legs(self, path, node, seed_leg, parents) -> list[RouteLeg]:
        roads = self.bundle.roads
        chain: list[RouteLeg] = []
        cur = (path, node)
        while cur not in seed_leg:
            prev_path, prev_node, rid, direction = parents[cur]
            road = roads[rid]
            if direction == +1:
                chain.append(RouteLeg(rid, +1, 0.0, road.length))
            else:
                chain.append(RouteLeg(rid, -1, road.length, 0.0))
            cur = (prev_path, prev_node)
        return list(seed_leg[cur]) + list(reversed(chain))


def _merge_degenerate_legs(legs: list[RouteLeg]) -> list[RouteLeg]:
    """Drop zero-length legs (offset exactly at a road end)."""
    return [l for l in legs if l.length > 1e-9]
