"""Map enrichment: POI-to-AOI matching, AOI road connections, and the
heuristic hierarchical infrastructure network."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import BAD_CONFIG, SimError
from .geometry import Point, Polyline, _segments_intersect, point_in_polygon, point_segment_distance
from .model import Aoi, Connection, Finding, MapBundle, Poi, Road
from .spatial import SpatialIndex

POI_FALLBACK_TOLERANCE = 5.0  # m a POI may sit outside the nearest AOI
CONNECTION_RADIUS = 30.0  # m between an AOI boundary and a connectable road

DEFAULT_DEMAND_COEFF = {
    "residential": 1.0,
    "commercial": 2.0,
    "industrial": 3.0,
    "public_service": 1.5,
    "other": 0.5,
}


def _distance_to_boundary(p: Point, aoi: Aoi) -> float:
    return min(point_segment_distance(p, a, b) for a, b in aoi.boundary.edges())


def match_pois_to_aois(
    pois: dict[int, Poi], aois: dict[int, Aoi], index: SpatialIndex
) -> tuple[dict[int, Poi], list[Finding]]:
    """Assign each POI the AOI containing its coordinate.

    POIs outside every AOI snap to the nearest AOI within 5 m; farther ones
    are dropped with a warning.
    """
    findings: list[Finding] = []
    matched: dict[int, Poi] = {}
    for pid in sorted(pois):
        poi = pois[pid]
        aid = index.containing_aoi(poi.coordinate)
        if aid is None:
            best_d = math.inf
            for cand in sorted(aois):
                d = _distance_to_boundary(poi.coordinate, aois[cand])
                if d < best_d:
                    best_d = d
                    aid = cand
            if aid is None or best_d > POI_FALLBACK_TOLERANCE:
                findings.append(
                    Finding("warning", "POI_DROPPED", pid, "no AOI within 5 m; POI dropped")
                )
                continue
        poi.aoi_id = aid
        matched[pid] = poi
    return matched, findings


def _road_aoi_distance(road: Road, aoi: Aoi) -> float:
    """Minimum distance between the road polyline and the AOI boundary;
    zero when the road touches or enters the polygon."""
    pts = road.geometry.points
    if any(point_in_polygon(p, aoi.boundary) for p in pts):
        return 0.0
    best = math.inf
    for a, b in zip(pts, pts[1:]):
        for c, d in aoi.boundary.edges():
            if _segments_intersect(a, b, c, d):
                return 0.0
            best = min(
                best,
                point_segment_distance(a, c, d),
                point_segment_distance(b, c, d),
                point_segment_distance(c, a, b),
                point_segment_distance(d, a, b),
            )
    return best


def compute_aoi_connections(aoi: Aoi, roads: dict[int, Road], index: SpatialIndex) -> list[Connection]:
    """One connection per road within 30 m of the AOI boundary.

    The connection sits at the point of the road nearest the AOI centroid
    (the perpendicular foot for a road running alongside the AOI).
    """
    x0, y0, x1, y1 = aoi.boundary.bbox
    centroid = aoi.centroid
    out: list[Connection] = []
    for rid in index.roads_near_bbox(x0, y0, x1, y1, CONNECTION_RADIUS):
        road = roads[rid]
        if _road_aoi_distance(road, aoi) > CONNECTION_RADIUS:
            continue
        point, _, _ = road.geometry.nearest(centroid)
        out.append(
            Connection(
                road_id=rid,
                point=point,
                walk_allowed=road.walkable,
                drive_allowed=road.drivable,
            )
        )
    return out


def enrich_bundle(bundle: MapBundle, index: SpatialIndex | None = None) -> list[Finding]:
    """Fill missing POI aoi_ids and AOI connections in place."""
    index = index or SpatialIndex(bundle.aois.values(), bundle.roads.values())
    findings: list[Finding] = []
    unmatched = {pid: p for pid, p in bundle.pois.items() if p.aoi_id is None}
    if unmatched:
        matched, f = match_pois_to_aois(unmatched, bundle.aois, index)
        findings.extend(f)
        for pid in unmatched:
            if pid not in matched:
                del bundle.pois[pid]
    for aoi in bundle.aois.values():
        if not aoi.connections:
            aoi.connections = compute_aoi_connections(aoi, bundle.roads, index)
    return findings


@dataclass
class InfraVertex:
    id: int
    coordinate: Point
    level: int
    aoi_id: int
    demand: float


@dataclass
class InfraEdge:
    vertex_pair: tuple[int, int]  # (child, parent)
    geometry: Polyline
    level: int


@dataclass
class InfraConfig:
    coeff: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_DEMAND_COEFF))
    cluster_radius: float = 1000.0
    levels: int = 2


@dataclass
class InfraNetwork:
    vertices: list[InfraVertex]
    edges: list[InfraEdge]

    def level(self, k: int) -> list[InfraVertex]:
        return [v for v in self.vertices if v.level == k]


def build_infrastructure_network(bundle: MapBundle, config: InfraConfig) -> InfraNetwork:
    """AOIs become level-0 vertices whose demand is population times a
    land-use coefficient; each higher level greedily clusters the one below
    within ``cluster_radius`` and connects children to the cluster vertex at
    the demand-weighted centroid."""
    if config.cluster_radius <= 0:
        raise SimError(BAD_CONFIG, "cluster_radius must be positive")
    if config.levels <= 0:
        raise SimError(BAD_CONFIG, "levels must be positive")

    vertices: list[InfraVertex] = []
    edges: list[InfraEdge] = []
    next_id = 0
    current: list[InfraVertex] = []
    for aid in sorted(bundle.aois):
        aoi = bundle.aois[aid]
        coeff = config.coeff.get(aoi.land_use, config.coeff.get("other", 1.0))
        v = InfraVertex(next_id, aoi.centroid, 0, aid, aoi.population * coeff)
        next_id += 1
        current.append(v)
        vertices.append(v)

    for level in range(1, config.levels):
        if len(current) <= 1:
            break
        # Seeds in demand order; each seed absorbs every unassigned vertex
        # within the cluster radius of the seed itself.
        order = sorted(current, key=lambda v: (-v.demand, v.id))
        unassigned = {v.id for v in current}
        clusters: list[tuple[InfraVertex, list[InfraVertex]]] = []
        for seed in order:
            if seed.id not in unassigned:
                continue
            members = [
                v
                for v in current
                if v.id in unassigned and v.coordinate.dist(seed.coordinate) <= config.cluster_radius
            ]
            for m in members:
                unassigned.discard(m.id)
            clusters.append((seed, members))
        parents: list[InfraVertex] = []
        for seed, members in clusters:
            total = sum(m.demand for m in members)
            if total > 0:
                cx = sum(m.coordinate.x * m.demand for m in members) / total
                cy = sum(m.coordinate.y * m.demand for m in members) / total
            else:
                cx = sum(m.coordinate.x for m in members) / len(members)
                cy = sum(m.coordinate.y for m in members) / len(members)
            parent = InfraVertex(next_id, Point(cx, cy), level, seed.aoi_id, total)
            next_id += 1
            parents.append(parent)
            vertices.append(parent)
            for m in members:
                geom = Polyline((m.coordinate, parent.coordinate))
                edges.append(InfraEdge((m.id, parent.id), geom, min(m.level, parent.level)))
        current = parents

    return InfraNetwork(vertices, edges)
