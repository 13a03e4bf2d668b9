"""Core domain types of the city model and whole-map validation.

Conventions used everywhere downstream:
  * coordinates: projected planar meters
  * time: integer seconds since simulation midnight of day 0; values past
    86400 address later days
  * money: integer minor units (cents), so ledger checks can be exact
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .geometry import Point, Polygon, Polyline, point_in_polygon, point_segment_distance

LAND_USES = ("residential", "commercial", "industrial", "public_service", "other")
MODES = ("drive", "walk", "bike", "public_transport")
TURN_TYPES = ("left", "right", "straight", "uturn")

SPEED_LIMIT_CEILING = 42.0  # m/s; anything above is a data error
CONNECTION_TOLERANCE = 1.0  # m between a stored connection point and its road
POI_AOI_TOLERANCE = 5.0  # m a POI may sit outside its assigned AOI

DAY_SECONDS = 86400


@dataclass
class Road:
    id: int
    geometry: Polyline
    lane_count: int = 1
    speed_limit: float = 13.9
    walkable: bool = True
    drivable: bool = True
    extra: dict = field(default_factory=dict)

    @property
    def length(self) -> float:
        return self.geometry.length


@dataclass
class Movement:
    from_road: int
    to_road: int
    turn_type: str = "straight"


@dataclass
class SignalPhase:
    green_movement_set: tuple[int, ...]  # indices into the junction's movements
    duration_seconds: int


@dataclass
class Junction:
    id: int
    road_ids: list[int]
    movements: list[Movement] = field(default_factory=list)
    signal_phases: list[SignalPhase] | None = None
    extra: dict = field(default_factory=dict)


@dataclass
class Enterprise:
    name: str
    category: str
    registered_capital: int = 0
    employee_count: int = 0
    average_wage: int = 0
    extra: dict = field(default_factory=dict)


@dataclass
class Connection:
    road_id: int
    point: Point
    walk_allowed: bool
    drive_allowed: bool


@dataclass
class Aoi:
    id: int
    boundary: Polygon
    land_use: str = "other"
    population: int = 0
    connections: list[Connection] = field(default_factory=list)
    enterprises: list[Enterprise] = field(default_factory=list)
    consumption: dict[str, int] = field(default_factory=dict)
    rent: int = 0
    area: float | None = None  # cached; recomputed from the boundary when absent
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.area is None:
            self.area = self.boundary.area

    @property
    def centroid(self) -> Point:
        return self.boundary.centroid


@dataclass
class Poi:
    id: int
    coordinate: Point
    name: str
    category: str  # three dot-separated levels: cate1.cate2.cate3
    aoi_id: int | None = None
    brand: str | None = None
    extra: dict = field(default_factory=dict)

    @property
    def cate1(self) -> str:
        return self.category.split(".")[0]

    @property
    def cate2(self) -> str:
        parts = self.category.split(".")
        return ".".join(parts[:2]) if len(parts) >= 2 else self.category

    @property
    def cate3(self) -> str:
        return self.category


@dataclass
class Trip:
    """One leg of a person's agenda: where to go, when, and how.

    ``end`` is ("aoi", id) or ("poi", id). ``start`` is informational only;
    movement always begins wherever the person actually is.
    """

    end: tuple[str, int]
    depart_time: int
    mode: str = "walk"
    start: Point | None = None
    extra: dict = field(default_factory=dict)


@dataclass
class Person:
    id: int
    home: int  # AOI id
    trips: list[Trip] = field(default_factory=list)
    persona: dict[str, str] = field(default_factory=dict)
    balance: int = 0
    wage: int = 0
    workplace: int | None = None
    extra: dict = field(default_factory=dict)


@dataclass
class MapBundle:
    roads: dict[int, Road] = field(default_factory=dict)
    junctions: dict[int, Junction] = field(default_factory=dict)
    aois: dict[int, Aoi] = field(default_factory=dict)
    pois: dict[int, Poi] = field(default_factory=dict)
    persons: dict[int, Person] = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def destination_exists(self, end: tuple[str, int]) -> bool:
        kind, ident = end
        if kind == "aoi":
            return ident in self.aois
        if kind == "poi":
            return ident in self.pois
        return False


@dataclass
class Finding:
    severity: str  # "error" | "warning"
    code: str
    subject_id: int | str | None
    message: str


class ValidationReport(list):
    """A list of findings with convenience filters."""

    def errors(self) -> list[Finding]:
        return [f for f in self if f.severity == "error"]

    def warnings(self) -> list[Finding]:
        return [f for f in self if f.severity == "warning"]

    @property
    def ok(self) -> bool:
        return not self.errors()


def validate_map(bundle: MapBundle) -> ValidationReport:
    """Check every structural invariant of the bundle.

    Violations become report entries; this function never raises.
    """
    report = ValidationReport()
    err = lambda code, subject, msg: report.append(Finding("error", code, subject, msg))
    warn = lambda code, subject, msg: report.append(Finding("warning", code, subject, msg))

    for road in bundle.roads.values():
        pts = road.geometry.points
        if len(pts) < 2:
            err("BAD_GEOMETRY", road.id, "road geometry needs at least 2 points")
            continue
        if any(not p.is_finite() for p in pts):
            err("NONFINITE_COORD", road.id, "road geometry has non-finite coordinates")
            continue
        if any(a == b for a, b in zip(pts, pts[1:])):
            err("BAD_GEOMETRY", road.id, "road geometry repeats consecutive points")
        if road.geometry.length <= 0:
            err("BAD_GEOMETRY", road.id, "road has zero length")
        if road.lane_count < 1:
            err("BAD_LANES", road.id, f"lane_count {road.lane_count} < 1")
        if not (0 < road.speed_limit <= SPEED_LIMIT_CEILING):
            err(
                "BAD_SPEED_LIMIT",
                road.id,
                f"speed_limit {road.speed_limit} outside (0, {SPEED_LIMIT_CEILING}]",
            )

    for junction in bundle.junctions.values():
        if not junction.road_ids:
            err("EMPTY_JUNCTION", junction.id, "junction references no roads")
        for rid in junction.road_ids:
            if rid not in bundle.roads:
                err("DANGLING_REF", junction.id, f"junction references missing road {rid}")
        road_set = set(junction.road_ids)
        for m in junction.movements:
            if m.from_road not in road_set or m.to_road not in road_set:
                err(
                    "BAD_MOVEMENT",
                    junction.id,
                    f"movement {m.from_road}->{m.to_road} uses roads outside the junction",
                )
            if m.turn_type not in TURN_TYPES:
                err("BAD_MOVEMENT", junction.id, f"unknown turn type {m.turn_type!r}")
        if junction.signal_phases:
            n_moves = len(junction.movements)
            for phase in junction.signal_phases:
                if phase.duration_seconds <= 0:
                    err("BAD_PHASE", junction.id, "signal phase duration must be positive")
                if any(i < 0 or i >= n_moves for i in phase.green_movement_set):
                    err("BAD_PHASE", junction.id, "signal phase indexes a missing movement")

    for aoi in bundle.aois.values():
        ring = aoi.boundary.ring
        if len(ring) < 3:
            err("BAD_POLYGON", aoi.id, "boundary needs at least 3 points")
            continue
        if any(not p.is_finite() for p in ring):
            err("NONFINITE_COORD", aoi.id, "boundary has non-finite coordinates")
            continue
        if aoi.boundary.area <= 0:
            err("BAD_POLYGON", aoi.id, "boundary has zero area")
        elif not aoi.boundary.is_simple():
            err("BAD_POLYGON", aoi.id, "boundary is self-intersecting")
        if aoi.population < 0:
            err("BAD_POPULATION", aoi.id, "population is negative")
        computed = aoi.boundary.area
        if aoi.area is not None and computed > 0:
            if abs(aoi.area - computed) > 1e-6 * max(abs(computed), 1.0):
                err(
                    "AREA_MISMATCH",
                    aoi.id,
                    f"stored area {aoi.area} != computed {computed}",
                )
        for conn in aoi.connections:
            road = bundle.roads.get(conn.road_id)
            if road is None:
                err("DANGLING_REF", aoi.id, f"connection references missing road {conn.road_id}")
                continue
            _, _, dist = road.geometry.nearest(conn.point)
            if dist > CONNECTION_TOLERANCE:
                err(
                    "CONNECTION_OFF_ROAD",
                    aoi.id,
                    f"connection point {dist:.2f} m from road {conn.road_id}",
                )
        if aoi.population > 0 and not aoi.connections:
            err("ISOLATED_AOI", aoi.id, "populated AOI has no road connection")
        for ent in aoi.enterprises:
            if ent.average_wage < 0:
                err("BAD_WAGE", aoi.id, f"enterprise {ent.name!r} has negative wage")
            if ent.employee_count < 0:
                err("BAD_WAGE", aoi.id, f"enterprise {ent.name!r} has negative headcount")

    for poi in bundle.pois.values():
        if not poi.coordinate.is_finite():
            err("NONFINITE_COORD", poi.id, "POI coordinate is non-finite")
            continue
        if poi.aoi_id is None:
            warn("UNMATCHED_POI", poi.id, "POI has no containing AOI assigned")
            continue
        aoi = bundle.aois.get(poi.aoi_id)
        if aoi is None:
            err("DANGLING_REF", poi.id, f"POI references missing AOI {poi.aoi_id}")
            continue
        if not point_in_polygon(poi.coordinate, aoi.boundary):
            dist = min(
                point_segment_distance(poi.coordinate, a, b) for a, b in aoi.boundary.edges()
            )
            if dist > POI_AOI_TOLERANCE:
                err(
                    "POI_OUTSIDE_AOI",
                    poi.id,
                    f"POI lies {dist:.1f} m outside AOI {poi.aoi_id}",
                )

    for person in bundle.persons.values():
        if person.home not in bundle.aois:
            err("DANGLING_REF", person.id, f"person home AOI {person.home} missing")
        last = -math.inf
        for i, trip in enumerate(person.trips):
            if trip.mode not in MODES:
                err("BAD_MODE", person.id, f"trip {i} has unknown mode {trip.mode!r}")
            if trip.depart_time < 0:
                err("BAD_TRIP_TIME", person.id, f"trip {i} departs at negative time")
            if trip.depart_time <= last:
                err("TRIP_ORDER", person.id, f"trip {i} does not depart strictly later")
            last = trip.depart_time
            if not bundle.destination_exists(trip.end):
                err(
                    "DANGLING_REF",
                    person.id,
                    f"trip {i} destination {trip.end[0]} {trip.end[1]} missing",
                )
        if person.workplace is not None and person.workplace not in bundle.aois:
            err("DANGLING_REF", person.id, f"workplace AOI {person.workplace} missing")

    return report
