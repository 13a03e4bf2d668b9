"""Loading and saving the JSON map format.

One UTF-8 JSON document holds the whole city: metadata, roads, junctions,
AOIs, POIs and persons. Unknown fields survive a load/save round trip so
third-party annotations are not destroyed.
"""

from __future__ import annotations

import json
from typing import IO, Any

from .errors import PARSE_ERROR, SCHEMA_ERROR, SimError
from .geometry import Point, Polygon, Polyline
from .model import (
    Aoi,
    Connection,
    Enterprise,
    Junction,
    MapBundle,
    Movement,
    Person,
    Poi,
    Road,
    SignalPhase,
    Trip,
    validate_map,
)

_ROAD_FIELDS = {"id", "geometry", "lane_count", "speed_limit", "walkable", "drivable"}
_JUNCTION_FIELDS = {"id", "road_ids", "movements", "signal_phases"}
_AOI_FIELDS = {
    "id",
    "boundary",
    "land_use",
    "population",
    "connections",
    "enterprises",
    "consumption",
    "rent",
    "area",
}
_POI_FIELDS = {"id", "coordinate", "name", "category", "aoi_id", "brand"}
_PERSON_FIELDS = {"id", "home", "trips", "persona", "balance", "wage", "workplace"}
_ENTERPRISE_FIELDS = {"name", "category", "registered_capital", "employee_count", "average_wage"}
_TRIP_FIELDS = {"end", "depart_time", "mode", "start"}


class SchemaError(SimError):
    def __init__(self, message: str, report=None):
        super().__init__(SCHEMA_ERROR, message)
        self.report = report


def _point(value, what: str) -> Point:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise SchemaError(f"{what}: expected [x, y], got {value!r}")
    return Point(float(value[0]), float(value[1]))


def _points(value, what: str) -> tuple[Point, ...]:
    if not isinstance(value, list):
        raise SchemaError(f"{what}: expected a list of [x, y] pairs")
    return tuple(_point(v, what) for v in value)


def _extra(obj: dict, known: set[str]) -> dict:
    return {k: v for k, v in obj.items() if k not in known}


def _require(obj: dict, key: str, what: str) -> Any:
    if key not in obj:
        raise SchemaError(f"{what}: missing required field {key!r}")
    return obj[key]


def _parse_trip(obj: dict, what: str) -> Trip:
    raw_end = _require(obj, "end", what)
    if not isinstance(raw_end, dict) or len(raw_end) != 1:
        raise SchemaError(f"{what}: trip end must be {{'aoi': id}} or {{'poi': id}}")
    kind, ident = next(iter(raw_end.items()))
    if kind not in ("aoi", "poi"):
        raise SchemaError(f"{what}: unknown destination kind {kind!r}")
    start = obj.get("start")
    return Trip(
        end=(kind, int(ident)),
        depart_time=int(_require(obj, "depart_time", what)),
        mode=obj.get("mode", "walk"),
        start=_point(start, what) if start is not None else None,
        extra=_extra(obj, _TRIP_FIELDS),
    )


def parse_bundle(doc: dict) -> MapBundle:
    """Build a MapBundle from a parsed JSON document (no validation)."""
    if not isinstance(doc, dict):
        raise SchemaError("top level must be a JSON object")
    bundle = MapBundle(metadata=doc.get("metadata", {}))

    for obj in doc.get("roads", []):
        rid = int(_require(obj, "id", "road"))
        bundle.roads[rid] = Road(
            id=rid,
            geometry=Polyline(_points(_require(obj, "geometry", f"road {rid}"), f"road {rid}")),
            lane_count=int(obj.get("lane_count", 1)),
            speed_limit=float(obj.get("speed_limit", 13.9)),
            walkable=bool(obj.get("walkable", True)),
            drivable=bool(obj.get("drivable", True)),
            extra=_extra(obj, _ROAD_FIELDS),
        )

    for obj in doc.get("junctions", []):
        jid = int(_require(obj, "id", "junction"))
        movements = [
            Movement(int(m["from_road"]), int(m["to_road"]), m.get("turn_type", "straight"))
            for m in obj.get("movements", [])
        ]
        phases = None
        if obj.get("signal_phases") is not None:
            phases = [
                SignalPhase(
                    tuple(int(i) for i in p.get("green_movement_set", [])),
                    int(p.get("duration_seconds", 0)),
                )
                for p in obj["signal_phases"]
            ]
        bundle.junctions[jid] = Junction(
            id=jid,
            road_ids=[int(r) for r in _require(obj, "road_ids", f"junction {jid}")],
            movements=movements,
            signal_phases=phases,
            extra=_extra(obj, _JUNCTION_FIELDS),
        )

    for obj in doc.get("aois", []):
        aid = int(_require(obj, "id", "aoi"))
        connections = [
            Connection(
                road_id=int(c["road_id"]),
                point=_point(c["point"], f"aoi {aid} connection"),
                walk_allowed=bool(c.get("walk_allowed", True)),
                drive_allowed=bool(c.get("drive_allowed", True)),
            )
            for c in obj.get("connections", [])
        ]
        bundle.aois[aid] = Aoi(
            id=aid,
            boundary=Polygon(_points(_require(obj, "boundary", f"aoi {aid}"), f"aoi {aid}")),
            land_use=obj.get("land_use", "other"),
            population=int(obj.get("population", 0)),
            connections=connections,
            enterprises=[
                Enterprise(
                    name=e.get("name", ""),
                    category=e.get("category", ""),
                    registered_capital=int(e.get("registered_capital", 0)),
                    employee_count=int(e.get("employee_count", 0)),
                    average_wage=int(e.get("average_wage", 0)),
                    extra=_extra(e, _ENTERPRISE_FIELDS),
                )
                for e in obj.get("enterprises", [])
            ],
            consumption={str(k): int(v) for k, v in obj.get("consumption", {}).items()},
            rent=int(obj.get("rent", 0)),
            area=float(obj["area"]) if obj.get("area") is not None else None,
            extra=_extra(obj, _AOI_FIELDS),
        )

    for obj in doc.get("pois", []):
        pid = int(_require(obj, "id", "poi"))
        bundle.pois[pid] = Poi(
            id=pid,
            coordinate=_point(_require(obj, "coordinate", f"poi {pid}"), f"poi {pid}"),
            name=obj.get("name", ""),
            category=obj.get("category", ""),
            aoi_id=int(obj["aoi_id"]) if obj.get("aoi_id") is not None else None,
            brand=obj.get("brand"),
            extra=_extra(obj, _POI_FIELDS),
        )

    for obj in doc.get("persons", []):
        pid = int(_require(obj, "id", "person"))
        bundle.persons[pid] = Person(
            id=pid,
            home=int(_require(obj, "home", f"person {pid}")),
            trips=[_parse_trip(t, f"person {pid}") for t in obj.get("trips", [])],
            persona={str(k): str(v) for k, v in obj.get("persona", {}).items()},
            balance=int(obj.get("balance", 0)),
            wage=int(obj.get("wage", 0)),
            workplace=int(obj["workplace"]) if obj.get("workplace") is not None else None,
            extra=_extra(obj, _PERSON_FIELDS),
        )

    return bundle


def load_map(source: bytes | str | IO) -> MapBundle:
    """Parse, build and validate a map document.

    Raises SimError(PARSE_ERROR) on malformed JSON and SchemaError (code
    SCHEMA_ERROR, ``.report`` attached) when validation finds errors.
    """
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    if not source or not source.strip():
        raise SimError(PARSE_ERROR, "empty document")
    try:
        doc = json.loads(source)
    except json.JSONDecodeError as exc:
        raise SimError(PARSE_ERROR, f"malformed JSON: {exc}") from exc
    bundle = parse_bundle(doc)
    report = validate_map(bundle)
    if not report.ok:
        codes = ", ".join(sorted({f.code for f in report.errors()}))
        exc = SchemaError(f"map failed validation: {codes}", report)
        raise exc
    return bundle


def load_map_file(path) -> MapBundle:
    with open(path, "rb") as fh:
        return load_map(fh)


def bundle_to_doc(bundle: MapBundle) -> dict:
    """Serialize a bundle back to the plain-JSON document shape."""
    doc: dict[str, Any] = {"metadata": bundle.metadata}

    doc["roads"] = [
        {
            "id": r.id,
            "geometry": [[p.x, p.y] for p in r.geometry.points],
            "lane_count": r.lane_count,
            "speed_limit": r.speed_limit,
            "walkable": r.walkable,
            "drivable": r.drivable,
            **r.extra,
        }
        for r in sorted(bundle.roads.values(), key=lambda r: r.id)
    ]
    doc["junctions"] = [
        {
            "id": j.id,
            "road_ids": list(j.road_ids),
            "movements": [
                {"from_road": m.from_road, "to_road": m.to_road, "turn_type": m.turn_type}
                for m in j.movements
            ],
            **(
                {
                    "signal_phases": [
                        {
                            "green_movement_set": list(p.green_movement_set),
                            "duration_seconds": p.duration_seconds,
                        }
                        for p in j.signal_phases
                    ]
                }
                if j.signal_phases is not None
                else {}
            ),
            **j.extra,
        }
        for j in sorted(bundle.junctions.values(), key=lambda j: j.id)
    ]
    doc["aois"] = [
        {
            "id": a.id,
            "boundary": [[p.x, p.y] for p in a.boundary.ring],
            "land_use": a.land_use,
            "population": a.population,
            "connections": [
                {
                    "road_id": c.road_id,
                    "point": [c.point.x, c.point.y],
                    "walk_allowed": c.walk_allowed,
                    "drive_allowed": c.drive_allowed,
                }
                for c in a.connections
            ],
            "enterprises": [
                {
                    "name": e.name,
                    "category": e.category,
                    "registered_capital": e.registered_capital,
                    "employee_count": e.employee_count,
                    "average_wage": e.average_wage,
                    **e.extra,
                }
                for e in a.enterprises
            ],
            "consumption": dict(sorted(a.consumption.items())),
            "rent": a.rent,
            "area": a.area,
            **a.extra,
        }
        for a in sorted(bundle.aois.values(), key=lambda a: a.id)
    ]
    doc["pois"] = [
        {
            "id": p.id,
            "coordinate": [p.coordinate.x, p.coordinate.y],
            "name": p.name,
            "category": p.category,
            "aoi_id": p.aoi_id,
            **({"brand": p.brand} if p.brand is not None else {}),
            **p.extra,
        }
        for p in sorted(bundle.pois.values(), key=lambda p: p.id)
    ]
    doc["persons"] = [
        {
            "id": p.id,
            "home": p.home,
            "trips": [
                {
                    "end": {t.end[0]: t.end[1]},
                    "depart_time": t.depart_time,
                    "mode": t.mode,
                    **({"start": [t.start.x, t.start.y]} if t.start is not None else {}),
                    **t.extra,
                }
                for t in p.trips
            ],
            "persona": p.persona,
            "balance": p.balance,
            "wage": p.wage,
            "workplace": p.workplace,
            **p.extra,
        }
        for p in sorted(bundle.persons.values(), key=lambda p: p.id)
    ]
    return doc


def save_map(bundle: MapBundle) -> str:
    return json.dumps(bundle_to_doc(bundle), ensure_ascii=False, indent=1)


def save_map_file(bundle: MapBundle, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(save_map(bundle))
        fh.write("\n")
