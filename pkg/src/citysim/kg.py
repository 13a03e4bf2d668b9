"""The urban knowledge graph: typed relations over AOIs, POIs, brands,
categories and districts, derived from geometry, attributes and
(optionally) simulated visit logs."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

from .errors import UNKNOWN_ENTITY, UNKNOWN_RELATION, SimError
from .geometry import shared_boundary_length
from .model import MapBundle

RELATIONS = (
    "borderBy",
    "nearBy",
    "locateAt",
    "belongTo",
    "brandOf",
    "cate1Of",
    "cate2Of",
    "cate3Of",
    "competitive",
    "coCheckin",
    "similarFunc",
    "provideService",
)

Entity = tuple[str, object]  # (kind, id); id is an int for aoi/poi, str otherwise


@dataclass
class KgConfig:
    near_threshold_m: float = 500.0
    cocheckin_min: int = 2


def entity_str(entity: Entity) -> str:
    return f"{entity[0]}:{entity[1]}"


def parse_entity(kind: str, raw_id: str) -> Entity:
    if kind in ("aoi", "poi", "road"):
        return (kind, int(raw_id))
    return (kind, raw_id)


class KnowledgeGraph:
    def __init__(self):
        self._out: dict[tuple[Entity, str], set[Entity]] = defaultdict(set)
        self._in: dict[tuple[Entity, str], set[Entity]] = defaultdict(set)
        self._entities: set[Entity] = set()
        self.triple_count = 0

    def add(self, head: Entity, relation: str, tail: Entity) -> None:
        if tail not in self._out[(head, relation)]:
            self._out[(head, relation)].add(tail)
            self._in[(tail, relation)].add(head)
            self._entities.add(head)
            self._entities.add(tail)
            self.triple_count += 1

    def has_entity(self, entity: Entity) -> bool:
        return entity in self._entities

    def query(self, entity: Entity, relation: str, inverse: bool = False) -> list[Entity]:
        """One-hop neighbors, in deterministic (kind, id) order.

        A relation name prefixed with "~" walks the relation backwards.
        """
        if relation.startswith("~"):
            relation, inverse = relation[1:], not inverse
        if relation not in RELATIONS:
            raise SimError(UNKNOWN_RELATION, f"unknown relation {relation!r}")
        if entity not in self._entities:
            raise SimError(UNKNOWN_ENTITY, f"unknown entity {entity_str(entity)}")
        table = self._in if inverse else self._out
        return sorted(table.get((entity, relation), ()), key=lambda e: (e[0], str(e[1])))

    def query_path(self, entity: Entity, relations: list[str]) -> list[Entity]:
        """Composition of hops, deduplicated, deterministic order."""
        frontier = [entity]
        for relation in relations:
            nxt: set[Entity] = set()
            for ent in frontier:
                try:
                    nxt.update(self.query(ent, relation))
                except SimError as exc:
                    if exc.code == UNKNOWN_RELATION:
                        raise
                    continue
            frontier = sorted(nxt, key=lambda e: (e[0], str(e[1])))
        return frontier

    def triples(self):
        for (head, relation), tails in sorted(
            self._out.items(), key=lambda kv: (kv[0][1], str(kv[0][0][0]), str(kv[0][0][1]))
        ):
            for tail in sorted(tails, key=lambda e: (e[0], str(e[1]))):
                yield head, relation, tail

    def export_lines(self):
        for head, relation, tail in self.triples():
            yield f"{entity_str(head)} {relation} {entity_str(tail)}"


def build_kg(
    bundle: MapBundle,
    trips_log: list[tuple[int, int, int]] | None = None,
    config: KgConfig | None = None,
) -> KnowledgeGraph:
    """Derive the relation set from the map.

    ``trips_log`` rows are (person_id, poi_id, step) visit records; without
    them the coCheckin relation is simply absent.
    """
    cfg = config or KgConfig()
    kg = KnowledgeGraph()
    aois = bundle.aois

    aoi_ids = sorted(aois)
    centroids = {a: aois[a].centroid for a in aoi_ids}
    bboxes = {a: aois[a].boundary.bbox for a in aoi_ids}
    borders: set[tuple[int, int]] = set()
    near: set[tuple[int, int]] = set()
    for i, a in enumerate(aoi_ids):
        ax0, ay0, ax1, ay1 = bboxes[a]
        for b in aoi_ids[i + 1 :]:
            bx0, by0, bx1, by1 = bboxes[b]
            touching = not (ax1 < bx0 - 1e-6 or bx1 < ax0 - 1e-6 or ay1 < by0 - 1e-6 or by1 < ay0 - 1e-6)
            if touching and shared_boundary_length(aois[a].boundary, aois[b].boundary) > 1e-9:
                borders.add((a, b))
            elif centroids[a].dist(centroids[b]) <= cfg.near_threshold_m:
                near.add((a, b))
    for a, b in sorted(borders):
        kg.add(("aoi", a), "borderBy", ("aoi", b))
        kg.add(("aoi", b), "borderBy", ("aoi", a))
    for a, b in sorted(near):
        kg.add(("aoi", a), "nearBy", ("aoi", b))
        kg.add(("aoi", b), "nearBy", ("aoi", a))

    districts = bundle.metadata.get("districts") or {}
    for a in aoi_ids:
        district = districts.get(str(a), districts.get(a))
        if district:
            kg.add(("aoi", a), "belongTo", ("region", str(district)))

    poi_ids = sorted(bundle.pois)
    by_aoi: dict[int, list[int]] = defaultdict(list)
    by_cate2: dict[str, list[int]] = defaultdict(list)
    by_cate3: dict[str, list[int]] = defaultdict(list)
    for pid in poi_ids:
        poi = bundle.pois[pid]
        if poi.aoi_id is not None:
            kg.add(("poi", pid), "locateAt", ("aoi", poi.aoi_id))
            by_aoi[poi.aoi_id].append(pid)
        if poi.brand:
            kg.add(("brand", poi.brand), "brandOf", ("poi", pid))
        parts = poi.category.split(".")
        if parts and parts[0]:
            kg.add(("category", parts[0]), "cate1Of", ("poi", pid))
        if len(parts) >= 2:
            kg.add(("category", poi.cate2), "cate2Of", ("poi", pid))
        if len(parts) >= 3:
            kg.add(("category", poi.cate3), "cate3Of", ("poi", pid))
            kg.add(("poi", pid), "provideService", ("category", poi.cate3))
            by_cate3[poi.cate3].append(pid)
        by_cate2[poi.cate2].append(pid)

    # similarFunc: same functional class (cate2) inside one AOI.
    for aid, members in sorted(by_aoi.items()):
        groups: dict[str, list[int]] = defaultdict(list)
        for pid in members:
            groups[bundle.pois[pid].cate2].append(pid)
        for pids in groups.values():
            for i, p in enumerate(pids):
                for q in pids[i + 1 :]:
                    kg.add(("poi", p), "similarFunc", ("poi", q))
                    kg.add(("poi", q), "similarFunc", ("poi", p))

    # competitive: same niche (cate3) in bordering or nearby AOIs.
    related = borders | near
    related = related | {(b, a) for a, b in related}
    for cate, pids in sorted(by_cate3.items()):
        for i, p in enumerate(pids):
            pa = bundle.pois[p].aoi_id
            for q in pids[i + 1 :]:
                qa = bundle.pois[q].aoi_id
                if pa is None or qa is None or pa == qa:
                    continue
                if (pa, qa) in related:
                    kg.add(("poi", p), "competitive", ("poi", q))
                    kg.add(("poi", q), "competitive", ("poi", p))

    if trips_log:
        day_visits: dict[tuple[int, int], set[int]] = defaultdict(set)
        for person_id, poi_id, step in trips_log:
            if poi_id in bundle.pois:
                day_visits[(person_id, step // 86400)].add(poi_id)
        pair_people: dict[tuple[int, int], set[int]] = defaultdict(set)
        for (person_id, _day), pois in day_visits.items():
            members = sorted(pois)
            for i, p in enumerate(members):
                for q in members[i + 1 :]:
                    pair_people[(p, q)].add(person_id)
        for (p, q), people in sorted(pair_people.items()):
            if len(people) >= cfg.cocheckin_min:
                kg.add(("poi", p), "coCheckin", ("poi", q))
                kg.add(("poi", q), "coCheckin", ("poi", p))

    return kg
