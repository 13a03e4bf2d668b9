"""Programmatic fixture maps.

Three families: ``paper_city`` (the demo downtown with the well-known AOI
500000000), ``grid_city`` (parametric one-way grid used for routing and
load tests; 5x5 junctions yield the bundled "grid4x4" map), and ``kg_town``
(20 adjacent parcels for knowledge-graph checks).
"""

from __future__ import annotations

import math

from .geometry import Point, Polygon, Polyline
from .ingest import enrich_bundle
from .model import Aoi, Enterprise, Junction, MapBundle, Movement, Person, Poi, Road, Trip
from .spatial import build_index


def _rect(x0: float, y0: float, w: float, h: float) -> Polygon:
    return Polygon((Point(x0, y0), Point(x0 + w, y0), Point(x0 + w, y0 + h), Point(x0, y0 + h)))


def _turn_type(incoming: Road, outgoing: Road) -> str:
    hx, hy = incoming.geometry.heading_at(incoming.length)
    gx, gy = outgoing.geometry.heading_at(0.0)
    cross = hx * gy - hy * gx
    dot = hx * gx + hy * gy
    angle = math.degrees(math.atan2(cross, dot))
    if abs(angle) <= 30:
        return "straight"
    if abs(angle) >= 150:
        return "uturn"
    return "left" if angle > 0 else "right"


def build_movements(bundle: MapBundle, tolerance: float = 0.5) -> None:
    """Fill junction movements from road-endpoint geometry: every incoming
    road connects to every outgoing road at the shared junction point."""
    for junction in bundle.junctions.values():
        roads = [bundle.roads[r] for r in junction.road_ids if r in bundle.roads]
        position = junction.extra.get("position")
        if position is None:
            continue
        p = Point(position[0], position[1])
        incoming = [r for r in roads if r.geometry.points[-1].dist(p) <= tolerance]
        outgoing = [r for r in roads if r.geometry.points[0].dist(p) <= tolerance]
        junction.movements = [
            Movement(i.id, o.id, _turn_type(i, o))
            for i in sorted(incoming, key=lambda r: r.id)
            for o in sorted(outgoing, key=lambda r: r.id)
            if i.id != o.id
        ]


def paper_city() -> MapBundle:
    """Demo downtown: a 3x3 block grid of one-way streets whose south-west
    block holds the 253x103 m (26059 m^2) commercial parcel 500000000."""
    bundle = MapBundle(metadata={"name": "paper_city", "epoch": "planar-demo"})

    # Block width chosen so the parcel sits 10 m from streets 10 and 11 and
    # 29 m from street 23, while the nearest foreign road point (the corner
    # junction at (292, 0)) stays sqrt(29^2 + 10^2) ~ 30.7 m away.
    bx, by = 292.0, 400.0
    nx, ny = 4, 4

    def jpos(ix: int, iy: int) -> Point:
        return Point(ix * bx, iy * by)

    # Ids 10/11/23 belong to the three streets hugging the showcase parcel.
    special = {("h", 0, 0): 10, ("v", 0, 0): 11, ("v", 1, 0): 23}
    rid = 24
    for iy in range(ny):
        east = True if iy == 0 else (False if iy == ny - 1 else iy % 2 == 1)
        for ix in range(nx - 1):
            a, b = jpos(ix, iy), jpos(ix + 1, iy)
            if not east:
                a, b = b, a
            road_id = special.get(("h", ix, iy))
            if road_id is None:
                road_id = rid
                rid += 1
            bundle.roads[road_id] = Road(road_id, Polyline((a, b)), 2, 13.9, True, True)
    for ix in range(nx):
        north = False if ix == 0 else (True if ix == nx - 1 else ix % 2 == 1)
        for iy in range(ny - 1):
            a, b = jpos(ix, iy), jpos(ix, iy + 1)
            if not north:
                a, b = b, a
            road_id = special.get(("v", ix, iy))
            if road_id is None:
                road_id = rid
                rid += 1
            bundle.roads[road_id] = Road(road_id, Polyline((a, b)), 2, 13.9, True, True)

    jid = 900
    for iy in range(ny):
        for ix in range(nx):
            p = jpos(ix, iy)
            members = [
                r.id
                for r in bundle.roads.values()
                if r.geometry.points[0] == p or r.geometry.points[-1] == p
            ]
            bundle.junctions[jid] = Junction(
                id=jid, road_ids=sorted(members), extra={"position": [p.x, p.y]}
            )
            jid += 1
    build_movements(bundle)

    # 253 x 103 m gives the parcel an exact integer area of 26059 m^2.
    bundle.aois[500000000] = Aoi(
        id=500000000,
        boundary=_rect(10.0, 10.0, 253.0, 103.0),
        land_use="commercial",
        population=1219,
        enterprises=[
            Enterprise("Golden Block Retail Group", "retail", 120_000_000, 140, 700_000),
            Enterprise("Plaza Services Co", "services", 30_000_000, 45, 620_000),
        ],
        consumption={"food": 3200, "shopping": 5400, "leisure": 4100},
        rent=1_250_000,
    )

    # The demo actors live in blocks far apart so the showcase trips really
    # drive and walk. 25 m insets keep corner junctions outside the 30 m
    # connection radius (25*sqrt(2) > 30) while the four flanking streets
    # connect at 25 m.
    def block_rect(bx_i: int, by_i: int) -> Polygon:
        return _rect(bx_i * bx + 25.0, by_i * by + 25.0, bx - 50.0, by - 50.0)

    bundle.aois[500000001] = Aoi(
        id=500000001,
        boundary=block_rect(2, 0),
        land_use="commercial",
        population=240,
        enterprises=[Enterprise("Eastside Works", "manufacturing", 80_000_000, 310, 650_000)],
        consumption={"food": 2800},
        rent=900_000,
    )
    bundle.aois[500000010] = Aoi(
        id=500000010,
        boundary=block_rect(0, 2),
        land_use="public_service",
        population=60,
        rent=400_000,
    )
    bundle.aois[500000002] = Aoi(
        id=500000002,
        boundary=block_rect(2, 2),
        land_use="residential",
        population=5200,
        rent=520_000,
    )
    filler = [
        ((1, 0), "commercial"),
        ((0, 1), "residential"),
        ((1, 1), "public_service"),
        ((2, 1), "residential"),
        ((1, 2), "industrial"),
    ]
    for i, ((bx_i, by_i), land) in enumerate(filler):
        aid = 500000003 + i
        aoi = Aoi(
            id=aid,
            boundary=block_rect(bx_i, by_i),
            land_use=land,
            population=900 if land == "residential" else 80,
            rent=450_000,
        )
        if land == "commercial":
            aoi.enterprises = [Enterprise(f"Midtown Shops {aid}", "retail", 25_000_000, 70, 540_000)]
            aoi.consumption = {"food": 2400, "shopping": 3600}
        if land == "industrial":
            aoi.enterprises = [Enterprise("Northern Plant", "manufacturing", 60_000_000, 210, 590_000)]
        bundle.aois[aid] = aoi

    cates = [
        ("food.restaurant.chinese", "Jade Wok", "JadeGroup"),
        ("food.restaurant.fast", "Quick Bites", None),
        ("food.cafe.coffee", "Corner Coffee", "BeanHouse"),
        ("shopping.mall.department", "Galleria Floor", "Galleria"),
        ("shopping.grocery.supermarket", "Fresh Mart", "FreshCo"),
        ("leisure.cinema.multiplex", "Star Screens", None),
    ]
    pid = 700000000
    for k in range(51):
        cate, name, brand = cates[k % len(cates)]
        row, col = divmod(k, 13)
        bundle.pois[pid] = Poi(
            id=pid,
            coordinate=Point(22.0 + col * 18.0, 25.0 + row * 20.0),
            name=f"{name} #{k + 1}",
            category=cate,
            aoi_id=500000000,
            brand=brand,
        )
        pid += 1
    # A handful of POIs in the eastern block, lunch targets for agents.
    for k in range(6):
        cate, name, brand = cates[k % 3]
        bundle.pois[pid] = Poi(
            id=pid,
            coordinate=Point(2 * bx + 40.0 + k * 30.0, 60.0),
            name=f"East {name} #{k + 1}",
            category=cate,
            aoi_id=500000001,
            brand=brand,
        )
        pid += 1

    bundle.persons[1000] = Person(
        id=1000, home=500000002, balance=1_000_000, wage=600_000, workplace=500000001,
        persona={"occupation": "engineer"},
    )
    for i, pid_ in enumerate(range(1001, 1005)):
        bundle.persons[pid_] = Person(
            id=pid_,
            home=500000002,
            balance=800_000 + i * 50_000,
            wage=520_000 + i * 20_000,
            workplace=500000001,
            trips=[],
        )

    enrich_bundle(bundle)
    return bundle


def grid_city(
    nx: int = 5,
    ny: int = 5,
    spacing: float = 250.0,
    lane_count: int = 2,
    speed_limit: float = 15.0,
    residential_population: int = 600,
    pois_per_commercial: int = 4,
    name: str | None = None,
) -> MapBundle:
    """One-way street grid: perimeter ring clockwise, interior streets
    alternating by row/column parity; an AOI fills each block."""
    bundle = MapBundle(
        metadata={"name": name or f"grid{nx - 1}x{ny - 1}", "epoch": "planar-grid"}
    )

    def jpos(ix: int, iy: int) -> Point:
        return Point(ix * spacing, iy * spacing)

    rid = 0
    # Horizontal streets.
    for iy in range(ny):
        if iy == 0:
            east = True  # bottom row, ring runs east
        elif iy == ny - 1:
            east = False  # top row, ring runs west
        else:
            east = iy % 2 == 1
        for ix in range(nx - 1):
            a, b = jpos(ix, iy), jpos(ix + 1, iy)
            if not east:
                a, b = b, a
            bundle.roads[rid] = Road(
                rid, Polyline((a, b)), lane_count, speed_limit, True, True
            )
            rid += 1
    # Vertical streets.
    for ix in range(nx):
        if ix == 0:
            north = False  # left column, ring runs south
        elif ix == nx - 1:
            north = True  # right column, ring runs north
        else:
            north = ix % 2 == 1
        for iy in range(ny - 1):
            a, b = jpos(ix, iy), jpos(ix, iy + 1)
            if not north:
                a, b = b, a
            bundle.roads[rid] = Road(
                rid, Polyline((a, b)), lane_count, speed_limit, True, True
            )
            rid += 1

    jid = 5000
    for iy in range(ny):
        for ix in range(nx):
            p = jpos(ix, iy)
            members = [
                r.id
                for r in bundle.roads.values()
                if r.geometry.points[0] == p or r.geometry.points[-1] == p
            ]
            bundle.junctions[jid] = Junction(
                id=jid, road_ids=sorted(members), extra={"position": [p.x, p.y]}
            )
            jid += 1
    build_movements(bundle)

    land_cycle = [
        "residential",
        "commercial",
        "residential",
        "industrial",
        "residential",
        "public_service",
    ]
    aid = 10_000
    poi_id = 800_000
    inset = 20.0
    for by_ in range(ny - 1):
        for bx_ in range(nx - 1):
            idx = by_ * (nx - 1) + bx_
            land = land_cycle[idx % len(land_cycle)]
            aoi = Aoi(
                id=aid,
                boundary=_rect(
                    bx_ * spacing + inset,
                    by_ * spacing + inset,
                    spacing - 2 * inset,
                    spacing - 2 * inset,
                ),
                land_use=land,
                population=residential_population if land == "residential" else 50,
                rent=300_000 + 10_000 * (idx % 7),
            )
            if land == "commercial":
                aoi.enterprises = [
                    Enterprise(f"Shops {aid}", "retail", 40_000_000, 60 + idx % 40, 560_000)
                ]
                aoi.consumption = {"food": 2500, "shopping": 4000}
                for k in range(pois_per_commercial):
                    cate = ["food.restaurant.chinese", "shopping.grocery.supermarket"][k % 2]
                    bundle.pois[poi_id] = Poi(
                        id=poi_id,
                        coordinate=Point(
                            bx_ * spacing + inset + 30.0 + 25.0 * k,
                            by_ * spacing + spacing / 2,
                        ),
                        name=f"Store {poi_id}",
                        category=cate,
                        aoi_id=aid,
                    )
                    poi_id += 1
            elif land == "industrial":
                aoi.enterprises = [
                    Enterprise(f"Plant {aid}", "manufacturing", 90_000_000, 150 + idx % 60, 610_000)
                ]
            bundle.aois[aid] = aoi
            aid += 1

    enrich_bundle(bundle)
    return bundle


def kg_town() -> MapBundle:
    """Twenty touching parcels in a 5x4 patchwork, rich in POI categories
    and brands; no population so the map needs no roads."""
    bundle = MapBundle(
        metadata={
            "name": "kg_town",
            "districts": {},
        }
    )
    w, h = 100.0, 80.0
    brands = ["BeanHouse", "FreshCo", "Galleria", None]
    cates = [
        "food.restaurant.chinese",
        "food.restaurant.fast",
        "food.cafe.coffee",
        "shopping.mall.department",
        "shopping.grocery.supermarket",
        "leisure.gym.fitness",
    ]
    aid = 100
    poi_id = 9000
    for gy in range(4):
        for gx in range(5):
            bundle.aois[aid] = Aoi(
                id=aid,
                boundary=_rect(gx * w, gy * h, w, h),
                land_use="commercial" if (gx + gy) % 2 == 0 else "residential",
                population=0,
                consumption={"food": 1500},
            )
            bundle.metadata["districts"][str(aid)] = "north" if gy >= 2 else "south"
            for k in range(3):
                bundle.pois[poi_id] = Poi(
                    id=poi_id,
                    coordinate=Point(gx * w + 20.0 + 25.0 * k, gy * h + 30.0),
                    name=f"Shop {poi_id}",
                    category=cates[(aid + k) % len(cates)],
                    aoi_id=aid,
                    brand=brands[(aid + k) % len(brands)],
                )
                poi_id += 1
            aid += 1
    return bundle
