import math

import pytest

from citysim.errors import SimError
from citysim.geometry import Point, Polygon, Polyline, point_in_polygon
from citysim.ingest import (
    InfraConfig,
    build_infrastructure_network,
    compute_aoi_connections,
    match_pois_to_aois,
)
from citysim.model import Aoi, MapBundle, Poi, Road
from citysim.spatial import build_index
from citysim.fixtures import grid_city


def square_aoi(aid, x0, y0, side=50, **kw):
    return Aoi(
        aid,
        Polygon((Point(x0, y0), Point(x0 + side, y0), Point(x0 + side, y0 + side), Point(x0, y0 + side))),
        **kw,
    )


class TestPoiMatching:
    def test_poi_at_centroid_matches(self):
        bundle = MapBundle()
        bundle.aois[7] = square_aoi(7, 0, 0, population=0)
        index = build_index(bundle)
        pois = {1: Poi(1, Point(25, 25), "x", "a.b.c")}
        matched, findings = match_pois_to_aois(pois, bundle.aois, index)
        assert matched[1].aoi_id == 7
        assert findings == []

    def test_far_poi_dropped_with_warning(self):
        bundle = MapBundle()
        bundle.aois[7] = square_aoi(7, 0, 0, population=0)
        index = build_index(bundle)
        pois = {1: Poi(1, Point(500, 500), "x", "a.b.c")}
        matched, findings = match_pois_to_aois(pois, bundle.aois, index)
        assert 1 not in matched
        assert any(f.code == "POI_DROPPED" for f in findings)

    def test_nearby_poi_snaps_within_5m(self):
        bundle = MapBundle()
        bundle.aois[7] = square_aoi(7, 0, 0, population=0)
        index = build_index(bundle)
        pois = {1: Poi(1, Point(53, 25), "x", "a.b.c")}  # 3 m east of the square
        matched, _ = match_pois_to_aois(pois, bundle.aois, index)
        assert matched[1].aoi_id == 7

    def test_200_pois_match_containment_oracle(self):
        import random

        bundle = grid_city(5, 5)
        index = build_index(bundle)
        rng = random.Random(9)
        pois = {
            i: Poi(i, Point(rng.uniform(0, 1000), rng.uniform(0, 1000)), "p", "a.b.c")
            for i in range(200)
        }
        matched, _ = match_pois_to_aois(pois, bundle.aois, index)
        for i, poi in pois.items():
            containing = [
                a for a in bundle.aois if point_in_polygon(poi.coordinate, bundle.aois[a].boundary)
            ]
            if containing:
                assert matched[i].aoi_id == min(containing)


class TestConnections:
    def test_square_beside_one_road_connects_at_perpendicular_foot(self):
        bundle = MapBundle()
        bundle.roads[1] = Road(1, Polyline((Point(-100, 0), Point(200, 0))))
        aoi = square_aoi(9, 0, 10, population=10)
        bundle.aois[9] = aoi
        index = build_index(bundle)
        conns = compute_aoi_connections(aoi, bundle.roads, index)
        assert len(conns) == 1
        # Centroid (25, 35) drops perpendicular onto the road at (25, 0).
        assert conns[0].road_id == 1
        assert math.isclose(conns[0].point.x, 25.0)
        assert math.isclose(conns[0].point.y, 0.0)
        assert conns[0].walk_allowed and conns[0].drive_allowed

    def test_far_road_not_connected(self):
        bundle = MapBundle()
        bundle.roads[1] = Road(1, Polyline((Point(-100, -1000), Point(200, -1000))))
        aoi = square_aoi(9, 0, 10, population=0)
        bundle.aois[9] = aoi
        index = build_index(bundle)
        assert compute_aoi_connections(aoi, bundle.roads, index) == []

    def test_flags_follow_road_permissions(self):
        bundle = MapBundle()
        bundle.roads[1] = Road(1, Polyline((Point(-100, 0), Point(200, 0))), walkable=False)
        aoi = square_aoi(9, 0, 10, population=0)
        bundle.aois[9] = aoi
        index = build_index(bundle)
        conns = compute_aoi_connections(aoi, bundle.roads, index)
        assert not conns[0].walk_allowed
        assert conns[0].drive_allowed


class TestInfrastructureNetwork:
    def one_aoi_bundle(self):
        bundle = MapBundle()
        bundle.aois[1] = square_aoi(1, 0, 0, population=1000, land_use="residential")
        return bundle

    def test_single_aoi_yields_one_vertex_no_edges(self):
        net = build_infrastructure_network(self.one_aoi_bundle(), InfraConfig(levels=3))
        assert len(net.vertices) == 1
        assert net.edges == []
        assert net.vertices[0].level == 0
        assert net.vertices[0].aoi_id == 1

    def test_demand_is_population_times_coefficient(self):
        bundle = self.one_aoi_bundle()
        config = InfraConfig(coeff={"residential": 1.2}, levels=1)
        net = build_infrastructure_network(bundle, config)
        assert net.vertices[0].demand == 1200.0

    def test_two_close_aois_cluster_into_one_parent(self):
        bundle = MapBundle()
        bundle.aois[1] = square_aoi(1, 0, 0, side=8, population=100, land_use="residential")
        bundle.aois[2] = square_aoi(2, 10, 0, side=8, population=300, land_use="residential")
        net = build_infrastructure_network(bundle, InfraConfig(cluster_radius=50, levels=2))
        level1 = net.level(1)
        assert len(level1) == 1
        assert len(net.edges) == 2
        assert {e.vertex_pair[1] for e in net.edges} == {level1[0].id}
        # Demand-weighted centroid sits 3x closer to the heavier AOI.
        c1 = bundle.aois[1].centroid
        c2 = bundle.aois[2].centroid
        expected_x = (c1.x * 100 + c2.x * 300) / 400
        assert math.isclose(level1[0].coordinate.x, expected_x)
        assert level1[0].aoi_id == 2  # seeded by the higher-demand member

    def test_distant_aois_stay_separate(self):
        bundle = MapBundle()
        bundle.aois[1] = square_aoi(1, 0, 0, population=100, land_use="residential")
        bundle.aois[2] = square_aoi(2, 5000, 0, population=100, land_use="residential")
        net = build_infrastructure_network(bundle, InfraConfig(cluster_radius=50, levels=2))
        assert len(net.level(1)) == 2

    def test_demand_conserved_across_levels(self):
        bundle = grid_city(6, 6)
        net = build_infrastructure_network(bundle, InfraConfig(cluster_radius=400, levels=4))
        totals = {}
        for v in net.vertices:
            totals[v.level] = totals.get(v.level, 0.0) + v.demand
        levels = sorted(totals)
        for a, b in zip(levels, levels[1:]):
            assert math.isclose(totals[a], totals[b], rel_tol=1e-12)

    def test_edge_level_is_min_of_endpoints(self):
        bundle = grid_city(5, 5)
        net = build_infrastructure_network(bundle, InfraConfig(cluster_radius=600, levels=3))
        by_id = {v.id: v for v in net.vertices}
        for e in net.edges:
            child, parent = e.vertex_pair
            assert e.level == min(by_id[child].level, by_id[parent].level)

    def test_bad_config_rejected(self):
        bundle = self.one_aoi_bundle()
        with pytest.raises(SimError) as err:
            build_infrastructure_network(bundle, InfraConfig(cluster_radius=0))
        assert err.value.code == "BAD_CONFIG"
        with pytest.raises(SimError):
            build_infrastructure_network(bundle, InfraConfig(levels=0))
