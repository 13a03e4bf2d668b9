"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (run with -v or -s to see them). Tolerances are pinned in
the assertions themselves."""

import json
import math
import random
import subprocess
import sys
import time
from pathlib import Path

import pytest
import requests

from citysim.fixtures import grid_city, kg_town, paper_city
from citysim.kernel import Engine, EngineConfig
from citysim.kg import KgConfig, build_kg
from citysim.mapio import save_map_file
from citysim.model import Trip
from citysim.popgen import PopGenConfig, generate_population
from citysim.traffic import (
    IdmParams,
    MobilParams,
    Vehicle,
    idm_acceleration,
    integrate_lane,
    lane_gaps,
    mobil_decide,
)

from conftest import LiveServer, make_engine
from test_routing import anchors_for, oracle_drive_time, oracle_walk_time, random_road_map
from test_traffic import idm_oracle, mobil_oracle


def report(line: str):
    print(f"\n[ACCEPTANCE] {line}")


# 1 ------------------------------------------------------------------------


def test_paper_fixture_fidelity(paper_bundle):
    """The shipped fixture reproduces the canonical request/response pairs
    over POST /nl in under 5 seconds."""
    t0 = time.perf_counter()
    server = LiveServer(make_engine(paper_bundle), build_kg(paper_bundle))
    try:
        r = requests.post(
            server.base + "/nl", json={"text": "Get AOI with ID 500000000."}, timeout=5
        )
        sentence = r.json()["text"]
        assert sentence == (
            "The AOI with ID 500000000 has an area of 26059 square meters, "
            "a population of 1219, the land use type is commercial land, "
            "contains 51 POIs, and is connected to roads 10, 11 and 23."
        )
        r = requests.post(
            server.base + "/nl",
            json={
                "text": "Set agent with ID 1000 to drive to AOI 500000001 at 09:20, "
                "and then walk to AOI 500000010 at 11:00."
            },
            timeout=5,
        )
        assert r.json()["text"] == "OK."
        cid = requests.post(server.base + "/clients", json={"name": "acceptance"}).json()[
            "client_id"
        ]
        requests.post(server.base + f"/clients/{cid}/ack", json={"step": 0})
        pending = requests.get(server.base + "/persons/1000").json()["pending_trips"]
        assert pending == [
            {"end": {"aoi": 500000001}, "depart_time": 33600, "mode": "drive"},
            {"end": {"aoi": 500000010}, "depart_time": 39600, "mode": "walk"},
        ]
    finally:
        server.stop()
    elapsed = time.perf_counter() - t0
    assert elapsed < 5.0
    report(f"1. paper-fixture fidelity: PASS ({elapsed:.2f}s < 5s)")


# 2 ------------------------------------------------------------------------


def test_throughput_10k_persons():
    """10,000 scheduled persons, morning rush hour, 3600 steps in <= 360 s."""
    bundle = grid_city(10, 10, spacing=600.0, residential_population=900, name="metro")
    bundle.persons.update(generate_population(bundle, PopGenConfig(n_persons=10_000, seed=7)))
    engine = Engine(bundle, EngineConfig(start_time=8 * 3600, interest_rate=0.0, tax_rate=0.10))
    t0 = time.perf_counter()
    summary = engine.run(3600)
    wall = time.perf_counter() - t0
    assert summary["trips_completed"] > 1000, "rush hour should actually move people"
    assert wall <= 360.0
    report(
        f"2. throughput: PASS (3600 steps, 10k persons in {wall:.1f}s = "
        f"{3600 / wall:.0f}x real time, {summary['trips_completed']} trips)"
    )


# 3 ------------------------------------------------------------------------


def test_collision_freedom_soaks():
    """Zero negative gaps over 10,000-step randomized platoon and ring
    soaks; tolerance is exactly zero."""
    params = IdmParams()
    rng = random.Random(2024)

    lane = []
    x = 0.0
    for i in range(25):
        lane.append(Vehicle(i, -x, rng.uniform(0.0, 22.0), 20.0))
        x += 5.0 + rng.uniform(0.3, 40.0)
    worst = math.inf
    for step in range(10_000):
        integrate_lane(lane, 0.5, params)
        gaps = lane_gaps(lane)
        worst = min(worst, min(gaps))
        assert all(g >= 0 for g in gaps), f"platoon gap < 0 at step {step}"

    wrap = 800.0
    n = 60
    ring = [Vehicle(i, (n - 1 - i) * (wrap / n), rng.uniform(0, 8.0), 15.0) for i in range(n)]
    for step in range(10_000):
        integrate_lane(ring, 0.5, params, wrap=wrap)
        gaps = lane_gaps(ring, wrap)
        worst = min(worst, min(gaps))
        assert all(g >= 0 for g in gaps), f"ring gap < 0 at step {step}"
    report(f"3. collision freedom: PASS (20k substep soaks, min gap {worst:.3f} m >= 0)")


# 4 ------------------------------------------------------------------------


def test_idm_mobil_oracles_and_fundamental_diagram():
    """1000 random parameterizations against hand formulas at 1e-9
    relative; ring-road density sweep is single-peaked."""
    rng = random.Random(99)
    for _ in range(1000):
        p = IdmParams(
            T=rng.uniform(0.5, 3.0),
            s0=rng.uniform(0.5, 5.0),
            a_max=rng.uniform(0.5, 4.0),
            b=rng.uniform(0.5, 5.0),
            delta=rng.choice([2.0, 4.0, 6.0]),
        )
        v, v0 = rng.uniform(0, 40), rng.uniform(5, 42)
        s = rng.choice([math.inf, rng.uniform(0.05, 300)])
        dv = rng.uniform(-20, 20)
        got = idm_acceleration(v, v0, s, dv, p)
        want = idm_oracle(v, v0, s, dv, p.T, p.s0, p.a_max, p.b, p.delta)
        assert math.isclose(got, want, rel_tol=1e-9, abs_tol=1e-12)

    for _ in range(1000):
        mp = MobilParams(
            p=rng.uniform(0, 1), a_th=rng.uniform(0.05, 1.0), b_safe=rng.uniform(1, 8)
        )
        vals = [rng.uniform(-9, 4) for _ in range(6)]
        assert mobil_decide(*vals, mp) == mobil_oracle(*vals, mp.p, mp.a_th, mp.b_safe)

    # Fundamental diagram: flow over density on a ring road.
    wrap = 1000.0
    params = IdmParams()
    flows = []
    densities = list(range(5, 121, 5))
    for n in densities:
        lane = [Vehicle(i, (n - 1 - i) * (wrap / n), 1.0, 15.0) for i in range(n)]
        for _ in range(600):
            integrate_lane(lane, 0.5, params, wrap=wrap)
        mean_speed = sum(v.speed for v in lane) / n
        flows.append((n / wrap) * mean_speed)
    peak = max(range(len(flows)), key=flows.__getitem__)
    tolerance = 0.02 * max(flows)
    for i in range(peak):
        assert flows[i] <= flows[i + 1] + tolerance, f"rising branch dips at {densities[i]}"
    for i in range(peak, len(flows) - 1):
        assert flows[i + 1] <= flows[i] + tolerance, f"falling branch rises at {densities[i]}"
    assert 0 < peak < len(flows) - 1, "peak should be interior"
    report(
        f"4. IDM/MOBIL oracles + fundamental diagram: PASS "
        f"(2000 oracle draws at 1e-9; peak flow {max(flows) * 3600:.0f} veh/h at "
        f"{densities[peak] / wrap * 1000:.0f} veh/km)"
    )


# 5 ------------------------------------------------------------------------


def test_routing_oracle_50_graphs():
    """plan_route equals textbook Dijkstra exactly on 50 random graphs with
    up to 200 edges."""
    from citysim.errors import SimError
    from citysim.routing import RoutePlanner

    rng = random.Random(4321)
    reachable = 0
    for g in range(50):
        n_nodes = rng.randrange(8, 30)
        n_edges = min(rng.randrange(n_nodes, 201), 200)
        bundle = random_road_map(rng, n_nodes, n_edges)
        planner = RoutePlanner(bundle)
        for mode in ("drive", "walk"):
            src = anchors_for(planner, bundle, 1, mode)
            dst = anchors_for(planner, bundle, 2, mode)
            want = (
                oracle_drive_time(bundle, src, dst)
                if mode == "drive"
                else oracle_walk_time(bundle, src, dst, mode)
            )
            try:
                got = planner.plan(1, ("aoi", 2), mode).estimated_time
            except SimError:
                got = math.inf
            assert got == want, f"graph {g} mode {mode}: {got} != {want}"
            if got < math.inf:
                reachable += 1
    assert reachable >= 50
    report(f"5. routing oracle: PASS (50 graphs x2 modes, {reachable} reachable, exact equality)")


# 6 ------------------------------------------------------------------------


def test_push_pull_consistency():
    """Enter/leave events reconstruct exactly the transitions visible to
    per-step polling over a 100-person day; every trigger fires >= 20x."""
    bundle = grid_city(3, 3, spacing=400.0, residential_population=500, name="pushpull")
    aids = sorted(bundle.aois)
    pois = sorted(bundle.pois)
    rng = random.Random(5)
    modes = ["drive", "walk", "bike"]
    for i in range(100):
        pid = 9000 + i
        home = aids[i % 2 * 2]  # the two residential corners
        times = sorted(rng.sample(range(600, 28000), 6))
        trips = []
        for k, t in enumerate(times):
            if k == 3:
                dest = ("aoi", home)  # degenerate or return leg
            elif k % 2 == 0:
                dest = ("poi", pois[(i + k) % len(pois)])
            else:
                dest = ("aoi", aids[(i + k) % len(aids)])
            trips.append(Trip(dest, t, modes[(i + k) % 3]))
        from citysim.model import Person

        bundle.persons[pid] = Person(pid, home=home, trips=trips)
    engine = make_engine(bundle)

    subs = {}
    for aid in aids:
        subs[("enter_aoi", aid)] = engine.subscribe("enter_aoi", aid)
        subs[("leave_aoi", aid)] = engine.subscribe("leave_aoi", aid)
    for rid in sorted(bundle.roads):
        subs[("enter_road", rid)] = engine.subscribe("enter_road", rid)
        subs[("leave_road", rid)] = engine.subscribe("leave_road", rid)
    for pid in sorted(bundle.persons):
        subs[("trip_start", pid)] = engine.subscribe("trip_start", pid)
        subs[("trip_finish", pid)] = engine.subscribe("trip_finish", pid)

    aoi_prev = {aid: set(engine.get_aoi_runtime(aid)["people"]) for aid in aids}
    road_prev = {rid: set() for rid in bundle.roads}
    polled = {key: set() for key in subs if key[0] in ("enter_aoi", "leave_aoi", "enter_road", "leave_road")}
    horizon = 30000
    for step in range(horizon):
        engine.force_advance(1)
        for aid in aids:
            people = set(engine.get_aoi_runtime(aid)["people"])
            for pid in people - aoi_prev[aid]:
                polled[("enter_aoi", aid)].add((step, pid))
            for pid in aoi_prev[aid] - people:
                polled[("leave_aoi", aid)].add((step, pid))
            aoi_prev[aid] = people
        for rid in road_prev:
            body = engine.get_road_runtime(rid)
            present = set(body["vehicles"]) | set(body["pedestrians"])
            for pid in present - road_prev[rid]:
                polled[("enter_road", rid)].add((step, pid))
            for pid in road_prev[rid] - present:
                polled[("leave_road", rid)].add((step, pid))
            road_prev[rid] = present

    counts = {t: 0 for t in ("enter_aoi", "leave_aoi", "enter_road", "leave_road", "trip_start", "trip_finish")}
    for (trigger, target), sid in subs.items():
        events, truncated = engine.drain_events(sid, -1)
        assert not truncated
        counts[trigger] += len(events)
        if trigger in polled:
            got = {(e.step, e.person_id) for e in events}
            assert got == polled[(trigger, target)], (trigger, target)
    for trigger, n in counts.items():
        assert n >= 20, f"{trigger} fired only {n} times"
    report(
        "6. push/pull consistency: PASS ("
        + ", ".join(f"{t}={n}" for t, n in sorted(counts.items()))
        + ")"
    )


# 7 ------------------------------------------------------------------------


def test_barrier_protocol():
    """Three clients: no advance until every ack; timed-out client evicted
    within one timeout; snapshots never run ahead of the barrier."""
    fake = [0.0]
    bundle = grid_city(3, 3, name="barrier")
    engine = Engine(
        bundle,
        EngineConfig(interest_rate=0.0, tax_rate=0.0, wage_period=0),
        now_fn=lambda: fake[0],
    )
    clients = [engine.register_client(f"c{i}", timeout_s=30) for i in range(3)]
    rng = random.Random(13)
    aid = sorted(bundle.aois)[0]
    for barrier in range(50):
        order = clients[:]
        rng.shuffle(order)
        for i, cid in enumerate(order):
            assert engine.clock()["step"] == barrier
            assert engine.get_aoi_runtime(aid)["step"] == barrier
            result = engine.ack(cid, barrier)
            if i < len(order) - 1:
                assert result["new_step"] == barrier, "advanced before all clients acked"
                assert engine.get_aoi_runtime(aid)["step"] == barrier
            else:
                assert result["new_step"] == barrier + 1
        fake[0] += 1.0

    # Eviction: two clients ack step 50, the third goes silent.
    t_block = fake[0]
    engine.ack(clients[0], 50)
    engine.ack(clients[1], 50)
    assert engine.clock()["step"] == 50
    fake[0] = t_block + 29.0
    assert engine.check_timeouts() == []
    assert engine.clock()["step"] == 50
    fake[0] = t_block + 30.5  # just past one timeout
    evicted = engine.check_timeouts()
    assert evicted == [clients[2]]
    assert engine.clock()["step"] == 51, "barrier should unblock after eviction"
    report("7. barrier protocol: PASS (50 shuffled barriers, eviction within one timeout)")


# 8 ------------------------------------------------------------------------


def test_ledger_conservation_30_days(paper_bundle):
    """After 30 simulated days with wages (10% tax), consumption and daily
    1% interest, the sum of all balances equals the initial sum exactly."""
    import copy

    bundle = copy.deepcopy(paper_bundle)
    bundle.persons.update(
        generate_population(bundle, PopGenConfig(n_persons=40, seed=30, days=30, leisure_prob=0.5))
    )
    engine = Engine(
        bundle,
        EngineConfig(
            tax_rate=0.10,
            wage_period=86400 * 30,
            interest_rate=0.01,
            interest_period=86400,
        ),
    )
    initial = engine.ledger.total()
    summary = engine.run(86400 * 30)
    kinds = {e.kind for e in engine.ledger.entries}
    assert {"wage", "tax", "interest", "consumption"} <= kinds, f"missing flows: {kinds}"
    assert engine.ledger.total() == initial
    report(
        f"8. ledger conservation: PASS (30 days, {len(engine.ledger.entries)} entries, "
        f"{summary['trips_completed']} trips, total {initial} == {engine.ledger.total()} exactly)"
    )


# 9 ------------------------------------------------------------------------


def test_kg_properties():
    """Symmetry of borderBy/nearBy, functionality of locateAt, and
    brute-force nearBy equivalence on the 20-AOI fixture; all exact."""
    town = kg_town()
    kg = build_kg(town)
    cfg = KgConfig()
    from citysim.geometry import shared_boundary_length

    for aid in town.aois:
        for rel in ("borderBy", "nearBy"):
            for other in kg.query(("aoi", aid), rel):
                assert ("aoi", aid) in kg.query(other, rel), (rel, aid, other)
    for pid, poi in town.pois.items():
        assert kg.query(("poi", pid), "locateAt") == [("aoi", poi.aoi_id)]
    ids = sorted(town.aois)
    for a in ids:
        expected = set()
        for b in ids:
            if a == b:
                continue
            shares = shared_boundary_length(town.aois[a].boundary, town.aois[b].boundary) > 1e-9
            if not shares and town.aois[a].centroid.dist(town.aois[b].centroid) <= cfg.near_threshold_m:
                expected.add(("aoi", b))
        assert set(kg.query(("aoi", a), "nearBy")) == expected
    report(f"9. KG properties: PASS (20 AOIs, {kg.triple_count} triples, exact)")


# 10 -----------------------------------------------------------------------


def test_determinism_byte_identical_stats(tmp_path):
    """Identical map/seed/flags produce byte-identical stats exports."""
    map_path = tmp_path / "det.json"
    bundle = grid_city(4, 4, name="det")
    bundle.persons.update(generate_population(bundle, PopGenConfig(n_persons=60, seed=11)))
    save_map_file(bundle, map_path)
    digests = []
    for name in ("one.ndjson", "two.ndjson"):
        out = tmp_path / name
        result = subprocess.run(
            [
                sys.executable,
                "-m",
                "citysim.cli",
                "run",
                str(map_path),
                "--steps",
                "40000",
                "--start-time",
                "25200",
                "--stats-out",
                str(out),
            ],
            capture_output=True,
            text=True,
            timeout=300,
        )
        assert result.returncode == 0, result.stderr
        digests.append(out.read_bytes())
    assert digests[0] == digests[1]
    assert len(digests[0]) > 0
    report(f"10. determinism: PASS (two runs, {len(digests[0])} identical bytes)")
