"""Scripted-agent scenarios: the perceive/act loop, the daily lunch habit,
and map-free POI navigation checked against a route-existence oracle."""

import sys
from pathlib import Path

import pytest

from citysim_client import ClientSession, ScriptedAgent, lunch_rule, navigate_to_poi, run_scripted_agent

REPO_ROOT = Path(__file__).resolve().parents[2]
sys.path.insert(0, str(REPO_ROOT / "src"))


class TestAgentLoop:
    def test_empty_policy_agent_only_acks(self, paper_server):
        with ClientSession(paper_server.base) as control:
            control.set_trips(
                1000, [{"end": {"aoi": 500000001}, "depart": 100, "mode": "drive"}]
            )
        with ClientSession(paper_server.base) as session:
            agent = ScriptedAgent(person_id=1000)
            log = run_scripted_agent(session, agent, n_steps=300, chunk=50)
            assert {entry["action"] for entry in log} == {"ack"}
            assert len([e for e in log if e["action"] == "ack"]) == 6
            assert session.step == 300
            person = session.get_person(1000)
        # The preloaded trip ran while the agent merely kept time.
        assert person["state"] == "idle_at_aoi"
        assert person["pending_trips"] == []
        assert agent.memory  # perceptions were recorded

    def test_every_iteration_ends_in_exactly_one_ack(self, paper_server):
        with ClientSession(paper_server.base) as session:
            agent = ScriptedAgent(person_id=1000)
            log = run_scripted_agent(session, agent, n_steps=120, chunk=37)
            acks = [e for e in log if e["action"] == "ack"]
            assert len(acks) == 4  # 37+37+37+9
            assert session.step == 120


class TestLunchAgent:
    def test_one_lunch_trip_per_day_over_three_days(self, paper_server):
        with ClientSession(paper_server.base) as session:
            agent = ScriptedAgent(
                person_id=1001,
                persona={"home_aoi": "500000002"},
                policy=[lunch_rule(home_aoi=500000002)],
            )
            finish_sub = session.subscribe("trip_finish", 1001)
            agent.subscriptions.append(finish_sub)
            log = run_scripted_agent(session, agent, n_steps=3 * 86400, chunk=600)
            lunches = [e for e in log if e["action"] == "set_trips" and e["rule"] == "lunch"]
            assert len(lunches) == 3
            days = {entry["step"] // 86400 for entry in lunches}
            assert days == {0, 1, 2}
            for entry in lunches:
                first, second = entry["trips"]
                assert "poi" in first["end"]
                assert second["end"] == {"aoi": 500000002}
            body = session.events(finish_sub, since_seq=-1)
            finished = [e for e in body["events"] if e.get("status") == "ok"]
            # 3 days x (lunch + return home), all completed.
            assert len(finished) == 6
            assert len(agent.memory) == 256  # bounded FIFO
            assert session.get_person(1001)["state"] == "idle_at_aoi"

    def test_no_firing_when_window_not_crossed(self, paper_server):
        with ClientSession(paper_server.base) as session:
            agent = ScriptedAgent(person_id=1001, policy=[lunch_rule(home_aoi=500000002)])
            log = run_scripted_agent(session, agent, n_steps=3600, chunk=600)  # 00:00-01:00
            assert not [e for e in log if e["action"] == "set_trips"]


def island_map(tmp_path) -> Path:
    """paper_city plus an unreachable island parcel holding one POI."""
    from citysim.fixtures import paper_city
    from citysim.geometry import Point, Polygon
    from citysim.mapio import save_map_file
    from citysim.model import Aoi, Poi

    bundle = paper_city()
    bundle.aois[500000099] = Aoi(
        500000099,
        Polygon((Point(9000, 9000), Point(9100, 9000), Point(9100, 9100), Point(9000, 9100))),
        land_use="other",
        population=0,
    )
    bundle.pois[700000099] = Poi(
        700000099, Point(9050, 9050), "Lighthouse Cafe", "food.cafe.coffee", aoi_id=500000099
    )
    path = tmp_path / "island.json"
    save_map_file(bundle, path)
    return path


class TestNavigation:
    def test_success_matches_route_existence_oracle(self, tmp_path, server_factory):
        from citysim.errors import SimError
        from citysim.mapio import load_map_file
        from citysim.routing import RoutePlanner

        map_path = island_map(tmp_path)
        bundle = load_map_file(map_path)
        planner = RoutePlanner(bundle)
        home = bundle.persons[1000].home

        cases = [700000000, 700000051, 700000099]
        for poi_id in cases:
            reachable = False
            for mode in ("drive", "walk", "bike"):
                try:
                    planner.plan(home, ("poi", poi_id), mode)
                    reachable = True
                    break
                except SimError:
                    continue

            server = server_factory(map_path)
            with ClientSession(server.base) as session:
                agent = ScriptedAgent(person_id=1000)
                result = navigate_to_poi(session, agent, poi_id, max_steps=7200, chunk=120)
            assert result["success"] == reachable, (poi_id, result)
            if reachable:
                assert result["mode"] in ("drive", "walk", "bike")
