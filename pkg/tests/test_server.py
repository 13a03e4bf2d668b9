import json
import threading

import requests

from citysim.model import Trip


class TestPullEndpoints:
    def test_clock(self, paper_bundle, live_server_factory):
        server = live_server_factory(paper_bundle)
        body = requests.get(server.base + "/clock").json()
        assert body == {"step": 0, "time_of_day": 0}

    def test_aoi_body_fields(self, paper_bundle, live_server_factory):
        server = live_server_factory(paper_bundle)
        body = requests.get(server.base + "/aois/500000000").json()
        assert body["id"] == 500000000
        assert round(body["area_m2"]) == 26059
        assert body["population"] == 1219
        assert body["land_use"] == "commercial"
        assert body["poi_count"] == 51
        assert body["connected_roads"] == [10, 11, 23]
        assert body["step"] == 0
        assert isinstance(body["people"], list)

    def test_unknown_ids_are_404_wire_errors(self, paper_bundle, live_server_factory):
        server = live_server_factory(paper_bundle)
        for path in ("/aois/999999", "/roads/999999", "/persons/999999"):
            response = requests.get(server.base + path)
            assert response.status_code == 404
            body = response.json()
            assert body["code"] == "UNKNOWN_ID"
            assert "message" in body and set(body) == {"code", "message"}

    def test_road_body(self, paper_bundle, live_server_factory):
        server = live_server_factory(paper_bundle)
        body = requests.get(server.base + "/roads/10").json()
        assert body["length_m"] == 292.0
        assert body["lane_count"] == 2
        assert body["vehicles"] == [] and body["pedestrians"] == []
        assert body["congestion_level"] == "free"

    def test_person_body(self, paper_bundle, live_server_factory):
        server = live_server_factory(paper_bundle)
        body = requests.get(server.base + "/persons/1000").json()
        assert body["current_trip"] is None
        assert body["pending_trips"] == []
        assert body["balance"] == 1_000_000
        assert len(body["coordinate"]) == 2 and len(body["direction"]) == 2

    def test_pull_is_read_only_under_concurrency(self, paper_bundle, live_server_factory):
        server = live_server_factory(paper_bundle)
        results = []

        def hammer():
            for _ in range(25):
                r = requests.get(server.base + "/aois/500000000")
                results.append(r.json()["step"])

        threads = [threading.Thread(target=hammer) for _ in range(4)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert set(results) == {0}


class TestControlAndBarrier:
    def test_set_trips_and_atomic_visibility(self, paper_bundle, live_server_factory):
        server = live_server_factory(paper_bundle)
        payload = {
            "trips": [
                {"end": {"aoi": 500000001}, "depart": "09:20", "mode": "drive"},
                {"end": {"aoi": 500000010}, "depart": 39600, "mode": "walk"},
            ]
        }
        r = requests.post(server.base + "/persons/1000/trips", json=payload)
        assert r.status_code == 200 and r.json() == {"status": "ok"}
        assert requests.get(server.base + "/persons/1000").json()["pending_trips"] == []
        cid = requests.post(server.base + "/clients", json={"name": "t", "timeout_s": 30}).json()[
            "client_id"
        ]
        r = requests.post(server.base + f"/clients/{cid}/ack", json={"step": 0})
        assert r.json() == {"status": "ok", "new_step": 1}
        pending = requests.get(server.base + "/persons/1000").json()["pending_trips"]
        assert [t["depart_time"] for t in pending] == [33600, 39600]

    def test_invalid_trips_rejected_with_400(self, paper_bundle, live_server_factory):
        server = live_server_factory(paper_bundle)
        r = requests.post(
            server.base + "/persons/1000/trips",
            json={"trips": [{"end": {"aoi": 1}, "depart": 100}]},
        )
        assert r.status_code == 400
        assert r.json()["code"] == "INVALID_TRIPS"

    def test_unknown_person_404(self, paper_bundle, live_server_factory):
        server = live_server_factory(paper_bundle)
        r = requests.post(server.base + "/persons/31337/trips", json={"trips": []})
        assert r.status_code == 404
        assert r.json()["code"] == "UNKNOWN_PERSON"

    def test_stale_ack_409(self, paper_bundle, live_server_factory):
        server = live_server_factory(paper_bundle)
        cid = requests.post(server.base + "/clients", json={"name": "a"}).json()["client_id"]
        requests.post(server.base + f"/clients/{cid}/ack", json={"step": 0})
        r = requests.post(server.base + f"/clients/{cid}/ack", json={"step": 0})
        assert r.status_code == 409
        assert r.json()["code"] == "STALE_STEP"

    def test_bad_json_body_is_parse_error(self, paper_bundle, live_server_factory):
        server = live_server_factory(paper_bundle)
        r = requests.post(
            server.base + "/nl",
            data="{not json",
            headers={"Content-Type": "application/json"},
        )
        assert r.status_code == 400
        assert r.json()["code"] == "PARSE_ERROR"


class TestEventsOverWire:
    def _arrival_setup(self, server):
        requests.post(
            server.base + "/persons/1000/trips",
            json={"trips": [{"end": {"aoi": 500000001}, "depart": 5, "mode": "drive"}]},
        )
        sid = requests.post(
            server.base + "/subscriptions",
            json={"trigger": "enter_aoi", "target_id": 500000001},
        ).json()["sub_id"]
        cid = requests.post(server.base + "/clients", json={"name": "driver"}).json()["client_id"]
        requests.post(server.base + f"/clients/{cid}/ack", json={"step": 0, "count": 200})
        return sid

    def test_long_poll_fetches_events(self, paper_bundle, live_server_factory):
        server = live_server_factory(paper_bundle)
        sid = self._arrival_setup(server)
        body = requests.get(server.base + f"/subscriptions/{sid}/events?since_seq=-1").json()
        assert body["truncated"] is False
        events = body["events"]
        assert len(events) == 1
        assert events[0]["trigger"] == "enter_aoi"
        assert events[0]["person_id"] == 1000
        assert events[0]["target_id"] == 500000001
        # Idempotent with explicit cursor.
        again = requests.get(server.base + f"/subscriptions/{sid}/events?since_seq=-1").json()
        assert again["events"] == events

    def test_stream_delivers_ndjson(self, paper_bundle, live_server_factory):
        server = live_server_factory(paper_bundle)
        sid = self._arrival_setup(server)
        with requests.get(
            server.base + f"/subscriptions/{sid}/stream?since_seq=-1", stream=True, timeout=10
        ) as r:
            line = next(r.iter_lines())
            event = json.loads(line)
            assert event["trigger"] == "enter_aoi"
            assert event["seq"] >= 0

    def test_unknown_subscription_404(self, paper_bundle, live_server_factory):
        server = live_server_factory(paper_bundle)
        r = requests.get(server.base + "/subscriptions/424242/events?since_seq=0")
        assert r.status_code == 404
        assert r.json()["code"] == "UNKNOWN_SUBSCRIPTION"


class TestKgAndNl:
    def test_kg_endpoint(self, paper_bundle, live_server_factory):
        server = live_server_factory(paper_bundle, with_kg=True)
        body = requests.get(server.base + "/kg/poi/700000000/locateAt").json()
        assert body == {"entities": ["aoi:500000000"]}
        inverse = requests.get(server.base + "/kg/aoi/500000000/~locateAt").json()
        assert "poi:700000000" in inverse["entities"]
        assert len(inverse["entities"]) == 51

    def test_kg_unknown_entity(self, paper_bundle, live_server_factory):
        server = live_server_factory(paper_bundle, with_kg=True)
        r = requests.get(server.base + "/kg/aoi/31337/borderBy")
        assert r.status_code == 404

    def test_nl_endpoint_paper_exchange(self, paper_bundle, live_server_factory):
        server = live_server_factory(paper_bundle, with_kg=True)
        r = requests.post(server.base + "/nl", json={"text": "Get AOI with ID 500000000."})
        assert r.json()["text"].startswith("The AOI with ID 500000000 has an area of 26059")
        r = requests.post(
            server.base + "/nl",
            json={
                "text": "Set agent with ID 1000 to drive to AOI 500000001 at 09:20, "
                "and then walk to AOI 500000010 at 11:00."
            },
        )
        assert r.json() == {"text": "OK."}
