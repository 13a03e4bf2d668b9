"""The stepped engine.

One advancement authority mutates the world under the engine lock. The
clock advances one simulated second per step, and only when every
registered client has acknowledged the current step (the ack barrier);
with no clients the engine free-runs. All reads are snapshots of the last
closed step. Within a step the update order is fixed and documented:
queued controls, message delivery, trip departures, vehicle roads in
ascending id (lanes right to left, leaders first), pedestrians, then
periodic wage/interest flows.
"""

from __future__ import annotations

import heapq
import logging
import math
import time
from bisect import bisect_left
from dataclasses import dataclass, field

from .errors import (
    INVALID_TRIPS,
    STALE_STEP,
    TRUNCATED,
    UNKNOWN_CLIENT,
    UNKNOWN_ID,
    UNKNOWN_PERSON,
    UNKNOWN_SUBSCRIPTION,
    SimError,
)
from .flows import (
    BANK,
    GOVERNMENT,
    Ledger,
    Message,
    enterprise_account,
    interest_amount,
    person_account,
    wage_split,
)
from .geometry import Point
from .model import DAY_SECONDS, MODES, MapBundle, Trip
from .routing import Route, RoutePlanner
from .traffic import (
    BIKE_SPEED,
    VEHICLE_LENGTH,
    WALK_SPEED,
    IdmParams,
    MobilParams,
    Vehicle,
    congestion_level,
    idm_acceleration,
    integrate_lane,
    mobil_decide,
)

import threading

log = logging.getLogger(__name__)

TRIGGERS = ("enter_aoi", "leave_aoi", "enter_road", "leave_road", "trip_start", "trip_finish")

IDLE, WAITING, TRAVELING = "idle_at_aoi", "waiting_depart", "traveling"

RECENT_WINDOW = 300  # s window for an AOI's "recent" entries/departures
SUBSTEP = 0.5  # s driving integration step under the 1 s kernel step


@dataclass(slots=True)
class Event:
    seq: int
    step: int
    trigger: str
    person_id: int
    target_id: int
    status: str | None = None

    def to_json(self) -> dict:
        body = {
            "seq": self.seq,
            "step": self.step,
            "trigger": self.trigger,
            "person_id": self.person_id,
            "target_id": self.target_id,
        }
        if self.status is not None:
            body["status"] = self.status
        return body


@dataclass
class Subscription:
    sub_id: int
    trigger: str
    target_id: int
    cursor: int = -1


@dataclass
class ClientRegistration:
    client_id: int
    name: str
    timeout_s: float
    ack_until: int = 0  # steps below this are acknowledged
    last_ack_wall: float = 0.0
    last_acked_step: int = -1


@dataclass
class EngineConfig:
    seed: int = 0
    start_time: int = 0
    tax_rate: float = 0.10
    wage_period: int = DAY_SECONDS * 30
    interest_rate: float = 0.01
    interest_period: int = DAY_SECONDS
    event_capacity: int = 1_000_000
    collect_stats: bool = False
    stats_flow_interval: int = 60
    idm: IdmParams = field(default_factory=IdmParams)
    mobil: MobilParams = field(default_factory=MobilParams)


class PersonRuntime:
    __slots__ = (
        "id",
        "home",
        "aoi_id",
        "state",
        "pending",
        "current",
        "route",
        "leg_index",
        "veh",
        "road_id",
        "offset",
        "speed",
        "leg_dir",
        "queued_point",
        "inbox",
        "wage",
        "workplace",
        "persona",
    )

    def __init__(self, person):
        self.id = person.id
        self.home = person.home
        self.aoi_id = person.home
        self.state = IDLE
        self.pending: list[Trip] = list(person.trips)
        self.current: Trip | None = None
        self.route: Route | None = None
        self.leg_index = 0
        self.veh: Vehicle | None = None
        self.road_id: int | None = None
        self.offset = 0.0
        self.speed = 0.0
        self.leg_dir = 1
        self.queued_point: Point | None = None
        self.inbox: list[Message] = []
        self.wage = person.wage
        self.workplace = person.workplace
        self.persona = person.persona


class RoadRuntime:
    __slots__ = ("road", "length", "limit", "lanes", "peds")

    def __init__(self, road):
        self.road = road
        self.length = road.length
        self.limit = road.speed_limit
        self.lanes: list[list[Vehicle]] = [[] for _ in range(road.lane_count)]
        self.peds: set[int] = set()

    def vehicle_count(self) -> int:
        return sum(len(l) for l in self.lanes)


class Engine:
    """Holds the world, the clock, the barrier and the event log."""

    def __init__(self, bundle: MapBundle, config: EngineConfig | None = None, now_fn=time.monotonic):
        self.bundle = bundle
        self.cfg = config or EngineConfig()
        self.now_fn = now_fn
        self.planner = RoutePlanner(bundle)
        self._lock = threading.RLock()

        self.clock_step = 0
        self.persons: dict[int, PersonRuntime] = {}
        self.roads_rt: dict[int, RoadRuntime] = {r: RoadRuntime(road) for r, road in bundle.roads.items()}
        self.aoi_people: dict[int, set[int]] = {a: set() for a in bundle.aois}
        self.aoi_entry_steps: dict[int, list[int]] = {a: [] for a in bundle.aois}
        self.aoi_departure_steps: dict[int, list[int]] = {a: [] for a in bundle.aois}
        self._aoi_centroids = {a: aoi.centroid for a, aoi in bundle.aois.items()}
        self._poi_count: dict[int, int] = {a: 0 for a in bundle.aois}
        for poi in bundle.pois.values():
            if poi.aoi_id in self._poi_count:
                self._poi_count[poi.aoi_id] += 1

        self.ledger = Ledger()
        self._wakeups: list[tuple[int, int]] = []
        self._walkers: dict[int, None] = {}
        self._queued_entry: dict[int, None] = {}
        self._active_roads: set[int] = set()
        self._movement_at: dict[tuple[int, int], tuple[int, int]] = {}
        for jid in sorted(bundle.junctions):
            junction = bundle.junctions[jid]
            for mi, m in enumerate(junction.movements):
                self._movement_at.setdefault((m.from_road, m.to_road), (jid, mi))

        self._events: list[Event] = []
        self._base_seq = 0
        self._next_seq = 0
        self._subs: dict[int, Subscription] = {}
        self._next_sub = 1
        self.clients: dict[int, ClientRegistration] = {}
        self._next_client = 1
        self._pending_controls: list[tuple[int, list[Trip]]] = []
        self._msg_queue: list[Message] = []
        self._next_msg = 1

        self.stats_records: list[dict] = []
        self.trips_completed = 0
        self.trips_failed = 0
        self.messages_delivered = 0
        self.negative_balance_events = 0

        for pid in sorted(bundle.persons):
            person = bundle.persons[pid]
            prt = PersonRuntime(person)
            self.persons[pid] = prt
            self.ledger.open_account(person_account(pid), person.balance)
            self.aoi_people[prt.aoi_id].add(pid)
            self._arm(prt)
        for aid in sorted(bundle.aois):
            for idx, _ in enumerate(bundle.aois[aid].enterprises):
                self.ledger.open_account(enterprise_account(aid, idx))
        self._initial_total = self.ledger.total()

    # ------------------------------------------------------------------ utils

    def _arm(self, prt: PersonRuntime) -> None:
        if prt.pending:
            prt.state = WAITING
            heapq.heappush(self._wakeups, (prt.pending[0].depart_time, prt.id))
        else:
            prt.state = IDLE

    def _emit(self, step: int, trigger: str, person_id: int, target_id: int, status=None) -> None:
        ev = Event(self._next_seq, step, trigger, person_id, target_id, status)
        self._next_seq += 1
        self._events.append(ev)
        cap = self.cfg.event_capacity
        # Trim in chunks so the front deletion cost amortizes away.
        chunk = max(1, min(8192, cap // 4))
        if len(self._events) >= cap + chunk:
            drop = len(self._events) - cap
            del self._events[:drop]
            self._base_seq += drop

    def now(self) -> int:
        return self.cfg.start_time + self.clock_step

    def clock(self) -> dict:
        with self._lock:
            return {"step": self.clock_step, "time_of_day": self.now() % DAY_SECONDS}

    def _dest_aoi_of(self, end: tuple[str, int]) -> int | None:
        kind, ident = end
        if kind == "aoi":
            return ident if ident in self.bundle.aois else None
        poi = self.bundle.pois.get(ident)
        return poi.aoi_id if poi else None

    def _person_point(self, prt: PersonRuntime) -> Point:
        if prt.state == TRAVELING:
            if prt.road_id is not None:
                offset = prt.veh.offset if prt.veh is not None else prt.offset
                return self.bundle.roads[prt.road_id].geometry.point_at(offset)
            if prt.queued_point is not None:
                return prt.queued_point
        if prt.aoi_id is not None:
            return self._aoi_centroids[prt.aoi_id]
        return Point(0.0, 0.0)

    # ------------------------------------------------------------- barrier API

    def register_client(self, name: str, timeout_s: float = 30.0) -> int:
        with self._lock:
            cid = self._next_client
            self._next_client += 1
            self.clients[cid] = ClientRegistration(
                cid, name, timeout_s, ack_until=self.clock_step, last_ack_wall=self.now_fn()
            )
            return cid

    def ack(self, client_id: int, step: int, count: int = 1) -> dict:
        """Acknowledge the current step (optionally pre-acknowledging
        ``count`` steps) and advance the clock while the barrier is closed."""
        with self._lock:
            client = self.clients.get(client_id)
            if client is None:
                raise SimError(UNKNOWN_CLIENT, f"no client {client_id}")
            if step != self.clock_step:
                raise SimError(STALE_STEP, f"acked step {step}, current is {self.clock_step}")
            client.ack_until = max(client.ack_until, step + max(1, count))
            client.last_ack_wall = self.now_fn()
            client.last_acked_step = step
            self._advance_while_closed()
            return {"status": "ok", "new_step": self.clock_step}

    def _advance_while_closed(self) -> None:
        while self.clients and all(c.ack_until > self.clock_step for c in self.clients.values()):
            self._advance()

    def check_timeouts(self) -> list[int]:
        """Evict clients that are blocking the barrier past their timeout."""
        with self._lock:
            wall = self.now_fn()
            evicted = [
                cid
                for cid, c in self.clients.items()
                if c.ack_until <= self.clock_step and wall - c.last_ack_wall > c.timeout_s
            ]
            for cid in evicted:
                name = self.clients[cid].name
                del self.clients[cid]
                log.warning("client %s (%r) timed out at step %d; evicted", cid, name, self.clock_step)
            if evicted:
                self._advance_while_closed()
            return evicted

    def force_advance(self, steps: int = 1) -> int:
        """Advance unconditionally (free-run drivers and tests)."""
        with self._lock:
            for _ in range(steps):
                self._advance()
            return self.clock_step

    # ------------------------------------------------------------- control API

    def submit_control(self, person_id: int, trips: list[Trip]) -> None:
        with self._lock:
            if person_id not in self.persons:
                raise SimError(UNKNOWN_PERSON, f"no person {person_id}")
            now = self.now()
            last = -math.inf
            for i, trip in enumerate(trips):
                if trip.mode not in MODES:
                    raise SimError(INVALID_TRIPS, f"trip {i}: unknown mode {trip.mode!r}")
                if trip.depart_time < now:
                    raise SimError(
                        INVALID_TRIPS,
                        f"trip {i}: departure {trip.depart_time} is in the past (now {now})",
                    )
                if trip.depart_time <= last:
                    raise SimError(INVALID_TRIPS, f"trip {i}: departures must strictly increase")
                last = trip.depart_time
                if self._dest_aoi_of(trip.end) is None:
                    raise SimError(
                        INVALID_TRIPS, f"trip {i}: destination {trip.end[0]} {trip.end[1]} not found"
                    )
            self._pending_controls.append((person_id, list(trips)))

    def queue_message(
        self,
        sender: int,
        content: str,
        targets: list[int] | None = None,
        radius: float | None = None,
    ) -> int:
        with self._lock:
            if sender not in self.persons:
                raise SimError(UNKNOWN_PERSON, f"no person {sender}")
            msg = Message(
                id=self._next_msg,
                sender=sender,
                content=content,
                sent_step=self.clock_step,
                targets=list(targets) if targets is not None else None,
                radius=radius,
            )
            self._next_msg += 1
            self._msg_queue.append(msg)
            return msg.id

    def inbox(self, person_id: int) -> list[Message]:
        with self._lock:
            if person_id not in self.persons:
                raise SimError(UNKNOWN_PERSON, f"no person {person_id}")
            return list(self.persons[person_id].inbox)

    # -------------------------------------------------------------- events API

    def subscribe(self, trigger: str, target_id: int) -> int:
        with self._lock:
            if trigger not in TRIGGERS:
                raise SimError(UNKNOWN_ID, f"unknown trigger {trigger!r}")
            if trigger in ("enter_aoi", "leave_aoi") and target_id not in self.bundle.aois:
                raise SimError(UNKNOWN_ID, f"no AOI {target_id}")
            if trigger in ("enter_road", "leave_road") and target_id not in self.bundle.roads:
                raise SimError(UNKNOWN_ID, f"no road {target_id}")
            if trigger in ("trip_start", "trip_finish") and target_id not in self.persons:
                raise SimError(UNKNOWN_ID, f"no person {target_id}")
            sid = self._next_sub
            self._next_sub += 1
            self._subs[sid] = Subscription(sid, trigger, target_id, cursor=self._next_seq - 1)
            return sid

    def drain_events(self, sub_id: int, since_seq: int | None = None) -> tuple[list[Event], bool]:
        """Matching events with seq > since_seq, plus a truncation flag when
        part of that range has already left the retention window."""
        with self._lock:
            sub = self._subs.get(sub_id)
            if sub is None:
                raise SimError(UNKNOWN_SUBSCRIPTION, f"no subscription {sub_id}")
            start = sub.cursor if since_seq is None else since_seq
            truncated = start + 1 < self._base_seq
            lo = max(start + 1 - self._base_seq, 0)
            out = [
                ev
                for ev in self._events[lo:]
                if ev.trigger == sub.trigger and ev.target_id == sub.target_id
            ]
            if out:
                sub.cursor = max(sub.cursor, out[-1].seq)
            return out, truncated

    # ------------------------------------------------------------ snapshot API

    def get_aoi_runtime(self, aoi_id: int) -> dict:
        with self._lock:
            aoi = self.bundle.aois.get(aoi_id)
            if aoi is None:
                raise SimError(UNKNOWN_ID, f"no AOI {aoi_id}")
            horizon = self.clock_step - RECENT_WINDOW
            entries = self.aoi_entry_steps[aoi_id]
            departures = self.aoi_departure_steps[aoi_id]
            return {
                "id": aoi_id,
                "area_m2": aoi.area,
                "population": aoi.population,
                "land_use": aoi.land_use,
                "poi_count": self._poi_count.get(aoi_id, 0),
                "connected_roads": sorted({c.road_id for c in aoi.connections}),
                "people": sorted(self.aoi_people[aoi_id]),
                "recent_entries": len(entries) - bisect_left(entries, horizon),
                "recent_departures": len(departures) - bisect_left(departures, horizon),
                "step": self.clock_step,
            }

    def get_road_runtime(self, road_id: int) -> dict:
        with self._lock:
            rrt = self.roads_rt.get(road_id)
            if rrt is None:
                raise SimError(UNKNOWN_ID, f"no road {road_id}")
            speeds = [v.speed for lane in rrt.lanes for v in lane]
            avg, level = congestion_level(speeds, rrt.limit)
            return {
                "id": road_id,
                "length_m": rrt.length,
                "lane_count": len(rrt.lanes),
                "speed_limit": rrt.limit,
                "vehicles": sorted(v.person_id for lane in rrt.lanes for v in lane),
                "pedestrians": sorted(rrt.peds),
                "average_speed": avg,
                "congestion_level": level,
                "step": self.clock_step,
            }

    def get_person_runtime(self, person_id: int) -> dict:
        with self._lock:
            prt = self.persons.get(person_id)
            if prt is None:
                raise SimError(UNKNOWN_ID, f"no person {person_id}")
            point = self._person_point(prt)
            direction = (0.0, 0.0)
            speed = 0.0
            if prt.state == TRAVELING and prt.road_id is not None:
                road = self.bundle.roads[prt.road_id]
                offset = prt.veh.offset if prt.veh is not None else prt.offset
                hx, hy = road.geometry.heading_at(offset)
                sign = prt.leg_dir if prt.veh is None else 1
                direction = (hx * sign, hy * sign)
                speed = prt.veh.speed if prt.veh is not None else prt.speed
            return {
                "id": person_id,
                "coordinate": [point.x, point.y],
                "speed": speed,
                "direction": [direction[0], direction[1]],
                "current_trip": _trip_json(prt.current) if prt.current else None,
                "pending_trips": [_trip_json(t) for t in prt.pending],
                "balance": self.ledger.balance(person_account(person_id)),
                "state": prt.state,
                "step": self.clock_step,
            }

    # ------------------------------------------------------------------- batch

    def run(self, until_step: int) -> dict:
        """Free-run to the given step and return summary counters."""
        with self._lock:
            t0 = time.perf_counter()
            while self.clock_step < until_step:
                self._advance()
            wall = time.perf_counter() - t0
            return {
                "steps": self.clock_step,
                "trips_completed": self.trips_completed,
                "trips_failed": self.trips_failed,
                "events": self._next_seq,
                "messages_delivered": self.messages_delivered,
                "ledger_entries": len(self.ledger.entries),
                "negative_balances": self.negative_balance_events,
                "total_balance": self.ledger.total(),
                "wall_seconds": wall,
            }

    # ------------------------------------------------------------ advancement

    def _advance(self) -> None:
        step = self.clock_step
        now = self.cfg.start_time + step

        if self._pending_controls:
            self._apply_controls(step)
        if self._msg_queue:
            self._deliver_messages(step)
        if self._queued_entry:
            self._retry_queued_entries(step)
        self._start_due_trips(step, now)
        if self._active_roads:
            self._advance_vehicles(step, now)
        if self._walkers:
            self._advance_walkers(step)
        cfg = self.cfg
        if cfg.tax_rate is not None and cfg.wage_period > 0 and (now + 1) % cfg.wage_period == 0:
            self._pay_wages(step)
        if cfg.interest_rate > 0 and cfg.interest_period > 0 and (now + 1) % cfg.interest_period == 0:
            self._apply_interest(step)
        if cfg.collect_stats and step % cfg.stats_flow_interval == 0 and self._active_roads:
            for rid in sorted(self._active_roads):
                rrt = self.roads_rt[rid]
                speeds = [v.speed for lane in rrt.lanes for v in lane]
                avg, _ = congestion_level(speeds, rrt.limit)
                self.stats_records.append(
                    {
                        "kind": "road_flow",
                        "step": step,
                        "payload": {"road": rid, "vehicles": len(speeds), "avg_speed": round(avg, 4)},
                    }
                )
        self.clock_step = step + 1

    def _apply_controls(self, step: int) -> None:
        for pid, trips in self._pending_controls:
            prt = self.persons.get(pid)
            if prt is None:
                continue
            prt.pending = list(trips)
            if prt.state != TRAVELING:
                self._arm(prt)
        self._pending_controls.clear()

    def _deliver_messages(self, step: int) -> None:
        due = [m for m in self._msg_queue if m.sent_step <= step - 1]
        if not due:
            return
        self._msg_queue = [m for m in self._msg_queue if m.sent_step > step - 1]
        for msg in due:
            if msg.targets is not None:
                recipients = [t for t in msg.targets if t in self.persons]
            else:
                origin = self._person_point(self.persons[msg.sender])
                recipients = []
                for pid in self.persons:
                    if pid == msg.sender:
                        continue
                    if self._person_point(self.persons[pid]).dist(origin) <= msg.radius:
                        recipients.append(pid)
                recipients.sort()
            msg.delivered_step = step
            msg.recipients = recipients
            for pid in recipients:
                self.persons[pid].inbox.append(msg)
            self.messages_delivered += len(recipients)

    # ---- trips

    def _start_due_trips(self, step: int, now: int) -> None:
        while self._wakeups and self._wakeups[0][0] <= now:
            depart, pid = heapq.heappop(self._wakeups)
            prt = self.persons.get(pid)
            if prt is None or prt.state != WAITING or not prt.pending:
                continue
            if prt.pending[0].depart_time != depart:
                continue  # superseded by a control
            self._start_trip(prt, step)

    def _start_trip(self, prt: PersonRuntime, step: int) -> None:
        trip = prt.pending.pop(0)
        prt.current = trip
        self._emit(step, "trip_start", prt.id, prt.id)
        dest_aoi = self._dest_aoi_of(trip.end)
        if dest_aoi is None:
            self._fail_trip(prt, step, "destination missing")
            return
        if dest_aoi == prt.aoi_id:
            self._arrive(prt, step, dest_aoi, moved=False)
            return
        try:
            route = self.planner.plan(prt.aoi_id, trip.end, trip.mode)
        except SimError as exc:
            self._fail_trip(prt, step, exc.message)
            return
        prt.route = route
        prt.leg_index = 0
        self._leave_aoi(prt, step)
        if not route.legs:
            self._arrive(prt, step, dest_aoi, moved=True)
            return
        prt.state = TRAVELING
        if trip.mode == "drive":
            if not self._enter_first_road(prt, step):
                origin = self.bundle.aois[route.origin_aoi]
                conns = self.planner.connections_for(origin, "drive")
                prt.queued_point = conns[0].point if conns else self._aoi_centroids[route.origin_aoi]
                self._queued_entry[prt.id] = None
        else:
            leg = route.legs[0]
            prt.road_id = leg.road_id
            prt.offset = leg.entry_offset
            prt.leg_dir = leg.direction
            prt.speed = WALK_SPEED if trip.mode == "walk" else BIKE_SPEED
            self.roads_rt[leg.road_id].peds.add(prt.id)
            self._walkers[prt.id] = None
            self._emit(step, "enter_road", prt.id, leg.road_id)

    def _fail_trip(self, prt: PersonRuntime, step: int, reason: str) -> None:
        self._emit(step, "trip_finish", prt.id, prt.id, status="failed")
        self.trips_failed += 1
        if self.cfg.collect_stats:
            self.stats_records.append(
                {
                    "kind": "trip",
                    "step": step,
                    "payload": {"person": prt.id, "status": "failed", "reason": reason},
                }
            )
        prt.current = None
        prt.route = None
        self._arm(prt)

    def _leave_aoi(self, prt: PersonRuntime, step: int) -> None:
        aid = prt.aoi_id
        if aid is None:
            return
        self.aoi_people[aid].discard(prt.id)
        self.aoi_departure_steps[aid].append(step)
        self._emit(step, "leave_aoi", prt.id, aid)
        prt.aoi_id = None

    def _arrive(self, prt: PersonRuntime, step: int, dest_aoi: int, moved: bool) -> None:
        trip = prt.current
        if moved:
            self.aoi_people[dest_aoi].add(prt.id)
            self.aoi_entry_steps[dest_aoi].append(step)
            self._emit(step, "enter_aoi", prt.id, dest_aoi)
            prt.aoi_id = dest_aoi
        self._emit(step, "trip_finish", prt.id, prt.id, status="ok")
        self.trips_completed += 1
        if trip is not None and trip.end[0] == "poi":
            self._apply_consumption(prt, step, trip.end[1])
        if self.cfg.collect_stats:
            self.stats_records.append(
                {
                    "kind": "trip",
                    "step": step,
                    "payload": {
                        "person": prt.id,
                        "status": "ok",
                        "mode": trip.mode if trip else None,
                        "dest": list(trip.end) if trip else None,
                    },
                }
            )
        prt.current = None
        prt.route = None
        prt.road_id = None
        prt.veh = None
        prt.queued_point = None
        self._arm(prt)

    # ---- vehicles

    def _enter_first_road(self, prt: PersonRuntime, step: int) -> bool:
        leg = prt.route.legs[0]
        rrt = self.roads_rt[leg.road_id]
        exit_off = leg.exit_offset if len(prt.route.legs) == 1 else rrt.length
        veh = self._try_insert(rrt, leg.entry_offset, prt.id, exit_off)
        if veh is None:
            return False
        prt.veh = veh
        prt.road_id = leg.road_id
        prt.offset = leg.entry_offset
        self._active_roads.add(leg.road_id)
        self._queued_entry.pop(prt.id, None)
        prt.queued_point = None
        self._emit(step, "enter_road", prt.id, leg.road_id)
        return True

    def _try_insert(self, rrt: RoadRuntime, offset: float, person_id: int, exit_off: float) -> Vehicle | None:
        s0 = self.cfg.idm.s0
        for lane in rrt.lanes:
            pos = 0
            n = len(lane)
            while pos < n and lane[pos].offset > offset:
                pos += 1
            leader = lane[pos - 1] if pos > 0 else None
            follower = lane[pos] if pos < n else None
            if leader is not None and leader.offset - offset - leader.length < s0:
                continue
            if follower is not None and offset - follower.offset - VEHICLE_LENGTH < s0:
                continue
            veh = Vehicle(person_id, offset, 0.0, rrt.limit, exit_offset=exit_off)
            lane.insert(pos, veh)
            return veh
        return None

    def _retry_queued_entries(self, step: int) -> None:
        for pid in list(self._queued_entry):
            prt = self.persons[pid]
            self._enter_first_road(prt, step)

    def _signal_green(self, junction_id: int, movement_idx: int, now: int) -> bool:
        junction = self.bundle.junctions[junction_id]
        phases = junction.signal_phases
        if not phases:
            return True
        total = sum(p.duration_seconds for p in phases)
        if total <= 0:
            return True
        tau = now % total
        for phase in phases:
            if tau < phase.duration_seconds:
                return movement_idx in phase.green_movement_set
            tau -= phase.duration_seconds
        return False

    def _advance_vehicles(self, step: int, now: int) -> None:
        for rid in sorted(self._active_roads):
            rrt = self.roads_rt[rid]
            if len(rrt.lanes) > 1:
                self._mobil_pass(rrt)
        for _ in range(int(round(1.0 / SUBSTEP))):
            active = sorted(self._active_roads)
            for rid in active:
                rrt = self.roads_rt[rid]
                for lane in rrt.lanes:
                    if lane:
                        integrate_lane(lane, SUBSTEP, self.cfg.idm)
            for rid in active:
                rrt = self.roads_rt[rid]
                if rrt.vehicle_count():
                    self._boundary_pass(rrt, step, now)
            for rid in active:
                if not self.roads_rt[rid].vehicle_count():
                    self._active_roads.discard(rid)

    def _boundary_pass(self, rrt: RoadRuntime, step: int, now: int) -> None:
        for lane in rrt.lanes:
            idx = 0
            while idx < len(lane):
                veh = lane[idx]
                if veh.offset < veh.exit_offset - 1e-9:
                    idx += 1
                    continue
                prt = self.persons[veh.person_id]
                route = prt.route
                if prt.leg_index >= len(route.legs) - 1:
                    lane.pop(idx)
                    self._emit(step, "leave_road", prt.id, rrt.road.id)
                    self._arrive(prt, step, route.dest_aoi, moved=True)
                    continue
                if not self._cross_junction(prt, veh, rrt, lane, idx, step, now):
                    veh.offset = rrt.length
                    veh.speed = 0.0
                    idx += 1
            # A vehicle pinned at the road end may now sit closer than the
            # integration pass assumed; restore non-negative gaps exactly.
            for i in range(1, len(lane)):
                limit = lane[i - 1].offset - lane[i - 1].length
                if lane[i].offset > limit:
                    lane[i].offset = limit
                    if lane[i].speed > lane[i - 1].speed:
                        lane[i].speed = lane[i - 1].speed

    def _cross_junction(self, prt, veh, rrt, lane, idx, step, now) -> bool:
        carry = max(veh.offset - rrt.length, 0.0)
        next_leg = prt.route.legs[prt.leg_index + 1]
        move = self._movement_at.get((rrt.road.id, next_leg.road_id))
        if move is not None and not self._signal_green(move[0], move[1], now):
            return False
        target = self.roads_rt[next_leg.road_id]
        exit_off = (
            next_leg.exit_offset if prt.leg_index + 1 == len(prt.route.legs) - 1 else target.length
        )
        entry = min(carry, target.length)
        new_veh = self._try_insert(target, entry, prt.id, exit_off)
        if new_veh is None:
            return False
        new_veh.speed = veh.speed
        new_veh.v0 = target.limit
        lane.pop(idx)
        self._emit(step, "leave_road", prt.id, rrt.road.id)
        self._emit(step, "enter_road", prt.id, target.road.id)
        prt.leg_index += 1
        prt.road_id = target.road.id
        prt.offset = new_veh.offset
        prt.veh = new_veh
        self._active_roads.add(target.road.id)
        # Tiny roads can be crossed within a single substep.
        while new_veh.offset >= new_veh.exit_offset - 1e-9:
            route = prt.route
            if prt.leg_index >= len(route.legs) - 1:
                tlane = next(l for l in target.lanes if new_veh in l)
                tlane.remove(new_veh)
                self._emit(step, "leave_road", prt.id, target.road.id)
                self._arrive(prt, step, route.dest_aoi, moved=True)
                return True
            tlane = next(l for l in target.lanes if new_veh in l)
            tidx = tlane.index(new_veh)
            if not self._cross_junction(prt, new_veh, target, tlane, tidx, step, now):
                new_veh.offset = target.length
                new_veh.speed = 0.0
                return True
            return True
        return True

    def _mobil_pass(self, rrt: RoadRuntime) -> None:
        idm = self.cfg.idm
        mobil = self.cfg.mobil
        lanes = rrt.lanes
        moved: set[int] = set()
        for li in range(len(lanes)):
            for veh in list(lanes[li]):
                if veh.person_id in moved or veh not in lanes[li]:
                    continue
                my_idx = lanes[li].index(veh)
                leader = lanes[li][my_idx - 1] if my_idx > 0 else None
                follower = lanes[li][my_idx + 1] if my_idx + 1 < len(lanes[li]) else None
                for ti in (li - 1, li + 1):
                    if ti < 0 or ti >= len(lanes):
                        continue
                    if self._evaluate_change(veh, leader, follower, lanes[ti], idm, mobil):
                        lanes[li].remove(veh)
                        pos = 0
                        while pos < len(lanes[ti]) and lanes[ti][pos].offset > veh.offset:
                            pos += 1
                        lanes[ti].insert(pos, veh)
                        moved.add(veh.person_id)
                        break

    def _evaluate_change(self, veh, leader, follower, target_lane, idm, mobil) -> bool:
        t_leader = None
        t_follower = None
        for other in target_lane:
            if other.offset > veh.offset:
                t_leader = other
            elif other.offset <= veh.offset:
                t_follower = other
                break
        if t_leader is not None and t_leader.offset - veh.offset - t_leader.length < 0:
            return False
        if t_follower is not None and veh.offset - t_follower.offset - veh.length < 0:
            return False

        def accel(me, lead):
            if lead is None:
                return idm_acceleration(me.speed, me.v0, math.inf, 0.0, idm)
            return idm_acceleration(
                me.speed, me.v0, lead.offset - me.offset - lead.length, me.speed - lead.speed, idm
            )

        a_c = accel(veh, leader)
        a_c_new = accel(veh, t_leader)
        a_n = accel(t_follower, t_leader) if t_follower is not None else 0.0
        a_n_new = accel(t_follower, veh) if t_follower is not None else 0.0
        a_o = accel(follower, veh) if follower is not None else 0.0
        a_o_new = accel(follower, leader) if follower is not None else 0.0
        return mobil_decide(a_c, a_c_new, a_n, a_n_new, a_o, a_o_new, mobil)

    # ---- pedestrians

    def _advance_walkers(self, step: int) -> None:
        arrived: list[int] = []
        for pid in self._walkers:
            prt = self.persons[pid]
            budget = prt.speed
            route = prt.route
            while budget > 1e-12:
                leg = route.legs[prt.leg_index]
                remaining = (
                    leg.exit_offset - prt.offset if leg.direction > 0 else prt.offset - leg.exit_offset
                )
                if budget < remaining:
                    prt.offset += leg.direction * budget
                    budget = 0.0
                    break
                budget -= remaining
                prt.offset = leg.exit_offset
                if prt.leg_index >= len(route.legs) - 1:
                    self.roads_rt[leg.road_id].peds.discard(pid)
                    self._emit(step, "leave_road", pid, leg.road_id)
                    self._arrive(prt, step, route.dest_aoi, moved=True)
                    arrived.append(pid)
                    break
                nxt = route.legs[prt.leg_index + 1]
                if nxt.road_id != leg.road_id:
                    self.roads_rt[leg.road_id].peds.discard(pid)
                    self._emit(step, "leave_road", pid, leg.road_id)
                    self.roads_rt[nxt.road_id].peds.add(pid)
                    self._emit(step, "enter_road", pid, nxt.road_id)
                prt.leg_index += 1
                prt.road_id = nxt.road_id
                prt.offset = nxt.entry_offset
                prt.leg_dir = nxt.direction
        for pid in arrived:
            self._walkers.pop(pid, None)

    # ---- flows

    def _apply_consumption(self, prt: PersonRuntime, step: int, poi_id: int) -> None:
        poi = self.bundle.pois.get(poi_id)
        if poi is None or poi.aoi_id is None:
            return
        aoi = self.bundle.aois[poi.aoi_id]
        amount = aoi.consumption.get(poi.cate1, 0)
        if amount <= 0:
            return
        credit = enterprise_account(aoi.id, 0) if aoi.enterprises else GOVERNMENT
        entry = self.ledger.transfer(step, person_account(prt.id), credit, amount, "consumption")
        self._record_ledger(entry)
        # Overdrafts are allowed but surfaced in the stats stream.
        balance = self.ledger.balance(person_account(prt.id))
        if balance < 0:
            self.negative_balance_events += 1
            if self.cfg.collect_stats:
                self.stats_records.append(
                    {
                        "kind": "negative_balance",
                        "step": step,
                        "payload": {"person": prt.id, "balance": balance},
                    }
                )

    def _pay_wages(self, step: int) -> None:
        rate = self.cfg.tax_rate or 0.0
        for pid in sorted(self.persons):
            prt = self.persons[pid]
            if prt.workplace is None or prt.wage <= 0:
                continue
            aoi = self.bundle.aois.get(prt.workplace)
            debit = (
                enterprise_account(prt.workplace, 0)
                if aoi is not None and aoi.enterprises
                else GOVERNMENT
            )
            net, tax = wage_split(prt.wage, rate)
            entry = self.ledger.transfer(step, debit, person_account(pid), net, "wage")
            self._record_ledger(entry)
            if tax > 0:
                entry = self.ledger.transfer(step, debit, GOVERNMENT, tax, "tax")
                self._record_ledger(entry)

    def _apply_interest(self, step: int) -> None:
        rate = self.cfg.interest_rate
        for pid in sorted(self.persons):
            balance = self.ledger.balance(person_account(pid))
            if balance <= 0:
                continue
            amount = interest_amount(balance, rate)
            if amount <= 0:
                continue
            entry = self.ledger.transfer(step, BANK, person_account(pid), amount, "interest")
            self._record_ledger(entry)

    def _record_ledger(self, entry) -> None:
        if self.cfg.collect_stats:
            self.stats_records.append(
                {
                    "kind": "ledger",
                    "step": entry.step,
                    "payload": {
                        "debit": entry.debit,
                        "credit": entry.credit,
                        "amount": entry.amount,
                        "entry_kind": entry.kind,
                    },
                }
            )


def _trip_json(trip: Trip | None) -> dict | None:
    if trip is None:
        return None
    return {
        "end": {trip.end[0]: trip.end[1]},
        "depart_time": trip.depart_time,
        "mode": trip.mode,
    }
