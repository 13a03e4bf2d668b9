"""Scripted example agents: a perceive/act/communicate loop over the SDK.

Agents hold bounded memory, a persona tag map, and a rule-table policy
that maps times of day to destination choices. The loop never touches the
map directly: everything it knows comes from get_person, subscriptions and
knowledge-graph queries.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable

from .client import ApiError, ClientSession, InvalidTripsError

MEMORY_LIMIT = 256


@dataclass
class PolicyRule:
    """Fire once per simulated day when the clock crosses time_of_day."""

    time_of_day: int
    build: Callable[[ClientSession, "ScriptedAgent", dict], list[dict] | None]
    name: str = "rule"


@dataclass
class ScriptedAgent:
    person_id: int
    persona: dict = field(default_factory=dict)
    policy: list[PolicyRule] = field(default_factory=list)
    subscriptions: list[int] = field(default_factory=list)
    memory: deque = field(default_factory=lambda: deque(maxlen=MEMORY_LIMIT))


def run_scripted_agent(
    session: ClientSession,
    agent: ScriptedAgent,
    n_steps: int,
    chunk: int = 60,
) -> list[dict]:
    """Drive the agent for n_steps simulated seconds.

    Each iteration perceives (get_person plus any subscribed events),
    consults the policy, optionally submits trips, and ends in exactly one
    ack covering ``chunk`` steps. Returns the action log.
    """
    log: list[dict] = []
    if session.client_id is None:
        session.register(name=f"agent-{agent.person_id}")
    clock = session.get_clock()
    end_step = clock["step"] + n_steps
    last_tod = clock["time_of_day"]
    fired: set[tuple[int, int]] = set()

    while session.step < end_step:
        clock = session.get_clock()
        tod = clock["time_of_day"]
        day = session.sim_now() // 86400
        observation = {
            "step": clock["step"],
            "time_of_day": tod,
            "person": session.get_person(agent.person_id),
            "events": [],
        }
        for sub_id in agent.subscriptions:
            observation["events"].extend(session.events(sub_id)["events"])
        agent.memory.append(observation)

        for idx, rule in enumerate(agent.policy):
            crossed = last_tod < rule.time_of_day <= tod
            if not crossed or (day, idx) in fired:
                continue
            fired.add((day, idx))
            trips = rule.build(session, agent, observation)
            if not trips:
                continue
            try:
                session.set_trips(agent.person_id, trips)
                log.append(
                    {"step": clock["step"], "action": "set_trips", "rule": rule.name, "trips": trips}
                )
            except InvalidTripsError as exc:
                log.append(
                    {"step": clock["step"], "action": "skip", "rule": rule.name, "error": exc.code}
                )

        remaining = end_step - session.step
        before = session.step
        session.ack(count=min(chunk, remaining))
        log.append({"step": session.step, "action": "ack"})
        last_tod = tod
        if session.step == before:
            time.sleep(0.05)  # barrier is waiting on other clients

    return log


def lunch_rule(home_aoi: int, at: int = 12 * 3600, away_seconds: int = 1800) -> PolicyRule:
    """At the given hour, head to a restaurant POI and return home after.

    The restaurant comes from the knowledge graph alone: prefer food POIs
    in the AOI the agent currently occupies (fewest travel), falling back
    to the lowest-id food POI anywhere.
    """

    def build(session: ClientSession, agent: ScriptedAgent, observation: dict):
        entities = session.kg("category", "food", "cate1Of")["entities"]
        poi_ids = sorted(int(e.split(":", 1)[1]) for e in entities if e.startswith("poi:"))
        if not poi_ids:
            return None
        chosen = None
        for pid in poi_ids:
            located = session.kg("poi", pid, "locateAt")["entities"]
            if located and located[0] == f"aoi:{home_aoi}":
                continue  # lunch out, not at home
            chosen = pid
            break
        if chosen is None:
            chosen = poi_ids[0]
        depart = session.sim_now() + 60
        return [
            {"end": {"poi": chosen}, "depart": depart, "mode": "walk"},
            {"end": {"aoi": home_aoi}, "depart": depart + away_seconds, "mode": "walk"},
        ]

    return PolicyRule(time_of_day=at, build=build, name="lunch")


def navigate_to_poi(
    session: ClientSession,
    agent: ScriptedAgent,
    poi_id: int,
    max_steps: int = 7200,
    chunk: int = 120,
) -> dict:
    """Reach a named POI with no map access: knowledge-graph lookups plus
    get_person, set_trips and events only.

    Tries each mobility mode until one trip finishes cleanly. Returns
    {"success": bool, "mode": str | None, "steps": int}.
    """
    if session.client_id is None:
        session.register(name=f"navigator-{agent.person_id}")
    session.get_clock()
    # The graph confirms the POI exists and names its parcel; the trip list
    # is still addressed to the POI itself.
    located = session.kg("poi", poi_id, "locateAt")["entities"]
    if not located:
        return {"success": False, "mode": None, "steps": 0}
    sub = session.subscribe("trip_finish", agent.person_id)
    start_step = session.step
    cursor = -1
    for mode in ("drive", "walk", "bike"):
        try:
            session.set_trips(
                agent.person_id,
                [{"end": {"poi": poi_id}, "depart": session.sim_now() + 5, "mode": mode}],
            )
        except ApiError:
            continue
        while session.step - start_step < max_steps:
            session.ack(count=chunk)
            body = session.events(sub, since_seq=cursor)
            events = body["events"]
            if events:
                cursor = events[-1]["seq"]
                outcome = events[-1]
                if outcome.get("status") == "ok":
                    return {
                        "success": True,
                        "mode": mode,
                        "steps": session.step - start_step,
                    }
                break  # failed: try the next mode
        else:
            break
    return {"success": False, "mode": None, "steps": session.step - start_step}
