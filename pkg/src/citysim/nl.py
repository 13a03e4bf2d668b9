"""Standardized language command interface.

A deterministic grammar (not a model) covers the four commands:

    get (aoi|road|person) with id <int> [.]
    set agent with id <int> to <verb> to (aoi|poi) <int> at <hh>:<mm>
        (, and then <verb> to (aoi|poi) <int> at <hh>:<mm>)* [.]

with <verb> in drive/walk/bike. Matching is case-insensitive and tolerant
of extra whitespace. Responses are rendered from fixed sentence templates.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import PARSE_ERROR, SimError
from .model import Trip

VERBS = ("drive", "walk", "bike")

_TOKEN_RE = re.compile(r"\d{1,2}:\d{2}|[A-Za-z_]+|\d+|[.,]|\S")


@dataclass
class TripSpec:
    mode: str
    dest_kind: str  # "aoi" | "poi"
    dest_id: int
    depart_time: int  # seconds within the day


@dataclass
class Command:
    kind: str  # get_aoi | get_road | get_person | set_trips
    target_id: int
    trips: list[TripSpec] | None = None


class _Tokens:
    def __init__(self, text: str):
        self.raw = text
        self.items: list[tuple[str, int]] = [
            (m.group(0).lower(), m.start()) for m in _TOKEN_RE.finditer(text)
        ]
        self.pos = 0

    def peek(self) -> str | None:
        return self.items[self.pos][0] if self.pos < len(self.items) else None

    def error(self, expected: str) -> SimError:
        if self.pos < len(self.items):
            tok, off = self.items[self.pos]
            return SimError(
                PARSE_ERROR, f"expected {expected} at position {off}, found {tok!r}"
            )
        return SimError(PARSE_ERROR, f"expected {expected} at end of input")

    def take(self, *alternatives: str) -> str:
        tok = self.peek()
        if tok is None or tok not in alternatives:
            raise self.error(" or ".join(repr(a) for a in alternatives))
        self.pos += 1
        return tok

    def take_int(self, what: str) -> int:
        tok = self.peek()
        if tok is None or not tok.isdigit():
            raise self.error(what)
        self.pos += 1
        return int(tok)

    def take_time(self) -> int:
        tok = self.peek()
        if tok is None or ":" not in tok:
            raise self.error("a time like 09:20")
        hh, mm = tok.split(":")
        hours, minutes = int(hh), int(mm)
        if hours >= 24 or minutes >= 60:
            raise self.error("a time like 09:20 (hh<24, mm<60)")
        self.pos += 1
        return hours * 3600 + minutes * 60

    def end(self) -> None:
        if self.peek() == ".":
            self.pos += 1
        if self.pos != len(self.items):
            raise self.error("end of command")


def parse_command(text: str) -> Command:
    """Parse one command line; raises SimError(PARSE_ERROR) with the
    earliest non-matching position otherwise."""
    tokens = _Tokens(text)
    head = tokens.peek()
    if head == "get":
        tokens.take("get")
        kind = tokens.take("aoi", "road", "person")
        tokens.take("with")
        tokens.take("id")
        ident = tokens.take_int("an id")
        tokens.end()
        return Command(kind=f"get_{kind}", target_id=ident)
    if head == "set":
        tokens.take("set")
        tokens.take("agent")
        tokens.take("with")
        tokens.take("id")
        person_id = tokens.take_int("an agent id")
        tokens.take("to")
        trips = [_parse_leg(tokens)]
        while tokens.peek() == ",":
            tokens.take(",")
            tokens.take("and")
            tokens.take("then")
            trips.append(_parse_leg(tokens))
        tokens.end()
        return Command(kind="set_trips", target_id=person_id, trips=trips)
    raise tokens.error("'get' or 'set'")


def _parse_leg(tokens: _Tokens) -> TripSpec:
    mode = tokens.take(*VERBS)
    tokens.take("to")
    kind = tokens.take("aoi", "poi")
    ident = tokens.take_int("a destination id")
    tokens.take("at")
    depart = tokens.take_time()
    return TripSpec(mode=mode, dest_kind=kind, dest_id=ident, depart_time=depart)


# ---------------------------------------------------------------- rendering


def _join_ids(ids: list[int]) -> str:
    if not ids:
        return ""
    if len(ids) == 1:
        return str(ids[0])
    return ", ".join(str(i) for i in ids[:-1]) + " and " + str(ids[-1])


def _fmt(value: float, decimals: int = 1) -> str:
    out = f"{value:.{decimals}f}"
    return out.rstrip("0").rstrip(".") if "." in out else out


def render_aoi(info: dict) -> str:
    roads = info["connected_roads"]
    if not roads:
        tail = "is connected to no roads"
    elif len(roads) == 1:
        tail = f"is connected to road {roads[0]}"
    else:
        tail = f"is connected to roads {_join_ids(roads)}"
    land = info["land_use"].replace("_", " ")
    return (
        f"The AOI with ID {info['id']} has an area of {round(info['area_m2'])} square meters, "
        f"a population of {info['population']}, the land use type is {land} land, "
        f"contains {info['poi_count']} POIs, and {tail}."
    )


def render_road(info: dict) -> str:
    return (
        f"The road with ID {info['id']} is {round(info['length_m'])} meters long "
        f"with {info['lane_count']} lanes and a speed limit of {_fmt(info['speed_limit'])} m/s, "
        f"carries {len(info['vehicles'])} vehicles and {len(info['pedestrians'])} pedestrians, "
        f"the average speed is {_fmt(info['average_speed'])} m/s, "
        f"and the congestion level is {info['congestion_level']}."
    )


def render_person(info: dict) -> str:
    x, y = info["coordinate"]
    dx, dy = info["direction"]
    trip = info["current_trip"]
    if trip:
        kind, ident = next(iter(trip["end"].items()))
        doing = f"is traveling to {kind.upper()} {ident} by {trip['mode']}"
    else:
        doing = "has no trip in progress"
    return (
        f"The person with ID {info['id']} is at ({_fmt(x)}, {_fmt(y)}) "
        f"moving at {_fmt(info['speed'])} m/s with heading ({_fmt(dx, 2)}, {_fmt(dy, 2)}), "
        f"and {doing}."
    )


def execute_and_render(command: Command, engine) -> str:
    """Run a parsed command against an engine and phrase the outcome."""
    try:
        if command.kind == "get_aoi":
            return render_aoi(engine.get_aoi_runtime(command.target_id))
        if command.kind == "get_road":
            return render_road(engine.get_road_runtime(command.target_id))
        if command.kind == "get_person":
            return render_person(engine.get_person_runtime(command.target_id))
        if command.kind == "set_trips":
            now = engine.clock()["step"] + engine.cfg.start_time
            day_base = (now // 86400) * 86400
            trips = [
                Trip(
                    end=(spec.dest_kind, spec.dest_id),
                    depart_time=day_base + spec.depart_time,
                    mode=spec.mode,
                )
                for spec in command.trips
            ]
            engine.submit_control(command.target_id, trips)
            return "OK."
        raise SimError(PARSE_ERROR, f"unknown command kind {command.kind!r}")
    except SimError as exc:
        return f"Error: {exc.code}: {exc.message}."


def handle_text(text: str, engine) -> str:
    try:
        command = parse_command(text)
    except SimError as exc:
        return f"Error: {exc.code}: {exc.message}."
    return execute_and_render(command, engine)
