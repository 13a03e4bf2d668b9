"""Session-oriented SDK over the simulator's HTTP/JSON wire protocol.

Every method mirrors one endpoint and returns the wire body as native
structures, untouched. Wire errors surface as typed exceptions carrying
the machine-readable code.
"""

from __future__ import annotations

import json
from typing import Any

import requests


class ApiError(Exception):
    """A wire error body ({code, message}) as an exception."""

    code = "API_ERROR"

    def __init__(self, code: str, message: str, status: int):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message
        self.status = status


class UnknownIdError(ApiError):
    pass


class UnknownPersonError(ApiError):
    pass


class InvalidTripsError(ApiError):
    pass


class StaleStepError(ApiError):
    pass


class UnknownClientError(ApiError):
    pass


class UnknownSubscriptionError(ApiError):
    pass


class UnsupportedModeError(ApiError):
    pass


class ParseError(ApiError):
    pass


class NoRouteError(ApiError):
    pass


ERROR_TYPES = {
    "UNKNOWN_ID": UnknownIdError,
    "UNKNOWN_PERSON": UnknownPersonError,
    "INVALID_TRIPS": InvalidTripsError,
    "STALE_STEP": StaleStepError,
    "UNKNOWN_CLIENT": UnknownClientError,
    "UNKNOWN_SUBSCRIPTION": UnknownSubscriptionError,
    "UNSUPPORTED_MODE": UnsupportedModeError,
    "PARSE_ERROR": ParseError,
    "NO_ROUTE": NoRouteError,
}


def decode_body(raw: bytes, status: int = 200) -> Any:
    """Decode one wire body exactly as the session methods do.

    The SDK never reshapes payloads; this is the whole transformation
    pipeline, exposed for fidelity checks against recorded responses.
    """
    body = json.loads(raw) if raw else None
    if status >= 400:
        code = body.get("code", "API_ERROR") if isinstance(body, dict) else "API_ERROR"
        message = body.get("message", "") if isinstance(body, dict) else str(body)
        raise ERROR_TYPES.get(code, ApiError)(code, message, status)
    return body


class ClientSession:
    """One simulator connection with at most one clock registration.

    Tracks the current step locally so acks always target the step the
    server is actually waiting on.
    """

    def __init__(self, base_url: str, timeout: float = 30.0):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.client_id: int | None = None
        self.step: int | None = None
        self._start_time: int | None = None
        self._http = requests.Session()

    # -- plumbing ----------------------------------------------------------

    def _request(self, method: str, path: str, body: dict | None = None, params=None) -> Any:
        response = self._http.request(
            method,
            self.base_url + path,
            json=body,
            params=params,
            timeout=self.timeout,
        )
        return decode_body(response.content, response.status_code)

    def close(self):
        self._http.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    # -- clock and barrier ---------------------------------------------------

    def get_clock(self) -> dict:
        body = self._request("GET", "/clock")
        self.step = body["step"]
        if self._start_time is None:
            self._start_time = (body["time_of_day"] - body["step"]) % 86400
        return body

    def sim_now(self) -> int:
        """Absolute simulation seconds (start offset + current step)."""
        if self.step is None or self._start_time is None:
            self.get_clock()
        return self._start_time + self.step

    def register(self, name: str = "sdk", timeout_s: float = 30.0) -> int:
        if self.client_id is not None:
            raise RuntimeError("session is already registered")
        body = self._request("POST", "/clients", {"name": name, "timeout_s": timeout_s})
        self.client_id = body["client_id"]
        if self.step is None:
            self.get_clock()
        return self.client_id

    def ack(self, count: int = 1) -> dict:
        """Acknowledge the cached current step (optionally several at once)
        and adopt the server's new step.

        Other clients (or the eviction of a stalled one) can move the clock
        between our acks; a stale cache is refreshed and the ack retried
        once, so one call still means one logical acknowledgement.
        """
        if self.client_id is None:
            raise RuntimeError("register() before ack()")
        if self.step is None:
            self.get_clock()
        for attempt in (0, 1):
            try:
                body = self._request(
                    "POST",
                    f"/clients/{self.client_id}/ack",
                    {"step": self.step, "count": count},
                )
                self.step = body["new_step"]
                return body
            except StaleStepError:
                if attempt:
                    raise
                self.get_clock()

    # -- sense --------------------------------------------------------------

    def get_aoi(self, aoi_id: int) -> dict:
        return self._request("GET", f"/aois/{aoi_id}")

    def get_road(self, road_id: int) -> dict:
        return self._request("GET", f"/roads/{road_id}")

    def get_person(self, person_id: int) -> dict:
        return self._request("GET", f"/persons/{person_id}")

    # -- control --------------------------------------------------------------

    def set_trips(self, person_id: int, trips: list[dict]) -> dict:
        return self._request("POST", f"/persons/{person_id}/trips", {"trips": trips})

    # -- events ---------------------------------------------------------------

    def subscribe(self, trigger: str, target_id: int) -> int:
        return self._request(
            "POST", "/subscriptions", {"trigger": trigger, "target_id": target_id}
        )["sub_id"]

    def events(self, sub_id: int, since_seq: int | None = None) -> dict:
        params = {} if since_seq is None else {"since_seq": since_seq}
        return self._request("GET", f"/subscriptions/{sub_id}/events", params=params)

    # -- knowledge graph and language -----------------------------------------

    def kg(self, entity_kind: str, entity_id, relation: str) -> dict:
        return self._request("GET", f"/kg/{entity_kind}/{entity_id}/{relation}")

    def nl(self, text: str) -> str:
        return self._request("POST", "/nl", {"text": text})["text"]
