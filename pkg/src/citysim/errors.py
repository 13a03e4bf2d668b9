"""Error codes shared by the engine, the wire protocol and the CLI."""

from __future__ import annotations

UNKNOWN_ID = "UNKNOWN_ID"
UNKNOWN_PERSON = "UNKNOWN_PERSON"
INVALID_TRIPS = "INVALID_TRIPS"
STALE_STEP = "STALE_STEP"
UNKNOWN_CLIENT = "UNKNOWN_CLIENT"
UNKNOWN_SUBSCRIPTION = "UNKNOWN_SUBSCRIPTION"
UNSUPPORTED_MODE = "UNSUPPORTED_MODE"
PARSE_ERROR = "PARSE_ERROR"
SCHEMA_ERROR = "SCHEMA_ERROR"
NO_ROUTE = "NO_ROUTE"
NO_ROAD = "NO_ROAD"
TRUNCATED = "TRUNCATED"
BAD_CONFIG = "BAD_CONFIG"
CONTENT_TOO_LARGE = "CONTENT_TOO_LARGE"
UNKNOWN_ENTITY = "UNKNOWN_ENTITY"
UNKNOWN_RELATION = "UNKNOWN_RELATION"
NO_RESIDENTIAL = "NO_RESIDENTIAL"

# Codes that may appear in wire responses.
WIRE_CODES = frozenset(
    {
        UNKNOWN_ID,
        UNKNOWN_PERSON,
        INVALID_TRIPS,
        STALE_STEP,
        UNKNOWN_CLIENT,
        UNKNOWN_SUBSCRIPTION,
        UNSUPPORTED_MODE,
        PARSE_ERROR,
        NO_ROUTE,
        TRUNCATED,
    }
)


class SimError(Exception):
    """An error with a stable machine-readable code."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message
