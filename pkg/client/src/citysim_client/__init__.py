"""Python SDK for the citysim wire protocol, plus scripted example agents."""

from .agents import PolicyRule, ScriptedAgent, lunch_rule, navigate_to_poi, run_scripted_agent
from .client import (
    ApiError,
    ClientSession,
    InvalidTripsError,
    NoRouteError,
    ParseError,
    StaleStepError,
    UnknownClientError,
    UnknownIdError,
    UnknownPersonError,
    UnknownSubscriptionError,
    UnsupportedModeError,
    decode_body,
)

__version__ = "0.1.0"

__all__ = [
    "ApiError",
    "ClientSession",
    "InvalidTripsError",
    "NoRouteError",
    "ParseError",
    "PolicyRule",
    "ScriptedAgent",
    "StaleStepError",
    "UnknownClientError",
    "UnknownIdError",
    "UnknownPersonError",
    "UnknownSubscriptionError",
    "UnsupportedModeError",
    "decode_body",
    "lunch_rule",
    "navigate_to_poi",
    "run_scripted_agent",
]
