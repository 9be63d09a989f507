"""Text protocol and datagram client for SCR-style racing servers."""

from lanerl.scr.client import ScrConnectionError, SessionSummary, run_client
from lanerl.scr.mockserver import MockScrServer
from lanerl.scr.protocol import (
    DEFAULT_RANGEFINDER_ANGLES,
    KNOWN_ARITY,
    ActuatorFrame,
    ControlLiterals,
    ScrFormatError,
    ScrParseError,
    SensorFrame,
    format_actuators,
    format_init,
    format_sensors,
    parse_actuators,
    parse_sensors,
    tokenize,
)

__all__ = [
    "DEFAULT_RANGEFINDER_ANGLES",
    "KNOWN_ARITY",
    "ActuatorFrame",
    "ControlLiterals",
    "MockScrServer",
    "ScrConnectionError",
    "ScrFormatError",
    "ScrParseError",
    "SensorFrame",
    "SessionSummary",
    "format_actuators",
    "format_init",
    "format_sensors",
    "parse_actuators",
    "parse_sensors",
    "run_client",
    "tokenize",
]
