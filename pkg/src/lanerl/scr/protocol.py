"""SCR wire format: '(name value ...)' token groups over UDP datagrams.

The grammar, field arities and control literals follow the SCR championship
client conventions. Everything version-dependent lives in the constants
below so a deviating server build is a one-line fix.
"""

import math
import re
from dataclasses import dataclass

from lanerl.simulator import Observation

# control literals sent outside the token grammar
IDENTIFIED = "***identified***"
SHUTDOWN = "***shutdown***"
RESTART = "***restart***"

# 19 rangefinders, evenly spaced across [-90 deg, +90 deg]
DEFAULT_RANGEFINDER_ANGLES = tuple(float(a) for a in range(-90, 91, 10))

# expected value counts per recognized sensor field
KNOWN_ARITY = {
    "angle": 1,
    "curLapTime": 1,
    "damage": 1,
    "distFromStart": 1,
    "distRaced": 1,
    "focus": 5,
    "fuel": 1,
    "gear": 1,
    "lastLapTime": 1,
    "opponents": 36,
    "racePos": 1,
    "rpm": 1,
    "speedX": 1,
    "speedY": 1,
    "speedZ": 1,
    "track": 19,
    "trackPos": 1,
    "wheelSpinVel": 4,
    "z": 1,
}


@dataclass(frozen=True)
class ControlLiterals:
    """Exact byte strings the server uses for session control."""

    identified: str = IDENTIFIED
    shutdown: str = SHUTDOWN
    restart: str = RESTART


class ScrParseError(ValueError):
    """Malformed datagram. Carries the byte offset of the problem."""

    def __init__(self, message, offset):
        super().__init__(f"{message} at byte {offset}")
        self.offset = offset


class ScrFormatError(ValueError):
    pass


_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_NUM_RE = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?")


def _as_text(data):
    if isinstance(data, (bytes, bytearray)):
        return data.decode("ascii", "replace")
    return data


def tokenize(data):
    """Split a datagram into (name, values, byte_offset) groups.

    Total over well-formed input; anything else raises ScrParseError with
    the offending byte offset. NUL bytes count as whitespace since the
    reference server pads datagrams with a trailing '\\x00'.
    """
    s = _as_text(data)
    groups = []
    i, n = 0, len(s)
    while i < n:
        c = s[i]
        if c.isspace() or c == "\x00":
            i += 1
            continue
        if c != "(":
            raise ScrParseError("expected '('", i)
        start = i
        m = _IDENT_RE.match(s, i + 1)
        if m is None:
            raise ScrParseError("expected field name", i + 1)
        name = m.group()
        i = m.end()
        values = []
        while True:
            while i < n and (s[i].isspace() or s[i] == "\x00"):
                i += 1
            if i >= n:
                raise ScrParseError("unbalanced '('", start)
            if s[i] == ")":
                i += 1
                break
            m = _NUM_RE.match(s, i)
            if m is None:
                raise ScrParseError("expected numeric value", i)
            end = m.end()
            if end < n and not (s[end].isspace() or s[end] in ")\x00"):
                raise ScrParseError("expected numeric value", i)
            values.append(float(m.group()))
            i = end
        if not values:
            raise ScrParseError(f"field '{name}' has no values", start)
        groups.append((name, tuple(values), start))
    return groups


class SensorFrame:
    """One parsed server datagram.

    All fields live in the `fields` dict (name -> tuple of floats);
    the common ones are exposed as properties. Unrecognized keys are
    kept verbatim, never rejected.
    """

    __slots__ = ("fields",)

    def __init__(self, fields=None):
        self.fields = dict(fields) if fields else {}

    def get(self, name, default=None):
        values = self.fields.get(name)
        return values if values is not None else default

    def _scalar(self, name, default=0.0):
        values = self.fields.get(name)
        return values[0] if values else default

    @property
    def angle(self):
        return self._scalar("angle")

    @property
    def trackPos(self):
        return self._scalar("trackPos")

    @property
    def speedX(self):
        return self._scalar("speedX")

    @property
    def rpm(self):
        return self._scalar("rpm")

    @property
    def gear(self):
        return int(self._scalar("gear"))

    @property
    def track(self):
        return self.fields.get("track")

    def to_observation(self):
        """Project onto the simulator's observation triple."""
        return Observation(trackPos=self.trackPos, angle=self.angle, speedX=self.speedX)

    def __eq__(self, other):
        return isinstance(other, SensorFrame) and self.fields == other.fields

    def __repr__(self):
        return f"SensorFrame({self.fields!r})"


@dataclass
class ActuatorFrame:
    steer: float = 0.0
    accel: float = 0.0
    brake: float = 0.0
    gear: int = 1
    meta: int | None = None


def parse_sensors(data, known_arity=KNOWN_ARITY):
    """Parse a server datagram into a SensorFrame, checking field arities."""
    fields = {}
    for name, values, offset in tokenize(data):
        arity = known_arity.get(name)
        if arity is not None and len(values) != arity:
            raise ScrParseError(
                f"field '{name}' expects {arity} values, got {len(values)}", offset
            )
        fields[name] = values
    return SensorFrame(fields)


def parse_actuators(data):
    """Parse a client datagram. Unknown keys are ignored, not errors."""
    frame = ActuatorFrame()
    for name, values, offset in tokenize(data):
        if name in ("steer", "accel", "brake", "gear", "meta") and len(values) != 1:
            raise ScrParseError(f"field '{name}' expects 1 value, got {len(values)}", offset)
        if name == "steer":
            frame.steer = values[0]
        elif name == "accel":
            frame.accel = values[0]
        elif name == "brake":
            frame.brake = values[0]
        elif name == "gear":
            frame.gear = int(values[0])
        elif name == "meta":
            frame.meta = int(values[0])
    return frame


def format_actuators(frame):
    """Canonical actuator line: fixed key order, 6-decimal reals."""
    values = (frame.accel, frame.brake, frame.steer)
    if not all(math.isfinite(v) for v in values):
        raise ScrFormatError(f"non-finite actuator value in {frame!r}")
    out = "(accel %.6f)(brake %.6f)(gear %d)(steer %.6f)" % (
        frame.accel,
        frame.brake,
        frame.gear,
        frame.steer,
    )
    if frame.meta is not None:
        out += "(meta %d)" % frame.meta
    return out


def format_sensors(frame):
    """Serialize a SensorFrame the way the reference server does."""
    parts = []
    for name, values in frame.fields.items():
        if not all(math.isfinite(v) for v in values):
            raise ScrFormatError(f"non-finite value in sensor field '{name}'")
        parts.append("(%s %s)" % (name, " ".join("%.6f" % v for v in values)))
    return "".join(parts)


def _format_angle(a):
    return "%d" % a if a == int(a) else "%.6f" % a


def format_init(client_id="SCR", angles=None):
    """Handshake string: '<id>(init <19 mount angles in degrees>)'."""
    if angles is None:
        angles = DEFAULT_RANGEFINDER_ANGLES
    angles = tuple(float(a) for a in angles)
    if len(angles) != 19:
        raise ScrFormatError(f"expected 19 rangefinder angles, got {len(angles)}")
    return "%s(init %s)" % (client_id, " ".join(_format_angle(a) for a in angles))
