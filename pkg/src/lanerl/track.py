"""Closed-loop track geometry: straights and circular arcs.

The simulator works in track-relative coordinates (arc length s, lateral
offset), so all it needs from the geometry is the signed curvature at a
given s and the total length. World-frame poses are still exposed for
validation and plotting.
"""

import bisect
import math
import os
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi


class TrackValidationError(ValueError):
    """Track geometry violates a documented invariant."""


@dataclass(frozen=True)
class Straight:
    length: float


@dataclass(frozen=True)
class Arc:
    radius: float
    sweep: float  # signed radians, + turns left


@dataclass(frozen=True)
class TrackSpec:
    segments: tuple
    width: float
    name: str = "unnamed"


def _segment_length(seg):
    if isinstance(seg, Straight):
        return seg.length
    return seg.radius * abs(seg.sweep)


def _advance_pose(x, y, heading, seg):
    """End pose of a segment entered at (x, y, heading)."""
    if isinstance(seg, Straight):
        return (
            x + seg.length * math.cos(heading),
            y + seg.length * math.sin(heading),
            heading,
        )
    kappa = math.copysign(1.0 / seg.radius, seg.sweep)
    h1 = heading + seg.sweep
    return (
        x + (math.sin(h1) - math.sin(heading)) / kappa,
        y + (math.cos(heading) - math.cos(h1)) / kappa,
        h1,
    )


def wrap_angle(x):
    """Wrap to (-pi, pi]."""
    y = (x + math.pi) % TWO_PI - math.pi
    if y == -math.pi:
        return math.pi
    return y


class Track:
    """Compiled track: cumulative lengths plus O(log n) curvature lookup."""

    def __init__(self, spec):
        _validate(spec)
        self.spec = spec
        self.width = spec.width
        self.name = spec.name
        self._curvatures = []
        self._poses = [(0.0, 0.0, 0.0)]  # start pose of each segment
        cum = [0.0]
        x = y = heading = 0.0
        for seg in spec.segments:
            if isinstance(seg, Straight):
                self._curvatures.append(0.0)
            else:
                self._curvatures.append(math.copysign(1.0 / seg.radius, seg.sweep))
            cum.append(cum[-1] + _segment_length(seg))
            x, y, heading = _advance_pose(x, y, heading, seg)
            self._poses.append((x, y, heading))
        self._cum = cum
        self.total_length = cum[-1]

    @property
    def segments(self):
        return self.spec.segments

    def segment_index_at(self, s):
        """Segment containing arc length s in [0, total_length)."""
        s = s % self.total_length
        # rightmost boundary <= s; len(cum) == n_segments + 1
        return bisect.bisect_right(self._cum, s) - 1

    def curvature_at(self, s):
        return self._curvatures[self.segment_index_at(s)]

    def pose_at(self, s):
        """World-frame (x, y, heading) of the centerline point at s."""
        s = s % self.total_length
        idx = self.segment_index_at(s)
        x, y, heading = self._poses[idx]
        ds = s - self._cum[idx]
        seg = self.spec.segments[idx]
        if isinstance(seg, Straight):
            return (x + ds * math.cos(heading), y + ds * math.sin(heading), heading)
        kappa = self._curvatures[idx]
        h1 = heading + kappa * ds
        return (
            x + (math.sin(h1) - math.sin(heading)) / kappa,
            y + (math.cos(heading) - math.cos(h1)) / kappa,
            h1,
        )


def _validate(spec):
    if not spec.segments:
        raise TrackValidationError("track has no segments")
    if spec.width <= 0:
        raise TrackValidationError(f"width must be positive, got {spec.width}")
    total = 0.0
    for i, seg in enumerate(spec.segments):
        if isinstance(seg, Straight):
            if seg.length <= 0:
                raise TrackValidationError(f"segment {i}: straight length {seg.length} <= 0")
        elif isinstance(seg, Arc):
            if seg.radius <= spec.width / 2.0:
                raise TrackValidationError(
                    f"segment {i}: arc radius {seg.radius} <= width/2 "
                    f"({spec.width / 2.0}); inner edge self-intersects"
                )
            if seg.sweep == 0.0:
                raise TrackValidationError(f"segment {i}: arc sweep is zero")
        else:
            raise TrackValidationError(f"segment {i}: unknown segment type {type(seg).__name__}")
        total += _segment_length(seg)
    if total <= 0:
        raise TrackValidationError("total length must be positive")
    x = y = heading = 0.0
    for seg in spec.segments:
        x, y, heading = _advance_pose(x, y, heading, seg)
    pos_gap = math.hypot(x, y)
    heading_gap = abs(wrap_angle(heading))
    if pos_gap > 1e-6:
        raise TrackValidationError(
            f"loop does not close: end position is {pos_gap:.3e} m from the start"
        )
    if heading_gap > 1e-9:
        raise TrackValidationError(
            f"loop does not close: end heading differs by {heading_gap:.3e} rad"
        )


def build_track(spec):
    """Validate a TrackSpec and compile it for fast queries."""
    return Track(spec)


def parse_track(text, name="unnamed"):
    """Parse the track file format.

    One directive per line: `width <m>`, `straight <length_m>` or
    `arc <radius_m> <sweep_deg>`; blank lines and `#` comments ignored.
    """
    width = None
    segments = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        kind, args = parts[0], parts[1:]
        try:
            if kind == "width" and len(args) == 1:
                width = float(args[0])
            elif kind == "straight" and len(args) == 1:
                segments.append(Straight(length=float(args[0])))
            elif kind == "arc" and len(args) == 2:
                segments.append(Arc(radius=float(args[0]), sweep=math.radians(float(args[1]))))
            else:
                raise ValueError("unrecognized directive")
        except ValueError as exc:
            raise TrackValidationError(f"line {lineno}: cannot parse {raw!r} ({exc})") from exc
    if width is None:
        raise TrackValidationError("track file has no width directive")
    return TrackSpec(segments=tuple(segments), width=width, name=name)


def load_track(path):
    """Read, parse, validate and compile a track file."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    name = os.path.splitext(os.path.basename(path))[0]
    return build_track(parse_track(text, name=name))


def builtin_track_path(name):
    """Path of a track file shipped with the package (e.g. 'figure1')."""
    here = os.path.dirname(__file__)
    path = os.path.join(here, "data", f"{name}.track")
    if not os.path.isfile(path):
        raise FileNotFoundError(f"no builtin track named {name!r}")
    return path


def load_builtin(name):
    return load_track(builtin_track_path(name))
