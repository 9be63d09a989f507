import math

import pytest

from lanerl import track


def oval_spec(width=10.0):
    return track.TrackSpec(
        segments=(
            track.Straight(100.0),
            track.Arc(50.0, math.pi),
            track.Straight(100.0),
            track.Arc(50.0, math.pi),
        ),
        width=width,
        name="oval",
    )


class TestGeometry:
    def test_oval_total_length(self):
        t = track.build_track(oval_spec())
        assert t.total_length == pytest.approx(200.0 + 2.0 * math.pi * 50.0, abs=1e-9)
        assert t.total_length == pytest.approx(514.159, abs=1e-3)

    def test_full_circle_closes(self):
        t = track.build_track(
            track.TrackSpec(segments=(track.Arc(30.0, 2 * math.pi),), width=8.0, name="c")
        )
        assert t.total_length == pytest.approx(2 * math.pi * 30.0, abs=1e-9)

    def test_right_handed_circle_closes(self):
        t = track.build_track(
            track.TrackSpec(segments=(track.Arc(30.0, -2 * math.pi),), width=8.0, name="c")
        )
        assert t.curvature_at(10.0) == pytest.approx(-1.0 / 30.0)

    def test_open_loop_rejected(self):
        spec = track.TrackSpec(
            segments=(track.Straight(100.0), track.Arc(50.0, math.pi / 2)),
            width=10.0,
            name="open",
        )
        with pytest.raises(track.TrackValidationError, match="close"):
            track.build_track(spec)

    def test_heading_mismatch_rejected(self):
        # four left 90s with mismatched straights: returns to start heading
        # but not to the start point
        spec = track.TrackSpec(
            segments=(
                track.Straight(100.0),
                track.Arc(50.0, math.pi / 2),
                track.Straight(50.0),
                track.Arc(50.0, math.pi / 2),
                track.Straight(100.0),
                track.Arc(50.0, math.pi / 2),
                track.Straight(60.0),
                track.Arc(50.0, math.pi / 2),
            ),
            width=10.0,
            name="crooked",
        )
        with pytest.raises(track.TrackValidationError, match="close"):
            track.build_track(spec)

    def test_narrow_arc_rejected(self):
        spec = track.TrackSpec(
            segments=(track.Arc(4.0, 2 * math.pi),), width=10.0, name="tight"
        )
        with pytest.raises(track.TrackValidationError, match="radius"):
            track.build_track(spec)

    def test_bad_width_rejected(self):
        with pytest.raises(track.TrackValidationError, match="width"):
            track.build_track(
                track.TrackSpec(segments=(track.Arc(30.0, 2 * math.pi),), width=0.0)
            )

    def test_empty_rejected(self):
        with pytest.raises(track.TrackValidationError):
            track.build_track(track.TrackSpec(segments=(), width=10.0))


class TestLookup:
    def test_segment_boundaries(self):
        t = track.build_track(oval_spec())
        assert t.segment_index_at(0.0) == 0
        assert t.segment_index_at(99.999) == 0
        assert t.segment_index_at(100.0) == 1
        assert t.segment_index_at(t.total_length) == 0  # wraps
        assert t.segment_index_at(-1.0) == 3  # negative wraps backward

    def test_curvature_signs(self):
        t = track.build_track(oval_spec())
        assert t.curvature_at(50.0) == 0.0
        assert t.curvature_at(150.0) == pytest.approx(1.0 / 50.0)

    def test_pose_walks_the_loop(self):
        t = track.build_track(oval_spec())
        x0, y0, h0 = t.pose_at(0.0)
        assert (x0, y0, h0) == (0.0, 0.0, 0.0)
        x, y, h = t.pose_at(100.0 + 50.0 * math.pi / 2.0)  # quarter into first arc
        assert h == pytest.approx(math.pi / 2.0, abs=1e-12)
        assert x == pytest.approx(150.0, abs=1e-9)
        assert y == pytest.approx(50.0, abs=1e-9)
        # just before the wrap we are back near the origin
        x, y, h = t.pose_at(t.total_length - 1e-7)
        assert math.hypot(x, y) < 1e-5

    def test_pose_continuous_across_boundaries(self):
        t = track.build_track(oval_spec())
        for s in (100.0, 100.0 + 50.0 * math.pi, 300.0 + 50.0 * math.pi):
            xa, ya, _ = t.pose_at(s - 1e-8)
            xb, yb, _ = t.pose_at(s + 1e-8)
            assert math.hypot(xb - xa, yb - ya) < 1e-6


class TestFileFormat:
    GOOD = """
# comment line
width 10
straight 100
arc 50 180
straight 100  # trailing comment
arc 50 180
"""

    def test_parse_and_build(self):
        spec = track.parse_track(self.GOOD, name="oval")
        t = track.build_track(spec)
        assert t.total_length == pytest.approx(200.0 + 2 * math.pi * 50.0)
        assert t.width == 10.0

    def test_sweep_is_degrees_in_file(self):
        spec = track.parse_track("width 5\narc 30 360\n")
        assert spec.segments[0].sweep == pytest.approx(2 * math.pi)

    def test_missing_width(self):
        with pytest.raises(track.TrackValidationError, match="width"):
            track.parse_track("straight 100\n")

    def test_garbage_line(self):
        with pytest.raises(track.TrackValidationError, match="line 2"):
            track.parse_track("width 10\nwiggle 3 4\n")

    def test_bad_number(self):
        with pytest.raises(track.TrackValidationError):
            track.parse_track("width 10\nstraight ten\n")

    def test_load_round_trip(self, tmp_path):
        p = tmp_path / "oval.track"
        p.write_text(self.GOOD)
        t = track.load_track(p)
        assert t.name == "oval"


class TestBuiltin:
    def test_figure1_ships_and_validates(self):
        t = track.load_builtin("figure1")
        assert t.name == "figure1"
        assert t.width == 10.0
        assert t.total_length > 500.0
        kinds = {type(seg).__name__ for seg in t.spec.segments}
        assert kinds == {"Straight", "Arc"}
        sweeps = [seg.sweep for seg in t.spec.segments if isinstance(seg, track.Arc)]
        assert any(s < 0 for s in sweeps) and any(s > 0 for s in sweeps)

    def test_figure1_flat_out_lap_is_possible(self):
        # every arc must be takeable at v_max with |steer| <= 1 given the
        # default steering authority of 0.8 rad/s
        t = track.load_builtin("figure1")
        for seg in t.spec.segments:
            if isinstance(seg, track.Arc):
                assert 30.0 / seg.radius <= 0.8

    def test_unknown_builtin(self):
        with pytest.raises(FileNotFoundError):
            track.load_builtin("nurburgring")


class TestWrapAngle:
    def test_interval_is_half_open_at_minus_pi(self):
        assert track.wrap_angle(math.pi) == math.pi
        assert track.wrap_angle(-math.pi) == math.pi
        assert track.wrap_angle(3 * math.pi) == pytest.approx(math.pi)

    def test_identity_inside_range(self):
        for x in (-3.0, -0.5, 0.0, 0.5, 3.0):
            assert track.wrap_angle(x) == pytest.approx(x, abs=1e-15)

    def test_wraps_large_values(self):
        assert track.wrap_angle(2 * math.pi + 0.1) == pytest.approx(0.1, abs=1e-12)
        assert track.wrap_angle(-2 * math.pi - 0.1) == pytest.approx(-0.1, abs=1e-12)
