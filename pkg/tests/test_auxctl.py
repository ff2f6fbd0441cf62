import math

import pytest

from roadlab.auxctl import interpret_profile, lens_filter, profile_of
from roadlab.errors import AmbiguousEdit, InvalidGeometry
from roadlab.geom import Point, Polygon, Polyline


def square(x0, y0, x1, y1):
    return Polygon([Point(x0, y0), Point(x1, y0), Point(x1, y1), Point(x0, y1), Point(x0, y0)])


class TestLens:
    def points(self):
        return [(i, Point(i * 0.5, 0.0), i % 2) for i in range(100)]

    def test_lod_zero_shows_all_inside(self):
        ids = lens_filter(square(0, -1, 10, 1), 0, None, self.points())
        assert ids == [i for i in range(100) if i * 0.5 <= 10]

    def test_lod_decimates_by_powers_of_four(self):
        inside = lens_filter(square(-1, -1, 100, 1), 0, None, self.points())
        lod1 = lens_filter(square(-1, -1, 100, 1), 1, None, self.points())
        lod2 = lens_filter(square(-1, -1, 100, 1), 2, None, self.points())
        assert lod1 == inside[::4]
        assert lod2 == inside[::16]

    def test_pass_filter(self):
        ids = lens_filter(square(-1, -1, 100, 1), 0, 1, self.points())
        assert ids and all(i % 2 == 1 for i in ids)

    def test_decimation_is_stable_in_id_order(self):
        pts = list(reversed(self.points()))
        assert lens_filter(square(-1, -1, 100, 1), 1, None, pts) == lens_filter(
            square(-1, -1, 100, 1), 1, None, self.points()
        )

    def test_negative_lod_rejected(self):
        with pytest.raises(InvalidGeometry):
            lens_filter(square(0, 0, 1, 1), -1, None, [])


def line3d(*pts):
    return Polyline([Point(x, y, z) for x, y, z in pts])


class TestProfile:
    def test_profile_offsets_left_by_height(self):
        src = line3d((0, 0, 10), (10, 0, 12), (20, 0, 10))
        prof, z_min = profile_of(src)
        assert z_min == 10.0
        vs = prof.vertices
        assert vs[0].dist(Point(0, 0)) < 1e-12
        assert vs[1].dist(Point(10, 2)) < 1e-12
        assert vs[2].dist(Point(20, 0)) < 1e-12

    def test_missing_z_rejected(self):
        with pytest.raises(InvalidGeometry):
            profile_of(Polyline([Point(0, 0), Point(1, 0)]))

    def test_interpret_round_trip(self):
        src = line3d((0, 0, 10), (10, 0, 12), (20, 0, 11))
        prof, z_min = profile_of(src)
        back = interpret_profile(prof, src, z_min)
        assert [v.z for v in back.vertices] == pytest.approx([10.0, 12.0, 11.0])

    def test_dragging_profile_vertex_changes_z(self):
        src = line3d((0, 0, 10), (10, 0, 12), (20, 0, 10))
        prof, z_min = profile_of(src)
        edited = Polyline([prof.vertices[0], Point(10, 5), prof.vertices[2]])
        out = interpret_profile(edited, src, z_min)
        assert out.vertices[1].z == pytest.approx(15.0)

    def test_distance_is_unsigned(self):
        src = line3d((0, 0, 10), (10, 0, 12), (20, 0, 10))
        prof, z_min = profile_of(src)
        edited = Polyline([prof.vertices[0], Point(10, -3), prof.vertices[2]])
        out = interpret_profile(edited, src, z_min)
        assert out.vertices[1].z == pytest.approx(13.0)
        assert all(v.z >= z_min for v in out.vertices)

    def test_vertex_count_mismatch_rejected(self):
        src = line3d((0, 0, 10), (10, 0, 12), (20, 0, 10))
        prof, z_min = profile_of(src)
        bad = Polyline(list(prof.vertices[:2]))
        with pytest.raises(AmbiguousEdit):
            interpret_profile(bad, src, z_min)
