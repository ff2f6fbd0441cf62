import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from roadlab import geom
from roadlab.errors import (
    EmptyVote,
    FilletTooLarge,
    InvalidGeometry,
    OffsetDegenerate,
    OutOfRange,
)
from roadlab.geom import (
    Arc,
    Point,
    Polygon,
    Polyline,
    bezier_eval,
    fillet_corner,
    offset_polyline,
    point_at,
    polygon_intersection_area,
    project_to_polyline,
    weighted_orientation_mean,
)


def line(*coords):
    return Polyline.from_xy(coords)


# ---------------------------------------------------------------- types

def test_point_rejects_nan():
    with pytest.raises(InvalidGeometry):
        Point(float("nan"), 0.0)
    with pytest.raises(InvalidGeometry):
        Point(0.0, float("inf"))


def test_polyline_rejects_duplicates_and_short():
    with pytest.raises(InvalidGeometry):
        Polyline([Point(0, 0)])
    with pytest.raises(InvalidGeometry):
        line((0, 0), (0, 0))


def test_polygon_must_close_and_have_area():
    with pytest.raises(InvalidGeometry):
        Polygon.from_xy([(0, 0), (1, 0), (1, 1), (0.5, 0.5)])
    with pytest.raises(InvalidGeometry):
        Polygon.from_xy([(0, 0), (1, 0), (2, 0), (0, 0)])
    sq = Polygon.from_xy([(0, 0), (1, 0), (1, 1), (0, 1), (0, 0)])
    assert sq.area == pytest.approx(1.0)


def test_arc_sweep_bounds():
    with pytest.raises(InvalidGeometry):
        Arc(Point(0, 0), 0.0, 0.0, 1.0)
    with pytest.raises(InvalidGeometry):
        Arc(Point(0, 0), 1.0, 0.0, 0.0)  # zero sweep


# ------------------------------------------------------ linear referencing

def test_project_axis_aligned():
    s, d, seg = project_to_polyline(Point(1, 1), line((0, 0), (2, 0)))
    assert s == pytest.approx(1.0)
    assert d == pytest.approx(1.0)
    assert seg == 0


def test_project_endpoint():
    s, d, _ = project_to_polyline(Point(0, 0), line((0, 0), (2, 0)))
    assert s == 0.0 and d == 0.0


def brute_force_nearest(p, pl, step=1e-4):
    # independent oracle: dense sampling of the polyline
    best = (float("inf"), None)
    s = 0.0
    while s <= pl.length:
        q, _ = point_at(pl, s)
        dd = p.dist(q)
        if dd < best[0]:
            best = (dd, s)
        s += step
    return best[1]


def test_project_clamps_past_endpoint():
    pl = line((0, 0), (2, 0))
    s, d, _ = project_to_polyline(Point(3, 1), pl)
    # oracle: densely sampled nearest point sits at the clamped endpoint
    assert brute_force_nearest(Point(3, 1), pl) == pytest.approx(2.0, abs=1e-4)
    assert s == pytest.approx(2.0)
    assert d == pytest.approx(1.0)


def test_project_tie_breaks_to_smallest_s():
    # point equidistant from both arms of a right angle
    pl = line((0, 0), (2, 0), (2, 2))
    s, _, _ = project_to_polyline(Point(1, 1), pl)
    assert s == pytest.approx(1.0)


def test_point_at_basic():
    p, theta = point_at(line((0, 0), (2, 0)), 1.0, 0.0)
    assert (p.x, p.y) == (1.0, 0.0)
    assert theta == pytest.approx(0.0)
    p, _ = point_at(line((0, 0), (2, 0)), 1.0, 2.0)
    assert (p.x, p.y) == pytest.approx((1.0, 2.0))


def test_point_at_out_of_range():
    with pytest.raises(OutOfRange):
        point_at(line((0, 0), (2, 0)), 3.0)
    with pytest.raises(OutOfRange):
        point_at(line((0, 0), (2, 0)), -1.0)


def test_point_at_vertex_uses_bisector():
    pl = line((0, 0), (1, 0), (1, 1))
    _, theta = point_at(pl, 1.0)
    assert theta == pytest.approx(math.pi / 4)


@st.composite
def gentle_polylines(draw):
    # random polylines with bounded turn angles, to stay within the
    # curvature threshold of the round-trip property
    n = draw(st.integers(min_value=2, max_value=6))
    heading = draw(st.floats(-math.pi, math.pi))
    x, y = draw(st.floats(-50, 50)), draw(st.floats(-50, 50))
    pts = [(x, y)]
    for _ in range(n - 1):
        heading += draw(st.floats(-0.5, 0.5))
        step = draw(st.floats(5.0, 20.0))
        x += step * math.cos(heading)
        y += step * math.sin(heading)
        pts.append((x, y))
    return Polyline.from_xy(pts)


@settings(max_examples=60, deadline=None)
@given(gentle_polylines(), st.floats(0.05, 0.95), st.floats(-1.0, 1.0))
def test_roundtrip_project_point_at(pl, frac, d):
    s = frac * pl.length
    # keep away from vertices where the lateral band is ambiguous
    cum = pl.cumulative
    if any(abs(s - c) < 2.5 for c in cum):
        return
    p, _ = point_at(pl, s, d)
    s2, d2, _ = project_to_polyline(p, pl)
    assert abs(s2 - s) < 1e-9 * max(1.0, pl.length)
    assert abs(d2 - d) < 1e-9


# ------------------------------------------------------------- offsets

def test_offset_straight():
    out = offset_polyline(line((0, 0), (10, 0)), 2.0)
    assert out.coords() == [(0.0, 2.0), (10.0, 2.0)]


def test_offset_identity():
    pl = line((0, 0), (5, 0), (5, 5))
    assert offset_polyline(pl, 0.0).coords() == pl.coords()


def test_offset_right_angle_miter():
    # hand-constructed: parallel lines y=1 and x=4 intersect at (4, 1)
    out = offset_polyline(line((0, 0), (5, 0), (5, 5)), 1.0)
    assert out.coords() == pytest.approx([(0, 1), (4, 1), (4, 5)])


def test_offset_mirror_symmetry():
    pl = line((0, 0), (5, 0), (5, 5))
    plus = offset_polyline(pl, 1.0)
    minus = offset_polyline(pl, -1.0)
    # mirror of pl about itself: reflect each offset vertex through its
    # projection on the source
    for v_p in plus.vertices:
        s, d, _ = project_to_polyline(v_p, pl)
        assert d > 0
    for v_m in minus.vertices:
        s, d, _ = project_to_polyline(v_m, pl)
        assert d < 0


def test_offset_straight_preserves_length():
    pl = line((0, 0), (10, 0))
    assert offset_polyline(pl, 3.0).length == pytest.approx(pl.length)


def test_offset_collapse_raises():
    # hairpin narrower than the offset distance annihilates
    pl = line((0, 0), (10, 0), (10, 0.5), (0, 0.5))
    with pytest.raises(OffsetDegenerate):
        offset_polyline(pl, 2.0)


def test_offset_bevel_beyond_miter_limit():
    # near-180 spike: miter would shoot far past x=10, expect a bevel instead
    pl = line((0, 0), (10, 0), (0, 0.8))
    out = offset_polyline(pl, 0.2)
    assert max(x for x, _ in out.coords()) < 10.0 + 4.0 * 0.2 + 1e-9


# ------------------------------------------------------------- fillets

def test_fillet_perpendicular_unit():
    a = line((0, 0), (5, 0))
    b = line((0, 0), (0, 5))
    center, arc, t_a, t_b = fillet_corner(a, b, 1.0)
    assert (center.x, center.y) == pytest.approx((1.0, 1.0))
    assert (t_a.x, t_a.y) == pytest.approx((1.0, 0.0))
    assert (t_b.x, t_b.y) == pytest.approx((0.0, 1.0))
    assert arc.radius == 1.0


def test_fillet_perpendicular_scaled():
    a = line((0, 0), (5, 0))
    b = line((0, 0), (0, 5))
    center, _, _, _ = fillet_corner(a, b, 2.0)
    assert (center.x, center.y) == pytest.approx((2.0, 2.0))


def test_fillet_too_large():
    a = line((0, 0), (5, 0))
    b = line((0, 0), (0, 5))
    with pytest.raises(FilletTooLarge):
        fillet_corner(a, b, 10.0)


def test_fillet_tangency_random():
    rng = random.Random(7)
    for _ in range(200):
        ang = rng.uniform(0.3, math.pi - 0.3)
        length = rng.uniform(10, 50)
        r = rng.uniform(0.1, length * math.tan(ang / 2) * 0.9)
        a = line((0, 0), (length, 0))
        b = Polyline.from_xy([(0, 0), (length * math.cos(ang), length * math.sin(ang))])
        center, arc, t_a, t_b = fillet_corner(a, b, r)
        da = abs(center.y)  # distance to the x-axis border
        db = abs(-math.sin(ang) * center.x + math.cos(ang) * center.y)
        assert abs(da - r) < 1e-9 * max(1.0, r)
        assert abs(db - r) < 1e-9 * max(1.0, r)
        assert center.dist(t_a) == pytest.approx(r, rel=1e-9)
        assert center.dist(t_b) == pytest.approx(r, rel=1e-9)


# -------------------------------------------------------------- bezier

def test_bezier_endpoints():
    ctrl = [Point(0, 0), Point(1, 1), Point(2, 0)]
    assert bezier_eval(ctrl, 0.0) == Point(0, 0)
    assert bezier_eval(ctrl, 1.0) == Point(2, 0)


def test_bezier_quadratic_midpoint():
    # de Casteljau by hand: (0.5,0.5)-(1.5,0.5) -> (1, 0.5)
    p = bezier_eval([Point(0, 0), Point(1, 1), Point(2, 0)], 0.5)
    assert (p.x, p.y) == pytest.approx((1.0, 0.5))


def test_bezier_out_of_range():
    with pytest.raises(OutOfRange):
        bezier_eval([Point(0, 0), Point(1, 1)], 1.5)


def bernstein(controls, t):
    n = len(controls) - 1
    x = y = 0.0
    for i, p in enumerate(controls):
        b = math.comb(n, i) * t**i * (1 - t) ** (n - i)
        x += b * p.x
        y += b * p.y
    return x, y


@settings(max_examples=100, deadline=None)
@given(
    st.lists(
        st.tuples(st.floats(-100, 100), st.floats(-100, 100)),
        min_size=2,
        max_size=4,
    ),
    st.floats(0.0, 1.0),
)
def test_bezier_matches_bernstein(coords, t):
    controls = [Point(x, y) for x, y in coords]
    p = bezier_eval(controls, t)
    bx, by = bernstein(controls, t)
    assert abs(p.x - bx) < 1e-12 * max(1.0, abs(bx))
    assert abs(p.y - by) < 1e-12 * max(1.0, abs(by))


# ------------------------------------------------------- polygon area

def unit_square(ox=0.0, oy=0.0):
    return Polygon.from_xy([(ox, oy), (ox + 1, oy), (ox + 1, oy + 1), (ox, oy + 1), (ox, oy)])


def test_intersection_area_self():
    sq = unit_square()
    assert polygon_intersection_area(sq, sq) == pytest.approx(1.0)


def test_intersection_area_disjoint():
    assert polygon_intersection_area(unit_square(), unit_square(5, 5)) == 0.0


def test_intersection_area_half_overlap_monte_carlo():
    a, b = unit_square(), unit_square(0.5, 0.0)
    # Monte-Carlo oracle, frozen from 10^6 samples: 0.5 +/- 1e-2
    rng = random.Random(42)
    hits = sum(
        1
        for _ in range(10**6)
        if 0.5 <= rng.uniform(0, 1) <= 1.0  # x inside both squares
    )
    mc = hits / 10**6 * 1.0
    area = polygon_intersection_area(a, b)
    assert abs(area - mc) < 1e-2
    assert area == pytest.approx(0.5)


def test_intersection_area_bounded_by_min():
    a, b = unit_square(), unit_square(0.25, 0.25)
    assert polygon_intersection_area(a, b) <= min(a.area, b.area) + 1e-12


# ------------------------------------------------- orientation voting

def test_orientation_single_vote():
    assert weighted_orientation_mean([math.radians(45)], [1.0]) == pytest.approx(
        math.radians(45)
    )


def test_orientation_symmetric_pair():
    # doubled angles 20 and 340 degrees average to 0
    m = weighted_orientation_mean([math.radians(10), math.radians(170)], [1, 1])
    assert min(m, math.pi - m) == pytest.approx(0.0, abs=1e-12)


def test_orientation_mod_pi():
    t = 0.7
    m = weighted_orientation_mean([t, t + math.pi], [1, 1])
    assert m == pytest.approx(t)


def test_orientation_empty_vote():
    with pytest.raises(EmptyVote):
        weighted_orientation_mean([1.0, 2.0], [0.0, 0.0])


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.floats(0, math.pi - 1e-6), min_size=1, max_size=6),
    st.floats(0.1, 10.0),
)
def test_orientation_weight_scaling_invariance(angles, k):
    w = [1.0] * len(angles)
    a = weighted_orientation_mean(angles, w)
    b = weighted_orientation_mean(angles, [k * x for x in w])
    assert abs(a - b) < 1e-9 or abs(abs(a - b) - math.pi) < 1e-9


def test_arc_discretize_max_step():
    arc = Arc(Point(0, 0), 5.0, 0.0, math.pi / 2)
    pts = arc.discretize()
    assert len(pts) >= 10  # 90 deg at <=10 deg steps
    for p in pts:
        assert math.hypot(p.x, p.y) == pytest.approx(5.0)
