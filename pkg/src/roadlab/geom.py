"""Planar geometry kernel: linear referencing, offsets, fillets, Bezier curves.

All coordinates are planar Cartesian metres (projected coordinates are
assumed upstream).  Sign convention used everywhere: a positive lateral
distance ``d`` is on the *left* of the travel direction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from shapely.geometry import LineString as _ShLine
from shapely.geometry import Point as _ShPoint
from shapely.geometry import Polygon as _ShPolygon
from shapely.validation import make_valid as _make_valid

from .errors import (
    EmptyVote,
    FilletTooLarge,
    InvalidGeometry,
    OffsetDegenerate,
    OutOfRange,
)

_EPS = 1e-12

# default construction parameters (see DESIGN DECISIONS in the package docs)
MITER_LIMIT = 4.0
ARC_STEP_RAD = math.radians(10.0)


def _finite(v: float) -> bool:
    return isinstance(v, (int, float)) and math.isfinite(v)


@dataclass(frozen=True)
class Point:
    x: float
    y: float
    z: Optional[float] = None

    def __post_init__(self):
        if not (_finite(self.x) and _finite(self.y)):
            raise InvalidGeometry(f"non-finite coordinates ({self.x}, {self.y})")
        if self.z is not None and not _finite(self.z):
            raise InvalidGeometry(f"non-finite z {self.z}")

    def dist(self, other: "Point") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def xy(self) -> tuple:
        return (self.x, self.y)


class Polyline:
    """Ordered vertex chain with cached cumulative arc length."""

    __slots__ = ("vertices", "_cum")

    def __init__(self, vertices: Sequence[Point]):
        verts = tuple(vertices)
        if len(verts) < 2:
            raise InvalidGeometry("polyline needs at least 2 vertices")
        cum = [0.0]
        for a, b in zip(verts, verts[1:]):
            seg = a.dist(b)
            if seg <= _EPS:
                raise InvalidGeometry("consecutive duplicate vertices")
            cum.append(cum[-1] + seg)
        if cum[-1] <= 0.0:
            raise InvalidGeometry("zero-length polyline")
        self.vertices = verts
        self._cum = tuple(cum)

    @classmethod
    def from_xy(cls, coords: Iterable[tuple]) -> "Polyline":
        return cls([Point(*c) for c in coords])

    @property
    def length(self) -> float:
        return self._cum[-1]

    @property
    def cumulative(self) -> tuple:
        return self._cum

    def coords(self) -> list:
        return [(v.x, v.y) for v in self.vertices]

    def reversed(self) -> "Polyline":
        return Polyline(tuple(reversed(self.vertices)))

    def segment_dir(self, i: int) -> tuple:
        a, b = self.vertices[i], self.vertices[i + 1]
        n = a.dist(b)
        return ((b.x - a.x) / n, (b.y - a.y) / n)

    def to_shapely(self) -> _ShLine:
        return _ShLine(self.coords())

    def __eq__(self, other):
        return isinstance(other, Polyline) and self.coords() == other.coords() and [
            v.z for v in self.vertices
        ] == [v.z for v in other.vertices]

    def __repr__(self):
        return f"Polyline({self.coords()!r})"


class Polygon:
    """Simple polygon: closed exterior ring plus optional holes."""

    __slots__ = ("exterior", "holes")

    def __init__(self, exterior: Sequence[Point], holes: Sequence[Sequence[Point]] = ()):
        ext = list(exterior)
        if len(ext) < 4:
            raise InvalidGeometry("polygon ring needs at least 4 vertices (closed)")
        if ext[0].dist(ext[-1]) > 1e-9:
            raise InvalidGeometry("exterior ring is not closed")
        if abs(_shoelace(ext)) <= _EPS:
            raise InvalidGeometry("polygon has zero area")
        self.exterior = tuple(ext)
        self.holes = tuple(tuple(h) for h in holes)

    @classmethod
    def from_xy(cls, coords: Iterable[tuple], holes=()) -> "Polygon":
        return cls([Point(*c) for c in coords], [[Point(*c) for c in h] for h in holes])

    def exterior_coords(self) -> list:
        return [(v.x, v.y) for v in self.exterior]

    @property
    def area(self) -> float:
        a = abs(_shoelace(self.exterior))
        for h in self.holes:
            a -= abs(_shoelace(list(h)))
        return a

    def to_shapely(self) -> _ShPolygon:
        return _ShPolygon(self.exterior_coords(), [[(p.x, p.y) for p in h] for h in self.holes])

    def contains_point(self, p: Point) -> bool:
        return self.to_shapely().covers(_ShPoint(p.x, p.y))

    def __repr__(self):
        return f"Polygon({self.exterior_coords()!r})"


@dataclass(frozen=True)
class Arc:
    """Circular arc, swept counter-clockwise from start_angle to end_angle."""

    center: Point
    radius: float
    start_angle: float
    end_angle: float

    def __post_init__(self):
        if self.radius <= 0:
            raise InvalidGeometry("arc radius must be > 0")
        if not 0.0 < self.sweep < 2.0 * math.pi:
            raise InvalidGeometry("arc sweep must be in (0, 2*pi)")

    @property
    def sweep(self) -> float:
        return (self.end_angle - self.start_angle) % (2.0 * math.pi)

    def point_at_angle(self, theta: float) -> Point:
        return Point(
            self.center.x + self.radius * math.cos(theta),
            self.center.y + self.radius * math.sin(theta),
        )

    def discretize(self, max_step: float = ARC_STEP_RAD) -> list:
        n = max(1, int(math.ceil(self.sweep / max_step)))
        return [
            self.point_at_angle(self.start_angle + self.sweep * i / n) for i in range(n + 1)
        ]


def _shoelace(ring: Sequence[Point]) -> float:
    s = 0.0
    for a, b in zip(ring, ring[1:]):
        s += a.x * b.y - b.x * a.y
    return 0.5 * s


def _left_normal(dx: float, dy: float) -> tuple:
    return (-dy, dx)


def project_to_polyline(p: Point, line: Polyline) -> tuple:
    """Linear referencing: map a point to (abscissa, signed lateral, segment).

    The abscissa is clamped to [0, length]; ties between equidistant
    candidates resolve to the smallest abscissa.  The lateral distance is
    the perpendicular component relative to the winning segment's
    direction, positive on the left.
    """
    best = None  # (dist, s, d, seg)
    verts = line.vertices
    cum = line.cumulative
    for i in range(len(verts) - 1):
        a, b = verts[i], verts[i + 1]
        seg_len = cum[i + 1] - cum[i]
        ux, uy = (b.x - a.x) / seg_len, (b.y - a.y) / seg_len
        px, py = p.x - a.x, p.y - a.y
        t = max(0.0, min(seg_len, px * ux + py * uy))
        qx, qy = a.x + t * ux, a.y + t * uy
        dist = math.hypot(p.x - qx, p.y - qy)
        if best is None or dist < best[0] - 1e-12:
            d = ux * py - uy * px  # lateral component, + on the left
            best = (dist, cum[i] + t, d, i)
    _, s, d, seg = best
    return s, d, seg


def tangent_at(line: Polyline, s: float) -> float:
    """Direction (radians) of the polyline at abscissa s.

    At an interior vertex the tangent is the angle bisector of the two
    adjacent segment directions.
    """
    cum = line.cumulative
    if s < -1e-9 or s > line.length + 1e-9:
        raise OutOfRange(f"abscissa {s} outside [0, {line.length}]")
    s = max(0.0, min(line.length, s))
    # find segment i with cum[i] <= s <= cum[i+1]
    i = _segment_index(cum, s)
    at_vertex = None
    if i > 0 and abs(s - cum[i]) <= 1e-12:
        at_vertex = i
    elif i < len(cum) - 2 and abs(s - cum[i + 1]) <= 1e-12:
        at_vertex = i + 1
    if at_vertex is not None and 0 < at_vertex < len(line.vertices) - 1:
        d0 = line.segment_dir(at_vertex - 1)
        d1 = line.segment_dir(at_vertex)
        bx, by = d0[0] + d1[0], d0[1] + d1[1]
        if math.hypot(bx, by) <= _EPS:  # 180-degree spike: fall back to incoming
            bx, by = d0
        return math.atan2(by, bx)
    dx, dy = line.segment_dir(i)
    return math.atan2(dy, dx)


def _segment_index(cum: Sequence[float], s: float) -> int:
    lo, hi = 0, len(cum) - 2
    while lo < hi:
        mid = (lo + hi) // 2
        if s > cum[mid + 1]:
            lo = mid + 1
        else:
            hi = mid
    return lo


def point_at(line: Polyline, s: float, d: float = 0.0) -> tuple:
    """Inverse linear referencing: (point, tangent) at abscissa s, offset d.

    The point is displaced d metres along the left normal of the local
    tangent; raises OutOfRange outside [0, length].
    """
    if s < -1e-9 or s > line.length + 1e-9:
        raise OutOfRange(f"abscissa {s} outside [0, {line.length}]")
    s = max(0.0, min(line.length, s))
    theta = tangent_at(line, s)
    i = _segment_index(line.cumulative, s)
    a = line.vertices[i]
    t = s - line.cumulative[i]
    ux, uy = line.segment_dir(i)
    bx, by = a.x + t * ux, a.y + t * uy
    nx, ny = _left_normal(math.cos(theta), math.sin(theta))
    return Point(bx + d * nx, by + d * ny), theta


def _line_intersection(p1, u1, p2, u2):
    """Intersection of two infinite lines given as point + direction, or None."""
    denom = u1[0] * u2[1] - u1[1] * u2[0]
    if abs(denom) <= 1e-12:
        return None
    dx, dy = p2[0] - p1[0], p2[1] - p1[1]
    t = (dx * u2[1] - dy * u2[0]) / denom
    return (p1[0] + t * u1[0], p1[1] + t * u1[1])


def offset_polyline(line: Polyline, d: float, miter_limit: float = MITER_LIMIT) -> Polyline:
    """Parallel offset at signed distance d (left positive).

    Joins are mitered up to miter_limit (ratio of miter length to |d|),
    beveled beyond it.  Raises OffsetDegenerate when the offset collapses
    a segment (adjacent segments annihilate).
    """
    if d == 0.0:
        return Polyline(line.vertices)
    verts = line.vertices
    n = len(verts)
    dirs = [line.segment_dir(i) for i in range(n - 1)]
    normals = [_left_normal(*u) for u in dirs]

    out: list = []
    # per source segment, the effective endpoints after joins, for collapse check
    seg_pts: list = [[] for _ in range(n - 1)]

    def push(pt, seg_i):
        if not out or math.hypot(out[-1][0] - pt[0], out[-1][1] - pt[1]) > 1e-9:
            out.append(pt)
        seg_pts[seg_i].append(pt)

    first = (verts[0].x + d * normals[0][0], verts[0].y + d * normals[0][1])
    push(first, 0)
    for i in range(1, n - 1):
        v = verts[i]
        a_end = (v.x + d * normals[i - 1][0], v.y + d * normals[i - 1][1])
        b_start = (v.x + d * normals[i][0], v.y + d * normals[i][1])
        cross = dirs[i - 1][0] * dirs[i][1] - dirs[i - 1][1] * dirs[i][0]
        if abs(cross) <= 1e-12:
            push(a_end, i - 1)
            seg_pts[i].append(a_end)
            continue
        m = _line_intersection(a_end, dirs[i - 1], b_start, dirs[i])
        miter_len = math.hypot(m[0] - v.x, m[1] - v.y) if m else float("inf")
        if m is not None and miter_len <= miter_limit * abs(d):
            push(m, i - 1)
            seg_pts[i].append(m)
        else:
            push(a_end, i - 1)
            push(b_start, i)
    last_i = n - 2
    last = (verts[-1].x + d * normals[last_i][0], verts[-1].y + d * normals[last_i][1])
    push(last, last_i)

    for i in range(n - 1):
        pts = seg_pts[i]
        if len(pts) < 2:
            raise OffsetDegenerate(f"segment {i} collapsed at offset {d}")
        sx, sy = pts[0]
        ex, ey = pts[-1]
        if (ex - sx) * dirs[i][0] + (ey - sy) * dirs[i][1] <= 0.0:
            raise OffsetDegenerate(f"segment {i} reversed at offset {d}")
    if len(out) < 2:
        raise OffsetDegenerate("offset collapsed the polyline")
    return Polyline.from_xy(out)


def _meeting_end(border: Polyline, other: Polyline) -> tuple:
    """(corner vertex, unit dir into the border, far vertex) for the end
    of `border` nearest to `other`."""
    d_first, _, _ = project_to_polyline(border.vertices[0], other)
    first_d = _dist_to_polyline(border.vertices[0], other)
    last_d = _dist_to_polyline(border.vertices[-1], other)
    if first_d <= last_d:
        corner = border.vertices[0]
        u = border.segment_dir(0)
        far = border.vertices[1]
    else:
        corner = border.vertices[-1]
        ux, uy = border.segment_dir(len(border.vertices) - 2)
        u = (-ux, -uy)
        far = border.vertices[-2]
    return corner, u, far


def _dist_to_polyline(p: Point, line: Polyline) -> float:
    s, _, _ = project_to_polyline(p, line)
    q, _ = point_at(line, s, 0.0)
    return p.dist(q)


def fillet_corner(border_a: Polyline, border_b: Polyline, r: float) -> tuple:
    """Tangent arc of radius r joining two locally-straight borders.

    Returns (center, arc, tangent_point_a, tangent_point_b).  The arc lies
    on the interior side of the corner.  Raises FilletTooLarge when the
    tangent points would fall beyond the borders.
    """
    if r <= 0:
        raise InvalidGeometry("fillet radius must be > 0")
    ca, ua, fa = _meeting_end(border_a, border_b)
    cb, ub, fb = _meeting_end(border_b, border_a)
    x = _line_intersection(ca.xy(), ua, cb.xy(), ub)
    if x is None:
        raise FilletTooLarge("borders are parallel, no corner to fillet")
    # unit directions from the corner apex along each border
    u_a = _unit_from(x, fa)
    u_b = _unit_from(x, fb)
    dot = max(-1.0, min(1.0, u_a[0] * u_b[0] + u_a[1] * u_b[1]))
    ang = math.acos(dot)
    if ang <= 1e-9 or ang >= math.pi - 1e-9:
        raise FilletTooLarge("degenerate corner angle")
    half = ang / 2.0
    tan_len = r / math.tan(half)
    for u, far in ((u_a, fa), (u_b, fb)):
        avail = (far.x - x[0]) * u[0] + (far.y - x[1]) * u[1]
        if tan_len > avail + 1e-9:
            raise FilletTooLarge(f"radius {r} does not fit (needs {tan_len:.3f} m of border)")
    bx, by = u_a[0] + u_b[0], u_a[1] + u_b[1]
    bn = math.hypot(bx, by)
    bis = (bx / bn, by / bn)
    center = Point(x[0] + bis[0] * r / math.sin(half), x[1] + bis[1] * r / math.sin(half))
    t_a = Point(x[0] + u_a[0] * tan_len, x[1] + u_a[1] * tan_len)
    t_b = Point(x[0] + u_b[0] * tan_len, x[1] + u_b[1] * tan_len)
    arc = _arc_through(center, r, t_a, t_b, apex_dir=(-bis[0], -bis[1]))
    return center, arc, t_a, t_b


def _unit_from(origin: tuple, toward: Point) -> tuple:
    dx, dy = toward.x - origin[0], toward.y - origin[1]
    n = math.hypot(dx, dy)
    if n <= _EPS:
        raise InvalidGeometry("zero-length border direction")
    return (dx / n, dy / n)


def _arc_through(center: Point, r: float, a: Point, b: Point, apex_dir: tuple) -> Arc:
    """Arc from a to b around center whose midpoint lies toward apex_dir."""
    ta = math.atan2(a.y - center.y, a.x - center.x)
    tb = math.atan2(b.y - center.y, b.x - center.x)
    apex = math.atan2(apex_dir[1], apex_dir[0])
    sweep_ccw = (tb - ta) % (2.0 * math.pi)
    mid_ccw = ta + sweep_ccw / 2.0
    if math.cos(mid_ccw - apex) >= 0.0:
        return Arc(center, r, ta, tb)
    return Arc(center, r, tb, ta)


def bezier_eval(controls: Sequence[Point], t: float) -> Point:
    """De Casteljau evaluation of a Bezier curve with 2 to 4 control points."""
    if not 0.0 <= t <= 1.0:
        raise OutOfRange(f"bezier parameter {t} outside [0, 1]")
    if not 2 <= len(controls) <= 4:
        raise InvalidGeometry("bezier takes 2 to 4 control points")
    pts = [(p.x, p.y) for p in controls]
    while len(pts) > 1:
        pts = [
            ((1 - t) * p[0] + t * q[0], (1 - t) * p[1] + t * q[1])
            for p, q in zip(pts, pts[1:])
        ]
    return Point(*pts[0])


def _clean_shapely(poly: Polygon):
    sh = poly.to_shapely()
    if not sh.is_valid:
        sh = _make_valid(sh)
        if sh.is_empty:
            raise InvalidGeometry("polygon ring cannot be repaired")
    return sh


def polygon_intersection_area(a: Polygon, b: Polygon) -> float:
    """Area of the intersection of two polygons, in square metres."""
    return _clean_shapely(a).intersection(_clean_shapely(b)).area


def weighted_orientation_mean(angles: Sequence[float], weights: Sequence[float]) -> float:
    """Circular mean of undirected orientations (mod pi) via angle doubling."""
    if len(angles) != len(weights):
        raise InvalidGeometry("angles and weights must have equal length")
    if any(w < 0 for w in weights):
        raise InvalidGeometry("weights must be >= 0")
    total = sum(weights)
    if not angles or total <= 0.0:
        raise EmptyVote("no positive weight in orientation vote")
    s = sum(w * math.sin(2 * a) for a, w in zip(angles, weights))
    c = sum(w * math.cos(2 * a) for a, w in zip(angles, weights))
    return (math.atan2(s, c) / 2.0) % math.pi


def polyline_intersections(a: Polyline, b: Polyline) -> list:
    """All proper intersection points between two polylines."""
    inter = a.to_shapely().intersection(b.to_shapely())
    if inter.is_empty:
        return []
    geoms = getattr(inter, "geoms", [inter])
    pts = []
    for g in geoms:
        if g.geom_type == "Point":
            pts.append(Point(g.x, g.y))
        elif g.geom_type == "LineString":
            pts.extend(Point(x, y) for x, y in g.coords)
    return pts


def segments_cross(a: Polyline, b: Polyline, ignore_endpoints: bool = True) -> bool:
    """True when the two polylines properly cross (shared endpoints ignored)."""
    sa, sb = a.to_shapely(), b.to_shapely()
    if not sa.intersects(sb):
        return False
    if not ignore_endpoints:
        return True
    inter = sa.intersection(sb)
    geoms = getattr(inter, "geoms", [inter])
    ends = [a.vertices[0], a.vertices[-1], b.vertices[0], b.vertices[-1]]
    for g in geoms:
        if g.geom_type != "Point":
            return True
        if all(math.hypot(g.x - e.x, g.y - e.y) > 1e-9 for e in ends):
            return True
    return False
