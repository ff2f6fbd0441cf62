"""Street-model generation math: intersection limits, section and
intersection surfaces, corner fillets.

Everything here is pure: the engine feeds it axis polylines and widths
oriented *away from the node* under consideration and writes the results
back to the store.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import (
    DegenerateSection,
    FilletTooLarge,
    InvalidGeometry,
    OffsetDegenerate,
)
from .geom import (
    Arc,
    Point,
    Polygon,
    Polyline,
    fillet_corner,
    offset_polyline,
    point_at,
    polyline_intersections,
    project_to_polyline,
    tangent_at,
)

# a dead-end "limit" keeps the cap infinitesimally off the node
LIMIT_EPSILON = 1e-6
# limits from both ends must never cross: cap at 45% of the edge length
LIMIT_MAX_FRACTION = 0.45


def clamp_limit(s: float, edge_length: float) -> float:
    return max(LIMIT_EPSILON, min(s, LIMIT_MAX_FRACTION * edge_length))


def default_limit(axis_from_node: Polyline, width: float,
                  adjacent: Sequence[Tuple[Polyline, float]], radius: float) -> float:
    """Default intersection-limit abscissa measured from the node.

    Heuristic: for each adjacent edge, find where its offset borders cross
    this edge's offset borders, take the farthest crossing along this
    edge, and add the default corner radius as clearance.  When borders
    do not properly cross (collinear or disjoint roads) fall back to
    max(width, width')/2 + radius.  Clamped to 45% of the edge length.
    """
    if not adjacent:
        return LIMIT_EPSILON
    best = 0.0
    for other_axis, other_width in adjacent:
        crossings: List[float] = []
        for d1 in (width / 2.0, -width / 2.0):
            for d2 in (other_width / 2.0, -other_width / 2.0):
                try:
                    b1 = offset_polyline(axis_from_node, d1)
                    b2 = offset_polyline(other_axis, d2)
                except OffsetDegenerate:
                    continue
                for p in polyline_intersections(b1, b2):
                    s, _, _ = project_to_polyline(p, axis_from_node)
                    if s > 1e-9:  # border touches at the node itself are spurious
                        crossings.append(s)
        if crossings:
            cand = max(crossings) + radius
        else:
            cand = max(width, other_width) / 2.0 + radius
        best = max(best, cand)
    return clamp_limit(best, axis_from_node.length)


def clip_offset(axis: Polyline, d: float, s0: float, s1: float) -> Polyline:
    """Offset border of the axis, clipped between abscissas s0 < s1."""
    pts: List[Point] = [point_at(axis, s0, d)[0]]
    if d != 0.0:
        border = offset_polyline(axis, d)
        for v in border.vertices:
            s, _, _ = project_to_polyline(v, axis)
            if s0 + 1e-9 < s < s1 - 1e-9:
                pts.append(v)
    else:
        for i, v in enumerate(axis.vertices):
            s = axis.cumulative[i]
            if s0 + 1e-9 < s < s1 - 1e-9:
                pts.append(v)
    pts.append(point_at(axis, s1, d)[0])
    dedup = [pts[0]]
    for p in pts[1:]:
        if p.dist(dedup[-1]) > 1e-9:
            dedup.append(p)
    if len(dedup) < 2:
        raise DegenerateSection(f"clip [{s0}, {s1}] collapses the border")
    return Polyline(dedup)


def section_polygon(axis: Polyline, width: float, s_start: float, s_end: float) -> Polygon:
    """Constant-width road strip between the two limit abscissas.

    s_start / s_end are measured from the start / end of the axis; the
    polygon is closed with straight caps perpendicular to the axis.
    """
    lo, hi = s_start, axis.length - s_end
    if lo >= hi - 1e-9:
        raise DegenerateSection(
            f"limits {s_start} + {s_end} consume the whole {axis.length} m edge"
        )
    left = clip_offset(axis, width / 2.0, lo, hi)
    right = clip_offset(axis, -width / 2.0, lo, hi)
    ring = list(left.vertices) + list(reversed(right.vertices))
    ring.append(ring[0])
    return Polygon(ring)


@dataclass
class Incidence:
    """One edge seen from a node: axis re-oriented to leave the node."""

    edge_id: int
    axis: Polyline  # oriented away from the node
    width: float
    limit: float  # abscissa of the cap, from the node

    @property
    def heading(self) -> float:
        return tangent_at(self.axis, 0.0) % (2.0 * math.pi)


@dataclass
class CornerResult:
    edge_a: int  # angular-order first edge of the pair
    edge_b: int
    radius_used: float
    center: Optional[Point]  # None for a straight (parallel-border) corner
    arc: Optional[Arc]
    clamped: bool
    points: List[Point] = None  # boundary points ordered edge_a -> edge_b


def sort_incidences(incidences: Sequence[Incidence]) -> List[Incidence]:
    return sorted(incidences, key=lambda i: (i.heading, i.edge_id))


def corner_pairs(incidences: Sequence[Incidence]) -> List[Tuple[int, int]]:
    """Adjacent (CCW ordered) edge pairs around a node, degree >= 2."""
    inc = sort_incidences(incidences)
    if len(inc) < 2:
        return []
    return [
        (inc[i].edge_id, inc[(i + 1) % len(inc)].edge_id) for i in range(len(inc))
    ]


def _corner_borders(a: Incidence, b: Incidence) -> Tuple[Polyline, Polyline]:
    """Borders meeting at the corner between CCW-consecutive edges a, b:
    a's left border and b's right border."""
    left = offset_polyline(a.axis, a.width / 2.0)
    right = offset_polyline(b.axis, -b.width / 2.0)
    return left, right


def _max_feasible_radius(left: Polyline, right: Polyline, a: Incidence, b: Incidence,
                         r: float) -> Optional[float]:
    """Largest radius <= r whose tangent points stay inside both caps."""

    def fits(rr: float) -> bool:
        try:
            _, _, t_a, t_b = fillet_corner(left, right, rr)
        except (FilletTooLarge, InvalidGeometry):
            # near-degenerate probe radii can collapse the arc entirely
            return False
        sa, _, _ = project_to_polyline(t_a, a.axis)
        sb, _, _ = project_to_polyline(t_b, b.axis)
        return sa <= a.limit + 1e-9 and sb <= b.limit + 1e-9

    if fits(r):
        return r
    lo, hi = 0.0, r
    for _ in range(60):
        mid = (lo + hi) / 2.0
        if mid <= 0.0:
            break
        if fits(mid):
            lo = mid
        else:
            hi = mid
    return lo if lo > 1e-6 else None


def intersection_surface(incidences: Sequence[Incidence],
                         radii: Dict[Tuple[int, int], float],
                         arc_step: float) -> Tuple[Polygon, List[CornerResult], List[str]]:
    """Intersection surface walking incident edges in angular order.

    radii maps unordered edge-id pairs (as sorted tuples) to the corner
    radius.  Infeasible fillets are clamped to the maximum feasible
    radius with a warning rather than failing generation.
    """
    inc = sort_incidences(incidences)
    if len(inc) < 2:
        raise DegenerateSection("intersection surface needs degree >= 2")
    ring: List[Point] = []
    corners: List[CornerResult] = []
    warnings: List[str] = []
    n = len(inc)
    for i, a in enumerate(inc):
        b = inc[(i + 1) % n]
        cap_right, _ = point_at(a.axis, a.limit, -a.width / 2.0)
        cap_left, _ = point_at(a.axis, a.limit, a.width / 2.0)
        ring.append(cap_right)
        ring.append(cap_left)
        r = radii.get(tuple(sorted((a.edge_id, b.edge_id))), 0.0)
        corner = _build_corner(a, b, r, arc_step, warnings)
        corners.append(corner)
        if corner.points:
            ring.extend(corner.points)
    dedup = [ring[0]]
    for p in ring[1:]:
        if p.dist(dedup[-1]) > 1e-9:
            dedup.append(p)
    dedup.append(dedup[0])
    return Polygon(dedup), corners, warnings


def _build_corner(a: Incidence, b: Incidence, r: float, arc_step: float,
                  warnings: List[str]) -> CornerResult:
    try:
        left, right = _corner_borders(a, b)
    except OffsetDegenerate:
        warnings.append(f"border offset degenerate between edges {a.edge_id}/{b.edge_id}")
        return CornerResult(a.edge_id, b.edge_id, r, None, None, False, [])
    if r <= 0.0:
        return CornerResult(a.edge_id, b.edge_id, 0.0, None, None, False, [])
    feasible = _max_feasible_radius(left, right, a, b, r)
    if feasible is None:
        # parallel borders (straight-through) or no room at all: straight joint
        if abs(_heading_gap(a, b) - math.pi) > 1e-6:
            warnings.append(
                f"corner {a.edge_id}/{b.edge_id}: no feasible fillet, straight joint"
            )
        mid_a, _ = point_at(a.axis, a.limit, a.width / 2.0)
        mid_b, _ = point_at(b.axis, b.limit, -b.width / 2.0)
        center = Point((mid_a.x + mid_b.x) / 2.0, (mid_a.y + mid_b.y) / 2.0)
        return CornerResult(a.edge_id, b.edge_id, r, center, None, False, [])
    clamped = feasible < r - 1e-9
    if clamped:
        warnings.append(
            f"corner {a.edge_id}/{b.edge_id}: radius {r} clamped to {feasible:.6f}"
        )
    center, arc, t_a, t_b = fillet_corner(left, right, feasible)
    points = arc.discretize(arc_step)
    if points[0].dist(t_a) > points[-1].dist(t_a):
        points = list(reversed(points))
    return CornerResult(a.edge_id, b.edge_id, feasible, center, arc, clamped, points)


def _heading_gap(a: Incidence, b: Incidence) -> float:
    return abs((b.heading - a.heading + math.pi) % (2.0 * math.pi) - math.pi)
