"""Street-object positioning math and the pedestrian-crossing fit.

Relative positioning is (abscissa, signed lateral distance) against a
reference road axis; sidewalk-relative objects measure the lateral
distance from the section border on their side instead of the axis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from .errors import NotOnRoad
from .geom import (
    Point,
    Polygon,
    Polyline,
    point_at,
    project_to_polyline,
    tangent_at,
    weighted_orientation_mean,
)

MODE_ABSOLUTE = "absolute"
MODE_AXIS = "relative-to-axis"
MODE_SIDEWALK = "relative-to-sidewalk"


def closest_axis(p: Point, axes: Sequence[Tuple[int, Polyline]]) -> Tuple[int, float]:
    """(edge id, distance) of the nearest axis; ties to the smallest id."""
    best = None
    for edge_id, axis in sorted(axes):
        s, _, _ = project_to_polyline(p, axis)
        q, _ = point_at(axis, s)
        d = p.dist(q)
        if best is None or d < best[1] - 1e-12:
            best = (edge_id, d)
    if best is None:
        raise NotOnRoad("no road axis in the project")
    return best


def to_relative(p: Point, axis: Polyline, mode: str, width: float) -> Tuple[float, float, int]:
    """(s, stored d, side) for a point against an axis.

    In sidewalk mode the stored d is the signed distance beyond the
    section border on the object's side (side = +1 left, -1 right).
    """
    s, d_axis, _ = project_to_polyline(p, axis)
    side = 1 if d_axis >= 0 else -1
    if mode == MODE_SIDEWALK:
        return s, abs(d_axis) - width / 2.0, side
    return s, d_axis, side


def to_absolute(axis: Polyline, s: float, d: float, side: int, mode: str,
                width: float) -> Tuple[Point, float]:
    """(absolute point, axis tangent) from stored relative coordinates;
    s is clamped to the current axis length."""
    s = max(0.0, min(axis.length, s))
    if mode == MODE_SIDEWALK:
        d_axis = side * (width / 2.0 + d)
    else:
        d_axis = d
    p, theta = point_at(axis, s, d_axis)
    return p, theta


def wrap_angle(a: float) -> float:
    return (a + math.pi) % (2.0 * math.pi) - math.pi


@dataclass
class CrossingFit:
    orientation: float  # radians mod pi
    width: float  # along-axis footprint, metres
    s: float  # abscissa of the crossing centerline


def fit_crossing(poly: Polygon, axis: Polyline) -> CrossingFit:
    """Extract crossing parameters from a rough user polygon.

    Each boundary segment votes for an orientation weighted by its
    length; the width is the mean of each axis-side's along-axis vertex
    extent; the abscissa is the centroid's projection.
    """
    ring = list(poly.exterior[:-1])
    angles, weights = [], []
    for a, b in zip(poly.exterior, poly.exterior[1:]):
        length = a.dist(b)
        if length <= 1e-12:
            continue
        angles.append(math.atan2(b.y - a.y, b.x - a.x) % math.pi)
        weights.append(length)
    orientation = weighted_orientation_mean(angles, weights)

    sides = {1: [], -1: []}
    for v in ring:
        s, d, _ = project_to_polyline(v, axis)
        sides[1 if d >= 0 else -1].append(s)
    extents = [max(ss) - min(ss) if len(ss) >= 2 else 0.0 for ss in sides.values()]
    width = sum(extents) / 2.0

    cx = sum(v.x for v in ring) / len(ring)
    cy = sum(v.y for v in ring) / len(ring)
    s, _, _ = project_to_polyline(Point(cx, cy), axis)
    return CrossingFit(orientation=orientation, width=width, s=s)


def crossing_polygon(axis: Polyline, fit: CrossingFit, road_width: float) -> Polygon:
    """Canonical crossing polygon spanning border to border.

    A band along the crossing orientation, clipped by the two section
    borders, with a right-angle chevron cap at each end.  The shape makes
    refitting exact: the two long sides vote for the stored orientation
    while each cap's two 45-degree segments cancel in the doubled-angle
    vote, the four border corners sit exactly on the section borders so
    the side split is unambiguous, the cap apex adds no along-axis spread
    so each side's vertex extent equals the stored width, and the apex
    offsets cancel in the centroid so the abscissa is preserved too.
    """
    s = max(0.0, min(axis.length, fit.s))
    center, alpha = point_at(axis, s, 0.0)
    theta = fit.orientation
    sin_gap = math.sin(theta - alpha)
    # crossings nearly parallel to the axis cannot span it; floor the gap
    if abs(sin_gap) < math.sin(math.radians(5.0)):
        sin_gap = math.copysign(math.sin(math.radians(5.0)), sin_gap or 1.0)
    u = (math.cos(theta), math.sin(theta))
    v = (math.cos(alpha), math.sin(alpha))
    n = (-v[1], v[0])  # left normal of the axis
    half_span = (road_width / 2.0) / abs(sin_gap)
    half_w = fit.width / 2.0
    left_sign = 1.0 if sin_gap > 0 else -1.0

    def at(su: float, along: float, out: float) -> Point:
        lat = su * left_sign * out
        return Point(
            center.x + su * half_span * u[0] + along * v[0] + lat * n[0],
            center.y + su * half_span * u[1] + along * v[1] + lat * n[1],
        )

    ring = [
        at(1, half_w, 0.0),   # left-border corner, downstream
        at(1, 0.0, half_w),   # left cap apex, off the road
        at(1, -half_w, 0.0),  # left-border corner, upstream
        at(-1, -half_w, 0.0),
        at(-1, 0.0, half_w),
        at(-1, half_w, 0.0),
    ]
    ring.append(ring[0])
    return Polygon(ring)
