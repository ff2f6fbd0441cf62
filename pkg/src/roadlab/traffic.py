"""Lane generation by axis offsetting and lane-to-lane Bezier
interconnections at intersections."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from .geom import Point, Polyline, bezier_eval
from .generation import clip_offset

FORWARD = "forward"
BACKWARD = "backward"

# near-parallel tangents fall back to a cubic with controls along them
_PARALLEL_LIMIT = math.radians(5.0)
_BEZIER_SAMPLES = 16


def lane_offsets(width: float, lane_count: int) -> List[float]:
    lane_width = width / lane_count
    return [(i - (lane_count - 1) / 2.0) * lane_width for i in range(lane_count)]


def default_direction(offset: float, right_hand: bool) -> str:
    if right_hand:
        return FORWARD if offset < 0 else BACKWARD
    return BACKWARD if offset < 0 else FORWARD


def lane_geometry(axis: Polyline, offset: float, s_start: float, s_end: float) -> Polyline:
    return clip_offset(axis, offset, s_start, axis.length - s_end)


@dataclass(frozen=True)
class LaneEnd:
    """One lane endpoint at an intersection boundary."""

    edge_id: int
    index: int
    point: Point
    heading: float  # direction of travel at this endpoint


def pair_interconnections(incoming: Sequence[LaneEnd],
                          outgoing: Sequence[LaneEnd]) -> List[Tuple[LaneEnd, LaneEnd]]:
    """All (incoming, outgoing) lane pairs across distinct edges."""
    return [
        (a, b)
        for a in incoming
        for b in outgoing
        if a.edge_id != b.edge_id
    ]


def default_bezier_controls(src: LaneEnd, dst: LaneEnd) -> List[Point]:
    """Quadratic Bezier with the control at the tangent intersection;
    cubic fallback for near-parallel tangents or a far-away intersection."""
    a, b = src.point, dst.point
    ua = (math.cos(src.heading), math.sin(src.heading))
    ub = (math.cos(dst.heading), math.sin(dst.heading))
    gap = a.dist(b)
    if gap <= 1e-9:
        return [a, b]
    denom = ua[0] * ub[1] - ua[1] * ub[0]
    angle = abs(math.asin(max(-1.0, min(1.0, denom))))
    dot = ua[0] * ub[0] + ua[1] * ub[1]
    near_parallel = angle < _PARALLEL_LIMIT and dot > 0
    anti_parallel = angle < _PARALLEL_LIMIT and dot <= 0
    if not (near_parallel or anti_parallel):
        dx, dy = b.x - a.x, b.y - a.y
        t = (dx * ub[1] - dy * ub[0]) / denom
        c = Point(a.x + t * ua[0], a.y + t * ua[1])
        if t > 0 and c.dist(a) <= 3.0 * gap and c.dist(b) <= 3.0 * gap:
            return [a, c, b]
    third = gap / 3.0
    return [
        a,
        Point(a.x + third * ua[0], a.y + third * ua[1]),
        Point(b.x - third * ub[0], b.y - third * ub[1]),
        b,
    ]


def discretize_bezier(controls: Sequence[Point], samples: int = _BEZIER_SAMPLES) -> Polyline:
    pts = [bezier_eval(controls, i / samples) for i in range(samples + 1)]
    dedup = [pts[0]]
    for p in pts[1:]:
        if p.dist(dedup[-1]) > 1e-12:
            dedup.append(p)
    if len(dedup) < 2:
        dedup = [pts[0], Point(pts[0].x + 1e-9, pts[0].y)]
    return Polyline(dedup)


def controls_to_json(controls: Sequence[Point]) -> str:
    return json.dumps([[p.x, p.y] for p in controls])


def controls_from_json(text: Optional[str]) -> Optional[List[Point]]:
    if not text:
        return None
    return [Point(x, y) for x, y in json.loads(text)]
