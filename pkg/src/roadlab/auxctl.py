"""Standalone geometric controllers: the point-display lens and the
elevation-profile editor for 3D polylines."""
from __future__ import annotations

import math
from typing import List, Optional, Sequence, Tuple

from .errors import AmbiguousEdit, InvalidGeometry
from .geom import Point, Polygon, Polyline, tangent_at


def lens_filter(lens_poly: Polygon, lod: int, pass_filter: Optional[int],
                points: Sequence[Tuple[int, Point, Optional[int]]]) -> List[int]:
    """Ids of displayed points: inside the lens, matching the pass when
    set, decimated to every 4**lod-th point in stable id order."""
    if lod < 0:
        raise InvalidGeometry("lod must be >= 0")
    inside = [
        pid
        for pid, p, p_pass in sorted(points, key=lambda t: t[0])
        if (pass_filter is None or p_pass == pass_filter) and lens_poly.contains_point(p)
    ]
    k = 4 ** lod
    return inside[::k]


def profile_of(line3d: Polyline) -> Tuple[Polyline, float]:
    """Elevation profile of a 3D polyline: each vertex displaced along the
    local left perpendicular by (z - z_min).  Returns (profile, z_min)."""
    zs = [v.z for v in line3d.vertices]
    if any(z is None for z in zs):
        raise InvalidGeometry("all vertices need a z value")
    z_min = min(zs)
    out = []
    for i, v in enumerate(line3d.vertices):
        theta = tangent_at(line3d, line3d.cumulative[i])
        nx, ny = -math.sin(theta), math.cos(theta)
        h = v.z - z_min
        x, y = v.x + h * nx, v.y + h * ny
        # profile vertices must stay distinct even on constant-z lines
        out.append(Point(x, y))
    return Polyline(out), z_min


def interpret_profile(profile: Polyline, line3d: Polyline, z_min: float) -> Polyline:
    """New 3D line whose z values come from the edited profile: z_i is
    z_min plus the (unsigned) distance from profile vertex i to source
    vertex i."""
    if len(profile.vertices) != len(line3d.vertices):
        raise AmbiguousEdit(
            "profile vertex count must match the source line "
            f"({len(profile.vertices)} != {len(line3d.vertices)}); "
            "add or remove vertices on the source line instead"
        )
    out = []
    for pv, sv in zip(profile.vertices, line3d.vertices):
        out.append(Point(sv.x, sv.y, z_min + pv.dist(sv)))
    return Polyline(out)
