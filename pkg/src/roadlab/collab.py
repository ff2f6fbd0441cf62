"""Multi-user awareness: rounded screen extents, conflict detection,
hexagonal coverage grids and edit-time aggregation."""
from __future__ import annotations

import math
import queue
import threading
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import OutOfRange
from .geom import Point, Polygon, polygon_intersection_area

EXTENT_DURATION_CAP_MS = 300_000
CORNER_SEGMENTS = 8


def round_extent(x_min: float, y_min: float, x_max: float, y_max: float) -> Polygon:
    """Rectangle with rounded corners, the softened footprint a viewport
    leaves on the shared map.  Corner radius is a quarter of the short
    side, each quarter arc drawn with 8 segments."""
    w, h = x_max - x_min, y_max - y_min
    if w <= 0 or h <= 0:
        raise OutOfRange("extent must have positive width and height")
    r = 0.25 * min(w, h)
    centers = [
        (x_max - r, y_max - r, 0.0),
        (x_min + r, y_max - r, 0.5 * math.pi),
        (x_min + r, y_min + r, math.pi),
        (x_max - r, y_min + r, 1.5 * math.pi),
    ]
    pts = []
    for cx, cy, start in centers:
        for k in range(CORNER_SEGMENTS + 1):
            a = start + (k / CORNER_SEGMENTS) * 0.5 * math.pi
            pts.append(Point(cx + r * math.cos(a), cy + r * math.sin(a)))
    pts.append(pts[0])
    return Polygon(pts)


@dataclass(frozen=True)
class Extent:
    user_id: str
    t_ms: int
    polygon: Polygon
    scale: float = 1.0


@dataclass(frozen=True)
class ConflictHit:
    kind: str  # "revisit" | "concurrent"
    user_a: str
    user_b: str
    t_a: int
    t_b: int
    overlap_area: float


def _overlap(a: Extent, b: Extent) -> float:
    return polygon_intersection_area(a.polygon, b.polygon)


def detect_conflicts(extents: Sequence[Extent], window_ms: int) -> List[ConflictHit]:
    """Pairwise scan for overlapping extents.

    Same user, gap strictly greater than the window: a revisit (they came
    back to an area after long enough to have forgotten it).  Different
    users, gap strictly smaller than the window: concurrent presence.
    """
    hits = []
    ordered = sorted(extents, key=lambda e: (e.t_ms, e.user_id))
    for i, a in enumerate(ordered):
        for b in ordered[i + 1:]:
            dt = b.t_ms - a.t_ms
            if a.user_id == b.user_id:
                if dt <= window_ms:
                    continue
            elif dt >= window_ms:
                continue
            area = _overlap(a, b)
            if area <= 0.0:
                continue
            kind = "revisit" if a.user_id == b.user_id else "concurrent"
            hits.append(ConflictHit(kind, a.user_id, b.user_id, a.t_ms, b.t_ms, area))
    return hits


def extent_durations(times_ms: Sequence[int], cap_ms: int = EXTENT_DURATION_CAP_MS) -> List[int]:
    """How long each extent was on screen: gap to the next one from the
    same user, capped; the last one gets the cap."""
    out = []
    for i, t in enumerate(times_ms):
        if i + 1 < len(times_ms):
            out.append(min(times_ms[i + 1] - t, cap_ms))
        else:
            out.append(cap_ms)
    return out


# --- flat-top hexagon grid ------------------------------------------------

SQRT3 = math.sqrt(3.0)


def hex_center(q: int, r: int, size: float) -> Point:
    return Point(1.5 * size * q, SQRT3 * size * (r + q / 2.0))


def hex_polygon(q: int, r: int, size: float) -> Polygon:
    c = hex_center(q, r, size)
    pts = [
        Point(c.x + size * math.cos(math.pi * k / 3.0),
              c.y + size * math.sin(math.pi * k / 3.0))
        for k in range(6)
    ]
    pts.append(pts[0])
    return Polygon(pts)


def _axial_of_point(x: float, y: float, size: float) -> Tuple[int, int]:
    qf = (2.0 / 3.0) * x / size
    rf = (-x / 3.0 + SQRT3 / 3.0 * y) / size
    return _axial_round(qf, rf)


def _axial_round(qf: float, rf: float) -> Tuple[int, int]:
    sf = -qf - rf
    q, r, s = round(qf), round(rf), round(sf)
    dq, dr, ds = abs(q - qf), abs(r - rf), abs(s - sf)
    if dq > dr and dq > ds:
        q = -r - s
    elif dr > ds:
        r = -q - s
    return int(q), int(r)


def cells_covering(area: Polygon, size: float) -> List[Tuple[int, int]]:
    """Axial coordinates of every hex cell intersecting the area."""
    xs = [p.x for p in area.exterior]
    ys = [p.y for p in area.exterior]
    sh = area.to_shapely()
    q_lo, _ = _axial_of_point(min(xs) - size, 0.0, size)
    q_hi, _ = _axial_of_point(max(xs) + size, 0.0, size)
    out = []
    for q in range(q_lo - 1, q_hi + 2):
        r_lo = int(math.floor((min(ys) - size) / (SQRT3 * size) - q / 2.0)) - 1
        r_hi = int(math.ceil((max(ys) + size) / (SQRT3 * size) - q / 2.0)) + 1
        for r in range(r_lo, r_hi + 1):
            if hex_polygon(q, r, size).to_shapely().intersects(sh):
                out.append((q, r))
    return sorted(out)


@dataclass
class CellState:
    done: bool = False
    cumulated_ms: int = 0


@dataclass
class HexGrid:
    """Todo overlay over a work area: cells flip to done once fully seen
    and never flip back."""

    size: float
    cells: Dict[Tuple[int, int], CellState] = field(default_factory=dict)

    @classmethod
    def covering(cls, area: Polygon, size: float) -> "HexGrid":
        return cls(size, {qr: CellState() for qr in cells_covering(area, size)})

    def mark_seen(self, extent: Polygon, duration_ms: int) -> List[Tuple[int, int]]:
        """Accumulate viewing time on intersected cells and mark fully
        contained ones done.  Returns the newly done cells."""
        sh = extent.to_shapely()
        flipped = []
        for qr, state in self.cells.items():
            hx = hex_polygon(qr[0], qr[1], self.size).to_shapely()
            if not hx.intersects(sh):
                continue
            state.cumulated_ms += duration_ms
            if not state.done and sh.covers(hx):
                state.done = True
                flipped.append(qr)
        return sorted(flipped)

    def todo(self) -> List[Tuple[int, int]]:
        return sorted(qr for qr, st in self.cells.items() if not st.done)


# --- background extent recording -----------------------------------------


class ExtentRecorder:
    """Queues viewport reports and integrates them into a grid off the
    caller's thread.  Reports outside the scale band are dropped at
    enqueue time; the drain preserves per-user arrival order."""

    def __init__(self, grid: HexGrid, min_scale: float, max_scale: float,
                 cap_ms: int = EXTENT_DURATION_CAP_MS):
        self.grid = grid
        self.min_scale = min_scale
        self.max_scale = max_scale
        self.cap_ms = cap_ms
        self._q: "queue.Queue[Optional[Extent]]" = queue.Queue()
        self._last_t: Dict[str, Tuple[int, Polygon]] = {}
        self._lock = threading.Lock()
        self._thread: Optional[threading.Thread] = None

    def submit(self, extent: Extent) -> bool:
        if not (self.min_scale <= extent.scale <= self.max_scale):
            return False
        self._q.put(extent)
        return True

    def drain(self) -> None:
        """Process everything queued so far, synchronously."""
        while True:
            try:
                e = self._q.get_nowait()
            except queue.Empty:
                return
            if e is not None:
                self._integrate(e)

    def _integrate(self, e: Extent) -> None:
        with self._lock:
            prev = self._last_t.get(e.user_id)
            if prev is not None:
                t_prev, poly_prev = prev
                duration = min(max(e.t_ms - t_prev, 0), self.cap_ms)
                self.grid.mark_seen(poly_prev, duration)
            self._last_t[e.user_id] = (e.t_ms, e.polygon)

    def flush_open(self) -> None:
        """Credit every user's dangling last extent with the cap."""
        with self._lock:
            for t, poly in self._last_t.values():
                self.grid.mark_seen(poly, self.cap_ms)
            self._last_t.clear()

    def start(self) -> None:
        if self._thread is not None:
            return
        self._thread = threading.Thread(target=self._run, daemon=True)
        self._thread.start()

    def stop(self) -> None:
        if self._thread is None:
            return
        self._q.put(None)
        self._thread.join()
        self._thread = None

    def _run(self) -> None:
        while True:
            e = self._q.get()
            if e is None:
                return
            self._integrate(e)
