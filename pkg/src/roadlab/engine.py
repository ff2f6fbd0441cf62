"""The reactive street-model engine.

Wires the feature store and trigger machinery to the generation math:
user edits arrive on proxy views, handlers interpret them into base-layer
writes, and finalizers regenerate the impacted part of the street model
(limits, surfaces, lanes, interconnections, dependent objects) before the
change set commits.
"""
from __future__ import annotations

import math
import queue
import statistics
import threading
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from . import auxctl, collab, generation, objects, traffic
from .config import Config
from .errors import (
    AmbiguousEdit,
    DegenerateSection,
    Misconfigured,
    NotFound,
    NotOnRoad,
    OutOfRange,
)
from .geom import (
    Point,
    Polygon,
    Polyline,
    point_at,
    project_to_polyline,
    segments_cross,
)
from .store import (
    AttrDef,
    ChangeRecord,
    Feature,
    Schema,
    Store,
    SYSTEM_ORIGIN,
)
from .triggers import OverrideBinding, ProxyView, TriggerEngine, TriggerSpec

I, R, T, B, TS = "integer", "real", "text", "boolean", "timestamp"


def _schemas() -> List[Schema]:
    A = AttrDef
    return [
        Schema("node", "point"),
        Schema("edge", "polyline", {
            "start_node": A(I, False), "end_node": A(I, False),
            "width": A(R, False), "lane_count": A(I, False),
        }),
        Schema("intersection_limit", "point", {
            "edge_id": A(I, False), "node_id": A(I, False),
            "s": A(R, False), "overridden": A(B, False),
        }),
        Schema("corner_radius", "point", {
            "node_id": A(I, False), "edge_a": A(I, False), "edge_b": A(I, False),
            "r": A(R, False), "overridden": A(B, False),
        }),
        Schema("section_surface", "polygon", {"edge_id": A(I, False)}),
        Schema("intersection_surface", "polygon", {"node_id": A(I, False)}),
        Schema("width_probe", "point"),
        Schema("lane", "polyline", {
            "edge_id": A(I, False), "index": A(I, False), "direction": A(T, False),
        }),
        Schema("lane_override", "polyline", {
            "edge_id": A(I, False), "index": A(I, False), "direction": A(T),
        }),
        Schema("interconnection", "polyline", {
            "node_id": A(I, False), "from_edge": A(I, False), "from_index": A(I, False),
            "to_edge": A(I, False), "to_index": A(I, False),
            "allowed": A(B, False), "controls": A(T),
        }),
        Schema("interconnection_override", "none", {
            "node_id": A(I, False), "from_edge": A(I, False), "from_index": A(I, False),
            "to_edge": A(I, False), "to_index": A(I, False),
            "allowed": A(B), "controls": A(T),
        }),
        Schema("street_object", "point", {
            "obj_class": A(T, False), "position_mode": A(T, False),
            "ref_edge": A(I), "s": A(R), "d": A(R), "side": A(I),
            "orientation_mode": A(T, False), "theta_abs": A(R, False), "theta_rel": A(R),
        }),
        Schema("pedestrian_crossing", "polygon", {
            "ref_edge": A(I, False), "s": A(R, False),
            "width": A(R, False), "orientation": A(R, False),
        }),
        Schema("lens", "polygon", {"lod": A(I, False), "pass": A(I)}),
        Schema("lens_point", "point", {"pass": A(I)}),
        Schema("alti_line", "polyline"),
        Schema("alti_profile_data", "polyline", {"line_id": A(I, False), "z_min": A(R, False)}),
        Schema("screen_extent", "polygon", {
            "user_id": A(T, False), "t": A(TS, False), "scale": A(R, False),
        }),
        Schema("work_area", "polygon", {"size": A(R)}),
        Schema("hex_grid", "polygon", {
            "q": A(I, False), "r": A(I, False),
            "status": A(T, False), "cumulated_ms": A(I, False),
        }),
    ]


class Engine:
    """Owns the store, the trigger registrations and the public edit API."""

    def __init__(self, config: Optional[Config] = None):
        self.config = config or Config()
        self.store = Store()
        self.triggers = TriggerEngine(self.config.trigger_depth_limit)
        for schema in _schemas():
            self.store.create_layer(schema)
        self._register()
        self.store.dispatcher = self.triggers
        self._extent_queue: "queue.Queue" = queue.Queue()
        self._extent_thread: Optional[threading.Thread] = None

    # ------------------------------------------------------- public API

    def apply(self, records: Sequence[ChangeRecord], origin: str) -> List[ChangeRecord]:
        return self.store.apply_changeset(records, origin)

    def insert_feature(self, layer: str, geometry, attrs: dict, origin: str) -> Feature:
        rec = ChangeRecord("insert", layer, new=Feature(None, geometry, dict(attrs)))
        self.apply([rec], origin)
        return rec.new

    def _lookup(self, layer: str, fid: int) -> Feature:
        if layer in self.store.virtual_readers:
            for f in self.store.features(layer):
                if f.id == fid:
                    return f
            raise NotFound(f"{layer}#{fid} not found")
        return self.store.get(layer, fid)

    def update_feature(self, layer: str, fid: int, geometry, attrs: dict,
                       origin: str) -> Feature:
        base = self._lookup(layer, fid)
        merged = dict(base.attributes)
        merged.update(attrs)
        rec = ChangeRecord("update", layer, feature_id=fid,
                           new=Feature(fid, geometry, merged))
        self.apply([rec], origin)
        return rec.new

    def delete_feature(self, layer: str, fid: int, origin: str):
        self.apply([ChangeRecord("delete", layer, feature_id=fid)], origin)

    def generate(self) -> List[ChangeRecord]:
        """Full regeneration of every derived feature."""
        dirty = {
            "edge": {f.id for f in self.store.features("edge")},
            "node": {f.id for f in self.store.features("node")},
            "hexgrid": {0},
        }
        return self.store.apply_changeset([], SYSTEM_ORIGIN, initial_dirty=dirty)

    def regenerate_impacted(self, edges: Iterable[int] = (),
                            nodes: Iterable[int] = ()) -> List[ChangeRecord]:
        dirty = {"edge": set(edges), "node": set(nodes)}
        return self.store.apply_changeset([], SYSTEM_ORIGIN, initial_dirty=dirty)

    def split_edge(self, edge_id: int, s: float, origin: str = "user") -> Tuple[int, List[int]]:
        edge = self.store.get("edge", edge_id)
        axis: Polyline = edge.geometry
        if not (1e-9 < s < axis.length - 1e-9):
            raise OutOfRange(f"split abscissa {s} outside (0, {axis.length})")
        p, _ = point_at(axis, s)
        rec = ChangeRecord("insert", "edit_node", new=Feature(None, p, {}))
        self.apply([rec], origin)
        node = rec.new
        halves = sorted(
            f.id for f in self.store.features("edge")
            if node.id in (f.attributes["start_node"], f.attributes["end_node"])
        )
        return node.id, halves

    def lens_contents(self, lens_id: int) -> List[int]:
        lens = self.store.get("lens", lens_id)
        pts = [
            (f.id, f.geometry, f.attributes.get("pass"))
            for f in self.store.features("lens_point")
        ]
        return auxctl.lens_filter(lens.geometry, lens.attributes["lod"],
                                  lens.attributes.get("pass"), pts)

    # ----------------------------------------------------- extent queue

    def record_extent(self, user_id: str, rect: Tuple[float, float, float, float],
                      t_ms: int, scale: float) -> bool:
        """Queue a viewport report; returns False when the scale is
        outside the configured band and the report is skipped."""
        if not (self.config.min_scale <= scale <= self.config.max_scale):
            return False
        self._extent_queue.put((user_id, rect, t_ms, scale))
        if self._extent_thread is None:
            self._extent_thread = threading.Thread(target=self._extent_loop, daemon=True)
            self._extent_thread.start()
        return True

    def drain_extents(self):
        """Block until every queued extent has been committed."""
        while True:
            try:
                item = self._extent_queue.get_nowait()
            except queue.Empty:
                break
            try:
                self._commit_extent(item)
            finally:
                self._extent_queue.task_done()
        self._extent_queue.join()

    def _extent_loop(self):
        while True:
            item = self._extent_queue.get()
            try:
                if item is None:
                    return
                self._commit_extent(item)
            except Exception:
                pass  # fire-and-forget contract
            finally:
                self._extent_queue.task_done()

    def _commit_extent(self, item):
        user_id, (x0, y0, x1, y1), t_ms, scale = item
        poly = Polygon([Point(x0, y0), Point(x1, y0), Point(x1, y1),
                        Point(x0, y1), Point(x0, y0)])
        rec = ChangeRecord("insert", "screen_extent", new=Feature(
            None, poly, {"user_id": user_id, "t": t_ms, "scale": scale}))
        self.apply([rec], origin=user_id)

    def close(self):
        if self._extent_thread is not None:
            self._extent_queue.put(None)
            self._extent_thread.join()
            self._extent_thread = None

    # ------------------------------------------------------ persistence

    def save(self, directory):
        self.store.save_project(directory, self.config.to_dict(),
                                self.triggers.registrations())

    @classmethod
    def load(cls, directory) -> "Engine":
        from .store import load_manifest

        manifest = load_manifest(directory)
        engine = cls(Config.from_dict(manifest.get("config", {})))
        engine.store.load_project_features(directory, manifest)
        return engine

    # ----------------------------------------------------------- wiring

    def _register(self):
        t, s = self.triggers, self.store
        t.register_proxy_view(ProxyView("edit_node", "node", handlers={
            "insert": self._node_insert, "update": self._node_move,
            "delete": self._node_delete}), s)
        t.register_proxy_view(ProxyView("edit_edge", "edge", handlers={
            "insert": self._edge_insert, "update": self._edge_update,
            "delete": lambda ctx, rec: ctx.delete("edge", rec.feature_id)}), s)
        t.register_proxy_view(ProxyView("ctl_intersection_limit", "intersection_limit",
                                        handlers={"update": self._limit_drag}), s)
        t.register_proxy_view(ProxyView("ctl_corner_radius", "corner_radius",
                                        handlers={"update": self._radius_drag}), s)
        t.register_proxy_view(ProxyView("ctl_width_probe", "width_probe", handlers={
            "insert": lambda ctx, rec: self._probe_insert(ctx, rec)}), s)

        lane_bind = OverrideBinding("lane_bind", "lane", "lane_override",
                                    ("edge_id", "index"), ("direction", "geometry"))
        lane_reader = t.register_binding(lane_bind, s)
        t.register_proxy_view(ProxyView("edit_lane", "lane", reader=lane_reader, handlers={
            "update": self._lane_edit, "delete": self._lane_delete}), s)

        ic_bind = OverrideBinding(
            "ic_bind", "interconnection", "interconnection_override",
            ("node_id", "from_edge", "from_index", "to_edge", "to_index"),
            ("allowed", "controls"))
        ic_merged = t.register_binding(ic_bind, s)
        t.register_proxy_view(ProxyView(
            "edit_interconnection", "interconnection",
            reader=lambda: self._interconnection_read(ic_merged),
            handlers={"update": self._interconnection_edit,
                      "delete": self._interconnection_delete}), s)

        t.register_proxy_view(ProxyView("edit_object", "street_object", handlers={
            "insert": self._object_insert, "update": self._object_move,
            "delete": lambda ctx, rec: ctx.delete("street_object", rec.feature_id)}), s)
        t.register_proxy_view(ProxyView("edit_pedestrian_crossing", "pedestrian_crossing",
                                        handlers={
            "insert": self._crossing_insert, "update": self._crossing_edit,
            "delete": lambda ctx, rec: ctx.delete("pedestrian_crossing", rec.feature_id)}), s)
        t.register_proxy_view(ProxyView(
            "alti_profile", "alti_profile_data",
            handlers={"update": self._profile_edit}), s)

        s.register_virtual("conflicts", self._conflict_read)

        def mark(bucket):
            def handler(ctx, rec):
                fid = rec.feature_id if rec.feature_id is not None else rec.new.id
                ctx.dirty[bucket].add(fid)
            return handler

        t.register_trigger(TriggerSpec("edge", "edge_dirty", "after",
                                       frozenset({"insert", "update"}), mark("edge")))
        t.register_trigger(TriggerSpec("edge", "edge_cascade", "after",
                                       frozenset({"delete"}), self._edge_deleted))
        t.register_trigger(TriggerSpec("node", "node_dirty", "after",
                                       frozenset({"insert", "update"}), mark("node")))
        t.register_trigger(TriggerSpec("alti_line", "alti_profile_sync", "after",
                                       frozenset({"insert", "update"}),
                                       self._alti_changed))
        t.register_trigger(TriggerSpec("alti_line", "alti_profile_drop", "after",
                                       frozenset({"delete"}), self._alti_deleted))
        t.register_trigger(TriggerSpec("screen_extent", "extent_rounding", "before",
                                       frozenset({"insert"}), self._round_extent))
        t.register_trigger(TriggerSpec("screen_extent", "extent_marks_grid", "after",
                                       frozenset({"insert"}), self._extent_inserted))
        t.register_trigger(TriggerSpec("work_area", "work_area_guard", "before",
                                       frozenset({"insert", "update"}),
                                       self._work_area_guard))
        t.register_trigger(TriggerSpec("work_area", "work_area_dirty", "after",
                                       frozenset({"insert", "update", "delete"}),
                                       lambda ctx, rec: ctx.dirty["hexgrid"].add(0)))

        t.register_finalizer("interpret_probes", self._finalize_probes)
        t.register_finalizer("regenerate", self._finalize_regen)
        t.register_finalizer("hex_grid", self._finalize_hex_grid)

    # --------------------------------------------------------- topology

    def _nodes(self) -> List[Feature]:
        return self.store.features("node")

    def _edges(self) -> List[Feature]:
        return self.store.features("edge")

    def _incident_edges(self, node_id: int) -> List[Feature]:
        return [e for e in self._edges()
                if node_id in (e.attributes["start_node"], e.attributes["end_node"])]

    def _node_insert(self, ctx, rec):
        p: Point = rec.new.geometry
        tol = self.config.snap_tolerance_m
        for n in self._nodes():
            if n.geometry.dist(p) <= tol:
                raise AmbiguousEdit(
                    f"near existing node {n.id}; move it instead of adding one")
        hits = []
        for e in self._edges():
            s, _, _ = project_to_polyline(p, e.geometry)
            q, _ = point_at(e.geometry, s)
            if q.dist(p) <= tol:
                hits.append((e, s))
        if len(hits) > 1:
            raise AmbiguousEdit("multiple candidate edges; split them one at a time")
        if len(hits) == 1:
            edge, s = hits[0]
            created = self._split(ctx, edge, s)
        else:
            created = ctx.insert("node", p, {}, origin=ctx.origin)
        rec.new = created
        rec.feature_id = created.id

    def _split(self, ctx, edge: Feature, s: float) -> Feature:
        axis: Polyline = edge.geometry
        if not (1e-9 < s < axis.length - 1e-9):
            raise OutOfRange(f"split abscissa {s} outside the edge interior")
        p, _ = point_at(axis, s)
        node = ctx.insert("node", p, {}, origin=ctx.origin)
        first = generation.clip_offset(axis, 0.0, 0.0, s)
        second = generation.clip_offset(axis, 0.0, s, axis.length)
        sem = {"width": edge.attributes["width"],
               "lane_count": edge.attributes["lane_count"]}
        e1 = ctx.insert("edge", first, {
            "start_node": edge.attributes["start_node"], "end_node": node.id, **sem})
        e2 = ctx.insert("edge", second, {
            "start_node": node.id, "end_node": edge.attributes["end_node"], **sem})
        for obj in ctx.find_by("street_object", {"ref_edge": edge.id}):
            os = obj.attributes["s"]
            target, new_s = (e1, os) if os < s else (e2, os - s)
            ctx.update("street_object", obj.id,
                       attrs={"ref_edge": target.id, "s": new_s})
        for crossing in ctx.find_by("pedestrian_crossing", {"ref_edge": edge.id}):
            cs = crossing.attributes["s"]
            target, new_s = (e1, cs) if cs < s else (e2, cs - s)
            ctx.update("pedestrian_crossing", crossing.id,
                       attrs={"ref_edge": target.id, "s": new_s})
        ctx.delete("edge", edge.id)
        return node

    def _node_move(self, ctx, rec):
        node = self.store.get("node", rec.feature_id)
        p: Point = rec.new.geometry
        tol = self.config.snap_tolerance_m
        for other in self._nodes():
            if other.id != node.id and other.geometry.dist(p) <= tol:
                raise AmbiguousEdit(f"new position collides with node {other.id}")
        incident = self._incident_edges(node.id)
        adjusted = {}
        for e in incident:
            verts = list(e.geometry.vertices)
            if e.attributes["start_node"] == node.id:
                verts[0] = p
            if e.attributes["end_node"] == node.id:
                verts[-1] = p
            adjusted[e.id] = Polyline(verts)
        moved_ids = set(adjusted)
        for e in self._edges():
            others = adjusted.items() if e.id not in moved_ids else []
            for eid, geom in others:
                if segments_cross(geom, e.geometry):
                    raise AmbiguousEdit(
                        f"moving node {node.id} would cross edge {e.id}")
        ctx.update("node", node.id, geometry=p, origin=ctx.origin)
        for eid, geom in adjusted.items():
            ctx.update("edge", eid, geometry=geom)
        rec.new = self.store.get("node", node.id)

    def _node_delete(self, ctx, rec):
        if self._incident_edges(rec.feature_id):
            raise AmbiguousEdit("node still has incident edges; delete them first")
        ctx.delete("node", rec.feature_id, origin=ctx.origin)

    def _snap_endpoints(self, geometry: Polyline) -> Tuple[Polyline, int, int]:
        tol = self.config.snap_tolerance_m
        ends = []
        for p in (geometry.vertices[0], geometry.vertices[-1]):
            best = None
            for n in self._nodes():
                d = n.geometry.dist(p)
                if d <= tol and (best is None or d < best[1]):
                    best = (n, d)
            if best is None:
                raise AmbiguousEdit("endpoint not on a node; add the node first")
            ends.append(best[0])
        verts = list(geometry.vertices)
        verts[0] = ends[0].geometry
        verts[-1] = ends[1].geometry
        return Polyline(verts), ends[0].id, ends[1].id

    def _check_planarity(self, geometry: Polyline, skip_edge: Optional[int] = None):
        for e in self._edges():
            if e.id == skip_edge:
                continue
            if segments_cross(geometry, e.geometry):
                raise AmbiguousEdit(
                    f"would require splitting edges (crosses edge {e.id})")

    def _edge_insert(self, ctx, rec):
        geometry, start, end = self._snap_endpoints(rec.new.geometry)
        self._check_planarity(geometry)
        attrs = {
            "start_node": start, "end_node": end,
            "width": rec.new.attributes.get("width") or self.config.default_width_m,
            "lane_count": rec.new.attributes.get("lane_count")
            or self.config.default_lane_count,
        }
        created = ctx.insert("edge", geometry, attrs, origin=ctx.origin)
        rec.new = created
        rec.feature_id = created.id

    def _edge_update(self, ctx, rec):
        base = self.store.get("edge", rec.feature_id)
        geometry = rec.new.geometry
        if not base.geometry == geometry:
            geometry, start, end = self._snap_endpoints(geometry)
            self._check_planarity(geometry, skip_edge=base.id)
        attrs = {
            k: rec.new.attributes.get(k, base.attributes[k])
            for k in ("width", "lane_count")
        }
        if attrs["width"] <= 0 or attrs["lane_count"] < 1:
            raise OutOfRange("width must be > 0 and lane_count >= 1")
        ctx.update("edge", base.id, geometry=geometry, attrs=attrs, origin=ctx.origin)
        rec.new = self.store.get("edge", base.id)

    def _edge_deleted(self, ctx, rec):
        """Cascade: drop everything hanging off a deleted edge."""
        eid = rec.feature_id
        for layer in ("lane", "lane_override", "section_surface"):
            key = "edge_id"
            for f in ctx.find_by(layer, {key: eid}):
                ctx.delete(layer, f.id)
        for f in ctx.find_by("intersection_limit", {"edge_id": eid}):
            ctx.delete("intersection_limit", f.id)
        for layer in ("interconnection", "interconnection_override"):
            for f in self.store.features(layer):
                if eid in (f.attributes["from_edge"], f.attributes["to_edge"]):
                    ctx.delete(layer, f.id)
        for f in self.store.features("corner_radius"):
            if eid in (f.attributes["edge_a"], f.attributes["edge_b"]):
                ctx.delete("corner_radius", f.id)
        for obj in ctx.find_by("street_object", {"ref_edge": eid}):
            ctx.update("street_object", obj.id, attrs={
                "position_mode": objects.MODE_ABSOLUTE, "orientation_mode": "absolute",
                "ref_edge": None, "s": None, "d": None, "side": None, "theta_rel": None,
            })
        for crossing in ctx.find_by("pedestrian_crossing", {"ref_edge": eid}):
            ctx.delete("pedestrian_crossing", crossing.id)
        old = rec.old if rec.old is not None else None
        if old is not None:
            ctx.dirty["node"].update(
                {old.attributes["start_node"], old.attributes["end_node"]})

    # ------------------------------------------------------ controllers

    def _axis_from_node(self, edge: Feature, node_id: int) -> Polyline:
        axis: Polyline = edge.geometry
        if edge.attributes["end_node"] == node_id:
            return Polyline(list(reversed(axis.vertices)))
        return axis

    def _limit_drag(self, ctx, rec):
        base = self.store.get("intersection_limit", rec.feature_id)
        edge = self.store.get("edge", base.attributes["edge_id"])
        axis = self._axis_from_node(edge, base.attributes["node_id"])
        s, _, _ = project_to_polyline(rec.new.geometry, axis)
        clamped = generation.clamp_limit(s, axis.length)
        if clamped != s:
            ctx.warn(f"limit abscissa {s:.3f} clamped to {clamped:.3f}")
        p, _ = point_at(axis, clamped)
        ctx.update("intersection_limit", base.id, geometry=p,
                   attrs={"s": clamped, "overridden": True})
        ctx.dirty["edge"].add(edge.id)
        ctx.dirty["node"].add(base.attributes["node_id"])
        rec.new = self.store.get("intersection_limit", base.id)

    def _section_for(self, edge_id: int) -> Optional[Feature]:
        hits = [f for f in self.store.features("section_surface")
                if f.attributes["edge_id"] == edge_id]
        return hits[0] if hits else None

    def _radius_drag(self, ctx, rec):
        base = self.store.get("corner_radius", rec.feature_id)
        p: Point = rec.new.geometry
        dists = []
        for eid in (base.attributes["edge_a"], base.attributes["edge_b"]):
            section = self._section_for(eid)
            if section is None:
                continue
            sh = section.geometry.to_shapely()
            from shapely.geometry import Point as ShPoint

            sp = ShPoint(p.x, p.y)
            if sh.covers(sp):
                raise OutOfRange(
                    "radius controller must stay outside the road surfaces")
            dists.append(sh.exterior.distance(sp))
        if not dists:
            raise NotFound("adjacent section surfaces are missing")
        r = min(dists)
        if r <= 0:
            raise OutOfRange("radius would be zero")
        ctx.update("corner_radius", base.id, attrs={"r": r, "overridden": True})
        ctx.dirty["node"].add(base.attributes["node_id"])
        rec.new = self.store.get("corner_radius", base.id)

    def _probe_insert(self, ctx, rec):
        created = ctx.insert("width_probe", rec.new.geometry, {}, origin=ctx.origin)
        ctx.dirty["probes"].add(created.id)
        rec.new = created
        rec.feature_id = created.id

    def _finalize_probes(self, ctx) -> bool:
        if not ctx.dirty.pop("probes", None):
            return False
        probes = self.store.features("width_probe")
        if not probes:
            return False
        per_edge: Dict[int, List[float]] = {}
        for probe in probes:
            edge = self._assign_probe(probe.geometry)
            if edge is None:
                ctx.warn(f"width probe {probe.id} matches no road, ignored")
            else:
                axis = edge.geometry
                s, _, _ = project_to_polyline(probe.geometry, axis)
                q, _ = point_at(axis, s)
                per_edge.setdefault(edge.id, []).append(probe.geometry.dist(q))
            ctx.delete("width_probe", probe.id)
        for eid, dists in per_edge.items():
            ctx.update("edge", eid, attrs={"width": 2.0 * statistics.median(dists)})
        return True

    def _assign_probe(self, p: Point) -> Optional[Feature]:
        from shapely.geometry import Point as ShPoint

        sp = ShPoint(p.x, p.y)
        best = None
        for e in self._edges():
            section = self._section_for(e.id)
            if section is None:
                continue
            sh = section.geometry.to_shapely()
            if sh.covers(sp):
                return e
            d = sh.distance(sp)
            if d <= 2.0 * e.attributes["width"] and (best is None or d < best[1]):
                best = (e, d)
        return best[0] if best else None

    # ------------------------------------------------------------ lanes

    def _lane_edit(self, ctx, rec):
        auto = self.store.get("lane", rec.feature_id)
        key = {"edge_id": auto.attributes["edge_id"], "index": auto.attributes["index"]}
        direction = rec.new.attributes.get("direction")
        over_dir = direction if direction != auto.attributes["direction"] else None
        geom = rec.new.geometry
        over_geom = geom if not (geom == auto.geometry) else None
        existing = ctx.find_by("lane_override", key)
        if over_dir is None and over_geom is None:
            for f in existing:
                ctx.delete("lane_override", f.id)
        elif existing:
            ctx.update("lane_override", existing[0].id, geometry=over_geom,
                       attrs={"direction": over_dir}, only_if_changed=False)
        else:
            ctx.insert("lane_override", over_geom, {**key, "direction": over_dir})
        rec.new = Feature(auto.id, over_geom or auto.geometry, dict(rec.new.attributes))

    def _lane_delete(self, ctx, rec):
        auto = self.store.get("lane", rec.feature_id)
        key = {"edge_id": auto.attributes["edge_id"], "index": auto.attributes["index"]}
        overrides = ctx.find_by("lane_override", key)
        if not overrides:
            ctx.warn("lane has no user override; nothing to delete")
        for f in overrides:
            ctx.delete("lane_override", f.id)

    def merged_lanes(self, edge_id: Optional[int] = None) -> List[Feature]:
        feats = self.store.features("edit_lane")
        if edge_id is None:
            return feats
        return [f for f in feats if f.attributes["edge_id"] == edge_id]

    # -------------------------------------------------- interconnections

    def _interconnection_read(self, merged_reader) -> List[Feature]:
        out = []
        for f in merged_reader():
            if not f.attributes["allowed"]:
                out.append(Feature(f.id, None, dict(f.attributes)))
                continue
            controls = traffic.controls_from_json(f.attributes.get("controls"))
            geometry = traffic.discretize_bezier(controls) if controls else f.geometry
            out.append(Feature(f.id, geometry, dict(f.attributes)))
        return out

    def _ic_key(self, feat: Feature) -> dict:
        return {k: feat.attributes[k] for k in
                ("node_id", "from_edge", "from_index", "to_edge", "to_index")}

    def _interconnection_delete(self, ctx, rec):
        auto = self.store.get("interconnection", rec.feature_id)
        key = self._ic_key(auto)
        overrides = ctx.find_by("interconnection_override", key)
        if overrides:
            for f in overrides:
                ctx.delete("interconnection_override", f.id)
        else:
            ctx.insert("interconnection_override", None,
                       {**key, "allowed": False, "controls": None})

    def _interconnection_edit(self, ctx, rec):
        auto = self.store.get("interconnection", rec.feature_id)
        key = self._ic_key(auto)
        attrs = {}
        controls = rec.new.attributes.get("controls")
        if controls and controls != auto.attributes.get("controls"):
            attrs["controls"] = controls
        allowed = rec.new.attributes.get("allowed")
        if allowed is not None and allowed != auto.attributes["allowed"]:
            attrs["allowed"] = allowed
        if not attrs:
            return
        existing = ctx.find_by("interconnection_override", key)
        if existing:
            ctx.update("interconnection_override", existing[0].id, attrs=attrs)
        else:
            ctx.insert("interconnection_override", None,
                       {**key, "allowed": None, "controls": None, **attrs})

    # ---------------------------------------------------- street objects

    def _all_axes(self) -> List[Tuple[int, Polyline]]:
        return [(e.id, e.geometry) for e in self._edges()]

    def _object_state(self, p: Point, attrs: dict) -> Tuple[Point, dict]:
        mode = attrs.get("position_mode", objects.MODE_ABSOLUTE)
        omode = attrs.get("orientation_mode", "absolute")
        out = dict(attrs)
        if mode == objects.MODE_ABSOLUTE:
            out.update({"ref_edge": None, "s": None, "d": None, "side": None})
            if omode == "relative":
                raise Misconfigured("relative orientation needs a reference axis")
            if out.get("theta_abs") is None:
                out["theta_abs"] = 0.0
            out["theta_rel"] = None
            return p, out
        axes = self._all_axes()
        if not axes:
            raise Misconfigured("relative positioning requires at least one road axis")
        eid, _ = objects.closest_axis(p, axes)
        edge = self.store.get("edge", eid)
        s, d, side = objects.to_relative(p, edge.geometry, mode,
                                         edge.attributes["width"])
        snapped, tangent = objects.to_absolute(edge.geometry, s, d, side, mode,
                                               edge.attributes["width"])
        out.update({"ref_edge": eid, "s": s, "d": d, "side": side})
        if omode == "relative":
            rel = attrs.get("theta_rel") or 0.0
            out["theta_rel"] = rel
            out["theta_abs"] = objects.wrap_angle(tangent + rel)
        else:
            if out.get("theta_abs") is None:
                out["theta_abs"] = 0.0
            out["theta_rel"] = None
        return snapped, out

    def _object_insert(self, ctx, rec):
        p, attrs = self._object_state(rec.new.geometry, rec.new.attributes)
        created = ctx.insert("street_object", p, attrs, origin=ctx.origin)
        rec.new = created
        rec.feature_id = created.id

    def _object_move(self, ctx, rec):
        base = self.store.get("street_object", rec.feature_id)
        merged = dict(base.attributes)
        merged.update({k: v for k, v in rec.new.attributes.items() if v is not None})
        p, attrs = self._object_state(rec.new.geometry, merged)
        ctx.update("street_object", base.id, geometry=p, attrs=attrs,
                   origin=ctx.origin)
        rec.new = self.store.get("street_object", base.id)

    def _resync_objects(self, ctx, edge: Feature):
        axis: Polyline = edge.geometry
        width = edge.attributes["width"]
        for obj in ctx.find_by("street_object", {"ref_edge": edge.id}):
            a = obj.attributes
            s = a["s"]
            if s > axis.length:
                ctx.warn(f"object {obj.id} abscissa clamped to shortened axis")
                s = axis.length
            p, tangent = objects.to_absolute(axis, s, a["d"], a["side"] or 1,
                                             a["position_mode"], width)
            attrs = {"s": s}
            if a["orientation_mode"] == "relative":
                attrs["theta_abs"] = objects.wrap_angle(tangent + (a["theta_rel"] or 0.0))
            ctx.update("street_object", obj.id, geometry=p, attrs=attrs)

    # ----------------------------------------------------- crossings

    def _crossing_target(self, poly: Polygon) -> Feature:
        from .geom import polygon_intersection_area

        best = None
        for e in self._edges():
            section = self._section_for(e.id)
            if section is None:
                continue
            area = polygon_intersection_area(poly, section.geometry)
            if area > 1e-9 and (best is None or area > best[1]):
                best = (e, area)
        if best is None:
            raise NotOnRoad("polygon does not overlap any road surface")
        return best[0]

    def _crossing_insert(self, ctx, rec):
        edge = self._crossing_target(rec.new.geometry)
        fit = objects.fit_crossing(rec.new.geometry, edge.geometry)
        canon = objects.crossing_polygon(edge.geometry, fit,
                                         edge.attributes["width"])
        created = ctx.insert("pedestrian_crossing", canon, {
            "ref_edge": edge.id, "s": fit.s, "width": fit.width,
            "orientation": fit.orientation}, origin=ctx.origin)
        rec.new = created
        rec.feature_id = created.id

    def _crossing_edit(self, ctx, rec):
        base = self.store.get("pedestrian_crossing", rec.feature_id)
        edge = self.store.get("edge", base.attributes["ref_edge"])
        fit = objects.fit_crossing(rec.new.geometry, edge.geometry)
        canon = objects.crossing_polygon(edge.geometry, fit,
                                         edge.attributes["width"])
        ctx.update("pedestrian_crossing", base.id, geometry=canon, attrs={
            "s": fit.s, "width": fit.width, "orientation": fit.orientation},
            origin=ctx.origin)
        rec.new = self.store.get("pedestrian_crossing", base.id)

    def _resync_crossings(self, ctx, edge: Feature):
        for crossing in ctx.find_by("pedestrian_crossing", {"ref_edge": edge.id}):
            a = crossing.attributes
            fit = objects.CrossingFit(a["orientation"], a["width"],
                                      min(a["s"], edge.geometry.length))
            canon = objects.crossing_polygon(edge.geometry, fit,
                                             edge.attributes["width"])
            ctx.update("pedestrian_crossing", crossing.id, geometry=canon,
                       attrs={"s": fit.s})

    # -------------------------------------------------------- altimetry

    def _alti_changed(self, ctx, rec):
        line = rec.new
        profile, z_min = auxctl.profile_of(line.geometry)
        ctx.upsert_by("alti_profile_data", {"line_id": line.id}, profile,
                      {"z_min": z_min})

    def _alti_deleted(self, ctx, rec):
        for f in ctx.find_by("alti_profile_data", {"line_id": rec.feature_id}):
            ctx.delete("alti_profile_data", f.id)

    def _profile_edit(self, ctx, rec):
        base = self.store.get("alti_profile_data", rec.feature_id)
        line = self.store.get("alti_line", base.attributes["line_id"])
        new_line = auxctl.interpret_profile(rec.new.geometry, line.geometry,
                                            base.attributes["z_min"])
        ctx.update("alti_line", line.id, geometry=new_line)
        rec.new = self.store.get("alti_profile_data", base.id)

    # ----------------------------------------------------------- collab

    def _round_extent(self, ctx, rec):
        poly: Polygon = rec.new.geometry
        xs = [p.x for p in poly.exterior]
        ys = [p.y for p in poly.exterior]
        rounded = collab.round_extent(min(xs), min(ys), max(xs), max(ys))
        rec.new = Feature(rec.new.id, rounded, dict(rec.new.attributes))

    def _extent_inserted(self, ctx, rec):
        extent = rec.new
        sh = extent.geometry.to_shapely()
        for cell in self.store.features("hex_grid"):
            hx = cell.geometry.to_shapely()
            if cell.attributes["status"] == "todo" and sh.covers(hx):
                ctx.update("hex_grid", cell.id, attrs={"status": "done"})
        prev = None
        for f in self.store.features("screen_extent"):
            if f.id == extent.id or f.attributes["user_id"] != extent.attributes["user_id"]:
                continue
            if f.attributes["t"] <= extent.attributes["t"]:
                if prev is None or f.attributes["t"] > prev.attributes["t"]:
                    prev = f
        if prev is not None:
            duration = min(extent.attributes["t"] - prev.attributes["t"],
                           collab.EXTENT_DURATION_CAP_MS)
            psh = prev.geometry.to_shapely()
            for cell in self.store.features("hex_grid"):
                if psh.intersects(cell.geometry.to_shapely()):
                    ctx.update("hex_grid", cell.id, attrs={
                        "cumulated_ms": cell.attributes["cumulated_ms"] + duration})

    def _work_area_guard(self, ctx, rec):
        size = rec.new.attributes.get("size")
        if size is not None and size <= 0:
            raise OutOfRange("hexagon size must be positive")

    def _hex_size(self) -> float:
        sizes = [f.attributes.get("size") for f in self.store.features("work_area")]
        sizes = [s for s in sizes if s]
        return max(sizes) if sizes else self.config.hex_size_m

    def _finalize_hex_grid(self, ctx) -> bool:
        if not ctx.dirty.pop("hexgrid", None):
            return False
        size = self._hex_size()
        desired: Set[Tuple[int, int]] = set()
        for area in self.store.features("work_area"):
            desired.update(collab.cells_covering(area.geometry, size))
        existing = {(f.attributes["q"], f.attributes["r"]): f
                    for f in self.store.features("hex_grid")}
        old_done = [f for f in existing.values() if f.attributes["status"] == "done"]
        size_changed = any(
            abs(f.geometry.exterior[0].dist(f.geometry.exterior[3]) - 2 * size) > 1e-9
            for f in existing.values()
        )
        if size_changed:
            for f in list(existing.values()):
                ctx.delete("hex_grid", f.id)
            existing = {}
        for qr, f in list(existing.items()):
            if qr not in desired:
                ctx.delete("hex_grid", f.id)
                del existing[qr]
        for qr in sorted(desired - set(existing)):
            center = collab.hex_center(qr[0], qr[1], size)
            status, cumulated = "todo", 0
            for f in old_done:
                if f.geometry.contains_point(center):
                    status, cumulated = "done", f.attributes["cumulated_ms"]
                    break
            ctx.insert("hex_grid", collab.hex_polygon(qr[0], qr[1], size), {
                "q": qr[0], "r": qr[1], "status": status, "cumulated_ms": cumulated})
        return True

    def _conflict_read(self) -> List[Feature]:
        extents = [
            collab.Extent(f.attributes["user_id"], f.attributes["t"], f.geometry,
                          f.attributes["scale"])
            for f in self.store.features("screen_extent")
        ]
        hits = collab.detect_conflicts(extents, self.config.conflict_window_ms)
        return [
            Feature(i, None, {
                "kind": h.kind, "user_a": h.user_a, "user_b": h.user_b,
                "t_a": h.t_a, "t_b": h.t_b, "overlap_area": h.overlap_area})
            for i, h in enumerate(hits)
        ]

    # ----------------------------------------------------- regeneration

    def _finalize_regen(self, ctx) -> bool:
        edges = ctx.dirty.pop("edge", set())
        nodes = ctx.dirty.pop("node", set())
        if not edges and not nodes:
            return False
        before = len(ctx.committed)
        edge_map = {e.id: e for e in self._edges()}
        node_ids = {n.id for n in self._nodes()}
        edges = {e for e in edges if e in edge_map}
        nodes = {n for n in nodes if n in node_ids}
        for eid in edges:
            nodes.update({edge_map[eid].attributes["start_node"],
                          edge_map[eid].attributes["end_node"]})
        nodes &= node_ids
        for n in nodes:
            edges.update(e.id for e in self._incident_edges(n))
        for n in sorted(nodes):
            self._regen_node_limits(ctx, n)
        for e in sorted(edges):
            self._regen_section(ctx, edge_map[e])
        for n in sorted(nodes):
            self._regen_intersection(ctx, n)
        for e in sorted(edges):
            self._regen_lanes(ctx, edge_map[e])
        for n in sorted(nodes):
            self._regen_interconnections(ctx, n)
        for e in sorted(edges):
            edge = self.store.get("edge", e)
            self._resync_objects(ctx, edge)
            self._resync_crossings(ctx, edge)
        return len(ctx.committed) > before

    def _limit_record(self, edge_id: int, node_id: int) -> Optional[Feature]:
        hits = [f for f in self.store.features("intersection_limit")
                if f.attributes["edge_id"] == edge_id
                and f.attributes["node_id"] == node_id]
        return hits[0] if hits else None

    def _regen_node_limits(self, ctx, node_id: int):
        incident = self._incident_edges(node_id)
        r = self.config.default_radius_m
        for edge in incident:
            axis = self._axis_from_node(edge, node_id)
            rec = self._limit_record(edge.id, node_id)
            if rec is not None and rec.attributes["overridden"]:
                s = generation.clamp_limit(rec.attributes["s"], axis.length)
            else:
                adjacent = [
                    (self._axis_from_node(o, node_id), o.attributes["width"])
                    for o in incident if o.id != edge.id
                ]
                s = generation.default_limit(axis, edge.attributes["width"],
                                             adjacent, r)
            p, _ = point_at(axis, s)
            over = rec.attributes["overridden"] if rec is not None else False
            ctx.upsert_by("intersection_limit",
                          {"edge_id": edge.id, "node_id": node_id}, p,
                          {"s": s, "overridden": over})

    def _incidences(self, node_id: int) -> List[generation.Incidence]:
        out = []
        for edge in self._incident_edges(node_id):
            rec = self._limit_record(edge.id, node_id)
            s = rec.attributes["s"] if rec else generation.LIMIT_EPSILON
            out.append(generation.Incidence(
                edge.id, self._axis_from_node(edge, node_id),
                edge.attributes["width"], s))
        return out

    def _regen_section(self, ctx, edge: Feature):
        axis: Polyline = edge.geometry
        start = self._limit_record(edge.id, edge.attributes["start_node"])
        end = self._limit_record(edge.id, edge.attributes["end_node"])
        s0 = start.attributes["s"] if start else generation.LIMIT_EPSILON
        s1 = end.attributes["s"] if end else generation.LIMIT_EPSILON
        try:
            poly = generation.section_polygon(axis, edge.attributes["width"], s0, s1)
        except DegenerateSection as exc:
            ctx.warn(f"edge {edge.id}: {exc}")
            for f in ctx.find_by("section_surface", {"edge_id": edge.id}):
                ctx.delete("section_surface", f.id)
            return
        ctx.upsert_by("section_surface", {"edge_id": edge.id}, poly, {})

    def _regen_intersection(self, ctx, node_id: int):
        incidences = self._incidences(node_id)
        if len(incidences) < 2:
            for f in ctx.find_by("intersection_surface", {"node_id": node_id}):
                ctx.delete("intersection_surface", f.id)
            for f in ctx.find_by("corner_radius", {"node_id": node_id}):
                ctx.delete("corner_radius", f.id)
            return
        pairs = {tuple(sorted(p)) for p in generation.corner_pairs(incidences)}
        radii = {}
        for f in ctx.find_by("corner_radius", {"node_id": node_id}):
            key = tuple(sorted((f.attributes["edge_a"], f.attributes["edge_b"])))
            if key not in pairs:
                ctx.delete("corner_radius", f.id)
                continue
            radii[key] = f.attributes["r"] if f.attributes["overridden"] else None
        for key in pairs:
            if radii.get(key) is None:
                radii[key] = self.config.default_radius_m
        poly, corners, warnings = generation.intersection_surface(
            incidences, radii, self.config.arc_step_deg)
        for w in warnings:
            ctx.warn(f"node {node_id}: {w}")
        ctx.upsert_by("intersection_surface", {"node_id": node_id}, poly, {})
        for corner in corners:
            key = tuple(sorted((corner.edge_a, corner.edge_b)))
            existing = [
                f for f in ctx.find_by("corner_radius", {"node_id": node_id})
                if tuple(sorted((f.attributes["edge_a"], f.attributes["edge_b"]))) == key
            ]
            over = existing[0].attributes["overridden"] if existing else False
            center = corner.center or self.store.get("node", node_id).geometry
            ctx.upsert_by("corner_radius",
                          {"node_id": node_id, "edge_a": key[0], "edge_b": key[1]},
                          center,
                          {"r": radii[key] if over else self.config.default_radius_m,
                           "overridden": over})

    def _regen_lanes(self, ctx, edge: Feature):
        axis: Polyline = edge.geometry
        count = edge.attributes["lane_count"]
        width = edge.attributes["width"]
        start = self._limit_record(edge.id, edge.attributes["start_node"])
        end = self._limit_record(edge.id, edge.attributes["end_node"])
        s0 = start.attributes["s"] if start else generation.LIMIT_EPSILON
        s1 = end.attributes["s"] if end else generation.LIMIT_EPSILON
        offsets = traffic.lane_offsets(width, count)
        for f in ctx.find_by("lane", {"edge_id": edge.id}):
            if f.attributes["index"] >= count:
                ctx.delete("lane", f.id)
        for f in ctx.find_by("lane_override", {"edge_id": edge.id}):
            if f.attributes["index"] >= count:
                ctx.delete("lane_override", f.id)
        for i, d in enumerate(offsets):
            try:
                geom = traffic.lane_geometry(axis, d, s0, s1)
            except DegenerateSection as exc:
                ctx.warn(f"edge {edge.id} lane {i}: {exc}")
                continue
            ctx.upsert_by("lane", {"edge_id": edge.id, "index": i}, geom, {
                "direction": traffic.default_direction(
                    d, self.config.right_hand_traffic)})

    def _lane_ends(self, node_id: int) -> Tuple[List[traffic.LaneEnd], List[traffic.LaneEnd]]:
        incoming, outgoing = [], []
        for edge in self._incident_edges(node_id):
            at_end = edge.attributes["end_node"] == node_id
            for lane in self.merged_lanes(edge.id):
                geom: Polyline = lane.geometry
                direction = lane.attributes["direction"]
                forward = direction == traffic.FORWARD
                end = traffic.LaneEnd(
                    edge.id, lane.attributes["index"],
                    geom.vertices[-1] if at_end else geom.vertices[0],
                    self._travel_heading(geom, at_end, forward))
                if forward == at_end:
                    incoming.append(end)
                else:
                    outgoing.append(end)
        return incoming, outgoing

    @staticmethod
    def _travel_heading(geom: Polyline, at_end: bool, forward: bool) -> float:
        if at_end:
            a, b = geom.vertices[-2], geom.vertices[-1]
            theta = math.atan2(b.y - a.y, b.x - a.x)
            return theta if forward else theta + math.pi
        a, b = geom.vertices[0], geom.vertices[1]
        theta = math.atan2(b.y - a.y, b.x - a.x)
        return theta if forward else theta + math.pi

    def _regen_interconnections(self, ctx, node_id: int):
        incoming, outgoing = self._lane_ends(node_id)
        pairs = traffic.pair_interconnections(incoming, outgoing)
        keys = set()
        for src, dst in pairs:
            key = {"node_id": node_id, "from_edge": src.edge_id,
                   "from_index": src.index, "to_edge": dst.edge_id,
                   "to_index": dst.index}
            keys.add(tuple(key.values()))
            controls = traffic.default_bezier_controls(src, dst)
            ctx.upsert_by("interconnection", key,
                          traffic.discretize_bezier(controls), {
                              "allowed": True,
                              "controls": traffic.controls_to_json(controls)})
        for layer in ("interconnection", "interconnection_override"):
            for f in ctx.find_by(layer, {"node_id": node_id}):
                k = (node_id, f.attributes["from_edge"], f.attributes["from_index"],
                     f.attributes["to_edge"], f.attributes["to_index"])
                if k not in keys:
                    ctx.delete(layer, f.id)

    # -------------------------------------------------------- invariants

    def check(self) -> List[str]:
        """Store-wide invariant sweeps; returns human-readable violations."""
        problems: List[str] = []
        problems += self._check_topology()
        problems += self._check_controllers()
        problems += self._check_objects()
        problems += self._check_references()
        return problems

    def _check_topology(self) -> List[str]:
        out = []
        edges = self._edges()
        node_map = {n.id: n for n in self._nodes()}
        for e in edges:
            for end, key in ((e.geometry.vertices[0], "start_node"),
                             (e.geometry.vertices[-1], "end_node")):
                node = node_map.get(e.attributes[key])
                if node is None:
                    out.append(f"edge {e.id}: missing {key}")
                elif node.geometry.dist(end) > 1e-9:
                    out.append(f"edge {e.id}: endpoint detached from {key}")
            if e.attributes["width"] <= 0:
                out.append(f"edge {e.id}: non-positive width")
        for i, a in enumerate(edges):
            for b in edges[i + 1:]:
                if segments_cross(a.geometry, b.geometry):
                    out.append(f"edges {a.id}/{b.id}: interiors cross")
        return out

    def _check_controllers(self) -> List[str]:
        out = []
        for f in self.store.features("intersection_limit"):
            edge = self.store.get("edge", f.attributes["edge_id"])
            if edge is None:
                out.append(f"limit {f.id}: dangling edge reference")
                continue
            axis = self._axis_from_node(edge, f.attributes["node_id"])
            p, _ = point_at(axis, f.attributes["s"])
            if p.dist(f.geometry) > 1e-9:
                out.append(f"limit {f.id}: controller point incoherent")
            if not f.attributes["overridden"]:
                node_id = f.attributes["node_id"]
                incident = self._incident_edges(node_id)
                adjacent = [(self._axis_from_node(o, node_id), o.attributes["width"])
                            for o in incident if o.id != edge.id]
                want = generation.default_limit(
                    axis, edge.attributes["width"], adjacent,
                    self.config.default_radius_m)
                if abs(want - f.attributes["s"]) > 1e-9:
                    out.append(f"limit {f.id}: stale default abscissa")
        return out

    def _check_objects(self) -> List[str]:
        out = []
        for obj in self.store.features("street_object"):
            a = obj.attributes
            if a["position_mode"] == objects.MODE_ABSOLUTE:
                if a["ref_edge"] is not None:
                    out.append(f"object {obj.id}: absolute mode with a reference")
                continue
            edge = self.store.get("edge", a["ref_edge"])
            if edge is None:
                out.append(f"object {obj.id}: dangling axis reference")
                continue
            p, tangent = objects.to_absolute(
                edge.geometry, a["s"], a["d"], a["side"] or 1,
                a["position_mode"], edge.attributes["width"])
            if p.dist(obj.geometry) > 1e-9:
                out.append(f"object {obj.id}: absolute point incoherent")
            if a["orientation_mode"] == "relative":
                want = objects.wrap_angle(tangent + (a["theta_rel"] or 0.0))
                if abs(objects.wrap_angle(want - a["theta_abs"])) > 1e-9:
                    out.append(f"object {obj.id}: orientation incoherent")
        return out

    def _check_references(self) -> List[str]:
        out = []
        edge_ids = {e.id for e in self._edges()}
        node_ids = {n.id for n in self._nodes()}
        refs = {
            "intersection_limit": [("edge_id", edge_ids), ("node_id", node_ids)],
            "corner_radius": [("node_id", node_ids), ("edge_a", edge_ids),
                              ("edge_b", edge_ids)],
            "section_surface": [("edge_id", edge_ids)],
            "intersection_surface": [("node_id", node_ids)],
            "lane": [("edge_id", edge_ids)],
            "lane_override": [("edge_id", edge_ids)],
            "interconnection": [("node_id", node_ids), ("from_edge", edge_ids),
                                ("to_edge", edge_ids)],
            "interconnection_override": [("node_id", node_ids),
                                         ("from_edge", edge_ids),
                                         ("to_edge", edge_ids)],
            "pedestrian_crossing": [("ref_edge", edge_ids)],
        }
        for layer, cols in refs.items():
            for f in self.store.features(layer):
                for col, valid in cols:
                    v = f.attributes.get(col)
                    if v is not None and v not in valid:
                        out.append(f"{layer} {f.id}: dangling {col}={v}")
        return out

    def stats(self) -> dict:
        cells = self.store.features("hex_grid")
        done = [c for c in cells if c.attributes["status"] == "done"]
        return {
            "cells": len(cells),
            "todo": len(cells) - len(done),
            "done": len(done),
            "cumulated_ms": sum(c.attributes["cumulated_ms"] for c in cells),
        }
