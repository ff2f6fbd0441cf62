"""Typed vector layers with atomic change sets and GeoJSON persistence.

The store is the "database" the triggers live in: a single serialized
writer applies change sets all-or-nothing, readers see committed state
only, and every committed record lands on a gapless change feed.
"""
from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .errors import (
    ConcurrentModification,
    Conflict,
    NotFound,
    ParseError,
    SchemaViolation,
)
from .geom import Point, Polygon, Polyline

GEOMETRY_KINDS = ("point", "polyline", "polygon", "none")
ATTR_TYPES = ("integer", "real", "text", "boolean", "timestamp")

SYSTEM_ORIGIN = "system"


@dataclass(frozen=True)
class AttrDef:
    type: str
    nullable: bool = True

    def __post_init__(self):
        if self.type not in ATTR_TYPES:
            raise SchemaViolation(f"unknown attribute type {self.type!r}")


@dataclass(frozen=True)
class Schema:
    name: str
    geometry: str
    attributes: Dict[str, AttrDef] = field(default_factory=dict)

    def __post_init__(self):
        if self.geometry not in GEOMETRY_KINDS:
            raise SchemaViolation(f"unknown geometry kind {self.geometry!r}")


@dataclass(frozen=True)
class Feature:
    id: Optional[int]
    geometry: object  # Point | Polyline | Polygon | None, per schema
    attributes: Dict[str, object] = field(default_factory=dict)

    def get(self, name, default=None):
        return self.attributes.get(name, default)

    def same_payload(self, other: "Feature") -> bool:
        return geometry_equal(self.geometry, other.geometry) and self.attributes == other.attributes


def geometry_equal(a, b) -> bool:
    if a is None or b is None:
        return a is b
    if type(a) is not type(b):
        return False
    if isinstance(a, Point):
        return (a.x, a.y, a.z) == (b.x, b.y, b.z)
    if isinstance(a, Polyline):
        return a == b
    if isinstance(a, Polygon):
        return a.exterior_coords() == b.exterior_coords() and [
            [(p.x, p.y) for p in h] for h in a.holes
        ] == [[(p.x, p.y) for p in h] for h in b.holes]
    return a == b


@dataclass
class ChangeRecord:
    kind: str  # insert | update | delete
    layer: str
    feature_id: Optional[int] = None
    old: Optional[Feature] = None
    new: Optional[Feature] = None
    origin: str = SYSTEM_ORIGIN
    seq: Optional[int] = None

    def to_event(self) -> dict:
        ev = {
            "seq": self.seq,
            "layer": self.layer,
            "kind": self.kind,
            "feature_id": self.feature_id,
            "origin": self.origin,
        }
        if self.kind != "delete" and self.new is not None:
            ev["feature"] = feature_to_geojson(self.new)
        return ev


@dataclass
class ChangeSet:
    records: List[ChangeRecord]
    origin: str


class Layer:
    def __init__(self, schema: Schema):
        self.schema = schema
        self.features: Dict[int, Feature] = {}
        self.next_id = 1

    def allocate_id(self) -> int:
        i = self.next_id
        self.next_id += 1
        return i


def _check_value(layer: str, name: str, d: AttrDef, value):
    if value is None:
        if not d.nullable:
            raise SchemaViolation(f"{layer}.{name} is not nullable")
        return
    ok = {
        "integer": lambda v: isinstance(v, int) and not isinstance(v, bool),
        "real": lambda v: isinstance(v, (int, float)) and not isinstance(v, bool),
        "text": lambda v: isinstance(v, str),
        "boolean": lambda v: isinstance(v, bool),
        "timestamp": lambda v: isinstance(v, int) and not isinstance(v, bool),
    }[d.type]
    if not ok(value):
        raise SchemaViolation(f"{layer}.{name} expects {d.type}, got {value!r}")


def validate_feature(schema: Schema, feat: Feature):
    expect = {
        "point": Point,
        "polyline": Polyline,
        "polygon": Polygon,
        "none": type(None),
    }[schema.geometry]
    # override rows may carry a null geometry on any layer kind
    if not (isinstance(feat.geometry, expect) or feat.geometry is None):
        raise SchemaViolation(
            f"{schema.name}: geometry must be {schema.geometry}, got {type(feat.geometry).__name__}"
        )
    for name, value in feat.attributes.items():
        if name not in schema.attributes:
            raise SchemaViolation(f"{schema.name}: unknown attribute {name!r}")
        _check_value(schema.name, name, schema.attributes[name], value)
    for name, d in schema.attributes.items():
        if not d.nullable and feat.attributes.get(name) is None:
            raise SchemaViolation(f"{schema.name}.{name} is required")


class Store:
    """Layer registry plus the serialized change-set writer.

    Trigger dispatch is pluggable: ``dispatcher`` (set by the engine)
    receives every record and may cascade further ones.  Without a
    dispatcher, records apply directly.
    """

    def __init__(self):
        self.layers: Dict[str, Layer] = {}
        self.lock = threading.RLock()
        self.feed: List[ChangeRecord] = []
        self.feed_cond = threading.Condition(self.lock)
        self.next_seq = 1
        self.dispatcher = None  # triggers.TriggerEngine, optional
        self.virtual_readers: Dict[str, Callable[[], List[Feature]]] = {}

    # ---------------------------------------------------------- layers

    def create_layer(self, schema: Schema) -> Layer:
        with self.lock:
            if schema.name in self.layers or schema.name in self.virtual_readers:
                raise Conflict(f"layer {schema.name!r} already exists")
            layer = Layer(schema)
            self.layers[schema.name] = layer
            return layer

    def register_virtual(self, name: str, reader: Callable[[], List[Feature]]):
        if name in self.layers or name in self.virtual_readers:
            raise Conflict(f"layer {name!r} already exists")
        self.virtual_readers[name] = reader

    def layer(self, name: str) -> Layer:
        try:
            return self.layers[name]
        except KeyError:
            raise NotFound(f"unknown layer {name!r}") from None

    def layer_names(self) -> List[str]:
        return sorted(list(self.layers) + list(self.virtual_readers))

    def get(self, layer: str, fid: int) -> Feature:
        feat = self.layer(layer).features.get(fid)
        if feat is None:
            raise NotFound(f"{layer}#{fid} not found")
        return feat

    def features(self, layer: str) -> List[Feature]:
        if layer in self.virtual_readers:
            return self.virtual_readers[layer]()
        return [self.layer(layer).features[i] for i in sorted(self.layer(layer).features)]

    # ----------------------------------------------------------- query

    def query(self, layer: str, bbox: Optional[Tuple[float, float, float, float]] = None,
              filter: Optional[Callable[[Feature], bool]] = None) -> List[Feature]:
        with self.lock:
            feats = self.features(layer)
        out = []
        for f in feats:
            if bbox is not None and not _bbox_hits(f.geometry, bbox):
                continue
            if filter is not None and not filter(f):
                continue
            out.append(f)
        return out

    # ----------------------------------------------------------- apply

    def apply_changeset(self, records: Sequence[ChangeRecord], origin: str,
                        initial_dirty: Optional[dict] = None) -> List[ChangeRecord]:
        """Apply records (and any trigger cascades) atomically.

        Returns the committed records, sequence numbers assigned.  On any
        error the store is rolled back bit-identically and the error is
        re-raised.
        """
        with self.lock:
            snapshot = {
                name: (dict(layer.features), layer.next_id)
                for name, layer in self.layers.items()
            }
            committed: List[ChangeRecord] = []
            try:
                if self.dispatcher is not None:
                    self.dispatcher.run_changeset(self, records, origin, committed,
                                                  initial_dirty)
                else:
                    for rec in records:
                        rec.origin = origin
                        self.apply_record(rec)
                        committed.append(rec)
            except Exception:
                for name, (feats, next_id) in snapshot.items():
                    layer = self.layers[name]
                    layer.features = feats
                    layer.next_id = next_id
                # layers created mid-changeset are rolled back too
                for name in list(self.layers):
                    if name not in snapshot:
                        del self.layers[name]
                raise
            for rec in committed:
                rec.seq = self.next_seq
                self.next_seq += 1
                self.feed.append(rec)
            self.feed_cond.notify_all()
            return committed

    def apply_record(self, rec: ChangeRecord):
        """Raw single-record application (no triggers)."""
        layer = self.layer(rec.layer)
        if rec.kind == "insert":
            feat = rec.new
            if feat.id is None:
                feat = replace(feat, id=layer.allocate_id())
            elif feat.id in layer.features:
                raise Conflict(f"{rec.layer}#{feat.id} already exists")
            else:
                layer.next_id = max(layer.next_id, feat.id + 1)
            validate_feature(layer.schema, feat)
            layer.features[feat.id] = feat
            rec.new = feat
            rec.feature_id = feat.id
        elif rec.kind == "update":
            stored = layer.features.get(rec.feature_id)
            if stored is None:
                raise NotFound(f"{rec.layer}#{rec.feature_id} not found")
            if rec.old is not None and not rec.old.same_payload(stored):
                raise ConcurrentModification(f"{rec.layer}#{rec.feature_id} changed concurrently")
            feat = replace(rec.new, id=rec.feature_id)
            validate_feature(layer.schema, feat)
            rec.old = stored
            rec.new = feat
            layer.features[rec.feature_id] = feat
        elif rec.kind == "delete":
            stored = layer.features.get(rec.feature_id)
            if stored is None:
                raise NotFound(f"{rec.layer}#{rec.feature_id} not found")
            if rec.old is not None and not rec.old.same_payload(stored):
                raise ConcurrentModification(f"{rec.layer}#{rec.feature_id} changed concurrently")
            rec.old = stored
            del layer.features[rec.feature_id]
        else:
            raise SchemaViolation(f"unknown change kind {rec.kind!r}")

    # ------------------------------------------------------------ feed

    def events_since(self, seq: int) -> List[ChangeRecord]:
        with self.lock:
            return [r for r in self.feed if r.seq > seq]

    def wait_for_events(self, seq: int, timeout: float = 1.0) -> List[ChangeRecord]:
        with self.feed_cond:
            if not self.feed or self.feed[-1].seq <= seq:
                self.feed_cond.wait(timeout)
            return [r for r in self.feed if r.seq > seq]

    # ----------------------------------------------------- persistence

    def save_project(self, directory, config_dict: dict, registrations: dict):
        os.makedirs(os.path.join(directory, "layers"), exist_ok=True)
        manifest = {
            "config": config_dict,
            "layers": [
                {
                    "name": name,
                    "geometry": layer.schema.geometry,
                    "attributes": {
                        a: {"type": d.type, "nullable": d.nullable}
                        for a, d in sorted(layer.schema.attributes.items())
                    },
                    "next_id": layer.next_id,
                }
                for name, layer in sorted(self.layers.items())
            ],
            "next_seq": self.next_seq,
            **registrations,
        }
        with open(os.path.join(directory, "manifest.json"), "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        for name, layer in sorted(self.layers.items()):
            fc = {
                "type": "FeatureCollection",
                "features": [
                    feature_to_geojson(layer.features[i]) for i in sorted(layer.features)
                ],
            }
            path = os.path.join(directory, "layers", f"{name}.geojson")
            with open(path, "w") as fh:
                json.dump(fc, fh, indent=2, sort_keys=True)
                fh.write("\n")

    def load_project_features(self, directory, manifest: dict):
        """Populate layers from a saved project, bypassing triggers."""
        for spec in manifest["layers"]:
            name = spec["name"]
            if name not in self.layers:
                schema = Schema(
                    name,
                    spec["geometry"],
                    {
                        a: AttrDef(d["type"], d["nullable"])
                        for a, d in spec["attributes"].items()
                    },
                )
                self.create_layer(schema)
            layer = self.layers[name]
            path = os.path.join(directory, "layers", f"{name}.geojson")
            if not os.path.exists(path):
                continue
            try:
                with open(path) as fh:
                    fc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}: line {exc.lineno}: {exc.msg}") from None
            for gj in fc.get("features", []):
                feat = feature_from_geojson(gj, layer.schema)
                layer.features[feat.id] = feat
            layer.next_id = spec.get("next_id", max(layer.features, default=0) + 1)
        self.next_seq = manifest.get("next_seq", 1)


def load_manifest(directory) -> dict:
    path = os.path.join(directory, "manifest.json")
    if not os.path.exists(path):
        raise ParseError(f"{path}: manifest not found")
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}: {exc.msg}") from None


# ------------------------------------------------------------- geojson

def geometry_to_geojson(geometry):
    if geometry is None:
        return None
    if isinstance(geometry, Point):
        coords = [geometry.x, geometry.y]
        if geometry.z is not None:
            coords.append(geometry.z)
        return {"type": "Point", "coordinates": coords}
    if isinstance(geometry, Polyline):
        has_z = any(v.z is not None for v in geometry.vertices)
        return {
            "type": "LineString",
            "coordinates": [
                [v.x, v.y, v.z] if has_z else [v.x, v.y] for v in geometry.vertices
            ],
        }
    if isinstance(geometry, Polygon):
        rings = [[[p.x, p.y] for p in geometry.exterior]]
        rings.extend([[p.x, p.y] for p in h] for h in geometry.holes)
        return {"type": "Polygon", "coordinates": rings}
    raise ParseError(f"unsupported geometry {type(geometry).__name__}")


def geometry_from_geojson(gj):
    if gj is None:
        return None
    t = gj.get("type")
    c = gj.get("coordinates")
    if t == "Point":
        return Point(*c)
    if t == "LineString":
        return Polyline([Point(*v) for v in c])
    if t == "Polygon":
        return Polygon([Point(*v) for v in c[0]], [[Point(*v) for v in h] for h in c[1:]])
    raise ParseError(f"unsupported GeoJSON geometry {t!r}")


def feature_to_geojson(feat: Feature) -> dict:
    return {
        "type": "Feature",
        "id": feat.id,
        "geometry": geometry_to_geojson(feat.geometry),
        "properties": {k: feat.attributes[k] for k in sorted(feat.attributes)},
    }


def feature_from_geojson(gj: dict, schema: Optional[Schema] = None) -> Feature:
    feat = Feature(
        id=gj.get("id"),
        geometry=geometry_from_geojson(gj.get("geometry")),
        attributes=dict(gj.get("properties") or {}),
    )
    if schema is not None:
        validate_feature(schema, feat)
    return feat


def _bbox_hits(geometry, bbox) -> bool:
    if geometry is None:
        return False
    x1, y1, x2, y2 = bbox
    x1, x2 = min(x1, x2), max(x1, x2)
    y1, y2 = min(y1, y2), max(y1, y2)
    if isinstance(geometry, Point):
        return x1 <= geometry.x <= x2 and y1 <= geometry.y <= y2
    if isinstance(geometry, Polyline):
        verts = geometry.vertices
    else:
        verts = geometry.exterior
    gx1 = min(v.x for v in verts)
    gx2 = max(v.x for v in verts)
    gy1 = min(v.y for v in verts)
    gy2 = max(v.y for v in verts)
    return gx1 <= x2 and gx2 >= x1 and gy1 <= y2 and gy2 >= y1
