"""Trigger machinery: before/after triggers, recursion guard, proxy views
and override-merge views.

A record addressed to a plain layer runs its before-triggers (priority
order), is applied, then runs its after-triggers, which may cascade more
records; every cascaded record re-enters dispatch one level deeper and
the guard aborts the whole change set past the depth limit.  A record
addressed to a proxy view is handed to the view's handler instead; the
handler writes to the base layer, so system writes to the base never
re-enter the handler.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

from .errors import Conflict, CyclicTriggerError, Misconfigured, Unsupported
from .store import ChangeRecord, Feature, Store, SYSTEM_ORIGIN

_UNCHANGED = object()


@dataclass(frozen=True)
class TriggerSpec:
    layer: str
    name: str
    timing: str  # "before" | "after"
    events: frozenset  # subset of {"insert", "update", "delete"}
    handler: Callable  # (ctx, record) -> None
    priority: int = 0


@dataclass
class ProxyView:
    """Editable view: reads delegate to the base, edits go through handlers."""

    name: str
    base_layer: str
    projection: Optional[Sequence[str]] = None
    handlers: Dict[str, Callable] = field(default_factory=dict)
    reader: Optional[Callable[[], List[Feature]]] = None


@dataclass(frozen=True)
class OverrideBinding:
    name: str
    auto_layer: str
    override_layer: str
    key_columns: Sequence[str]
    overridable_columns: Sequence[str]  # attribute names, plus "geometry"


class GuardState:
    def __init__(self, limit: int = 16):
        self.limit = limit
        self.depth = 0


class DispatchContext:
    """Store access handed to trigger handlers during one change set."""

    def __init__(self, engine: "TriggerEngine", store: Store, guard: GuardState,
                 committed: List[ChangeRecord], origin: str):
        self.engine = engine
        self.store = store
        self.guard = guard
        self.committed = committed
        self.origin = origin  # origin of the top-level change set
        self.depth = 0
        self.dirty = defaultdict(set)  # scratch buckets consumed by finalizers
        self.warnings: List[str] = []

    # -------------------------------------------------- cascade helpers

    def _dispatch(self, rec: ChangeRecord):
        self.engine.dispatch(self, rec, self.depth + 1)
        return rec

    def insert(self, layer: str, geometry, attrs: dict, origin: str = SYSTEM_ORIGIN,
               fid: Optional[int] = None) -> Feature:
        rec = ChangeRecord("insert", layer, new=Feature(fid, geometry, dict(attrs)),
                           origin=origin)
        return self._dispatch(rec).new

    def update(self, layer: str, fid: int, geometry=_UNCHANGED, attrs: Optional[dict] = None,
               origin: str = SYSTEM_ORIGIN, only_if_changed: bool = True) -> Feature:
        stored = self.store.get(layer, fid)
        new_geom = stored.geometry if geometry is _UNCHANGED else geometry
        new_attrs = dict(stored.attributes)
        new_attrs.update(attrs or {})
        new = Feature(fid, new_geom, new_attrs)
        if only_if_changed and new.same_payload(stored):
            return stored
        rec = ChangeRecord("update", layer, feature_id=fid, new=new, origin=origin)
        return self._dispatch(rec).new

    def delete(self, layer: str, fid: int, origin: str = SYSTEM_ORIGIN):
        self._dispatch(ChangeRecord("delete", layer, feature_id=fid, origin=origin))

    def upsert_by(self, layer: str, key: dict, geometry, attrs: dict,
                  origin: str = SYSTEM_ORIGIN) -> Feature:
        for f in self.store.features(layer):
            if all(f.attributes.get(k) == v for k, v in key.items()):
                return self.update(layer, f.id, geometry, {**key, **attrs}, origin)
        return self.insert(layer, geometry, {**key, **attrs}, origin)

    def find_by(self, layer: str, key: dict) -> List[Feature]:
        return [
            f for f in self.store.features(layer)
            if all(f.attributes.get(k) == v for k, v in key.items())
        ]

    def warn(self, message: str):
        self.warnings.append(message)


class TriggerEngine:
    def __init__(self, depth_limit: int = 16):
        self.depth_limit = depth_limit
        self.triggers: Dict[str, List[TriggerSpec]] = defaultdict(list)
        self.views: Dict[str, ProxyView] = {}
        self.bindings: Dict[str, OverrideBinding] = {}
        # finalizers run once per change set, after the top-level records;
        # each returns True when it did work, and they loop to fixpoint
        self.finalizers: List[tuple] = []
        self.last_warnings: List[str] = []

    # ---------------------------------------------------- registration

    def register_trigger(self, spec: TriggerSpec):
        if any(t.name == spec.name for t in self.triggers[spec.layer]):
            raise Conflict(f"trigger {spec.name!r} already registered on {spec.layer!r}")
        self.triggers[spec.layer].append(spec)
        self.triggers[spec.layer].sort(key=lambda t: (t.priority, t.name))

    def register_proxy_view(self, view: ProxyView, store: Store):
        if view.name in self.views:
            raise Conflict(f"view {view.name!r} already registered")
        store.layer(view.base_layer)  # must exist
        self.views[view.name] = view
        reader = view.reader or (lambda: _projected(store, view))
        store.register_virtual(view.name, reader)

    def register_binding(self, binding: OverrideBinding, store: Store) -> Callable:
        auto = store.layer(binding.auto_layer).schema
        over = store.layer(binding.override_layer).schema
        for col in binding.key_columns:
            if col not in auto.attributes or col not in over.attributes:
                raise Misconfigured(
                    f"binding {binding.name!r}: key column {col!r} missing from a layer"
                )
        for col in binding.overridable_columns:
            if col != "geometry" and col not in auto.attributes:
                raise Misconfigured(
                    f"binding {binding.name!r}: column {col!r} not in auto layer"
                )
        self.bindings[binding.name] = binding
        return lambda: merged_override_view(store, binding)

    def register_finalizer(self, name: str, fn: Callable):
        self.finalizers.append((name, fn))

    # --------------------------------------------------------- dispatch

    def run_changeset(self, store: Store, records: Sequence[ChangeRecord], origin: str,
                      committed: List[ChangeRecord], initial_dirty: Optional[dict] = None):
        guard = GuardState(self.depth_limit)
        ctx = DispatchContext(self, store, guard, committed, origin)
        for bucket, ids in (initial_dirty or {}).items():
            ctx.dirty[bucket].update(ids)
        for rec in records:
            rec.origin = origin
            self.dispatch(ctx, rec, 0)
        rounds = 0
        while True:
            did_work = False
            for _, fn in self.finalizers:
                if fn(ctx):
                    did_work = True
            if not did_work:
                break
            rounds += 1
            if rounds > guard.limit:
                raise CyclicTriggerError("finalizers did not reach a fixpoint")
        self.last_warnings = list(ctx.warnings)

    def dispatch(self, ctx: DispatchContext, rec: ChangeRecord, depth: int):
        guard = ctx.guard
        if depth > guard.limit:
            raise CyclicTriggerError(
                f"trigger cascade exceeded depth limit {guard.limit}"
            )
        prev_depth = ctx.depth
        ctx.depth = depth
        try:
            view = self.views.get(rec.layer)
            if view is not None:
                handler = view.handlers.get(rec.kind)
                if handler is None:
                    raise Unsupported(
                        f"{rec.kind} is not allowed on view {rec.layer!r}; "
                        f"allowed: {sorted(view.handlers) or 'none'}"
                    )
                handler(ctx, rec)
                ctx.committed.append(rec)
                return
            for t in self.triggers.get(rec.layer, ()):
                if t.timing == "before" and rec.kind in t.events:
                    t.handler(ctx, rec)
            ctx.store.apply_record(rec)
            ctx.committed.append(rec)
            for t in self.triggers.get(rec.layer, ()):
                if t.timing == "after" and rec.kind in t.events:
                    t.handler(ctx, rec)
        finally:
            ctx.depth = prev_depth

    def registrations(self) -> dict:
        return {
            "triggers": sorted(
                f"{layer}:{t.name}" for layer, ts in self.triggers.items() for t in ts
            ),
            "views": sorted(self.views),
            "bindings": sorted(self.bindings),
        }


def _projected(store: Store, view: ProxyView) -> List[Feature]:
    feats = store.features(view.base_layer)
    if view.projection is None:
        return feats
    keep = set(view.projection)
    return [
        Feature(f.id, f.geometry, {k: v for k, v in f.attributes.items() if k in keep})
        for f in feats
    ]


def merged_override_view(store: Store, binding: OverrideBinding) -> List[Feature]:
    """Auto layer left-joined with the override layer, column-wise
    first-non-null; one output row per auto row."""
    index = {}
    for o in store.features(binding.override_layer):
        key = tuple(o.attributes.get(k) for k in binding.key_columns)
        index[key] = o
    out = []
    for a in store.features(binding.auto_layer):
        key = tuple(a.attributes.get(k) for k in binding.key_columns)
        o = index.get(key)
        if o is None:
            out.append(a)
            continue
        geometry = a.geometry
        attrs = dict(a.attributes)
        for col in binding.overridable_columns:
            if col == "geometry":
                if o.geometry is not None:
                    geometry = o.geometry
            else:
                v = o.attributes.get(col)
                if v is not None:
                    attrs[col] = v
        out.append(Feature(a.id, geometry, attrs))
    return out
