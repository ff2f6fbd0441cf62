"""Engine configuration, persisted inside the project manifest."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields


@dataclass
class Config:
    snap_tolerance_m: float = 0.5
    trigger_depth_limit: int = 16
    default_width_m: float = 8.0
    default_radius_m: float = 5.0
    default_lane_count: int = 2
    conflict_window_ms: int = 300_000
    hex_size_m: float = 20.0
    min_scale: float = 1.0
    max_scale: float = 10_000.0
    right_hand_traffic: bool = True
    miter_limit: float = 4.0
    arc_step_deg: float = 10.0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "Config":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in known})

    @classmethod
    def from_file(cls, path) -> "Config":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))
