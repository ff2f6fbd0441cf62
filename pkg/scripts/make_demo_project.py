#!/usr/bin/env python3
"""Build the bundled demo project: a 5x6 street grid (49 edges) with a
work area, a few street objects and a pedestrian crossing."""
import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from roadlab.engine import Engine  # noqa: E402
from roadlab.geom import Point, Polygon, Polyline  # noqa: E402

COLS, ROWS, SPACING = 5, 6, 100.0


def build() -> Engine:
    eng = Engine()
    for col in range(COLS):
        for row in range(ROWS):
            eng.insert_feature("edit_node", Point(col * SPACING, row * SPACING),
                               {}, "demo")
    for col in range(COLS):
        for row in range(ROWS):
            x, y = col * SPACING, row * SPACING
            if col + 1 < COLS:
                eng.insert_feature("edit_edge", Polyline(
                    [Point(x, y), Point(x + SPACING, y)]), {}, "demo")
            if row + 1 < ROWS:
                eng.insert_feature("edit_edge", Polyline(
                    [Point(x, y), Point(x, y + SPACING)]), {}, "demo")
    eng.insert_feature("work_area", Polygon([
        Point(-50, -50), Point(450, -50), Point(450, 550),
        Point(-50, 550), Point(-50, -50)]), {"size": None}, "demo")
    for i, (x, y) in enumerate([(50, 6), (150, 106), (250, 206)]):
        eng.insert_feature("edit_object", Point(x, y), {
            "obj_class": "lamp", "position_mode": "relative-to-sidewalk",
            "orientation_mode": "relative", "theta_abs": 0.0, "theta_rel": 0.0,
        }, "demo")
    eng.insert_feature("edit_pedestrian_crossing", Polygon([
        Point(48, -3), Point(52, -3), Point(52, 3), Point(48, 3),
        Point(48, -3)]), {}, "demo")
    return eng


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="demo_project")
    args = parser.parse_args()
    eng = build()
    problems = eng.check()
    if problems:
        for p in problems:
            print(p, file=sys.stderr)
        return 1
    eng.save(args.out)
    print(f"wrote {args.out}: {len(eng.store.features('edge'))} edges, "
          f"{len(eng.store.features('hex_grid'))} hex cells")
    return 0


if __name__ == "__main__":
    sys.exit(main())
