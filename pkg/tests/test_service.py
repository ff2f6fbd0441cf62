import pytest
from fastapi.testclient import TestClient

from roadlab.cli import build_parser, main
from roadlab.config import Config
from roadlab.engine import Engine
from roadlab.service import create_app


@pytest.fixture
def client():
    return TestClient(create_app(Engine(Config())))


def feature(geometry, properties=None):
    return {"type": "Feature", "geometry": geometry, "properties": properties or {}}


def point(x, y):
    return {"type": "Point", "coordinates": [x, y]}


def line(*pts):
    return {"type": "LineString", "coordinates": [list(p) for p in pts]}


def make_session(client, user="alice"):
    r = client.post("/sessions", json={"user_id": user})
    assert r.status_code == 201
    return {"X-Session": r.json()["session"]}


def build_road(client, headers):
    for xy in [(0, 0), (100, 0)]:
        r = client.post("/layers/edit_node/features",
                        json=feature(point(*xy)), headers=headers)
        assert r.status_code == 201
    r = client.post("/layers/edit_edge/features",
                    json=feature(line((0, 0), (100, 0))), headers=headers)
    assert r.status_code == 201
    return r.json()


def test_layer_listing(client):
    names = client.get("/layers").json()["layers"]
    assert "edge" in names and "edit_node" in names and "conflicts" in names


def test_feature_crud_and_cascade(client):
    headers = make_session(client)
    edge = build_road(client, headers)
    assert edge["properties"]["width"] == 8.0
    feats = client.get("/layers/section_surface/features").json()["features"]
    assert len(feats) == 1  # cascade generated the surface
    edge_id = edge["id"]
    r = client.put(f"/layers/edit_edge/features/{edge_id}",
                   json=feature(line((0, 0), (100, 0)), {"width": 12.0}),
                   headers=headers)
    assert r.status_code == 200
    assert client.get("/layers/edge/features").json()["features"][0][
        "properties"]["width"] == 12.0
    r = client.delete(f"/layers/edit_edge/features/{edge_id}", headers=headers)
    assert r.status_code == 204
    assert client.get("/layers/edge/features").json()["features"] == []


def test_bbox_query(client):
    headers = make_session(client)
    build_road(client, headers)
    feats = client.get("/layers/node/features?bbox=-1,-1,1,1").json()["features"]
    assert len(feats) == 1


def test_error_body_shape(client):
    r = client.get("/layers/nope/features")
    assert r.status_code == 404
    body = r.json()
    assert body["code"] == "NotFound" and "message" in body
    headers = make_session(client)
    r = client.post("/layers/edit_edge/features",
                    json=feature(line((0, 0), (5, 5))), headers=headers)
    assert r.status_code == 400
    assert r.json()["code"] == "AmbiguousEdit"
    assert r.json()["layer"] == "edit_edge"


def test_origin_tagging_and_changes_poll(client):
    headers = make_session(client, "carol")
    build_road(client, headers)
    events = client.get("/changes?since=0").json()["events"]
    origins = {e["origin"] for e in events}
    assert any(o.startswith("carol@") for o in origins)
    assert "system" in origins  # cascaded regeneration events
    last = client.get("/changes?since=0").json()["last_seq"]
    assert client.get(f"/changes?since={last}").json()["events"] == []


def test_changes_matches_feed_replay(client):
    headers = make_session(client)
    build_road(client, headers)
    polled = client.get("/changes?since=0").json()["events"]
    with client.websocket_connect("/feed?since=0") as ws:
        streamed = [ws.receive_json() for _ in polled]
    assert streamed == polled


def test_extents_and_conflicts(client):
    alice = make_session(client, "alice")
    bob = make_session(client, "bob")
    r = client.post("/extents", json={"rect": [0, 0, 100, 100], "t": 1000,
                                      "scale": 100.0}, headers=alice)
    assert r.json()["recorded"] is True
    client.post("/extents", json={"rect": [50, 50, 150, 150], "t": 60_000,
                                  "scale": 100.0}, headers=bob)
    hits = client.get("/conflicts").json()["conflicts"]
    assert len(hits) == 1 and hits[0]["kind"] == "concurrent"


def test_extent_scale_band(client):
    app_engine = client.app.state.engine
    app_engine.config.max_scale = 100.0
    headers = make_session(client)
    r = client.post("/extents", json={"rect": [0, 0, 1, 1], "scale": 1e6},
                    headers=headers)
    assert r.json()["recorded"] is False


# ----------------------------------------------------------------- CLI


def test_cli_unknown_command_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        build_parser().parse_args(["frobnicate"])
    assert exc.value.code == 2


def test_cli_generate_check_stats(tmp_path, capsys):
    import subprocess
    import sys
    from pathlib import Path

    script = Path(__file__).resolve().parent.parent / "scripts" / "make_demo_project.py"
    proj = tmp_path / "demo"
    subprocess.run([sys.executable, str(script), "--out", str(proj)], check=True)
    assert main(["generate", "--project", str(proj)]) == 0
    assert main(["check", "--project", str(proj)]) == 0
    assert main(["stats", "--project", str(proj)]) == 0
    out = capsys.readouterr().out
    assert "ok" in out and "cells" in out
