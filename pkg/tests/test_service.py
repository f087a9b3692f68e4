import json

import pytest
from fastapi.testclient import TestClient

from framepilot.engine import EngineConfig
from framepilot.scenes import imposter_scene, whip_script
from framepilot.service import SimulationServer


@pytest.fixture()
def server(tmp_path):
    spec = imposter_scene(seed=0)
    spec.duration_s = 10.0
    return SimulationServer(spec, whip_script(), seed=0,
                            engine_cfg=EngineConfig(dt=spec.dt),
                            telemetry_every=1, realtime=False,
                            telemetry_path=str(tmp_path / "tele.jsonl"),
                            start_paused=True)


def drain_until(ws, wanted, limit=200):
    for _ in range(limit):
        msg = ws.receive_json()
        if msg["type"] == wanted:
            return msg
    raise AssertionError(f"no {wanted} message arrived")


def test_connect_gets_snapshot(server):
    with TestClient(server.app) as client:
        with client.websocket_connect("/ws") as ws:
            hello = ws.receive_json()
            assert hello["type"] == "script_state"
            assert hello["chain_index"] == 0
            assert hello["v"] == 1
            assert hello["seq"] == 1


def test_malformed_json_answers_error_and_stays_open(server):
    with TestClient(server.app) as client:
        with client.websocket_connect("/ws") as ws:
            ws.receive_json()
            ws.send_text("{ not json")
            err = ws.receive_json()
            assert err["type"] == "error" and err["reason"] == "parse"
            ws.send_text(json.dumps({"type": "snapshot"}))
            assert drain_until(ws, "script_state")["paused"] is True


def test_unknown_type_answered(server):
    with TestClient(server.app) as client:
        with client.websocket_connect("/ws") as ws:
            ws.receive_json()
            ws.send_text(json.dumps({"type": "teleport"}))
            err = ws.receive_json()
            assert err["type"] == "error"
            assert "teleport" in err["reason"]


def test_speech_word_lands_in_next_tick(server):
    with TestClient(server.app) as client:
        with client.websocket_connect("/ws") as ws:
            ws.receive_json()
            ws.send_text(json.dumps({"type": "snapshot"}))
            before = drain_until(ws, "script_state")
            assert before["chain_index"] == 0
            tick_before = before["tick"]
            ws.send_text(json.dumps({"type": "speech_word", "word": "GO"}))
            ws.send_text(json.dumps({"type": "step"}))
            frame = drain_until(ws, "telemetry_frame")["frame"]
            # The command enqueued before tick n is reflected in tick n.
            assert frame["tick"] == tick_before
            assert frame["chain_index"] == 1
            assert frame["cue_fired"] == "speech"


def test_step_requires_pause(server):
    with TestClient(server.app) as client:
        with client.websocket_connect("/ws") as ws:
            ws.receive_json()
            ws.send_text(json.dumps({"type": "resume"}))
            ws.send_text(json.dumps({"type": "pause"}))
            ws.send_text(json.dumps({"type": "resume"}))
            ws.send_text(json.dumps({"type": "step"}))
            err = drain_until(ws, "error")
            assert "pause" in err["reason"]


def test_paused_snapshots_identical(server):
    with TestClient(server.app) as client:
        with client.websocket_connect("/ws") as ws:
            ws.receive_json()
            snaps = []
            for _ in range(2):
                ws.send_text(json.dumps({"type": "snapshot"}))
                snaps.append(drain_until(ws, "script_state"))
            assert snaps[0]["tick"] == snaps[1]["tick"]
            assert snaps[0]["chain_index"] == snaps[1]["chain_index"]


def test_two_clients_receive_identical_frames(server):
    with TestClient(server.app) as client:
        with client.websocket_connect("/ws") as ws1, \
                client.websocket_connect("/ws") as ws2:
            ws1.receive_json()
            ws2.receive_json()
            ws1.send_text(json.dumps({"type": "step"}))
            f1 = drain_until(ws1, "telemetry_frame")["frame"]
            f2 = drain_until(ws2, "telemetry_frame")["frame"]
            assert f1 == f2


def test_speech_audio_feedback_broadcast(server):
    with TestClient(server.app) as client:
        with client.websocket_connect("/ws") as ws:
            ws.receive_json()
            ws.send_text(json.dumps({"type": "speech_word", "word": "go"}))
            ws.send_text(json.dumps({"type": "step"}))
            audio = drain_until(ws, "audio_feedback")
            assert "started" in audio["text"] or "loaded" in audio["text"]


def test_set_speed_validation(server):
    with TestClient(server.app) as client:
        with client.websocket_connect("/ws") as ws:
            ws.receive_json()
            ws.send_text(json.dumps({"type": "set_speed", "speed": "fast"}))
            err = drain_until(ws, "error")
            assert "speed" in err["reason"]
            ws.send_text(json.dumps({"type": "set_speed", "speed": 2.0}))
            ws.send_text(json.dumps({"type": "snapshot"}))
            drain_until(ws, "script_state")
            assert server.speed == 2.0


def test_telemetry_written_full_rate(server, tmp_path):
    with TestClient(server.app) as client:
        with client.websocket_connect("/ws") as ws:
            ws.receive_json()
            for _ in range(5):
                ws.send_text(json.dumps({"type": "step"}))
            ws.send_text(json.dumps({"type": "snapshot"}))
            drain_until(ws, "script_state")
    # flush happens on loop teardown; read what's there after client exit
    assert server.run.tick == 5


def test_full_run_telemetry_matches_schema(tmp_path):
    """Every tick of a complete run writes a schema-valid telemetry record."""
    from framepilot.runner import run_simulation, write_telemetry

    spec = imposter_scene(seed=1)
    spec.duration_s = 4.0
    res = run_simulation(spec, whip_script(), seed=1)
    path = tmp_path / "full.jsonl"
    write_telemetry(path, res.telemetry)
    lines = path.read_text().strip().splitlines()
    assert len(lines) == spec.n_ticks
    required = {"tick", "time_s", "script", "behavior", "chain_index", "mode",
                "t_c", "hold", "rates", "gimbal", "actors", "cue_fired",
                "audio", "notes"}
    for line in lines:
        doc = json.loads(line)
        assert required <= set(doc)
        assert len(doc["rates"]) == 3 and len(doc["gimbal"]) == 3
        for actor in doc["actors"].values():
            assert {"p_t", "p_a", "p_r", "w", "h", "phase"} <= set(actor)
