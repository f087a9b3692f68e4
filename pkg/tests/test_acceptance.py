"""Acceptance suite: one test per release criterion, each printing a
PASS line with the measured value against its pinned tolerance.

The expensive fixtures (40-seed ablation, 40-seed imposter battery) run
once per session and are shared by the criteria that read them.
"""

import json
import time
from pathlib import Path

import numpy as np
import pytest

from framepilot.cli import main
from framepilot.control import procrustes_error
from framepilot.engine import EngineConfig, ExternalEvent
from framepilot.evaluation import (render_stream, run_ablation_suite,
                                   score_tracker_run)
from framepilot.geometry import BBox, ScreenPoint, normalize
from framepilot.runner import run_simulation
from framepilot.scenes import (imposter_scene, standard_scene, standard_script,
                               walk_scene, walk_script, whip_script)
from framepilot.script import (InvalidParameter, ScriptSyntaxError, UnknownActor,
                               UnknownBehaviorKind, parse_script, serialize_script)
from framepilot.sim import GimbalPlant, PlantConfig, Scene
from framepilot.tracking import (Detection, Tracker, TrackerConfig, assign,
                                 brute_force_assignment_cost)

CORPUS = Path(__file__).resolve().parents[1] / "corpus"
DT = 1 / 60


def ok(name, detail):
    print(f"ACCEPTANCE PASS: {name} -- {detail}")


# -- 1. assignment oracle -----------------------------------------------------


def test_assignment_oracle_exact():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    for _ in range(1000):
        n = int(rng.integers(1, 7))
        m = int(rng.integers(1, 7))
        costs = rng.integers(0, 10, size=(n, m)).astype(float)
        matches, _, _ = assign(costs)
        total = sum(costs[i, j] for i, j in matches)
        expected = brute_force_assignment_cost(costs)
        assert total == expected, f"{costs} -> {total} != {expected}"
    elapsed = time.perf_counter() - t0
    assert elapsed < 5.0
    ok("assignment oracle", f"1000 matrices exact in {elapsed:.2f}s (< 5s)")


# -- 2/3. tracker batteries ----------------------------------------------------


@pytest.fixture(scope="module")
def ablation_table():
    t0 = time.perf_counter()
    table = run_ablation_suite(standard_scene(seed=0), seeds=40)
    table.elapsed = time.perf_counter() - t0
    return table


def test_ablation_trend_reproduction(ablation_table):
    t = ablation_table
    assert t.separated("fp_rate", "full", "no_recovery"), \
        f"FP {t.mean('full', 'fp_rate'):.4f} !< {t.mean('no_recovery', 'fp_rate'):.4f}"
    assert t.separated("mean_distance_px", "full", "simple_history")
    assert t.separated("tp_rate", "greedy_encodings", "full")
    assert t.separated("tp_rate", "faulty_encodings", "full")
    assert t.elapsed < 180.0, f"suite took {t.elapsed:.0f}s"
    ok("ablation trends",
       f"FP {t.mean('full', 'fp_rate'):.4f}<{t.mean('no_recovery', 'fp_rate'):.4f}, "
       f"D {t.mean('full', 'mean_distance_px'):.1f}<{t.mean('simple_history', 'mean_distance_px'):.1f}, "
       f"TP {t.mean('full', 'tp_rate'):.3f}>{t.mean('greedy_encodings', 'tp_rate'):.3f}"
       f"/{t.mean('faulty_encodings', 'tp_rate'):.3f}, "
       f"all by >=1 SE, in {t.elapsed:.0f}s (< 180s)")


def test_imposter_resistance_zero_switches():
    scene = Scene(imposter_scene(seed=0, separation=0.6, occlusion_ticks=60))
    total = 0
    for seed in range(40):
        dets, gts = render_stream(scene, seed)
        s = score_tracker_run(scene, dets, gts, TrackerConfig(), seed)
        total += s.id_switches
    assert total == 0
    ok("imposter resistance", "0 identity switches across 40 seeded runs")


# -- 4. step budget -------------------------------------------------------------


def test_tracker_step_budget():
    rng = np.random.default_rng(5)
    dim = 128
    cfg = TrackerConfig()
    tracker = Tracker(cfg, seed=5)
    bases = []
    for k in range(5):
        base = normalize(rng.standard_normal(dim))
        bases.append(base)
        tracker.enroll(Detection(bbox=BBox(0.1 + 0.2 * k, 0.5, 0.08, 0.2),
                                 embedding=base), f"actor{k}", -1)
        track = tracker.tracks[f"actor{k}"]
        while track.gallery_len < cfg.gallery_budget:
            track.append_encoding(normalize(base + 0.3 * rng.standard_normal(dim)),
                                  track.gallery_len)
    times = []
    for tick in range(200):
        dets = []
        for k, base in enumerate(bases):
            emb = normalize(base + 0.1 * rng.standard_normal(dim))
            dets.append(Detection(bbox=BBox(0.1 + 0.2 * k + rng.normal(0, 0.005),
                                            0.5, 0.08, 0.2), embedding=emb))
        for _ in range(15):
            dets.append(Detection(bbox=BBox(*rng.uniform(0.05, 0.95, 2), 0.08, 0.2),
                                  embedding=normalize(rng.standard_normal(dim))))
        t0 = time.perf_counter()
        tracker.step(dets, tick)
        times.append(time.perf_counter() - t0)
    mean_ms = 1000 * float(np.mean(times))
    assert mean_ms <= 5.0, f"mean step {mean_ms:.2f} ms"
    ok("tracker step budget", f"5x20 mean step {mean_ms:.2f} ms (<= 5 ms)")


# -- 5. leniency dead zone --------------------------------------------------------


def run_walk(r, swing, seed=3):
    scene = walk_scene(r=r, swing=swing, period_s=3.0, duration_s=14.0, seed=seed)
    res = run_simulation(scene, walk_script(r), seed=seed,
                         engine_cfg=EngineConfig(dt=DT), keep_telemetry=True)
    settle = 240  # 4 s of enrollment/centering, leaving a 10 s window
    phases = [f.actors["alpha"].phase for f in res.telemetry[settle:]
              if "alpha" in f.actors]
    assert phases and all(p == "normal" for p in phases), "actor lost during walk"
    return np.abs(res.rates[settle:, 0])


def test_leniency_dead_zone():
    r = 0.45
    inside = run_walk(r, swing=0.8 * r)
    frac_quiet = float(np.mean(inside < 0.05))
    assert frac_quiet >= 0.99, f"only {frac_quiet:.3f} of ticks quiet"
    outside = run_walk(r, swing=2.0 * r)
    frac_active = float(np.mean(outside > 1.0))
    assert frac_active >= 0.2, f"only {frac_active:.3f} of ticks above 1 deg/s"
    ok("leniency dead zone",
       f"inside: {100 * frac_quiet:.1f}% ticks |yaw|<0.05 deg/s (>=99%); "
       f"outside: {100 * frac_active:.0f}% ticks >1 deg/s (sustained)")


# -- 6. control ablation -----------------------------------------------------------


def test_control_ablation_rate_jitter():
    scene = standard_scene(seed=5)
    rms = {}
    for mode, cfg in (("full", EngineConfig(dt=DT)),
                      ("standard", EngineConfig(dt=DT, standard_control=True))):
        res = run_simulation(scene, standard_script(), seed=5, engine_cfg=cfg,
                             keep_telemetry=False)
        d = np.diff(res.rates[:, :2], axis=0)
        rms[mode] = float(np.sqrt(np.mean(d ** 2)))
    ratio = rms["standard"] / rms["full"]
    assert ratio >= 3.0, f"ratio {ratio:.2f}"
    ok("control ablation",
       f"delta-rate RMS standard {rms['standard']:.3f} vs full {rms['full']:.3f}, "
       f"ratio {ratio:.1f}x (>= 3x)")


# -- 7. transition smoothness --------------------------------------------------------


def test_transition_smoothness_whip():
    scene = standard_scene(seed=5)
    events = {360: [ExternalEvent.speech("go")]}
    jumps = {}
    for mode, cfg in (("full", EngineConfig(dt=DT)),
                      ("binary", EngineConfig(dt=DT, smooth_transitions=False))):
        res = run_simulation(scene, whip_script(), seed=5, engine_cfg=cfg,
                             events=events, keep_telemetry=False)
        jumps[mode] = float(np.max(np.abs(np.diff(res.rates[350:700, 0]))))
    ratio = jumps["full"] / jumps["binary"]
    assert ratio <= 0.2, f"jump ratio {ratio:.3f}"
    ok("transition smoothness",
       f"max tick jump full {jumps['full']:.1f} vs binary {jumps['binary']:.1f} deg/s, "
       f"ratio {ratio:.2f} (<= 0.20)")


# -- 8. procrustes steady state ---------------------------------------------------------


def test_procrustes_symmetric_steady_state():
    entries = [(ScreenPoint(0.7, 0.5), ScreenPoint(0.5, 0.5), 1.0),
               (ScreenPoint(0.3, 0.5), ScreenPoint(0.5, 0.5), 1.0)]
    t_c, hold = procrustes_error(entries)
    norm = (t_c[0] ** 2 + t_c[1] ** 2) ** 0.5
    assert not hold
    assert norm < 1e-12
    ok("procrustes steady state", f"symmetric pair |T_c| = {norm:.2e} (< 1e-12)")


# -- 9. plant oracle -----------------------------------------------------------------


def test_plant_matches_closed_form_10s():
    cfg = PlantConfig(latency_ticks=0, tau_g=0.05)
    plant = GimbalPlant(cfg)
    c = 2.5
    b = np.exp(-DT / cfg.tau_g)
    worst = 0.0
    for n in range(1, 601):
        plant.step((c, 0.0, 0.0), DT)
        rate_expected = c * (1 - b ** n)
        yaw_expected = c * DT * (n - b * (1 - b ** n) / (1 - b))
        worst = max(worst, abs(plant.rates[0] - rate_expected),
                    abs(plant.yaw - yaw_expected))
    assert worst < 1e-9
    ok("plant oracle", f"10 s first-order response, max deviation {worst:.1e} (< 1e-9)")


# -- 10. determinism ------------------------------------------------------------------


def test_simulate_seed7_byte_identical(tmp_path):
    outs = []
    for name in ("one.jsonl", "two.jsonl"):
        out = tmp_path / name
        rc = main(["simulate", "--scene", "standard", "--seed", "7",
                   "--out", str(out)])
        assert rc == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    ok("determinism", f"simulate --seed 7 twice: {len(outs[0])} bytes identical")


# -- 11. script round trip --------------------------------------------------------------


def test_script_corpus_round_trip():
    files = sorted((CORPUS / "scripts").glob("*.json"))
    assert len(files) == 20
    for f in files:
        s = parse_script(f.read_text())
        assert parse_script(serialize_script(s)) == s, f.name
    kinds = {"unknown_actor": UnknownActor,
             "unknown_behavior_kind": UnknownBehaviorKind,
             "invalid_parameter": InvalidParameter,
             "syntax": ScriptSyntaxError}
    invalid = sorted((CORPUS / "invalid").glob("*.json"))
    assert invalid
    for f in invalid:
        with pytest.raises(kinds[f.name.split("__")[0]]):
            parse_script(f.read_text())
    ok("script round trip",
       f"{len(files)} corpus scripts round-trip; {len(invalid)} invalid files "
       f"raise their documented kinds")


# -- 12. [SECONDARY] end-to-end steering --------------------------------------------------


def test_secondary_loopback_steering(tmp_path):
    from fastapi.testclient import TestClient
    from framepilot.service import SimulationServer

    spec = imposter_scene(seed=0)
    spec.duration_s = 10.0
    server = SimulationServer(spec, whip_script(), seed=0,
                              engine_cfg=EngineConfig(dt=spec.dt),
                              telemetry_every=1, realtime=False,
                              telemetry_path=str(tmp_path / "t.jsonl"),
                              start_paused=True)
    with TestClient(server.app) as client:
        with client.websocket_connect("/ws") as ws:
            hello = ws.receive_json()
            assert hello["chain_index"] == 0
            ws.send_text(json.dumps({"type": "speech_word", "word": "go"}))
            ws.send_text(json.dumps({"type": "step"}))
            frame = None
            for _ in range(50):
                msg = ws.receive_json()
                if msg["type"] == "telemetry_frame":
                    frame = msg["frame"]
                    break
            assert frame is not None
            assert frame["tick"] == 0
            assert frame["chain_index"] == 1, "speech did not advance within one tick"
    ok("secondary loopback steering",
       "speech_word before tick 0 advanced the chain in tick 0's telemetry")
