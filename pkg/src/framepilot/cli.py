"""Batch entry points.

Subcommands:
    validate  check a script file, print a summary
    simulate  run a scene+script closed loop, write telemetry (or --serve)
    replay    run the tracker over a recorded detection stream
    ablate    tracker ablation suite over seeded reruns, write CSV
    tune      relay experiment on the simulated gimbal, print PID gains

Exit codes: 0 success, 1 validation error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import scenes as canned
from .engine import EngineConfig
from .evaluation import run_ablation_suite, tune_gimbal_axis
from .control import tune_ziegler_nichols
from .runner import run_simulation, write_telemetry
from .script import ScriptError, load_script
from .sim import SceneSpec
from .tracking import Tracker, TrackerConfig, read_detections, write_detections


def _tracker_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--no-recovery", action="store_true")
    parser.add_argument("--faulty-encodings", action="store_true")
    parser.add_argument("--greedy-encodings", action="store_true")
    parser.add_argument("--simple-history", action="store_true")


def _tracker_cfg(args, dt: float) -> TrackerConfig:
    return TrackerConfig(dt=dt,
                         no_recovery=args.no_recovery,
                         faulty_encodings=args.faulty_encodings,
                         greedy_encodings=args.greedy_encodings,
                         simple_history=args.simple_history)


def _load_scene_spec(path: str) -> SceneSpec:
    builders = {"standard": canned.standard_scene, "imposter": canned.imposter_scene}
    if path in builders:
        return builders[path]()
    with open(path, "r", encoding="utf-8") as f:
        return SceneSpec.from_json(f.read())


def cmd_validate(args) -> int:
    try:
        script = load_script(args.script)
    except ScriptError as e:
        print(f"invalid: {e}", file=sys.stderr)
        return 1
    print(f"ok: script {script.name!r}, {len(script.actors)} actors, "
          f"{len(script.chain)} behaviors")
    return 0


def cmd_simulate(args) -> int:
    spec = _load_scene_spec(args.scene)
    script = load_script(args.script) if args.script else canned.standard_script()
    if args.hz:
        spec.dt = 1.0 / args.hz
    if args.serve:
        from .service import serve
        serve(spec, {script.name: script}, seed=args.seed, port=args.port)
        return 0
    engine_cfg = EngineConfig(dt=spec.dt)
    result = run_simulation(spec, script, seed=args.seed, engine_cfg=engine_cfg,
                            tracker_cfg=_tracker_cfg(args, spec.dt))
    out = Path(args.out or "telemetry.jsonl")
    out.parent.mkdir(parents=True, exist_ok=True)
    write_telemetry(out, result.telemetry)
    print(f"wrote {len(result.telemetry)} telemetry frames to {out}")
    return 0


def cmd_replay(args) -> int:
    by_tick = read_detections(args.detections)
    if not by_tick:
        print("empty detection stream", file=sys.stderr)
        return 1
    dt = 1.0 / (args.hz or 60.0)
    tracker = Tracker(_tracker_cfg(args, dt), seed=args.seed)
    pending = set(args.enroll or [])
    records = []
    for tick in range(max(by_tick) + 1):
        dets = by_tick.get(tick, [])
        for d in dets:
            if d.truth_id in pending:
                tracker.enroll(d, d.truth_id, tick)
                pending.discard(d.truth_id)
        reports = tracker.step(dets, tick)
        records.append({
            "tick": tick,
            "tracks": {a: {"phase": r.phase.value,
                           "bbox": ([r.bbox.cx, r.bbox.cy, r.bbox.w, r.bbox.h]
                                    if r.bbox else None)}
                       for a, r in reports.items()},
        })
    out = Path(args.out or "tracks.jsonl")
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as f:
        for rec in records:
            f.write(json.dumps(rec) + "\n")
    print(f"wrote {len(records)} track records to {out}")
    return 0


def cmd_ablate(args) -> int:
    spec = _load_scene_spec(args.scene)
    table = run_ablation_suite(spec, seeds=args.seeds)
    print(table.format_table())
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / "ablation.csv"
        csv_path.write_text(table.to_csv(), encoding="utf-8")
        print(f"wrote {csv_path}")
    return 0


def cmd_tune(args) -> int:
    ku, tu = tune_gimbal_axis(dt=1.0 / (args.hz or 60.0))
    gains = tune_ziegler_nichols(ku, tu, relaxation=args.relaxation)
    print(f"Ku={ku:.3f}  Tu={tu:.4f}s")
    print(f"gains (relaxation {args.relaxation}): "
          f"kp={gains.kp:.3f} ki={gains.ki:.3f} kd={gains.kd:.4f}")
    return 0


def cmd_render(args) -> int:
    from .evaluation import render_stream
    from .sim import Scene

    spec = _load_scene_spec(args.scene)
    scene = Scene(spec)
    dets, _ = render_stream(scene, args.seed)
    out = Path(args.out or "detections.jsonl")
    out.parent.mkdir(parents=True, exist_ok=True)
    write_detections(out, enumerate(dets))
    print(f"wrote {sum(len(d) for d in dets)} detections over {len(dets)} ticks to {out}")
    return 0


def cmd_export_scene(args) -> int:
    builders = {"standard": canned.standard_scene, "imposter": canned.imposter_scene}
    spec = builders[args.name]()
    text = spec.to_json()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="framepilot",
                                description="Scriptable framing engine simulator")
    sub = p.add_subparsers(dest="cmd", required=True)

    v = sub.add_parser("validate", help="validate a script file")
    v.add_argument("script")
    v.set_defaults(fn=cmd_validate)

    s = sub.add_parser("simulate", help="closed-loop run of a scene+script")
    s.add_argument("--scene", required=True, help="scene JSON, or 'standard'/'imposter'")
    s.add_argument("--script", help="script JSON (defaults to the canned two-shot)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--hz", type=float, help="tick rate override")
    s.add_argument("--out", "-o", help="telemetry output path")
    s.add_argument("--serve", action="store_true", help="run the live service instead")
    s.add_argument("--port", type=int, default=8765)
    _tracker_flags(s)
    s.set_defaults(fn=cmd_simulate)

    r = sub.add_parser("replay", help="run the tracker over a recorded stream")
    r.add_argument("--detections", required=True)
    r.add_argument("--enroll", nargs="*", help="actor ids to enroll from their first detection")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--hz", type=float)
    r.add_argument("--out", "-o")
    _tracker_flags(r)
    r.set_defaults(fn=cmd_replay)

    a = sub.add_parser("ablate", help="tracker ablation suite")
    a.add_argument("--scene", default="standard")
    a.add_argument("--seeds", type=int, default=40)
    a.add_argument("--out", "-o", help="output directory for ablation.csv")
    a.set_defaults(fn=cmd_ablate)

    t = sub.add_parser("tune", help="relay-tune the gimbal yaw axis")
    t.add_argument("--hz", type=float, default=60.0)
    t.add_argument("--relaxation", type=float, default=0.6)
    t.set_defaults(fn=cmd_tune)

    d = sub.add_parser("render", help="render a scene's detections to a replay file")
    d.add_argument("--scene", required=True)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out", "-o")
    d.set_defaults(fn=cmd_render)

    e = sub.add_parser("export-scene", help="write a canned scene spec as JSON")
    e.add_argument("name", choices=["standard", "imposter"])
    e.add_argument("--out", "-o")
    e.set_defaults(fn=cmd_export_scene)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ScriptError as e:
        print(f"invalid: {e}", file=sys.stderr)
        return 1
    except (OSError, ValueError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
