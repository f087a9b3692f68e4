"""Closed-loop harness: scene -> detections -> tracker -> engine -> plant.

Enrollment stands in for the on-set pointing gesture: each scripted actor
is enrolled from the first detection carrying its identity (the scenes are
staged so actors appear in the open). Everything downstream of enrollment
never touches detection truth ids; they exist for enrollment staging and
scoring only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .engine import Engine, EngineConfig, ExternalEvent, TelemetryFrame
from .script import Script
from .sim import GimbalPlant, PlantConfig, Scene, SceneSpec
from .tracking import Tracker, TrackerConfig


@dataclass
class RunResult:
    telemetry: list[TelemetryFrame] = field(default_factory=list)
    rates: np.ndarray | None = None          # (T, 3) commanded rates
    orientations: np.ndarray | None = None   # (T, 3) plant yaw/pitch/roll


class SimulationRun:
    """Steppable closed loop; the service drives this one tick at a time."""

    def __init__(self, scene: SceneSpec | Scene, scripts: dict[str, Script] | Script,
                 seed: int = 0, engine_cfg: EngineConfig | None = None,
                 tracker_cfg: TrackerConfig | None = None,
                 plant_cfg: PlantConfig | None = None,
                 active_script: str | None = None):
        self.scene = scene if isinstance(scene, Scene) else Scene(scene)
        self.rng = np.random.default_rng(seed)
        self.tracker = Tracker(tracker_cfg or TrackerConfig(dt=self.scene.spec.dt),
                               seed=seed)
        cfg = engine_cfg or EngineConfig(dt=self.scene.spec.dt)
        self.engine = Engine(scripts, active=active_script, cfg=cfg)
        self.plant = GimbalPlant(plant_cfg)
        self.plant.yaw, self.plant.pitch = self.scene.spec.camera
        self.tick = 0
        self.n_ticks = self.scene.spec.n_ticks
        self._pending: set[str] = set(self.engine.script.actors)
        self._last_delta = (0.0, 0.0)

    @property
    def done(self) -> bool:
        return self.tick >= self.n_ticks

    def step(self, events: list[ExternalEvent] | None = None) -> TelemetryFrame:
        if self.done:
            raise RuntimeError("scene exhausted")
        dets = self.scene.render_detections(self.tick, self.plant.yaw,
                                            self.plant.pitch, self.rng)
        if self._pending:
            for det in dets:
                if det.truth_id in self._pending:
                    self.tracker.enroll(det, det.truth_id, self.tick)
                    self._pending.discard(det.truth_id)
        reports = self.tracker.step(dets, self.tick)
        prev_yaw, prev_pitch = self.plant.yaw, self.plant.pitch
        command, frame = self.engine.tick(reports, events,
                                          lateral_accel=self.plant.lateral_accel,
                                          camera_delta=self._last_delta)
        self.plant.step(command.as_tuple(), self.scene.spec.dt)
        self._last_delta = (self.plant.yaw - prev_yaw, self.plant.pitch - prev_pitch)
        frame.gimbal = (self.plant.yaw, self.plant.pitch, self.plant.roll)
        self.tick += 1
        return frame


def run_simulation(scene: SceneSpec | Scene, scripts: dict[str, Script] | Script,
                   seed: int = 0, engine_cfg: EngineConfig | None = None,
                   tracker_cfg: TrackerConfig | None = None,
                   plant_cfg: PlantConfig | None = None,
                   events: dict[int, list[ExternalEvent]] | None = None,
                   keep_telemetry: bool = True) -> RunResult:
    """Run a scene to completion, optionally injecting events at given ticks."""
    run = SimulationRun(scene, scripts, seed=seed, engine_cfg=engine_cfg,
                        tracker_cfg=tracker_cfg, plant_cfg=plant_cfg)
    result = RunResult()
    rates = np.zeros((run.n_ticks, 3))
    orientations = np.zeros((run.n_ticks, 3))
    while not run.done:
        tick = run.tick
        frame = run.step((events or {}).get(tick))
        rates[tick] = frame.rates
        orientations[tick] = frame.gimbal
        if keep_telemetry:
            result.telemetry.append(frame)
    result.rates = rates
    result.orientations = orientations
    return result


def write_telemetry(path, frames: list[TelemetryFrame]) -> None:
    """Full-rate JSON-lines telemetry log."""
    with open(path, "w", encoding="utf-8") as f:
        for frame in frames:
            f.write(json.dumps(frame.to_dict()) + "\n")
