"""Cue-driven behavior engine: runs a script against live tracker output.

Each tick the engine evaluates the active link's cue, advances the chain
when it fires (at most one advance per tick), fades per-actor control
weights and required points so behavior changes never step the error
signal, runs the framing controller (or a direct-rate behavior), and
crossfades commanded rates across the change.

Smoothing has three cooperating layers:

- weights: actors entering a behavior ramp 0 -> 1 linearly over the link's
  transition duration; actors leaving it (or losing their track) ramp down;
- required points: filtered through a per-actor scalar Kalman so a new
  behavior's targets are approached, not teleported to;
- rates: the previous behavior's final commanded rates crossfade into the
  new behavior's over the same transition duration.

Setting `smooth_transitions=False` snaps all three (binary weights), which
is the erratic variant the evaluation harness contrasts against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .control import (AugmentedPoint, ControllerConfig, BankingFilter,
                      FramingController, LeniencyCurve, curve_from_radii)
from .geometry import ActorId, ScreenPoint
from .script import Behavior, Cue, Script, PATH_SEGMENT_SECONDS
from .tracking import Phase, TrackReport


@dataclass(frozen=True)
class ExternalEvent:
    """A live steering input (the stand-in for on-set voice/joystick)."""

    kind: str                     # speech_word | switch_script | mode_toggle |
                                  # enroll | manual_rate
    word: str | None = None
    script: str | None = None
    actor: str | None = None
    rates: tuple[float, float] | None = None   # manual yaw/pitch deg/s

    @staticmethod
    def speech(word: str) -> "ExternalEvent":
        return ExternalEvent(kind="speech_word", word=word.strip().lower())


@dataclass(frozen=True)
class GimbalCommand:
    yaw_rate: float
    pitch_rate: float
    roll_rate: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.yaw_rate, self.pitch_rate, self.roll_rate)


@dataclass
class ActorTelemetry:
    p_t: tuple[float, float] | None
    p_a: tuple[float, float]
    p_r: tuple[float, float] | None
    weight: float
    h: tuple[float, float]
    phase: str


@dataclass
class TelemetryFrame:
    tick: int
    time_s: float
    script: str
    behavior: str
    chain_index: int
    mode: str
    t_c: tuple[float, float]
    hold: bool
    rates: tuple[float, float, float]
    actors: dict[str, ActorTelemetry] = field(default_factory=dict)
    cue_fired: str | None = None
    audio: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    gimbal: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def to_dict(self) -> dict:
        return {
            "tick": self.tick,
            "time_s": round(self.time_s, 6),
            "script": self.script,
            "behavior": self.behavior,
            "chain_index": self.chain_index,
            "mode": self.mode,
            "t_c": list(self.t_c),
            "hold": self.hold,
            "rates": list(self.rates),
            "gimbal": list(self.gimbal),
            "actors": {
                a: {"p_t": list(t.p_t) if t.p_t else None,
                    "p_a": list(t.p_a),
                    "p_r": list(t.p_r) if t.p_r else None,
                    "w": t.weight,
                    "h": list(t.h),
                    "phase": t.phase}
                for a, t in self.actors.items()
            },
            "cue_fired": self.cue_fired,
            "audio": self.audio,
            "notes": self.notes,
        }


class _ScalarKalman:
    """Textbook 1-D Kalman used to slide required points continuously."""

    def __init__(self, initial: float, process_var: float, meas_var: float = 1.0):
        self.mean = initial
        self.var = process_var
        self.q = process_var
        self.r = meas_var

    def update(self, z: float) -> float:
        self.var += self.q
        k = self.var / (self.var + self.r)
        self.mean += k * (z - self.mean)
        self.var *= (1.0 - k)
        return self.mean


class _RequiredFilter:
    def __init__(self, initial: ScreenPoint, process_var: float):
        self.fx = _ScalarKalman(initial.x, process_var)
        self.fy = _ScalarKalman(initial.y, process_var)

    def update(self, target: ScreenPoint) -> ScreenPoint:
        return ScreenPoint(self.fx.update(target.x), self.fy.update(target.y))

    @property
    def point(self) -> ScreenPoint:
        return ScreenPoint(self.fx.mean, self.fy.mean)


def path_behavior_target(behavior: Behavior, clock: float) -> ScreenPoint:
    """Current required point along a path behavior's waypoints.

    Segments take a fixed duration, so waypoint spacing sets speed; the
    final waypoint holds once the path is exhausted.
    """
    pts = behavior.points
    seg = clock / PATH_SEGMENT_SECONDS
    i = int(seg)
    if i >= len(pts) - 1:
        return pts[-1]
    f = seg - i
    a, b = pts[i], pts[i + 1]
    return ScreenPoint(a.x + f * (b.x - a.x), a.y + f * (b.y - a.y))


def pan_behavior_rates(behavior: Behavior, clock: float) -> tuple[float, float]:
    """Constant sweep until the cumulative range is covered, then zero."""
    duration = behavior.range_deg / behavior.speed_deg_s
    if clock >= duration:
        return (0.0, 0.0)
    rate = behavior.direction * behavior.speed_deg_s
    if behavior.axis == "yaw":
        return (rate, 0.0)
    return (0.0, rate)


@dataclass
class EngineConfig:
    dt: float = 1.0 / 60.0
    required_point_process_var: float = 0.002
    start_mode: str = "automatic"        # automatic | manual
    smooth_transitions: bool = True
    # Ablated control path: raw tracked points straight into the PID with
    # unit weights, no leniency, no fades.
    standard_control: bool = False
    controller: ControllerConfig = field(default_factory=ControllerConfig)


class _CueMonitor:
    """Counters behind appearance/disappearance sensitivity."""

    def __init__(self):
        self.streak = 0

    def appears(self, report: TrackReport | None, need: int) -> bool:
        visible = (report is not None and report.phase is Phase.NORMAL
                   and report.bbox is not None
                   and 0.0 <= report.bbox.cx <= 1.0 and 0.0 <= report.bbox.cy <= 1.0)
        self.streak = self.streak + 1 if visible else 0
        return self.streak >= need

    def disappears(self, report: TrackReport | None, need: int) -> bool:
        gone = (report is None or report.phase is not Phase.NORMAL
                or report.bbox is None
                or not (0.0 <= report.bbox.cx <= 1.0 and 0.0 <= report.bbox.cy <= 1.0))
        self.streak = self.streak + 1 if gone else 0
        return self.streak >= need


def evaluate_cue(cue: Cue, reports: dict[ActorId, TrackReport],
                 speech_words: set[str], clock: float,
                 monitor: _CueMonitor) -> bool:
    """Check one link's cue against this tick's world."""
    if cue.kind == "speech":
        return cue.word in speech_words
    if cue.kind == "elapsed":
        return clock >= cue.seconds
    report = reports.get(cue.actor) if cue.actor else None
    if cue.kind == "actor_appears":
        return monitor.appears(report, cue.sensitivity_ticks)
    if cue.kind == "actor_disappears":
        return monitor.disappears(report, cue.sensitivity_ticks)
    if cue.kind == "landing_zone":
        if report is None or report.phase is not Phase.NORMAL or report.bbox is None:
            return False
        x0, y0, x1, y1 = cue.rect
        return x0 <= report.bbox.cx <= x1 and y0 <= report.bbox.cy <= y1
    if cue.kind == "relative_size":
        if report is None or report.phase is not Phase.NORMAL or report.bbox is None:
            return False
        return report.bbox.h >= cue.min_height_fraction
    raise ValueError(f"unknown cue kind {cue.kind!r}")


class Engine:
    """Executes one script library against tracker reports, tick by tick."""

    def __init__(self, scripts: dict[str, Script] | Script, active: str | None = None,
                 cfg: EngineConfig | None = None):
        if isinstance(scripts, Script):
            scripts = {scripts.name: scripts}
        if not scripts:
            raise ValueError("engine needs at least one script")
        self.cfg = cfg or EngineConfig()
        self.scripts = scripts
        self.script = scripts[active] if active else next(iter(scripts.values()))
        self.chain_index = 0
        self.clock = 0.0
        self.tick_index = -1
        self.mode = self.cfg.start_mode
        self.controller = FramingController(self.cfg.controller)
        self.weights: dict[ActorId, float] = {}
        self.augmented: dict[ActorId, AugmentedPoint] = {}
        self.required: dict[ActorId, _RequiredFilter] = {}
        self.curves: dict[ActorId, LeniencyCurve] = {}
        self.last_p_t: dict[ActorId, ScreenPoint] = {}
        self.monitor = _CueMonitor()
        self.banking: BankingFilter | None = None
        if self.active_behavior.kind == "banking":
            b = self.active_behavior
            self.banking = BankingFilter(b.gain, b.smoothing_s)
        self.pan_clock = 0.0
        self.manual_rates = (0.0, 0.0)
        self._announce = True
        # Crossfade bookkeeping; the first behavior fades in from rest.
        self.fade_from: tuple[float, float, float] = (0.0, 0.0, 0.0)
        self.last_rates: tuple[float, float, float] = (0.0, 0.0, 0.0)
        if self.cfg.smooth_transitions and not self.cfg.standard_control:
            self.fade_elapsed = 0.0
            self.fade_duration = self.script.chain[0].transition_seconds
        else:
            self.fade_elapsed = math.inf
            self.fade_duration = 0.0

    # -- chain plumbing ----------------------------------------------------

    @property
    def active_link(self):
        return self.script.chain[self.chain_index]

    @property
    def active_behavior(self) -> Behavior:
        return self.active_link.behavior

    def _enter_link(self, index: int, audio: list[str]):
        self.chain_index = index
        self.clock = 0.0
        self.pan_clock = 0.0
        self.monitor = _CueMonitor()
        behavior = self.active_behavior
        audio.append(f"behavior {behavior.id} started")
        if behavior.kind == "banking":
            self.banking = BankingFilter(behavior.gain, behavior.smoothing_s)
        if self.cfg.smooth_transitions and not self.cfg.standard_control:
            self.fade_from = self.last_rates
            self.fade_elapsed = 0.0
            self.fade_duration = self.active_link.transition_seconds
        else:
            self.fade_elapsed = math.inf

    def switch_script(self, name: str, audio: list[str], notes: list[str]):
        if name not in self.scripts:
            notes.append(f"unknown script {name!r} ignored")
            return
        self.script = self.scripts[name]
        audio.append(f"script {self.script.name} loaded")
        self._enter_link(0, audio)

    # -- behavior targets --------------------------------------------------

    def _behavior_targets(self) -> dict[ActorId, tuple[ScreenPoint, tuple[float, float]]]:
        """Actor -> (raw required point, leniency radii) for the active behavior."""
        b = self.active_behavior
        if b.kind == "framing":
            return {t.actor: (t.required, t.leniency) for t in b.targets}
        if b.kind == "path":
            return {b.actor: (path_behavior_target(b, self.clock), b.leniency)}
        return {}

    # -- main loop ---------------------------------------------------------

    def tick(self, reports: dict[ActorId, TrackReport],
             events: list[ExternalEvent] | None = None,
             lateral_accel: float = 0.0,
             camera_delta: tuple[float, float] = (0.0, 0.0)
             ) -> tuple[GimbalCommand, TelemetryFrame]:
        cfg = self.cfg
        dt = cfg.dt
        self.tick_index += 1
        audio: list[str] = []
        notes: list[str] = []
        speech: set[str] = set()
        cue_fired: str | None = None
        if self._announce:
            audio.append(f"script {self.script.name} loaded")
            audio.append(f"behavior {self.active_behavior.id} started")
            self._announce = False

        # Ego-motion compensation: the camera's own rotation (from gimbal
        # telemetry) shifts all screen content, so world-anchored state
        # (augmented points, held tracked points) must shift with it.
        # Leniency then measures actor motion alone, and panning actually
        # moves the error toward zero.
        d_yaw, d_pitch = camera_delta
        if d_yaw != 0.0 or d_pitch != 0.0:
            dx = -d_yaw / self.cfg.controller.fov_deg
            dy = d_pitch / self.cfg.controller.fov_deg
            for ap in self.augmented.values():
                ap.x += dx
                ap.y += dy
            self.last_p_t = {a: ScreenPoint(p.x + dx, p.y + dy)
                             for a, p in self.last_p_t.items()}

        for ev in (events or []):
            if ev.kind == "speech_word" and ev.word:
                speech.add(ev.word.lower())
            elif ev.kind == "mode_toggle":
                self.mode = "manual" if self.mode == "automatic" else "automatic"
                audio.append(f"{self.mode} mode")
                self.manual_rates = (0.0, 0.0)
                self.controller.reset()
            elif ev.kind == "switch_script" and ev.script:
                self.switch_script(ev.script, audio, notes)
            elif ev.kind == "manual_rate" and ev.rates is not None:
                self.manual_rates = ev.rates
            elif ev.kind == "enroll" and ev.actor:
                audio.append(f"actor {ev.actor} enrolled")
            else:
                notes.append(f"ignored event {ev.kind!r}")

        if self.mode == "automatic":
            self.clock += dt
            link = self.active_link
            if link.cue is not None and evaluate_cue(link.cue, reports, speech,
                                                     self.clock, self.monitor):
                cue_fired = link.cue.kind
                if self.chain_index + 1 < len(self.script.chain):
                    self._enter_link(self.chain_index + 1, audio)
                else:
                    notes.append("final cue fired; holding last behavior")

        behavior = self.active_behavior
        targets = self._behavior_targets()

        # Track the latest usable tracked point per actor.
        for actor, rep in reports.items():
            if rep.phase is Phase.NORMAL and rep.bbox is not None:
                self.last_p_t[actor] = rep.bbox.center

        # Weight fades toward membership-and-tracked targets.
        fade_s = self.active_link.transition_seconds
        rate = dt / fade_s if fade_s > 0 else 1.0
        involved = set(targets) | {a for a, w in self.weights.items() if w > 0.0}
        for actor in involved:
            rep = reports.get(actor)
            tracked = rep is not None and rep.phase is Phase.NORMAL
            target_w = 1.0 if (actor in targets and tracked) else 0.0
            if cfg.standard_control:
                w = 1.0 if actor in targets and actor in self.last_p_t else 0.0
            elif not cfg.smooth_transitions:
                w = target_w
            else:
                w = self.weights.get(actor, 0.0)
                w = min(w + rate, target_w) if w < target_w else max(w - rate, target_w)
            self.weights[actor] = w

        # Required-point filtering and leniency curves.
        for actor, (raw_point, radii) in targets.items():
            self.curves[actor] = curve_from_radii(radii)
            if cfg.standard_control or not cfg.smooth_transitions:
                if actor not in self.required:
                    self.required[actor] = _RequiredFilter(raw_point,
                                                           cfg.required_point_process_var)
                self.required[actor].fx.mean = raw_point.x
                self.required[actor].fy.mean = raw_point.y
            elif actor in self.required:
                self.required[actor].update(raw_point)
            else:
                self.required[actor] = _RequiredFilter(raw_point,
                                                       cfg.required_point_process_var)

        # Augmented points follow tracked points under their leniency curve.
        for actor, w in self.weights.items():
            p_t = self.last_p_t.get(actor)
            if p_t is None:
                continue
            if actor not in self.augmented:
                self.augmented[actor] = AugmentedPoint(p_t)
            rep = reports.get(actor)
            if rep is not None and rep.phase is Phase.NORMAL and rep.bbox is not None:
                curve = self.curves.get(actor)
                if cfg.standard_control:
                    ap = self.augmented[actor]
                    ap.x, ap.y = p_t.x, p_t.y
                    ap.h = (0.0, 0.0)
                elif curve is not None:
                    self.augmented[actor].update(p_t, curve)
            # Lost/recovering actors keep a frozen augmented point while
            # their weight fades out.

        entries = []
        for actor, w in self.weights.items():
            if w <= 0.0 or actor not in self.augmented or actor not in self.required:
                continue
            entries.append((self.augmented[actor].point, self.required[actor].point, w))

        t_c = (0.0, 0.0)
        hold = False
        raw_rates = (0.0, 0.0, 0.0)
        if self.mode == "manual":
            raw_rates = (self.manual_rates[0], self.manual_rates[1], 0.0)
            self.controller.reset()
        elif behavior.kind in ("framing", "path"):
            frame = self.controller.step(entries, dt)
            t_c, hold = frame.t_c, frame.hold
            if hold and self.cfg.smooth_transitions:
                # All targets dropped: glide to a stop instead of snapping.
                decay = math.exp(-dt / 0.15)
                raw_rates = tuple(r * decay for r in self.last_rates)
            else:
                raw_rates = (frame.yaw_rate, frame.pitch_rate, 0.0)
        elif behavior.kind == "pan":
            yaw, pitch = pan_behavior_rates(behavior, self.pan_clock)
            self.pan_clock += dt
            raw_rates = (yaw, pitch, 0.0)
            self.controller.reset()
        elif behavior.kind == "banking":
            roll = self.banking.step(lateral_accel, dt) if self.banking else 0.0
            raw_rates = (0.0, 0.0, roll)
            self.controller.reset()
        else:  # idle
            self.controller.reset()

        # Crossfade commanded rates through behavior changes.
        if self.fade_elapsed < self.fade_duration:
            f = self.fade_elapsed / self.fade_duration
            out = tuple((1.0 - f) * a + f * b for a, b in zip(self.fade_from, raw_rates))
            self.fade_elapsed += dt
        else:
            out = raw_rates
        self.last_rates = out

        telemetry = TelemetryFrame(
            tick=self.tick_index,
            time_s=self.tick_index * dt,
            script=self.script.name,
            behavior=behavior.id,
            chain_index=self.chain_index,
            mode=self.mode,
            t_c=t_c,
            hold=hold,
            rates=out,
            cue_fired=cue_fired,
            audio=audio,
            notes=notes,
        )
        for actor in sorted(self.weights):
            if self.weights[actor] <= 0.0 and actor not in targets:
                continue
            ap = self.augmented.get(actor)
            rf = self.required.get(actor)
            rep = reports.get(actor)
            p_t = self.last_p_t.get(actor)
            telemetry.actors[actor] = ActorTelemetry(
                p_t=p_t.as_tuple() if p_t else None,
                p_a=ap.point.as_tuple() if ap else (0.5, 0.5),
                p_r=rf.point.as_tuple() if rf else None,
                weight=self.weights[actor],
                h=ap.h if ap else (0.0, 0.0),
                phase=rep.phase.value if rep else "unseen",
            )
        return GimbalCommand(*out), telemetry
