"""Deterministic synthetic world and gimbal plant.

Entities (actors and imposters) move along waypoint trajectories in world
angle space. A pinhole-free small-angle camera model projects them into
normalized screen space:

    screen_x = (yaw - camera_yaw) / fov + 1/2
    screen_y = (camera_pitch - pitch) / fov + 1/2

Appearance is modeled with per-entity "facet" vectors (distinct looks of
the same identity: front, back, changed lighting). Emitted embeddings are
noisy copies of the current facet, with two structured corruption modes
that real detector crops exhibit:

- overlap contamination: when two entities' boxes overlap on screen, each
  detection's embedding bleeds toward the other identity;
- confusion spikes: occasionally an imposter detection presents an
  embedding that looks convincingly like an actor for a single frame
  (motion blur, partial crops). These are what a recovery phase exists to
  survive.

Facets advance when an entity passes behind an occluder (it turns around,
lighting changes), and a scene can start with an enrollment sweep during
which actors cycle through all their facets in the open.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field, asdict

import numpy as np

from .geometry import BBox, EMBEDDING_DIM, normalize
from .tracking import Detection

DEG_TO_RAD = math.pi / 180.0


@dataclass
class NoiseSpec:
    pos_sigma: float = 0.01          # center jitter, normalized screen units
    embedding_sigma: float = 0.05    # isotropic perturbation norm on the unit sphere
    pose_sigma: float = 0.2          # appearance wander along a low-rank pose basis
    pose_dims: int = 2
    dropout: float = 0.03            # per-detection drop probability
    clutter_rate: float = 0.5        # Poisson mean of junk detections per tick
    confusion_rate: float = 0.0      # imposter/clutter spike probability
    overlap_iou: float = 0.3         # deep box overlap contaminates both crops
    size_sigma: float = 0.003        # box size jitter


@dataclass
class EntitySpec:
    name: str
    waypoints: list            # [[t, yaw_deg, pitch_deg], ...]
    size_deg: tuple = (8.0, 18.0)
    facet_count: int = 1
    # Imposters may be pinned at an exact appearance distance from an actor.
    similar_to: dict | None = None   # {"actor": name, "distance": d}
    size_keyframes: list | None = None  # [[t, w_deg, h_deg], ...]


@dataclass
class Occluder:
    rect: tuple       # (yaw0, yaw1, pitch0, pitch1) world degrees
    interval: tuple   # (t0, t1) seconds

    def active(self, t: float) -> bool:
        return self.interval[0] <= t < self.interval[1]

    def contains(self, yaw: float, pitch: float) -> bool:
        y0, y1, p0, p1 = self.rect
        return y0 <= yaw <= y1 and p0 <= pitch <= p1


@dataclass
class SceneSpec:
    name: str
    duration_s: float
    seed: int = 0
    fov_deg: float = 90.0
    dt: float = 1.0 / 60.0
    camera: tuple = (0.0, 0.0)       # initial/static yaw, pitch (deg)
    actors: list[EntitySpec] = field(default_factory=list)
    imposters: list[EntitySpec] = field(default_factory=list)
    occluders: list[Occluder] = field(default_factory=list)
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    enrollment_sweep_s: float = 0.0
    facet_distance: float = 0.45
    embedding_dim: int = EMBEDDING_DIM

    @property
    def n_ticks(self) -> int:
        return int(round(self.duration_s / self.dt))

    def to_json(self) -> str:
        doc = asdict(self)
        return json.dumps(doc, indent=2)

    @staticmethod
    def from_json(text: str) -> "SceneSpec":
        doc = json.loads(text)
        doc["actors"] = [EntitySpec(**e) for e in doc.get("actors", [])]
        doc["imposters"] = [EntitySpec(**e) for e in doc.get("imposters", [])]
        doc["occluders"] = [Occluder(rect=tuple(o["rect"]), interval=tuple(o["interval"]))
                            for o in doc.get("occluders", [])]
        doc["noise"] = NoiseSpec(**doc.get("noise", {}))
        doc["camera"] = tuple(doc.get("camera", (0.0, 0.0)))
        return SceneSpec(**doc)


def load_scene(path) -> "Scene":
    with open(path, "r", encoding="utf-8") as f:
        return Scene(SceneSpec.from_json(f.read()))


def _interp_waypoints(waypoints, times: np.ndarray) -> np.ndarray:
    """Piecewise-linear trajectory samples; clamps outside the waypoint span."""
    wp = np.asarray(waypoints, dtype=np.float64)
    out = np.empty((len(times), wp.shape[1] - 1))
    for k in range(1, wp.shape[1]):
        out[:, k - 1] = np.interp(times, wp[:, 0], wp[:, k])
    return out


class _Entity:
    """Compiled per-tick tables for one scene entity."""

    def __init__(self, spec: EntitySpec, scene: "SceneSpec", is_actor: bool,
                 times: np.ndarray):
        self.name = spec.name
        self.is_actor = is_actor
        self.spec = spec
        self.pos = _interp_waypoints(spec.waypoints, times)      # (T, 2) yaw/pitch
        if spec.size_keyframes:
            self.size = _interp_waypoints(spec.size_keyframes, times)
        else:
            self.size = np.tile(np.asarray(spec.size_deg, dtype=np.float64),
                                (len(times), 1))
        self.facets: np.ndarray | None = None     # (K, dim), filled by Scene
        self.pose_basis: np.ndarray | None = None  # (pose_dims, dim)
        # Appearance at tick t is a blend (1-s)*facets[a] + s*facets[b]:
        # visible facet changes morph continuously (a person turning), only
        # changes behind an occluder are abrupt.
        self.facet_a = np.zeros(len(times), dtype=np.int64)
        self.facet_b = np.zeros(len(times), dtype=np.int64)
        self.facet_s = np.zeros(len(times), dtype=np.float64)
        self.hidden = np.zeros(len(times), dtype=bool)

    def current_appearance(self, tick: int) -> np.ndarray:
        s = self.facet_s[tick]
        if s == 0.0:
            return self.facets[self.facet_a[tick]]
        v = ((1.0 - s) * self.facets[self.facet_a[tick]]
             + s * self.facets[self.facet_b[tick]])
        return v / np.linalg.norm(v)


class Scene:
    """A compiled scene: embeddings and per-tick world state tables."""

    def __init__(self, spec: SceneSpec):
        self.spec = spec
        n = spec.n_ticks
        times = np.arange(n) * spec.dt
        self.times = times
        self.entities = ([ _Entity(e, spec, True, times) for e in spec.actors] +
                         [ _Entity(e, spec, False, times) for e in spec.imposters])
        self.actors = [e for e in self.entities if e.is_actor]
        self._build_embeddings()
        self._build_occlusion_and_facets()

    def _build_embeddings(self):
        rng = np.random.default_rng(self.spec.seed ^ 0x5EED)
        dim = self.spec.embedding_dim
        bases: dict[str, np.ndarray] = {}
        for ent in self.entities:
            base = normalize(rng.standard_normal(dim))
            sim = ent.spec.similar_to
            if sim is not None:
                anchor = bases[sim["actor"]]
                # Place the base at an exact cosine distance from the anchor.
                dot = 1.0 - float(sim["distance"])
                ortho = normalize(base - anchor * float(anchor @ base))
                base = dot * anchor + math.sqrt(max(0.0, 1.0 - dot * dot)) * ortho
            bases[ent.name] = base
            k = max(1, ent.spec.facet_count)
            if k == 1:
                ent.facets = base[None, :]
            else:
                # Facets sit on a cone around the base so any two looks of
                # the same identity stay a fixed cosine distance apart.
                cos2 = 1.0 - self.spec.facet_distance
                c = math.sqrt(cos2)
                s = math.sqrt(1.0 - cos2)
                facets = np.empty((k, dim))
                for j in range(k):
                    u = rng.standard_normal(dim)
                    u -= base * float(base @ u)
                    facets[j] = c * base + s * normalize(u)
                ent.facets = facets
            # Low-rank pose wander: appearance varies along a couple of
            # per-identity directions (pose/lighting), not isotropically.
            basis = np.empty((self.spec.noise.pose_dims, dim))
            for j in range(self.spec.noise.pose_dims):
                u = rng.standard_normal(dim)
                u -= base * float(base @ u)
                basis[j] = normalize(u)
            ent.pose_basis = basis

    def _build_occlusion_and_facets(self):
        spec = self.spec
        sweep_ticks = int(round(spec.enrollment_sweep_s / spec.dt))
        for ent in self.entities:
            k = ent.facets.shape[0]
            hidden = ent.hidden
            for i, t in enumerate(self.times):
                yaw, pitch = ent.pos[i]
                hidden[i] = any(o.active(t) and o.contains(yaw, pitch)
                                for o in spec.occluders)
            # Facet schedule: cycle during the enrollment sweep (morphing
            # between looks like a person turning around), then advance once
            # per occlusion entry; the actor emerges looking different.
            if k > 1:
                entries = np.zeros(len(self.times), dtype=np.int64)
                count = 0
                for i in range(1, len(self.times)):
                    if hidden[i] and not hidden[i - 1]:
                        count += 1
                    entries[i] = count
                period = sweep_ticks // k if sweep_ticks > 0 else 0
                morph = max(1, int(0.4 * period))
                for i in range(len(self.times)):
                    if sweep_ticks > 0 and i < sweep_ticks:
                        f = min(i // period, k - 1)
                        ent.facet_a[i] = f
                        into = i - f * period
                        # Morph toward the next facet over the tail of each
                        # hold period.
                        if f < k - 1 and into >= period - morph:
                            ent.facet_b[i] = f + 1
                            ent.facet_s[i] = (into - (period - morph)) / morph
                        else:
                            ent.facet_b[i] = f
                    else:
                        ent.facet_a[i] = ent.facet_b[i] = (k - 1 + entries[i]) % k

    def fov(self) -> float:
        return self.spec.fov_deg

    def _screen_box(self, ent: _Entity, tick: int, cam_yaw: float,
                    cam_pitch: float) -> BBox | None:
        fov = self.spec.fov_deg
        yaw, pitch = ent.pos[tick]
        x = (yaw - cam_yaw) / fov + 0.5
        y = (cam_pitch - pitch) / fov + 0.5
        if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
            return None
        w = max(ent.size[tick, 0] / fov, 1e-4)
        h = max(ent.size[tick, 1] / fov, 1e-4)
        return BBox(x, y, w, h)

    def ground_truth(self, tick: int, cam_yaw: float, cam_pitch: float
                     ) -> dict[str, BBox | None]:
        """Noise-free per-actor screen boxes; None while occluded/out of view."""
        out = {}
        for ent in self.actors:
            if ent.hidden[tick]:
                out[ent.name] = None
            else:
                out[ent.name] = self._screen_box(ent, tick, cam_yaw, cam_pitch)
        return out

    def actor_embedding(self, name: str, tick: int = 0) -> np.ndarray:
        for ent in self.entities:
            if ent.name == name:
                return ent.current_appearance(tick)
        raise KeyError(name)

    def render_detections(self, tick: int, cam_yaw: float, cam_pitch: float,
                          rng: np.random.Generator) -> list[Detection]:
        """Project visible entities into noisy detections for one tick."""
        spec = self.spec
        noise = spec.noise
        dim = spec.embedding_dim
        emitted: list[tuple[_Entity, BBox]] = []
        for ent in self.entities:
            if ent.hidden[tick]:
                continue
            box = self._screen_box(ent, tick, cam_yaw, cam_pitch)
            if box is None:
                continue
            if noise.dropout > 0.0 and rng.random() < noise.dropout:
                continue
            emitted.append((ent, box))

        # Crop contamination: in a deep overlap one crop is mostly the other
        # person; which side is occluded flickers with the crossing. At most
        # one of each overlapping pair is contaminated per tick.
        contaminated: dict[int, np.ndarray] = {}
        for i in range(len(emitted)):
            for j in range(i + 1, len(emitted)):
                if _iou_fast(emitted[i][1], emitted[j][1]) <= noise.overlap_iou:
                    continue
                back, front = (i, j) if rng.random() < 0.5 else (j, i)
                if back not in contaminated:
                    contaminated[back] = emitted[front][0].current_appearance(tick)

        detections: list[Detection] = []
        for idx, (ent, box) in enumerate(emitted):
            emb = ent.current_appearance(tick)
            if noise.pose_sigma > 0.0:
                c = rng.normal(0.0, noise.pose_sigma, size=noise.pose_dims)
                emb = emb + c @ ent.pose_basis
            if idx in contaminated:
                beta = rng.uniform(0.2, 0.5)
                emb = (1.0 - beta) * emb + beta * contaminated[idx]
            # Confusion spike: a non-actor detection briefly impersonates an
            # actor's current look.
            if (not ent.is_actor) and noise.confusion_rate > 0.0 and self.actors \
                    and rng.random() < noise.confusion_rate:
                victim = self.actors[rng.integers(len(self.actors))]
                beta = rng.uniform(0.65, 0.9)
                emb = (1.0 - beta) * emb + beta * victim.current_appearance(tick)
            if noise.embedding_sigma > 0.0:
                emb = emb + rng.standard_normal(dim) * (noise.embedding_sigma / math.sqrt(dim))
            emb = normalize(emb)

            cx = box.cx + rng.normal(0.0, noise.pos_sigma)
            cy = box.cy + rng.normal(0.0, noise.pos_sigma)
            w = max(box.w + rng.normal(0.0, noise.size_sigma), 1e-4)
            h = max(box.h + rng.normal(0.0, noise.size_sigma), 1e-4)
            detections.append(Detection(bbox=BBox(cx, cy, w, h), embedding=emb,
                                        truth_id=ent.name))

        if noise.clutter_rate > 0.0:
            for _ in range(int(rng.poisson(noise.clutter_rate))):
                cx, cy = rng.uniform(0.05, 0.95, size=2)
                w = rng.uniform(0.04, 0.15)
                h = rng.uniform(0.1, 0.3)
                emb = normalize(rng.standard_normal(dim))
                detections.append(Detection(bbox=BBox(float(cx), float(cy), float(w), float(h)),
                                            embedding=emb, truth_id=None))
        return detections


def _iou_fast(a: BBox, b: BBox) -> float:
    ix = min(a.x1, b.x1) - max(a.x0, b.x0)
    if ix <= 0.0:
        return 0.0
    iy = min(a.y1, b.y1) - max(a.y0, b.y0)
    if iy <= 0.0:
        return 0.0
    inter = ix * iy
    return inter / (a.area + b.area - inter)


@dataclass
class PlantConfig:
    tau_g: float = 0.05              # rate-loop time constant, seconds
    latency_ticks: int = 2           # command transport delay
    rate_limit_deg_s: float = 180.0
    yaw_limits: tuple = (-170.0, 170.0)
    pitch_limits: tuple = (-85.0, 85.0)
    roll_limits: tuple = (-45.0, 45.0)
    accel_arm_m: float = 1.0         # lever arm for synthetic lateral accel


class GimbalPlant:
    """First-order rate loop with transport delay and joint stops."""

    def __init__(self, cfg: PlantConfig | None = None):
        self.cfg = cfg or PlantConfig()
        self.yaw = 0.0
        self.pitch = 0.0
        self.roll = 0.0
        self.rates = np.zeros(3)        # yaw, pitch, roll deg/s
        self._queue: deque = deque([(0.0, 0.0, 0.0)] * self.cfg.latency_ticks)
        self.lateral_accel = 0.0        # m/s^2, synthesized from yaw rate change

    def step(self, commanded_rates: tuple[float, float, float], dt: float):
        if dt <= 0.0:
            raise ValueError("dt must be positive")
        cfg = self.cfg
        if cfg.latency_ticks > 0:
            self._queue.append(commanded_rates)
            cmd = np.asarray(self._queue.popleft(), dtype=np.float64)
        else:
            cmd = np.asarray(commanded_rates, dtype=np.float64)
        cmd = np.clip(cmd, -cfg.rate_limit_deg_s, cfg.rate_limit_deg_s)
        prev_yaw_rate = self.rates[0]
        blend = 1.0 - math.exp(-dt / cfg.tau_g)
        self.rates = self.rates + (cmd - self.rates) * blend
        self.yaw += self.rates[0] * dt
        self.pitch += self.rates[1] * dt
        self.roll += self.rates[2] * dt
        for attr, lim, idx in (("yaw", cfg.yaw_limits, 0),
                               ("pitch", cfg.pitch_limits, 1),
                               ("roll", cfg.roll_limits, 2)):
            val = getattr(self, attr)
            if val < lim[0]:
                setattr(self, attr, lim[0])
                self.rates[idx] = 0.0
            elif val > lim[1]:
                setattr(self, attr, lim[1])
                self.rates[idx] = 0.0
        self.lateral_accel = ((self.rates[0] - prev_yaw_rate) / dt) * DEG_TO_RAD * cfg.accel_arm_m


def plant_step(plant: GimbalPlant, commanded_rates: tuple[float, float, float],
               dt: float) -> GimbalPlant:
    plant.step(commanded_rates, dt)
    return plant
