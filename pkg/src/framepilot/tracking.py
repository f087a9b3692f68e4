"""Long-duration multi-actor tracking by detection.

Each enrolled actor owns one track. Per tick the tracker builds a cost
matrix over (track, detection) pairs, solves a global linear assignment,
and advances each track's lifecycle:

    Normal -> Lost          after `lost_after` unmatched ticks
    Lost   -> Recovering    on an appearance match
    Recovering -> Normal    after `recovery_matches` consecutive matches
    Recovering -> Lost      on the first miss (candidate evidence discarded)

Costs follow a dynamic structure: spatial overlap (1 - IOU) alone while a
track sits in an uncrowded neighborhood, overlap plus appearance when
detections compete, and appearance only for lost/recovering tracks. A per
actor gallery of appearance encodings backs the appearance cost; entries
are admitted only in uncrowded normal tracking and only when sufficiently
novel, and the gallery is randomly thinned back to its budget once it
overflows by 10%, which keeps a fading memory of older appearances.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from .geometry import ActorId, BBox, iou

# Cost placed on inadmissible pairs; large enough to dominate any sum of
# real costs (each bounded by 3) in a 6x6-ish assignment.
FORBIDDEN = 1e6


class Phase(Enum):
    NORMAL = "normal"
    LOST = "lost"
    RECOVERING = "recovering"


@dataclass(frozen=True)
class Detection:
    """One frame observation: box, unit appearance vector, optional truth."""

    bbox: BBox
    embedding: np.ndarray
    class_tag: str = "person"
    truth_id: str | None = None


@dataclass
class TrackerConfig:
    # Spatial gates. Costs are 1 - IOU, so tau_overlap = 0.85 means a
    # detection "competes" for a track once their IOU exceeds 0.15.
    tau_overlap: float = 0.85
    tau_iou_max: float = 0.9
    # Appearance gates.
    tau_feature_max: float = 0.35
    tau_avg_max: float = 0.30
    avg_lowest_n: int = 3
    # Lifecycle.
    recovery_matches: int = 5
    lost_after: int = 15
    # Gallery management.
    gallery_budget: int = 120
    tau_include: float = 0.05
    # Box smoothing.
    dt: float = 1.0 / 60.0
    measurement_var: float = 1e-4     # detector center noise, sigma ~ 0.01
    accel_var: float = 1.0            # white-accel spectral density
    size_alpha: float = 0.3           # EMA factor for box width/height
    # Ablation switches (see the evaluation harness).
    no_recovery: bool = False
    faulty_encodings: bool = False
    greedy_encodings: bool = False
    simple_history: bool = False

    def __post_init__(self):
        if self.avg_lowest_n > self.gallery_budget:
            raise ValueError("avg_lowest_n must not exceed the gallery budget")
        if not (0 < self.tau_overlap <= 1.0 and 0 < self.tau_iou_max <= 1.0):
            raise ValueError("IOU gates must lie in (0, 1]")

    @property
    def gallery_cap(self) -> int:
        """Overflow бound: thinning triggers at 10% above the budget."""
        return math.ceil(1.1 * self.gallery_budget)


class DuplicateActor(Exception):
    pass


class BoxFilter:
    """Constant-velocity Kalman on the box center, EMA on its size.

    Both axes share one covariance (identical noise model), so the filter
    carries a single 2x2 P for [position, velocity].
    """

    def __init__(self, bbox: BBox, cfg: TrackerConfig):
        self.x = np.array([bbox.cx, bbox.cy], dtype=np.float64)
        self.v = np.zeros(2, dtype=np.float64)
        self.w = bbox.w
        self.h = bbox.h
        self._r = cfg.measurement_var
        self._alpha = cfg.size_alpha
        dt = cfg.dt
        q = cfg.accel_var
        self._q00 = q * dt ** 4 / 4.0
        self._q01 = q * dt ** 3 / 2.0
        self._q11 = q * dt ** 2
        self._dt = dt
        # Start uncertain so the first updates snap to the measurements.
        self.p00, self.p01, self.p11 = 1e-2, 0.0, 1e-1

    def reset(self, bbox: BBox):
        self.x[0], self.x[1] = bbox.cx, bbox.cy
        self.v[:] = 0.0
        self.w, self.h = bbox.w, bbox.h
        self.p00, self.p01, self.p11 = 1e-2, 0.0, 1e-1

    def predict(self):
        dt = self._dt
        self.x += self.v * dt
        p00, p01, p11 = self.p00, self.p01, self.p11
        self.p00 = p00 + 2.0 * dt * p01 + dt * dt * p11 + self._q00
        self.p01 = p01 + dt * p11 + self._q01
        self.p11 = p11 + self._q11

    def update(self, bbox: BBox):
        s = self.p00 + self._r
        k0 = self.p00 / s
        k1 = self.p01 / s
        innov = np.array([bbox.cx, bbox.cy]) - self.x
        self.x += k0 * innov
        self.v += k1 * innov
        p00, p01, p11 = self.p00, self.p01, self.p11
        self.p00 = (1.0 - k0) * p00
        self.p01 = (1.0 - k0) * p01
        self.p11 = p11 - k1 * p01
        a = self._alpha
        self.w += a * (bbox.w - self.w)
        self.h += a * (bbox.h - self.h)

    def bbox(self) -> BBox:
        return BBox(float(self.x[0]), float(self.x[1]), self.w, self.h)


class Track:
    """State for one enrolled actor."""

    def __init__(self, actor: ActorId, det: Detection, tick: int, cfg: TrackerConfig):
        self.actor = actor
        self.cfg = cfg
        self.filter = BoxFilter(det.bbox, cfg)
        dim = det.embedding.shape[0]
        self._gallery = np.empty((cfg.gallery_cap + 1, dim), dtype=np.float64)
        self._ages = np.empty(cfg.gallery_cap + 1, dtype=np.int64)
        self._gallery[0] = det.embedding
        self._ages[0] = tick
        self.gallery_len = 1
        self.phase = Phase.NORMAL
        self.misses = 0
        self.recovery_streak = 0
        self.recovery_buffer: list[np.ndarray] = []
        self.last_update = tick
        self.last_truth: str | None = det.truth_id

    @property
    def gallery(self) -> np.ndarray:
        return self._gallery[: self.gallery_len]

    @property
    def gallery_ages(self) -> np.ndarray:
        return self._ages[: self.gallery_len]

    def bbox(self) -> BBox:
        return self.filter.bbox()

    def feature_costs(self, det_embeddings: np.ndarray, n_avg: int,
                      need_avg: bool = True):
        """Min and avg-of-N-lowest cosine distances to the gallery.

        det_embeddings is (M, dim); returns two (M,) vectors (the second is
        None when not requested).
        """
        dists = 1.0 - self.gallery @ det_embeddings.T  # (L, M)
        cmin = dists.min(axis=0)
        if not need_avg:
            return cmin, None
        n = min(n_avg, self.gallery_len)
        if n == self.gallery_len:
            cavg = dists.mean(axis=0)
        else:
            cavg = np.partition(dists, n - 1, axis=0)[:n].mean(axis=0)
        return cmin, cavg

    def append_encoding(self, emb: np.ndarray, tick: int):
        self._gallery[self.gallery_len] = emb
        self._ages[self.gallery_len] = tick
        self.gallery_len += 1

    def trim_oldest(self, keep: int):
        if self.gallery_len > keep:
            drop = self.gallery_len - keep
            self._gallery[:keep] = self._gallery[drop: self.gallery_len]
            self._ages[:keep] = self._ages[drop: self.gallery_len]
            self.gallery_len = keep


@dataclass(frozen=True)
class TrackReport:
    """Per-track output of one tracker step."""

    actor: ActorId
    phase: Phase
    bbox: BBox | None            # present only under normal tracking
    matched: bool
    matched_truth: str | None    # truth id of the matched detection, if any
    gallery_size: int


def insert_encoding(track: Track, embedding: np.ndarray, competitors: int,
                    cfg: TrackerConfig, tick: int,
                    nearest: float | None = None) -> bool:
    """Admit a matched detection's encoding into the track's gallery.

    Admission requires normal tracking in an uncrowded neighborhood and a
    minimum novelty against every stored encoding. The ablation switches
    disable individual checks; simple_history bypasses management entirely
    and keeps only the most recent encodings.
    """
    if track.phase is not Phase.NORMAL:
        return False
    if cfg.simple_history:
        track.append_encoding(embedding, tick)
        track.trim_oldest(cfg.gallery_budget)
        return True
    if competitors >= 2 and not cfg.faulty_encodings:
        return False
    if not cfg.greedy_encodings:
        if nearest is None:
            nearest = float(np.min(1.0 - track.gallery @ embedding))
        if nearest < cfg.tau_include:
            return False
    track.append_encoding(embedding, tick)
    return True


def downsample_gallery(track: Track, cfg: TrackerConfig, rng: np.random.Generator):
    """Thin an overflowing gallery back to its budget, uniformly at random.

    Triggered once the gallery is 10% over budget; survivors keep their
    relative order, so older encodings fade stochastically over repeated
    thinnings rather than being dropped outright.
    """
    if track.gallery_len < cfg.gallery_cap:
        return
    keep = np.sort(rng.choice(track.gallery_len, size=cfg.gallery_budget, replace=False))
    track._gallery[: cfg.gallery_budget] = track._gallery[keep]
    track._ages[: cfg.gallery_budget] = track._ages[keep]
    track.gallery_len = cfg.gallery_budget


class CostMatrix(NamedTuple):
    costs: np.ndarray
    competitors: np.ndarray
    feature_min: np.ndarray


def build_cost_matrix(tracks: list[Track], detections: list[Detection],
                      cfg: TrackerConfig):
    """Association costs for every (track, detection) pair.

    Returns a CostMatrix: costs is (T, M) with inadmissible pairs set to
    FORBIDDEN, competitors[i] counts detections spatially competing for
    track i, and feature_min[i, j] is the smallest gallery distance (reused
    by the encoding-insertion novelty check).
    """
    n_tracks, n_dets = len(tracks), len(detections)
    costs = np.full((n_tracks, n_dets), FORBIDDEN, dtype=np.float64)
    competitors = np.zeros(n_tracks, dtype=np.int64)
    feature_min = np.full((n_tracks, n_dets), 2.0, dtype=np.float64)
    if n_dets == 0 or n_tracks == 0:
        return CostMatrix(costs, competitors, feature_min)

    det_emb = np.stack([d.embedding for d in detections])
    # Scalar corner tuples: detection counts are small enough that plain
    # Python floats beat numpy-call overhead in this loop.
    det_geom = []
    for d in detections:
        b = d.bbox
        det_geom.append((b.cx - b.w / 2, b.cy - b.h / 2,
                         b.cx + b.w / 2, b.cy + b.h / 2, b.w * b.h))

    for i, track in enumerate(tracks):
        f = track.filter
        tw, th = f.w, f.h
        tx0, ty0 = f.x[0] - tw / 2, f.x[1] - th / 2
        tx1, ty1 = tx0 + tw, ty0 + th
        tarea = tw * th
        c_iou = []
        overlap_count = 0
        for (x0, y0, x1, y1, area) in det_geom:
            ix = (x1 if x1 < tx1 else tx1) - (x0 if x0 > tx0 else tx0)
            if ix > 0.0:
                iy = (y1 if y1 < ty1 else ty1) - (y0 if y0 > ty0 else ty0)
                inter = ix * iy if iy > 0.0 else 0.0
            else:
                inter = 0.0
            c = 1.0 - inter / (area + tarea - inter)
            if c < cfg.tau_overlap:
                overlap_count += 1
            c_iou.append(c)
        competitors[i] = overlap_count

        dists = 1.0 - track.gallery @ det_emb.T  # (L, M)
        c_feat = dists.min(axis=0)
        feature_min[i] = c_feat
        row = costs[i]

        if track.phase is Phase.NORMAL and overlap_count < 2:
            # At most one detection is in spatial contention: overlap alone
            # carries the cost. Appearance still gates admissibility, so a
            # stranger standing where the actor's detection dropped out
            # cannot take the track over on position alone.
            for j in range(n_dets):
                if c_iou[j] <= cfg.tau_iou_max and c_feat[j] <= cfg.tau_feature_max:
                    row[j] = c_iou[j]
            continue

        n = min(cfg.avg_lowest_n, track.gallery_len)
        if n == track.gallery_len:
            c_avg = dists.mean(axis=0)
        else:
            c_avg = np.partition(dists, n - 1, axis=0)[:n].mean(axis=0)

        if track.phase is Phase.NORMAL:
            for j in range(n_dets):
                if (c_feat[j] <= cfg.tau_feature_max and c_avg[j] <= cfg.tau_avg_max
                        and c_iou[j] <= cfg.tau_iou_max):
                    row[j] = c_feat[j] + c_iou[j]
        else:
            # Appearance alone carries the cost. A lost track's box is stale
            # so it gets no spatial gate; a recovering track is confirming
            # one spatial hypothesis, so its streak may not teleport between
            # detections on opposite sides of the frame.
            spatial = track.phase is Phase.RECOVERING
            for j in range(n_dets):
                if c_feat[j] <= cfg.tau_feature_max and c_avg[j] <= cfg.tau_avg_max \
                        and (not spatial or c_iou[j] <= cfg.tau_iou_max):
                    row[j] = c_feat[j]

    return CostMatrix(costs, competitors, feature_min)


def assign(costs: np.ndarray):
    """Minimum-cost one-to-one assignment, skipping inadmissible pairs.

    Returns (matches, unmatched_rows, unmatched_cols); matches is a list of
    (row, col) with total cost globally minimal over admissible pairs.
    """
    n_rows, n_cols = costs.shape
    if n_rows == 0 or n_cols == 0:
        return [], list(range(n_rows)), list(range(n_cols))
    rows, cols = linear_sum_assignment(costs)
    matches = [(int(r), int(c)) for r, c in zip(rows, cols) if costs[r, c] < FORBIDDEN]
    matched_rows = {r for r, _ in matches}
    matched_cols = {c for _, c in matches}
    return (matches,
            [r for r in range(n_rows) if r not in matched_rows],
            [c for c in range(n_cols) if c not in matched_cols])


def brute_force_assignment_cost(costs: np.ndarray) -> float:
    """Exhaustive assignment minimum; oracle for small matrices only."""
    import itertools
    n_rows, n_cols = costs.shape
    best = math.inf
    if n_rows <= n_cols:
        for perm in itertools.permutations(range(n_cols), n_rows):
            best = min(best, sum(costs[i, j] for i, j in enumerate(perm)))
    else:
        for perm in itertools.permutations(range(n_rows), n_cols):
            best = min(best, sum(costs[i, j] for j, i in enumerate(perm)))
    return best


class Tracker:
    """The per-session association state machine."""

    def __init__(self, cfg: TrackerConfig | None = None, seed: int = 0):
        self.cfg = cfg or TrackerConfig()
        self.rng = np.random.default_rng(seed)
        self.tracks: dict[ActorId, Track] = {}
        self.tick = -1

    def enroll(self, detection: Detection, actor: ActorId, tick: int | None = None) -> Track:
        """Start tracking an actor from a chosen detection."""
        if actor in self.tracks:
            raise DuplicateActor(actor)
        track = Track(actor, detection, self.tick if tick is None else tick, self.cfg)
        self.tracks[actor] = track
        return track

    def step(self, detections: list[Detection], tick: int) -> dict[ActorId, TrackReport]:
        """Advance every track against one tick's detections."""
        if tick <= self.tick:
            raise ValueError(f"non-monotone tick {tick} (last was {self.tick})")
        self.tick = tick
        cfg = self.cfg
        tracks = list(self.tracks.values())

        for tr in tracks:
            if tr.phase is not Phase.LOST:
                tr.filter.predict()

        cm = build_cost_matrix(tracks, detections, cfg)
        competitors = cm.competitors
        matches, unmatched_tracks, _ = assign(cm.costs)

        matched_ids = {}
        for ti, dj in matches:
            matched_ids[ti] = dj
            tr, det = tracks[ti], detections[dj]
            if tr.phase is Phase.NORMAL:
                tr.filter.update(det.bbox)
                tr.misses = 0
                insert_encoding(tr, det.embedding, int(competitors[ti]), cfg, tick,
                                nearest=float(cm.feature_min[ti, dj]))
            elif tr.phase is Phase.LOST:
                tr.filter.reset(det.bbox)
                if cfg.no_recovery:
                    tr.phase = Phase.NORMAL
                    tr.misses = 0
                    insert_encoding(tr, det.embedding, int(competitors[ti]), cfg, tick,
                                    nearest=float(cm.feature_min[ti, dj]))
                else:
                    tr.phase = Phase.RECOVERING
                    tr.recovery_streak = 1
                    tr.recovery_buffer = [det.embedding]
            else:  # RECOVERING
                tr.filter.update(det.bbox)
                tr.recovery_streak += 1
                tr.recovery_buffer.append(det.embedding)
                if tr.recovery_streak >= cfg.recovery_matches:
                    tr.phase = Phase.NORMAL
                    tr.misses = 0
                    if not cfg.simple_history:
                        # Evidence from the successful recovery goes into the
                        # gallery wholesale so the re-found look is locked in.
                        for emb in tr.recovery_buffer:
                            tr.append_encoding(emb, tick)
                            if tr.gallery_len >= tr._gallery.shape[0]:
                                downsample_gallery(tr, cfg, self.rng)
                    tr.recovery_buffer = []
            tr.last_update = tick
            tr.last_truth = det.truth_id

        for ti in unmatched_tracks:
            tr = tracks[ti]
            if tr.phase is Phase.NORMAL:
                tr.misses += 1
                if tr.misses >= cfg.lost_after:
                    tr.phase = Phase.LOST
                    tr.filter.v[:] = 0.0
            elif tr.phase is Phase.RECOVERING:
                tr.phase = Phase.LOST
                tr.recovery_streak = 0
                tr.recovery_buffer = []

        reports = {}
        for ti, tr in enumerate(tracks):
            downsample_gallery(tr, cfg, self.rng)
            dj = matched_ids.get(ti)
            reports[tr.actor] = TrackReport(
                actor=tr.actor,
                phase=tr.phase,
                bbox=tr.bbox() if tr.phase is Phase.NORMAL else None,
                matched=dj is not None,
                matched_truth=detections[dj].truth_id if dj is not None else None,
                gallery_size=tr.gallery_len,
            )
        return reports


def write_detections(path, stream) -> None:
    """Persist a detection stream as JSON-lines replay records.

    `stream` yields (tick, detections) pairs.
    """
    with open(path, "w", encoding="utf-8") as f:
        for tick, dets in stream:
            for d in dets:
                rec = {
                    "tick": tick,
                    "bbox": [d.bbox.cx, d.bbox.cy, d.bbox.w, d.bbox.h],
                    "embedding": [float(v) for v in d.embedding],
                }
                if d.truth_id is not None:
                    rec["truth_id"] = d.truth_id
                f.write(json.dumps(rec) + "\n")


def read_detections(path) -> dict[int, list[Detection]]:
    """Load a JSON-lines replay file into per-tick detection lists."""
    by_tick: dict[int, list[Detection]] = {}
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            cx, cy, w, h = rec["bbox"]
            det = Detection(
                bbox=BBox(cx, cy, w, h),
                embedding=np.asarray(rec["embedding"], dtype=np.float64),
                truth_id=rec.get("truth_id"),
            )
            by_tick.setdefault(int(rec["tick"]), []).append(det)
    return by_tick
