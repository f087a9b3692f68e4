"""Shared screen-space geometry and identity primitives.

Screen coordinates are normalized to [0,1] x [0,1] with the origin at the
top-left of the frame. Pixel-space inputs are normalized on ingestion so
nothing downstream depends on a camera resolution. Tracker output may
transiently leave the unit square by a small margin while coasting on a
prediction; clamping happens only at display boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Default appearance-vector width. The re-identification network that would
# produce these in a live rig is replaced by synthetic vectors, so the width
# is a config knob rather than a model property.
EMBEDDING_DIM = 128

UNIT_NORM_TOL = 1e-6


@dataclass(frozen=True)
class ScreenPoint:
    """A point in normalized screen space (x right, y down)."""

    x: float
    y: float

    def clamped(self) -> "ScreenPoint":
        return ScreenPoint(min(max(self.x, 0.0), 1.0), min(max(self.y, 0.0), 1.0))

    def distance_to(self, other: "ScreenPoint") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def as_tuple(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box: normalized center plus width/height in (0,1]."""

    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self):
        if not (self.w > 0.0 and self.h > 0.0):
            raise ValueError(f"degenerate box: w={self.w}, h={self.h}")

    @property
    def center(self) -> ScreenPoint:
        return ScreenPoint(self.cx, self.cy)

    @property
    def x0(self) -> float:
        return self.cx - self.w / 2.0

    @property
    def x1(self) -> float:
        return self.cx + self.w / 2.0

    @property
    def y0(self) -> float:
        return self.cy - self.h / 2.0

    @property
    def y1(self) -> float:
        return self.cy + self.h / 2.0

    @property
    def area(self) -> float:
        return self.w * self.h

    @staticmethod
    def from_corners(x0: float, y0: float, x1: float, y1: float) -> "BBox":
        return BBox((x0 + x1) / 2.0, (y0 + y1) / 2.0, x1 - x0, y1 - y0)

    @staticmethod
    def from_pixels(cx: float, cy: float, w: float, h: float,
                    frame_w: float, frame_h: float) -> "BBox":
        """Normalize a pixel-space box against a frame size."""
        return BBox(cx / frame_w, cy / frame_h, w / frame_w, h / frame_h)


def iou(a: BBox, b: BBox) -> float:
    """Intersection-over-union (Jaccard index) of two boxes, in [0, 1]."""
    ix = min(a.x1, b.x1) - max(a.x0, b.x0)
    if ix <= 0.0:
        return 0.0
    iy = min(a.y1, b.y1) - max(a.y0, b.y0)
    if iy <= 0.0:
        return 0.0
    inter = ix * iy
    return inter / (a.area + b.area - inter)


def unit_embedding(values) -> np.ndarray:
    """Validate and return a unit-norm appearance vector."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError("embedding must be a flat vector")
    n = float(np.linalg.norm(v))
    if abs(n - 1.0) > UNIT_NORM_TOL:
        raise ValueError(f"embedding norm {n:.8f} is not unit")
    return v


def normalize(values) -> np.ndarray:
    """Project a vector onto the unit sphere."""
    v = np.asarray(values, dtype=np.float64)
    n = float(np.linalg.norm(v))
    if n == 0.0:
        raise ValueError("cannot normalize the zero vector")
    return v / n


def cosine_distance(a: np.ndarray, b: np.ndarray) -> float:
    """1 - dot(a, b) for unit vectors; ranges over [0, 2]."""
    return 1.0 - float(np.dot(a, b))


@dataclass(frozen=True)
class Tick:
    """Monotone frame counter with its wall duration."""

    index: int
    dt: float = 1.0 / 60.0

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")

    @property
    def time(self) -> float:
        return self.index * self.dt


# Actor identities are plain strings chosen in the script / at enrollment.
ActorId = str
