"""Shot-script data model, JSON parser/serializer, and validation.

A script is an ordered chain of camera behaviors. Each link carries the cue
that ends it (the final link may run forever) and a transition speed class
that sets how quickly control blends into the next behavior.

On-disk format (JSON):

    {
      "name": "two-shot",
      "actors": ["red", "blue"],
      "chain": [
        {"behavior": {"id": "intro", "kind": "framing",
                      "targets": [{"actor": "red", "point": [0.5, 0.5],
                                   "leniency": [0.1, 0.1]}]},
         "cue": {"kind": "speech", "word": "action"},
         "transition": "medium"},
        ...
      ]
    }

Behavior kinds: framing, path, pan, banking, idle.
Cue kinds: speech, elapsed, actor_appears, actor_disappears, landing_zone,
relative_size.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .geometry import ActorId, ScreenPoint

# A zero leniency radius would blow up the curve-profile term, so radii are
# floored here at parse time.
MIN_LENIENCY_RADIUS = 0.005
MAX_LENIENCY_RADIUS = 0.5

# Fade durations (seconds) for the named transition speed classes.
TRANSITION_SECONDS = {
    "slow": 1.5,
    "medium": 0.8,
    "fast": 0.35,
    "whip": 0.12,
}

# Trigger words whose normalized edit distance falls below this are too easy
# to confuse for one another.
SPEECH_DISTANCE_MIN = 0.4

# Seconds allotted to each segment of a path behavior; waypoint spacing then
# sets the traversal speed.
PATH_SEGMENT_SECONDS = 1.0


class ScriptError(Exception):
    """Base class for script parsing/validation failures."""


class ScriptSyntaxError(ScriptError):
    def __init__(self, location: str, detail: str):
        self.location = location
        self.detail = detail
        super().__init__(f"{location}: {detail}")


class UnknownActor(ScriptError):
    def __init__(self, name: str, location: str = ""):
        self.name = name
        super().__init__(f"unknown actor {name!r}" + (f" at {location}" if location else ""))


class UnknownBehaviorKind(ScriptError):
    def __init__(self, kind: str):
        self.kind = kind
        super().__init__(f"unknown behavior kind {kind!r}")


class InvalidParameter(ScriptError):
    def __init__(self, fieldname: str, reason: str):
        self.field = fieldname
        self.reason = reason
        super().__init__(f"invalid {fieldname}: {reason}")


@dataclass(frozen=True)
class FramingSpec:
    """Where one actor must sit on screen and how lenient the hold is."""

    actor: ActorId
    required: ScreenPoint
    leniency: tuple[float, float]  # ellipse radii (rx, ry), normalized


@dataclass(frozen=True)
class Behavior:
    id: str
    kind: str  # framing | path | pan | banking | idle

    # framing
    targets: tuple[FramingSpec, ...] = ()
    # path
    actor: ActorId | None = None
    points: tuple[ScreenPoint, ...] = ()
    leniency: tuple[float, float] | None = None
    # pan
    axis: str | None = None          # yaw | pitch
    direction: int = 1               # +1 | -1
    speed_deg_s: float = 0.0
    range_deg: float = 0.0
    # banking
    gain: float = 0.0
    smoothing_s: float = 0.0

    def actors(self) -> tuple[ActorId, ...]:
        """All actor ids this behavior frames."""
        if self.kind == "framing":
            return tuple(t.actor for t in self.targets)
        if self.kind == "path" and self.actor is not None:
            return (self.actor,)
        return ()


@dataclass(frozen=True)
class Cue:
    kind: str  # speech | elapsed | actor_appears | actor_disappears | landing_zone | relative_size
    word: str | None = None
    seconds: float = 0.0
    actor: ActorId | None = None
    sensitivity_ticks: int = 1
    rect: tuple[float, float, float, float] | None = None  # x0, y0, x1, y1
    min_height_fraction: float = 0.0


@dataclass(frozen=True)
class ChainLink:
    behavior: Behavior
    cue: Cue | None
    transition: str = "medium"

    @property
    def transition_seconds(self) -> float:
        return TRANSITION_SECONDS[self.transition]


@dataclass(frozen=True)
class Script:
    name: str
    actors: tuple[ActorId, ...]
    chain: tuple[ChainLink, ...] = field(default_factory=tuple)

    def speech_words(self) -> list[str]:
        return [link.cue.word for link in self.chain
                if link.cue is not None and link.cue.kind == "speech"]


def levenshtein(a: str, b: str) -> int:
    """Plain edit distance, small-string DP."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def normalized_levenshtein(a: str, b: str) -> float:
    m = max(len(a), len(b))
    if m == 0:
        return 0.0
    return levenshtein(a, b) / m


@dataclass(frozen=True)
class RejectedPair:
    a: str
    b: str
    distance: float


def validate_speech_set(words: list[str]) -> RejectedPair | None:
    """Reject any word pair too close in normalized edit distance.

    Returns the first offending pair, or None when the whole set is usable.
    """
    lowered = [w.lower() for w in words]
    for i in range(len(lowered)):
        for j in range(i + 1, len(lowered)):
            d = normalized_levenshtein(lowered[i], lowered[j])
            if d < SPEECH_DISTANCE_MIN:
                return RejectedPair(words[i], words[j], d)
    return None


def _require(obj: dict, key: str, location: str):
    if key not in obj:
        raise ScriptSyntaxError(location, f"missing field {key!r}")
    return obj[key]


def _point(raw, location: str) -> ScreenPoint:
    if (not isinstance(raw, (list, tuple))) or len(raw) != 2:
        raise ScriptSyntaxError(location, "point must be [x, y]")
    x, y = float(raw[0]), float(raw[1])
    if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
        raise InvalidParameter(location, "point outside [0,1] screen space")
    return ScreenPoint(x, y)


def _leniency(raw, location: str) -> tuple[float, float]:
    if (not isinstance(raw, (list, tuple))) or len(raw) != 2:
        raise ScriptSyntaxError(location, "leniency must be [rx, ry]")
    rx, ry = float(raw[0]), float(raw[1])
    if rx < 0.0 or ry < 0.0:
        raise InvalidParameter(location, "leniency radii must be >= 0")
    if rx > MAX_LENIENCY_RADIUS or ry > MAX_LENIENCY_RADIUS:
        raise InvalidParameter(location, f"leniency radii must be <= {MAX_LENIENCY_RADIUS}")
    return (max(rx, MIN_LENIENCY_RADIUS), max(ry, MIN_LENIENCY_RADIUS))


def _parse_behavior(raw: dict, actors: set[str], index: int) -> Behavior:
    loc = f"chain[{index}].behavior"
    if not isinstance(raw, dict):
        raise ScriptSyntaxError(loc, "behavior must be an object")
    bid = str(_require(raw, "id", loc))
    kind = str(_require(raw, "kind", loc))

    if kind == "framing":
        targets_raw = _require(raw, "targets", loc)
        if not isinstance(targets_raw, list) or not targets_raw:
            raise InvalidParameter(f"{loc}.targets", "framing needs at least one target")
        targets = []
        seen = set()
        for k, t in enumerate(targets_raw):
            tloc = f"{loc}.targets[{k}]"
            actor = str(_require(t, "actor", tloc))
            if actor not in actors:
                raise UnknownActor(actor, tloc)
            if actor in seen:
                raise InvalidParameter(tloc, f"actor {actor!r} framed twice")
            seen.add(actor)
            targets.append(FramingSpec(
                actor=actor,
                required=_point(_require(t, "point", tloc), f"{tloc}.point"),
                leniency=_leniency(_require(t, "leniency", tloc), f"{tloc}.leniency"),
            ))
        return Behavior(id=bid, kind=kind, targets=tuple(targets))

    if kind == "path":
        actor = str(_require(raw, "actor", loc))
        if actor not in actors:
            raise UnknownActor(actor, loc)
        pts_raw = _require(raw, "points", loc)
        if not isinstance(pts_raw, list) or len(pts_raw) < 2:
            raise InvalidParameter(f"{loc}.points", "path needs at least two waypoints")
        pts = tuple(_point(p, f"{loc}.points[{k}]") for k, p in enumerate(pts_raw))
        len_raw = raw.get("leniency", [0.05, 0.05])
        return Behavior(id=bid, kind=kind, actor=actor, points=pts,
                        leniency=_leniency(len_raw, f"{loc}.leniency"))

    if kind == "pan":
        axis = str(_require(raw, "axis", loc))
        if axis not in ("yaw", "pitch"):
            raise InvalidParameter(f"{loc}.axis", "must be 'yaw' or 'pitch'")
        direction = int(raw.get("direction", 1))
        if direction not in (1, -1):
            raise InvalidParameter(f"{loc}.direction", "must be 1 or -1")
        speed = float(_require(raw, "speed_deg_s", loc))
        if speed <= 0.0:
            raise InvalidParameter(f"{loc}.speed_deg_s", "must be > 0")
        rng = float(_require(raw, "range_deg", loc))
        if rng <= 0.0:
            raise InvalidParameter(f"{loc}.range_deg", "must be > 0")
        return Behavior(id=bid, kind=kind, axis=axis, direction=direction,
                        speed_deg_s=speed, range_deg=rng)

    if kind == "banking":
        gain = float(_require(raw, "gain", loc))
        smoothing = float(_require(raw, "smoothing_s", loc))
        if smoothing <= 0.0:
            raise InvalidParameter(f"{loc}.smoothing_s", "must be > 0")
        return Behavior(id=bid, kind=kind, gain=gain, smoothing_s=smoothing)

    if kind == "idle":
        return Behavior(id=bid, kind=kind)

    raise UnknownBehaviorKind(kind)


def _parse_cue(raw, actors: set[str], index: int) -> Cue | None:
    loc = f"chain[{index}].cue"
    if raw is None:
        return None
    if not isinstance(raw, dict):
        raise ScriptSyntaxError(loc, "cue must be an object or null")
    kind = str(_require(raw, "kind", loc))

    if kind == "speech":
        word = str(_require(raw, "word", loc)).strip().lower()
        if not word:
            raise InvalidParameter(f"{loc}.word", "must not be empty")
        return Cue(kind=kind, word=word)

    if kind == "elapsed":
        seconds = float(_require(raw, "seconds", loc))
        if seconds <= 0.0:
            raise InvalidParameter("duration", "must be > 0")
        return Cue(kind=kind, seconds=seconds)

    if kind in ("actor_appears", "actor_disappears"):
        actor = str(_require(raw, "actor", loc))
        if actor not in actors:
            raise UnknownActor(actor, loc)
        sens = int(raw.get("sensitivity_ticks", 1))
        if sens < 1:
            raise InvalidParameter(f"{loc}.sensitivity_ticks", "must be >= 1")
        return Cue(kind=kind, actor=actor, sensitivity_ticks=sens)

    if kind == "landing_zone":
        actor = str(_require(raw, "actor", loc))
        if actor not in actors:
            raise UnknownActor(actor, loc)
        rect_raw = _require(raw, "rect", loc)
        if (not isinstance(rect_raw, (list, tuple))) or len(rect_raw) != 4:
            raise ScriptSyntaxError(loc, "rect must be [x0, y0, x1, y1]")
        x0, y0, x1, y1 = (float(v) for v in rect_raw)
        if not (x0 < x1 and y0 < y1):
            raise InvalidParameter(f"{loc}.rect", "must have x0 < x1 and y0 < y1")
        if min(x0, y0) < 0.0 or max(x1, y1) > 1.0:
            raise InvalidParameter(f"{loc}.rect", "must lie inside [0,1] screen space")
        return Cue(kind=kind, actor=actor, rect=(x0, y0, x1, y1))

    if kind == "relative_size":
        actor = str(_require(raw, "actor", loc))
        if actor not in actors:
            raise UnknownActor(actor, loc)
        frac = float(_require(raw, "min_height_fraction", loc))
        if not (0.0 < frac <= 1.0):
            raise InvalidParameter(f"{loc}.min_height_fraction", "must be in (0, 1]")
        return Cue(kind=kind, actor=actor, min_height_fraction=frac)

    raise InvalidParameter(f"{loc}.kind", f"unknown cue kind {kind!r}")


def parse_script_dict(doc: dict) -> Script:
    """Validate a decoded script document into a Script."""
    if not isinstance(doc, dict):
        raise ScriptSyntaxError("$", "script must be a JSON object")
    name = str(_require(doc, "name", "$"))
    actors_raw = _require(doc, "actors", "$")
    if not isinstance(actors_raw, list):
        raise ScriptSyntaxError("$.actors", "must be an array of actor names")
    actors = tuple(str(a) for a in actors_raw)
    if len(set(actors)) != len(actors):
        raise InvalidParameter("$.actors", "duplicate actor name")
    actor_set = set(actors)

    chain_raw = _require(doc, "chain", "$")
    if not isinstance(chain_raw, list) or not chain_raw:
        raise ScriptSyntaxError("$.chain", "must be a non-empty array")

    links = []
    ids = set()
    for i, raw in enumerate(chain_raw):
        if not isinstance(raw, dict):
            raise ScriptSyntaxError(f"chain[{i}]", "link must be an object")
        behavior = _parse_behavior(_require(raw, "behavior", f"chain[{i}]"), actor_set, i)
        if behavior.id in ids:
            raise InvalidParameter(f"chain[{i}].behavior.id", f"duplicate id {behavior.id!r}")
        ids.add(behavior.id)
        cue = _parse_cue(raw.get("cue"), actor_set, i)
        if cue is None and i != len(chain_raw) - 1:
            raise InvalidParameter(f"chain[{i}].cue", "only the final link may omit its cue")
        transition = str(raw.get("transition", "medium"))
        if transition not in TRANSITION_SECONDS:
            raise InvalidParameter(f"chain[{i}].transition",
                                   f"must be one of {sorted(TRANSITION_SECONDS)}")
        links.append(ChainLink(behavior=behavior, cue=cue, transition=transition))

    script = Script(name=name, actors=actors, chain=tuple(links))

    rejected = validate_speech_set(script.speech_words())
    if rejected is not None:
        raise InvalidParameter(
            "word", f"trigger words {rejected.a!r} and {rejected.b!r} are too similar "
                    f"(normalized distance {rejected.distance:.2f} < {SPEECH_DISTANCE_MIN})")
    return script


def parse_script(text: str) -> Script:
    """Parse and validate a script file's JSON content."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScriptSyntaxError(f"line {e.lineno}", e.msg) from e
    return parse_script_dict(doc)


def load_script(path) -> Script:
    with open(path, "r", encoding="utf-8") as f:
        return parse_script(f.read())


def _behavior_dict(b: Behavior) -> dict:
    out: dict = {"id": b.id, "kind": b.kind}
    if b.kind == "framing":
        out["targets"] = [
            {"actor": t.actor, "point": [t.required.x, t.required.y],
             "leniency": [t.leniency[0], t.leniency[1]]}
            for t in b.targets
        ]
    elif b.kind == "path":
        out["actor"] = b.actor
        out["points"] = [[p.x, p.y] for p in b.points]
        out["leniency"] = list(b.leniency)
    elif b.kind == "pan":
        out.update(axis=b.axis, direction=b.direction,
                   speed_deg_s=b.speed_deg_s, range_deg=b.range_deg)
    elif b.kind == "banking":
        out.update(gain=b.gain, smoothing_s=b.smoothing_s)
    return out


def _cue_dict(c: Cue | None):
    if c is None:
        return None
    if c.kind == "speech":
        return {"kind": c.kind, "word": c.word}
    if c.kind == "elapsed":
        return {"kind": c.kind, "seconds": c.seconds}
    if c.kind in ("actor_appears", "actor_disappears"):
        return {"kind": c.kind, "actor": c.actor, "sensitivity_ticks": c.sensitivity_ticks}
    if c.kind == "landing_zone":
        return {"kind": c.kind, "actor": c.actor, "rect": list(c.rect)}
    if c.kind == "relative_size":
        return {"kind": c.kind, "actor": c.actor, "min_height_fraction": c.min_height_fraction}
    raise ValueError(f"unserializable cue kind {c.kind!r}")


def script_to_dict(script: Script) -> dict:
    return {
        "name": script.name,
        "actors": list(script.actors),
        "chain": [
            {"behavior": _behavior_dict(link.behavior),
             "cue": _cue_dict(link.cue),
             "transition": link.transition}
            for link in script.chain
        ],
    }


def serialize_script(script: Script) -> str:
    return json.dumps(script_to_dict(script), indent=2)
