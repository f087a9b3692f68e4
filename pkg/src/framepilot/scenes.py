"""Canned synthetic scenes and scripts used by tests, the CLI, and the
evaluation harness.

The standard scene stages the situations the tracker must survive: an
enrollment sweep where each actor shows every facet of their appearance,
three long occlusions (each changing the occluded actor's facet), and a
wandering imposter that repeatedly crosses both actors and occasionally
presents confusably actor-like embeddings.
"""

from __future__ import annotations

import math

from .script import Script, parse_script_dict
from .sim import EntitySpec, NoiseSpec, Occluder, SceneSpec

DT = 1.0 / 60.0


def _sinusoid_waypoints(duration_s: float, center_yaw: float, amp_yaw: float,
                        period_s: float, pitch: float = 0.0, amp_pitch: float = 0.0,
                        step_s: float = 0.25, phase: float = 0.0) -> list:
    n = int(duration_s / step_s) + 2
    out = []
    for i in range(n):
        t = i * step_s
        w = 2.0 * math.pi * t / period_s + phase
        out.append([t, center_yaw + amp_yaw * math.sin(w),
                    pitch + amp_pitch * math.sin(0.7 * w)])
    return out


def standard_scene(seed: int = 0) -> SceneSpec:
    """Two actors, one imposter, three occlusions, 5000 ticks at 60 Hz."""
    duration = 5000 * DT
    alpha = EntitySpec(
        name="alpha",
        waypoints=_sinusoid_waypoints(duration, center_yaw=-8.0, amp_yaw=5.0,
                                      period_s=23.0, amp_pitch=1.5),
        facet_count=3,
    )
    bravo = EntitySpec(
        name="bravo",
        waypoints=_sinusoid_waypoints(duration, center_yaw=28.0, amp_yaw=5.0,
                                      period_s=19.0, amp_pitch=1.5, phase=1.3),
        facet_count=3,
    )
    # The imposter sweeps across both actors' territories and periodically
    # leaves the frame entirely (captured tracks on it go stale and drop).
    shade = EntitySpec(
        name="shade",
        waypoints=_sinusoid_waypoints(duration, center_yaw=10.0, amp_yaw=50.0,
                                      period_s=16.0, pitch=-3.5, phase=0.4),
        facet_count=1,
    )
    occluders = [
        Occluder(rect=(-16.0, 0.0, -5.0, 5.0), interval=(25.0, 26.0)),      # alpha, 60 ticks
        Occluder(rect=(20.0, 36.0, -5.0, 5.0), interval=(45.0, 45.0 + 80 * DT)),  # bravo, 80 ticks
        Occluder(rect=(-16.0, 0.0, -5.0, 5.0), interval=(70.0, 70.0 + 40 * DT)),  # alpha, 40 ticks
    ]
    return SceneSpec(
        name="standard-occlusion",
        duration_s=duration,
        seed=seed,
        camera=(10.0, 0.0),
        actors=[alpha, bravo],
        imposters=[shade],
        occluders=occluders,
        noise=NoiseSpec(pos_sigma=0.01, embedding_sigma=0.05, dropout=0.03,
                        clutter_rate=0.4, confusion_rate=0.03),
        enrollment_sweep_s=10.0,
    )


def standard_script() -> Script:
    """Two-shot framing for the standard scene's actors."""
    return parse_script_dict({
        "name": "two-shot",
        "actors": ["alpha", "bravo"],
        "chain": [
            {"behavior": {"id": "both", "kind": "framing", "targets": [
                {"actor": "alpha", "point": [0.35, 0.5], "leniency": [0.12, 0.12]},
                {"actor": "bravo", "point": [0.65, 0.5], "leniency": [0.12, 0.12]},
            ]}, "cue": None, "transition": "medium"},
        ],
    })


def imposter_scene(seed: int = 0, separation: float = 0.6,
                   occlusion_ticks: int = 60) -> SceneSpec:
    """One actor and one deliberately similar imposter; the actor hides for
    `occlusion_ticks` while only the imposter stays visible."""
    duration = 20.0
    actor = EntitySpec(
        name="alpha",
        waypoints=_sinusoid_waypoints(duration, center_yaw=-10.0, amp_yaw=3.0,
                                      period_s=11.0),
        facet_count=1,
    )
    imposter = EntitySpec(
        name="shade",
        waypoints=_sinusoid_waypoints(duration, center_yaw=14.0, amp_yaw=3.0,
                                      period_s=9.0, phase=2.0),
        facet_count=1,
        similar_to={"actor": "alpha", "distance": separation},
    )
    occluder = Occluder(rect=(-16.0, -4.0, -5.0, 5.0),
                        interval=(8.0, 8.0 + occlusion_ticks * DT))
    return SceneSpec(
        name="imposter-occlusion",
        duration_s=duration,
        seed=seed,
        actors=[actor],
        imposters=[imposter],
        occluders=[occluder],
        noise=NoiseSpec(pos_sigma=0.01, embedding_sigma=0.05, dropout=0.03,
                        clutter_rate=0.2, confusion_rate=0.05),
        enrollment_sweep_s=0.0,
    )


def walk_scene(r: float, swing: float, period_s: float = 3.0,
               duration_s: float = 14.0, seed: int = 0) -> SceneSpec:
    """Single actor oscillating sinusoidally with a given total screen-space
    swing (peak to peak, normalized units); used for leniency studies."""
    amp_deg = 0.5 * swing * 90.0
    actor = EntitySpec(
        name="alpha",
        waypoints=_sinusoid_waypoints(duration_s, center_yaw=0.0, amp_yaw=amp_deg,
                                      period_s=period_s, step_s=0.05),
        facet_count=1,
    )
    return SceneSpec(
        name="walk",
        duration_s=duration_s,
        seed=seed,
        actors=[actor],
        noise=NoiseSpec(pos_sigma=0.01, embedding_sigma=0.05, dropout=0.0,
                        clutter_rate=0.0, confusion_rate=0.0),
    )


def walk_script(r: float) -> Script:
    return parse_script_dict({
        "name": "hold-center",
        "actors": ["alpha"],
        "chain": [
            {"behavior": {"id": "hold", "kind": "framing", "targets": [
                {"actor": "alpha", "point": [0.5, 0.5], "leniency": [r, r]},
            ]}, "cue": None, "transition": "medium"},
        ],
    })


def whip_script() -> Script:
    """Two framing behaviors joined by a speech-triggered whip transition."""
    return parse_script_dict({
        "name": "whip-pair",
        "actors": ["alpha", "bravo"],
        "chain": [
            {"behavior": {"id": "on-alpha", "kind": "framing", "targets": [
                {"actor": "alpha", "point": [0.5, 0.5], "leniency": [0.08, 0.08]},
            ]}, "cue": {"kind": "speech", "word": "go"}, "transition": "medium"},
            {"behavior": {"id": "on-bravo", "kind": "framing", "targets": [
                {"actor": "bravo", "point": [0.5, 0.5], "leniency": [0.08, 0.08]},
            ]}, "cue": None, "transition": "whip"},
        ],
    })
