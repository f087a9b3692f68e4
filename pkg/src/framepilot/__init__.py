"""framepilot: scriptable multi-actor framing engine with a simulated gimbal."""

from .geometry import BBox, ScreenPoint, Tick, cosine_distance, iou
from .script import (Script, parse_script, serialize_script, load_script,
                     validate_speech_set)
from .tracking import (Detection, Tracker, TrackerConfig, TrackReport, Phase,
                       assign, build_cost_matrix)
from .control import (AugmentedPoint, FramingController, LeniencyCurve, PidGains,
                      PidState, curve_from_radii, process_variance,
                      procrustes_error, tune_ziegler_nichols)
from .engine import Engine, EngineConfig, ExternalEvent
from .sim import GimbalPlant, PlantConfig, Scene, SceneSpec, plant_step
from .runner import SimulationRun, run_simulation
from .evaluation import judge_frame, run_ablation_suite, relay_tune

__version__ = "0.1.0"
