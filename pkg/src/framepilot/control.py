"""Framing control: leniency filtering, weighted screen error, and PID.

The control chain per tick, for each framed actor:

    tracked point p_T --(leniency Kalman, variance h)--> augmented point p_A

    T_c = weighted_mean(p_A) - weighted_mean(p_R)        (screen units)
    e   = T_c * field of view                            (degrees)
    yaw_rate = PID(e_x),  pitch_rate = -PID(e_y)

The per-axis process variance h grows exponentially with the gap between
the tracked point and the previous augmented point, so small motion inside
the user's leniency ellipse leaves the augmented point (and the camera)
still, while larger excursions ramp the camera up smoothly.

Sign conventions: screen x grows to the right, y grows downward. Positive
yaw pans the camera right, which moves on-screen content left; positive
pitch tilts up, which moves content down. A positive T_c_x (content sits
right of where it is required) therefore commands a positive yaw rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .geometry import ScreenPoint

# Guide-camera horizontal/vertical field of view used to convert normalized
# screen error into degrees.
FOV_DEG = 90.0

# Process-variance caps: horizontal motion tolerates more tracker noise
# than vertical.
ETA_X = 0.05
ETA_Y = 0.01

# Measurement variance paired with h in the leniency filter. Only the
# h-to-noise ratio matters, so this is pinned at 1.
LENIENCY_MEAS_VAR = 1.0


@dataclass(frozen=True)
class LeniencyCurve:
    """Per-axis parameters mapping gap distance to process variance."""

    a: tuple[float, float]    # agnostic gap: distance travelled before the camera reacts
    v: tuple[float, float]    # zero-error lift: response floor at zero gap
    q: tuple[float, float]    # curve profile: ramp sharpness at the ellipse edge
    eta: tuple[float, float] = (ETA_X, ETA_Y)

    def __post_init__(self):
        for axis in (0, 1):
            if self.q[axis] <= 0 or self.a[axis] < 0 or self.v[axis] < 0 or self.eta[axis] <= 0:
                raise ValueError("invalid leniency curve parameters")


def curve_from_radii(r: tuple[float, float],
                     eta: tuple[float, float] = (ETA_X, ETA_Y)) -> LeniencyCurve:
    """Expand a user ellipse (rx, ry) into its leniency curve.

    Small radii keep the lift v high (immediate reaction) and the ramp
    sharp; large radii widen the agnostic gap and flatten everything.
    """
    a = tuple(1.2 * ri - 0.005 for ri in r)
    v = tuple(42.0 * (ri - 0.5) ** 8 for ri in r)
    q = tuple(20.0 / (ri + 0.01) for ri in r)
    if min(r) < 0.005:
        raise ValueError("leniency radii must be >= 0.005")
    return LeniencyCurve(a=a, v=v, q=q, eta=eta)


def _clamp01(x: float) -> float:
    return 0.0 if x < 0.0 else (1.0 if x > 1.0 else x)


def process_variance(curve: LeniencyCurve, d_le: tuple[float, float]) -> tuple[float, float]:
    """Per-axis process variance for the current tracked/augmented gap."""
    out = []
    for axis in (0, 1):
        g = curve.q[axis] * (d_le[axis] - curve.a[axis])
        # exp overflows for gaps far past the ellipse; the clamp saturates
        # there anyway.
        e = math.exp(g) if g < 40.0 else math.inf
        out.append(curve.eta[axis] * _clamp01(e + curve.v[axis]))
    return (out[0], out[1])


class AugmentedPoint:
    """Leniency-filtered version of a tracked point.

    Implemented as the steady one-step form of a scalar Kalman filter: the
    prior is re-anchored on the smoothed estimate each tick, so the blend
    gain is h / (h + measurement variance) and the leniency curve alone
    dictates responsiveness. Letting the covariance accumulate instead
    would pull the gain toward sqrt(h), which is far too eager to ever
    hold a camera still inside the ellipse.
    """

    def __init__(self, initial: ScreenPoint):
        self.x = initial.x
        self.y = initial.y
        self.h = (0.0, 0.0)

    @property
    def point(self) -> ScreenPoint:
        return ScreenPoint(self.x, self.y)

    def update(self, p_t: ScreenPoint, curve: LeniencyCurve) -> ScreenPoint:
        d_le = (abs(self.x - p_t.x), abs(self.y - p_t.y))
        hx, hy = process_variance(curve, d_le)
        self.h = (hx, hy)
        kx = hx / (hx + LENIENCY_MEAS_VAR)
        ky = hy / (hy + LENIENCY_MEAS_VAR)
        self.x += kx * (p_t.x - self.x)
        self.y += ky * (p_t.y - self.y)
        return self.point


def augment(state: AugmentedPoint, p_t: ScreenPoint, curve: LeniencyCurve) -> ScreenPoint:
    """Advance one augmented point against its new tracked position."""
    return state.update(p_t, curve)


def procrustes_error(entries: list[tuple[ScreenPoint, ScreenPoint, float]]
                     ) -> tuple[tuple[float, float], bool]:
    """Weighted translation error between actual and required framings.

    `entries` holds (augmented point, required point, weight) per actor.
    Returns (T_c, hold) where T_c is the weighted-mean difference and hold
    is True when every weight is zero (all targets dropped): the camera
    should then freeze rather than chase a meaningless error.
    """
    wsum = sum(w for _, _, w in entries)
    if wsum <= 0.0:
        return (0.0, 0.0), True
    ax = sum(w * p.x for p, _, w in entries) / wsum
    ay = sum(w * p.y for p, _, w in entries) / wsum
    rx = sum(w * p.x for _, p, w in entries) / wsum
    ry = sum(w * p.y for _, p, w in entries) / wsum
    return (ax - rx, ay - ry), False


@dataclass
class PidGains:
    kp: float
    ki: float
    kd: float


def tune_ziegler_nichols(ku: float, tu: float, relaxation: float = 1.0) -> PidGains:
    """Classic PID gains from an ultimate gain/period, scaled down.

    relaxation in (0, 1] trades response tightness for overshoot margin.
    """
    if ku <= 0.0 or tu <= 0.0:
        raise ValueError("ultimate gain and period must be positive")
    if not (0.0 < relaxation <= 1.0):
        raise ValueError("relaxation must lie in (0, 1]")
    return PidGains(
        kp=0.6 * ku * relaxation,
        ki=1.2 * ku / tu * relaxation,
        kd=0.075 * ku * tu * relaxation,
    )


class PidState:
    """One axis of rate control with anti-windup and a smoothed derivative.

    Integration is conditional: while the output is saturated, error that
    would push it further into the stop is not accumulated, so large
    repositioning moves do not wind up and overshoot.
    """

    def __init__(self, gains: PidGains, output_limit: float = 180.0,
                 integral_clamp: float | None = None):
        self.gains = gains
        self.output_limit = output_limit
        if integral_clamp is None:
            integral_clamp = (output_limit / gains.ki) if gains.ki > 0 else math.inf
        self.integral_clamp = integral_clamp
        self.integral = 0.0
        self.prev_error: float | None = None
        self.deriv = 0.0

    def reset(self):
        self.integral = 0.0
        self.prev_error = None
        self.deriv = 0.0

    def step(self, error: float, dt: float) -> float:
        if dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.prev_error is None:
            raw = 0.0
        else:
            raw = (error - self.prev_error) / dt
        # First-order derivative smoothing, time constant 2*dt.
        tau = 2.0 * dt
        self.deriv += (raw - self.deriv) * (dt / (tau + dt))
        self.prev_error = error
        pd = self.gains.kp * error + self.gains.kd * self.deriv
        candidate = self.integral + error * dt
        candidate = max(-self.integral_clamp, min(self.integral_clamp, candidate))
        u = pd + self.gains.ki * candidate
        if -self.output_limit <= u <= self.output_limit:
            self.integral = candidate
            return u
        u_now = pd + self.gains.ki * self.integral
        if abs(u) < abs(u_now):
            # The new error pulls back out of saturation: accept it.
            self.integral = candidate
        return max(-self.output_limit, min(self.output_limit,
                                           pd + self.gains.ki * self.integral))


class BankingFilter:
    """Roll-rate command from smoothed lateral acceleration."""

    def __init__(self, gain: float, smoothing_s: float, rate_limit: float = 60.0):
        self.gain = gain
        self.tau = smoothing_s
        self.rate_limit = rate_limit
        self.ema = 0.0

    def step(self, lateral_accel: float, dt: float) -> float:
        self.ema += (lateral_accel - self.ema) * (1.0 - math.exp(-dt / self.tau))
        rate = self.gain * self.ema
        return max(-self.rate_limit, min(self.rate_limit, rate))


def banking_roll(filt: BankingFilter, lateral_accel: float, dt: float) -> float:
    return filt.step(lateral_accel, dt)


@dataclass
class ControllerConfig:
    """Gains and conversions for the framing loop.

    The default PID gains come from a relay experiment against the default
    simulated plant (see evaluation.relay_tune) put through the relaxed
    tuning rule at relaxation 0.6.
    """

    yaw_gains: PidGains = field(default_factory=lambda: PidGains(12.85, 96.4, 0.428))
    pitch_gains: PidGains = field(default_factory=lambda: PidGains(12.85, 96.4, 0.428))
    rate_limit_deg_s: float = 180.0
    integral_clamp: float | None = None
    fov_deg: float = FOV_DEG


@dataclass
class ControlFrame:
    """Telemetry view of one control tick."""

    t_c: tuple[float, float]
    hold: bool
    yaw_rate: float
    pitch_rate: float
    roll_rate: float


class FramingController:
    """Yaw/pitch PID pair fed by the weighted Procrustes error."""

    def __init__(self, cfg: ControllerConfig | None = None):
        self.cfg = cfg or ControllerConfig()
        self.pid_yaw = PidState(self.cfg.yaw_gains, self.cfg.rate_limit_deg_s,
                                self.cfg.integral_clamp)
        self.pid_pitch = PidState(self.cfg.pitch_gains, self.cfg.rate_limit_deg_s,
                                  self.cfg.integral_clamp)

    def reset(self):
        self.pid_yaw.reset()
        self.pid_pitch.reset()

    def step(self, entries: list[tuple[ScreenPoint, ScreenPoint, float]],
             dt: float) -> ControlFrame:
        t_c, hold = procrustes_error(entries)
        if hold:
            # Tracker dropout: hold orientation, shed any windup.
            self.pid_yaw.reset()
            self.pid_pitch.reset()
            return ControlFrame(t_c=t_c, hold=True, yaw_rate=0.0, pitch_rate=0.0,
                                roll_rate=0.0)
        e_x = t_c[0] * self.cfg.fov_deg
        e_y = t_c[1] * self.cfg.fov_deg
        yaw = self.pid_yaw.step(e_x, dt)
        pitch = -self.pid_pitch.step(e_y, dt)
        return ControlFrame(t_c=t_c, hold=False, yaw_rate=yaw, pitch_rate=pitch,
                            roll_rate=0.0)
