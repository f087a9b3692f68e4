import math

import numpy as np
import pytest

from framepilot.control import (AugmentedPoint, BankingFilter, FramingController,
                                LeniencyCurve, PidGains, PidState, augment,
                                curve_from_radii, procrustes_error,
                                process_variance, tune_ziegler_nichols)
from framepilot.geometry import ScreenPoint


def test_curve_from_radii_half_kills_lift():
    c = curve_from_radii((0.5, 0.5))
    assert c.v == (0.0, 0.0)


def test_curve_from_radii_known_values():
    c = curve_from_radii((0.1, 0.1))
    assert c.a[0] == pytest.approx(0.115)
    assert c.v[0] == pytest.approx(42 * 0.4 ** 8)          # 0.02752512
    assert c.q[0] == pytest.approx(20 / 0.11)              # 181.81..
    assert c.eta == (0.05, 0.01)


def test_curve_rejects_tiny_radius():
    with pytest.raises(ValueError):
        curve_from_radii((0.002, 0.1))


def test_process_variance_saturates_far_out():
    c = curve_from_radii((0.1, 0.1))
    h = process_variance(c, (1.0, 1.0))
    assert h == (pytest.approx(0.05), pytest.approx(0.01))


def test_process_variance_near_zero_gap():
    c = curve_from_radii((0.5, 0.5))
    h = process_variance(c, (0.0, 0.0))
    expected = math.exp(-c.q[0] * c.a[0])  # ~7e-11, v = 0
    assert h[0] == pytest.approx(0.05 * expected, rel=1e-9)
    assert h[1] == pytest.approx(0.01 * math.exp(-c.q[1] * c.a[1]), rel=1e-9)


def test_lift_above_one_forces_cap():
    c = LeniencyCurve(a=(0.2, 0.2), v=(1.5, 1.5), q=(10.0, 10.0))
    assert process_variance(c, (0.0, 0.0)) == (c.eta[0], c.eta[1])


def test_process_variance_monotone_in_gap():
    rng = np.random.default_rng(2)
    for _ in range(50):
        r = rng.uniform(0.01, 0.5)
        c = curve_from_radii((r, r))
        gaps = np.sort(rng.uniform(0, 1, size=10))
        hs = [process_variance(c, (g, g))[0] for g in gaps]
        assert all(a <= b + 1e-15 for a, b in zip(hs, hs[1:]))


# -- augmented points ---------------------------------------------------------


def test_augment_zero_innovation_stays_put():
    curve = curve_from_radii((0.1, 0.1))
    ap = AugmentedPoint(ScreenPoint(0.5, 0.5))
    for _ in range(100):
        augment(ap, ScreenPoint(0.5, 0.5), curve)
    assert ap.point.distance_to(ScreenPoint(0.5, 0.5)) < 1e-6


def test_augment_ignores_oscillation_inside_ellipse():
    # Sinusoid of amplitude 0.08 (< a = 0.115) at 1 Hz, 300 ticks at 60 Hz:
    # the augmented point barely moves.
    curve = curve_from_radii((0.1, 0.1))
    ap = AugmentedPoint(ScreenPoint(0.5, 0.5))
    worst = 0.0
    for i in range(300):
        x = 0.5 + 0.08 * math.sin(2 * math.pi * i / 60.0)
        augment(ap, ScreenPoint(x, 0.5), curve)
        worst = max(worst, abs(ap.x - 0.5))
    assert worst < 0.01


def test_augment_chases_step_beyond_ellipse():
    # Small responsive ellipse: a step of 3a is caught within 60 ticks.
    curve = curve_from_radii((0.01, 0.01))
    a = curve.a[0]
    ap = AugmentedPoint(ScreenPoint(0.5, 0.5))
    target = ScreenPoint(0.5 + 3 * a, 0.5)
    for i in range(60):
        augment(ap, target, curve)
        if abs(ap.x - target.x) < 0.01:
            break
    assert abs(ap.x - target.x) < 0.01


def test_augment_exposes_h_state():
    curve = curve_from_radii((0.1, 0.1))
    ap = AugmentedPoint(ScreenPoint(0.5, 0.5))
    augment(ap, ScreenPoint(0.9, 0.5), curve)
    assert ap.h[0] == pytest.approx(0.05)
    assert 0 < ap.h[1] <= 0.01


# -- procrustes ---------------------------------------------------------------


def p(x, y):
    return ScreenPoint(x, y)


def test_procrustes_symmetric_pair_zero():
    entries = [(p(0.7, 0.5), p(0.5, 0.5), 1.0), (p(0.3, 0.5), p(0.5, 0.5), 1.0)]
    t_c, hold = procrustes_error(entries)
    assert not hold
    assert abs(t_c[0]) < 1e-12 and abs(t_c[1]) < 1e-12


def test_procrustes_single_actor_offset():
    t_c, _ = procrustes_error([(p(0.6, 0.4), p(0.5, 0.5), 1.0)])
    assert t_c[0] == pytest.approx(0.1)
    assert t_c[1] == pytest.approx(-0.1)


def test_procrustes_degenerate_weighting():
    entries = [(p(0.7, 0.5), p(0.5, 0.5), 1.0), (p(0.3, 0.5), p(0.5, 0.5), 0.0)]
    t_c, _ = procrustes_error(entries)
    assert t_c[0] == pytest.approx(0.2)
    assert t_c[1] == pytest.approx(0.0)


def test_procrustes_all_zero_weights_holds():
    t_c, hold = procrustes_error([(p(0.7, 0.5), p(0.5, 0.5), 0.0)])
    assert hold and t_c == (0.0, 0.0)


def test_procrustes_weight_scale_invariance():
    rng = np.random.default_rng(8)
    for _ in range(50):
        entries = [(p(*rng.uniform(0, 1, 2)), p(*rng.uniform(0, 1, 2)), w)
                   for w in rng.uniform(0.1, 1, size=3)]
        scaled = [(a, r, w * 7.5) for a, r, w in entries]
        t1, _ = procrustes_error(entries)
        t2, _ = procrustes_error(scaled)
        assert t1[0] == pytest.approx(t2[0]) and t1[1] == pytest.approx(t2[1])


def test_procrustes_permutation_invariance():
    entries = [(p(0.2, 0.3), p(0.5, 0.5), 1.0), (p(0.9, 0.6), p(0.4, 0.5), 1.0),
               (p(0.5, 0.8), p(0.6, 0.2), 1.0)]
    t1, _ = procrustes_error(entries)
    t2, _ = procrustes_error(entries[::-1])
    assert t1 == pytest.approx(t2)


# -- pid ----------------------------------------------------------------------


def test_pid_pure_proportional():
    pid = PidState(PidGains(2.0, 0.0, 0.0))
    assert pid.step(0.1, 1 / 60) == pytest.approx(0.2)


def test_pid_zero_error_forever():
    pid = PidState(PidGains(3.0, 1.0, 0.5))
    for _ in range(100):
        assert pid.step(0.0, 1 / 60) == 0.0


def test_pid_constant_error_windup_clamps():
    pid = PidState(PidGains(0.0, 1.0, 0.0), output_limit=5.0, integral_clamp=2.0)
    outs = [pid.step(1.0, 0.1) for _ in range(50)]
    assert outs[0] < outs[5] < outs[15]          # grows linearly at first
    assert outs[-1] == outs[-2] == pytest.approx(2.0)  # clamped at ki * clamp


def test_pid_output_limited():
    pid = PidState(PidGains(100.0, 0.0, 0.0), output_limit=10.0)
    assert pid.step(5.0, 1 / 60) == 10.0
    assert pid.step(-5.0, 1 / 60) == -10.0


def test_pid_matches_independent_simulation():
    """Closed loop against a first-order plant, cross-checked to 1e-9 against
    an independently coded discrete simulation of the same equations."""
    gains = PidGains(1.4, 2.2, 0.05)
    dt = 1 / 60
    tau_plant = 0.2

    pid = PidState(gains, output_limit=50.0, integral_clamp=10.0)
    y = 0.0
    ours = []
    for _ in range(600):
        e = 1.0 - y
        u = pid.step(e, dt)
        y += (u - y) * (1 - math.exp(-dt / tau_plant))
        ours.append(y)

    # Independent re-implementation (plain difference equations).
    integ = 0.0
    deriv = 0.0
    prev = None
    y2 = 0.0
    theirs = []
    alpha = dt / (2 * dt + dt)
    for _ in range(600):
        e = 1.0 - y2
        raw = 0.0 if prev is None else (e - prev) / dt
        deriv = deriv + (raw - deriv) * alpha
        prev = e
        pd = gains.kp * e + gains.kd * deriv
        cand = min(10.0, max(-10.0, integ + e * dt))
        u = pd + gains.ki * cand
        if -50.0 <= u <= 50.0:
            integ = cand
        else:
            u_now = pd + gains.ki * integ
            if abs(u) < abs(u_now):
                integ = cand
            u = min(50.0, max(-50.0, pd + gains.ki * integ))
        y2 += (u - y2) * (1 - math.exp(-dt / tau_plant))
        theirs.append(y2)

    assert max(abs(a - b) for a, b in zip(ours, theirs)) < 1e-9


def test_ziegler_nichols_table():
    g = tune_ziegler_nichols(10.0, 1.0, relaxation=1.0)
    assert (g.kp, g.ki, g.kd) == (pytest.approx(6.0), pytest.approx(12.0),
                                  pytest.approx(0.75))


def test_ziegler_nichols_relaxation_scales():
    g1 = tune_ziegler_nichols(10.0, 1.0, 1.0)
    g2 = tune_ziegler_nichols(10.0, 1.0, 0.5)
    assert (g2.kp, g2.ki, g2.kd) == (pytest.approx(g1.kp / 2),
                                     pytest.approx(g1.ki / 2),
                                     pytest.approx(g1.kd / 2))


def test_ziegler_nichols_rejects_bad_inputs():
    with pytest.raises(ValueError):
        tune_ziegler_nichols(0.0, 1.0)
    with pytest.raises(ValueError):
        tune_ziegler_nichols(1.0, -1.0)


# -- banking ------------------------------------------------------------------


def test_banking_zero_input():
    f = BankingFilter(gain=0.5, smoothing_s=0.3)
    assert all(f.step(0.0, 1 / 60) == 0.0 for _ in range(50))


def test_banking_converges_to_gain_times_accel():
    f = BankingFilter(gain=0.5, smoothing_s=0.1)
    out = 0.0
    for _ in range(300):
        out = f.step(2.0, 1 / 60)
    assert out == pytest.approx(1.0, rel=1e-3)


def test_banking_sign_follows_accel():
    f = BankingFilter(gain=0.7, smoothing_s=0.2)
    assert f.step(1.0, 1 / 60) > 0
    f2 = BankingFilter(gain=0.7, smoothing_s=0.2)
    assert f2.step(-1.0, 1 / 60) < 0


# -- controller composition ----------------------------------------------------


def test_controller_hold_on_dropout():
    c = FramingController()
    frame = c.step([(p(0.7, 0.5), p(0.5, 0.5), 0.0)], 1 / 60)
    assert frame.hold
    assert frame.yaw_rate == 0.0 and frame.pitch_rate == 0.0


def test_controller_sign_convention():
    # Content right of required -> positive yaw; content above -> positive pitch.
    c = FramingController()
    frame = c.step([(p(0.7, 0.3), p(0.5, 0.5), 1.0)], 1 / 60)
    assert frame.yaw_rate > 0
    assert frame.pitch_rate > 0
