"""Truth plant: integrator accuracy, equilibrium, faults, controller.

The integrator oracle is grid self-convergence: a fixed-step RK4 must show
fourth-order error decay between halved inner steps, which no bookkeeping
bug (wrong stage weights, time offsets, state aliasing) survives.
"""

from dataclasses import replace

import numpy as np
import pytest

from moorfd.config import scenario_faults
from moorfd.errors import ConfigurationError
from moorfd.mooring import FaultEvent, mooring_force, init_line_states
from moorfd.plant import (CtrlState, aero_torque_thrust, control_step,
                          find_equilibrium, simulate_plant)


# --- integrator oracle ----------------------------------------------------------

def test_rk4_fourth_order_self_convergence(plant_params, wave_real):
    """Halving dt_inner must cut the state error ~16x (observed order > 3)."""
    finals = []
    for dt_i in (0.05, 0.025, 0.0125):
        p = replace(plant_params, dt_inner=dt_i)
        rec = simulate_plant(p, wave_real, duration=10.0, add_noise=False,
                             record_states=True)
        finals.append(np.concatenate([[rec.states["omega"][-1]],
                                      rec.states["xi"][-1],
                                      rec.states["xid"][-1]]))
    d1 = np.linalg.norm(finals[0] - finals[1])
    d2 = np.linalg.norm(finals[1] - finals[2])
    order = np.log2(d1 / d2)
    assert order > 3.0, f"observed convergence order {order:.2f}"


# --- operating point ------------------------------------------------------------

def test_equilibrium_static_balance(plant_params, op):
    """Recomputed net force/moment at the operating point vanishes."""
    plat = plant_params.platform
    f_moor, _ = mooring_force(plant_params.lines, op.xi,
                              init_line_states(plant_params.lines))
    f = f_moor - plat.k_hydro @ op.xi
    f[2] += plat.f_buoy_net
    f[0] += op.thrust
    f[4] += plant_params.aero.hub_height * op.thrust
    f[3] -= op.torque_aero
    scale = plat.mass * 9.81
    assert np.max(np.abs(f[:3])) < 1e-7 * scale
    assert np.max(np.abs(f[3:])) < 1e-7 * scale * plant_params.aero.radius


def test_equilibrium_above_rated_properties(plant_params, op):
    ctrl = plant_params.ctrl
    assert op.omega == ctrl.rated_speed
    assert ctrl.pitch_min < op.theta < ctrl.pitch_max
    assert op.q_g == pytest.approx(ctrl.torque_rated)
    # torque balance holds the rotor: aero torque equals geared load
    assert op.torque_aero == pytest.approx(ctrl.gear_ratio * ctrl.torque_rated,
                                           rel=1e-10)
    assert op.thrust > 0.0
    assert op.xi[0] > 0.0          # drifts downwind
    assert op.xi[4] > 0.0          # hub-height thrust pitches it back
    # downwind line slackens; the upwind pair differs only through the
    # rotor-torque roll reaction (sub-percent)
    assert op.tensions[0] < op.tensions[1]
    assert op.tensions[1] == pytest.approx(op.tensions[2], rel=0.01)


def test_equilibrium_zero_wind_is_pretension_balance(plant_params):
    op0 = find_equilibrium(plant_params, wind=0.0)
    assert op0.thrust == 0.0 and op0.q_g == 0.0
    assert np.max(np.abs(op0.xi)) < 1e-6


def test_equilibrium_rejects_below_rated_wind(plant_params):
    with pytest.raises(ConfigurationError):
        find_equilibrium(plant_params, wind=3.0)
    with pytest.raises(ConfigurationError):
        find_equilibrium(plant_params, wind=-1.0)


# --- simulation bookkeeping -----------------------------------------------------

def test_unforced_run_stays_at_equilibrium(plant_params, op):
    rec = simulate_plant(plant_params, None, duration=5.0, add_noise=False,
                         op=op)
    assert rec.y[0, 0] == op.omega
    assert rec.y[0, 1] == op.xi[0]
    drift = np.max(np.abs(rec.y - rec.y[0]), axis=0)
    assert drift[0] < 1e-6 and drift[1] < 1e-4 and drift[2] < 1e-6


def test_noise_seed_determinism(plant_params, wave_real, op):
    a = simulate_plant(plant_params, wave_real, duration=20.0, noise_seed=5,
                       op=op)
    b = simulate_plant(plant_params, wave_real, duration=20.0, noise_seed=5,
                       op=op)
    c = simulate_plant(plant_params, wave_real, duration=20.0, noise_seed=6,
                       op=op)
    assert np.array_equal(a.y, b.y) and np.array_equal(a.u, b.u)
    assert np.array_equal(a.tensions, b.tensions)
    assert not np.array_equal(a.y, c.y)
    # noise only enters the recorded outputs, not the physics
    d = simulate_plant(plant_params, wave_real, duration=20.0, noise_seed=6,
                       add_noise=False, op=op)
    e = simulate_plant(plant_params, wave_real, duration=20.0, noise_seed=7,
                       add_noise=False, op=op)
    assert np.array_equal(d.y, e.y)


def test_faulted_twin_identical_before_fault(plant_params, wave_real, op):
    t_f = 20.0
    healthy = simulate_plant(plant_params, wave_real, duration=40.0,
                             noise_seed=3, op=op)
    faulted = simulate_plant(plant_params, wave_real, duration=40.0,
                             noise_seed=3, op=op,
                             faults=[FaultEvent(time=t_f, line=0,
                                                kind="fairlead_release")])
    pre = healthy.t < t_f
    assert np.array_equal(healthy.y[pre], faulted.y[pre])
    assert np.array_equal(healthy.u[pre], faulted.u[pre])
    assert np.array_equal(healthy.tensions[pre], faulted.tensions[pre])
    post = healthy.t >= t_f
    assert np.all(faulted.tensions[post, 0] == 0.0)
    assert np.all(healthy.tensions[post, 0] > 0.0)
    assert np.max(np.abs(faulted.y[post, 1] - healthy.y[post, 1])) > 0.05


def test_fault_log_records_application(plant_params, wave_real, op):
    ev = FaultEvent(time=10.03, line=1, kind="anchor_slip", theta_x=650.0)
    rec = simulate_plant(plant_params, wave_real, duration=15.0, op=op,
                         faults=[ev], add_noise=False)
    assert len(rec.fault_log) == 1
    entry = rec.fault_log[0]
    # applied at the first sample at or after the scheduled time
    assert entry["time"] == pytest.approx(10.1)
    assert entry["line"] == 1
    assert entry["kind"] == "anchor_slip"
    assert entry["mode"] == "anchor_slipped"
    assert entry["effective_length"] == 650.0


def test_slip_scenario_steps_tension(cfg, plant_params, wave_real, op):
    """The shipped anchor-slip case steps the faulted line's fairlead
    tension up at the fault sample (the horizontal component jumps ~30x,
    the magnitude roughly doubles on top of the static vertical load)."""
    events = scenario_faults(cfg, 2)
    rec = simulate_plant(plant_params, wave_real, duration=30.0, op=op,
                         faults=[replace(events[0], time=15.0)],
                         add_noise=False)
    k = np.searchsorted(rec.t, 15.0)
    assert rec.tensions[k, 0] > 1.8 * rec.tensions[k - 1, 0]


def test_initial_offset_decays(plant_params, op):
    rec = simulate_plant(plant_params, None, duration=120.0, add_noise=False,
                         op=op, xi0_offset=[5.0, 0, 0, 0, 0, 0])
    dev = np.abs(rec.y[:, 1] - op.xi[0])
    assert dev[0] == pytest.approx(5.0)
    assert dev[-1] < 2.5


def test_recorded_inputs_are_held_commands(plant_params, wave_real, op):
    rec = simulate_plant(plant_params, wave_real, duration=10.0, op=op)
    assert np.all(rec.u[:, 1] == plant_params.wind)
    dtheta = np.abs(np.diff(rec.u[:, 0]))
    assert np.max(dtheta) <= plant_params.ctrl.pitch_rate \
        * plant_params.dt_outer + 1e-12
    assert np.all(rec.u[:, 2] <= plant_params.ctrl.torque_rated + 1e-12)
    # recorded elevation is the sample-time interpolation of the realization
    # (equal to the samples up to one interpolation ulp)
    assert np.max(np.abs(rec.u[:, 3] - wave_real.eta[:rec.t.size])) < 1e-12


def test_simulation_guards(plant_params, wave_real):
    with pytest.raises(ConfigurationError):
        simulate_plant(plant_params, None)                 # no duration
    with pytest.raises(ConfigurationError):
        simulate_plant(plant_params, wave_real,
                       duration=wave_real.duration + 100.0)
    with pytest.raises(ConfigurationError):
        replace(plant_params, dt_inner=0.03)               # 0.1/0.03 not int


# --- aerodynamic surfaces -------------------------------------------------------

def test_thrust_and_torque_drop_with_feathering(plant_params, op):
    aero = plant_params.aero
    q0, t0 = aero_torque_thrust(aero, op.omega, op.theta, op.wind)
    q1, t1 = aero_torque_thrust(aero, op.omega, op.theta + 0.1, op.wind)
    assert q1 < q0 and t1 < t0


def test_torque_peaks_at_reference_tip_speed_ratio(plant_params):
    aero = plant_params.aero
    v = 10.0
    om_ref = aero.lambda_ref * v / aero.radius
    q_ref, _ = aero_torque_thrust(aero, om_ref, 0.0, v)
    for fac in (0.8, 1.2):
        q, _ = aero_torque_thrust(aero, fac * om_ref, 0.0, v)
        assert q < q_ref


def test_inflow_floor_clamps(plant_params):
    aero = plant_params.aero
    lo = aero_torque_thrust(aero, 1.0, 0.0, 0.5 * aero.v_rel_floor)
    at = aero_torque_thrust(aero, 1.0, 0.0, aero.v_rel_floor)
    assert lo == at
    with pytest.raises(ConfigurationError):
        aero_torque_thrust(aero, 0.0, 0.0, 10.0)


# --- controller -----------------------------------------------------------------

def test_pitch_rate_and_range_limits(plant_params):
    ctrl = plant_params.ctrl
    st = CtrlState(integ=0.2, prev_theta=0.2)
    theta, _, st2 = control_step(ctrl, st, ctrl.rated_speed + 10.0, 0.1)
    assert theta == pytest.approx(0.2 + ctrl.pitch_rate * 0.1)
    # saturation at the upper range end
    st = CtrlState(integ=ctrl.pitch_max, prev_theta=ctrl.pitch_max)
    theta, _, _ = control_step(ctrl, st, ctrl.rated_speed + 10.0, 0.1)
    assert theta == ctrl.pitch_max
    st = CtrlState(integ=0.0, prev_theta=0.0)
    theta, _, _ = control_step(ctrl, st, ctrl.rated_speed - 10.0, 0.1)
    assert theta == ctrl.pitch_min


def test_antiwindup_back_calculation(plant_params):
    """During a long saturated excursion the integrator is bled back so the
    unclamped command tracks the clamp exactly (no hidden windup) instead of
    accumulating ki*err*t beyond it."""
    ctrl = plant_params.ctrl
    err = 5.0
    st = CtrlState(integ=0.1, prev_theta=0.1)
    for _ in range(50):
        theta, _, st = control_step(ctrl, st, ctrl.rated_speed + err, 0.1)
    assert theta == ctrl.pitch_max
    # back-calculation pins raw = kp*err + integ at the clamp ...
    assert st.integ + ctrl.kp * err == pytest.approx(ctrl.pitch_max,
                                                     abs=1e-12)
    # ... far below the naive accumulation
    assert st.integ < 0.1 + ctrl.ki * err * 50 * 0.1 - 0.5 * ctrl.kp * err


def test_generator_torque_law(plant_params):
    ctrl = plant_params.ctrl
    st = CtrlState(integ=0.0, prev_theta=0.0)
    _, qg_hi, _ = control_step(ctrl, st, 1.1 * ctrl.rated_speed, 0.1)
    assert qg_hi == pytest.approx(
        ctrl.rated_power / (ctrl.gear_ratio * 1.1 * ctrl.rated_speed))
    _, qg_lo, _ = control_step(ctrl, st, 0.9 * ctrl.rated_speed, 0.1)
    assert qg_lo == ctrl.torque_rated
