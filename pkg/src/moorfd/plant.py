"""Nonlinear truth plant: rotor, floating platform, mooring, waves.

Model scope (deliberately desk-scale, all coefficients documented here or in
config.py):

- 7 rigid mechanical DOF: rotor speed + 6 platform motions about the SWL
  reference point, earth-frame small-rotation rigid dynamics with constant
  total mass matrix M_rb + a_inf.
- Aerodynamics from smooth analytic torque/thrust coefficient surfaces in
  (tip-speed ratio, collective pitch). The surfaces are surrogates: the
  torque side reproduces rated power/speed and a negative feather gradient
  above rated; the thrust side is scaled so the soft catenary mooring keeps
  all three lines engaged at the operating point (a full-scale thrust would
  park the platform where the downwind lines fall slack and anchor faults on
  them would have no static signature).
- Radiation memory and wave excitation enter through the continuous truth
  state-space models carried in the parameters (see hydro); the wave model
  input is the elevation series, linearly interpolated between samples.
- Quasi-static catenary mooring with per-line fault states (see mooring).
- Rotor-collective PI pitch control with rate limit and anti-windup,
  constant-power generator torque above rated, both sampled at the outer
  rate and held; faults are applied at outer sample times.

Integration: fixed-step RK4 at dt_inner inside each dt_outer recording
interval. Measurement noise is pre-generated from a dedicated seed so a
faulted run and its healthy twin share identical noise and wave streams.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError, NumericalError
from .hydro import WaveRealization
from .mooring import (FAULT_ANCHOR_SLIP, FAULT_FAIRLEAD_RELEASE, FaultEvent,
                      MooringLineParams, apply_mooring_fault,
                      init_line_states, linearize_mooring_stiffness,
                      mooring_force)
from .statespace import StateSpaceModel

__all__ = [
    "AeroParams",
    "ControllerParams",
    "CtrlState",
    "PlatformParams",
    "PlantParams",
    "OperatingPoint",
    "RunRecord",
    "aero_torque_thrust",
    "control_step",
    "find_equilibrium",
    "simulate_plant",
]


@dataclass(frozen=True)
class AeroParams:
    radius: float
    hub_height: float
    rho_air: float = 1.225
    # torque surface: cq0 (lam/lam_ref) exp(1 - lam/lam_ref) exp(-(th/thf)^2)
    cq0: float = 0.0508
    lambda_ref: float = 4.0
    theta_feather_q: float = 0.30
    # thrust surface: ct0 lam^2/(lam^2 + ct_lam2) exp(-(th/thf_t)^2)
    ct0: float = 0.0683
    ct_lam2: float = 16.0
    theta_feather_t: float = 0.35
    v_rel_floor: float = 0.1   # parked-rotor inflow regime is out of scope


@dataclass(frozen=True)
class ControllerParams:
    rated_speed: float
    rated_power: float
    gear_ratio: float
    kp: float = 0.4
    ki: float = 0.03
    pitch_min: float = 0.0
    pitch_max: float = 0.6
    pitch_rate: float = 0.1396   # 8 deg/s

    @property
    def torque_rated(self) -> float:
        return self.rated_power / (self.gear_ratio * self.rated_speed)


@dataclass
class CtrlState:
    integ: float
    prev_theta: float


@dataclass(frozen=True)
class PlatformParams:
    mass: float
    inertia: tuple               # (Ixx, Iyy, Izz) about the reference point
    k_hydro: np.ndarray          # 6x6 hydrostatic stiffness
    a_inf: np.ndarray            # 6x6 infinite-frequency added mass
    f_buoy_net: float            # buoyancy minus weight [N], balances the
                                 # mooring vertical pretension at xi = 0
    d_visc: np.ndarray = field(default_factory=lambda: np.zeros(6))
    # linearized viscous drag per DOF [N s/m, N m s/rad]: the only damping
    # source for the platform modes that sit below the radiation band

    @property
    def m_rb(self) -> np.ndarray:
        return np.diag([self.mass] * 3 + list(self.inertia))


@dataclass
class PlantParams:
    aero: AeroParams
    ctrl: ControllerParams
    platform: PlatformParams
    truth_rad: StateSpaceModel       # continuous, 6 vel in -> 6 force out
    truth_wave: StateSpaceModel      # continuous, eta in -> 6 force out
    lines: list
    j_drivetrain: float
    wind: float
    noise_std: np.ndarray = field(
        default_factory=lambda: np.array([0.005, 0.02, 0.001]))
    dt_inner: float = 0.025
    dt_outer: float = 0.1

    def __post_init__(self):
        if self.dt_inner <= 0 or self.dt_outer <= 0:
            raise ConfigurationError("time steps must be positive")
        ratio = self.dt_outer / self.dt_inner
        if abs(ratio - round(ratio)) > 1e-9:
            raise ConfigurationError(
                "dt_outer must be an integer multiple of dt_inner")


@dataclass
class OperatingPoint:
    wind: float
    xi: np.ndarray
    omega: float
    theta: float
    q_g: float
    thrust: float
    torque_aero: float
    tensions: np.ndarray
    line_h: np.ndarray

    def as_dict(self) -> dict:
        return {"wind": self.wind, "xi": list(self.xi),
                "omega": self.omega, "theta": self.theta, "q_g": self.q_g,
                "thrust": self.thrust, "torque_aero": self.torque_aero,
                "tensions": list(self.tensions),
                "line_h": list(self.line_h)}


@dataclass
class RunRecord:
    """One simulated run: held inputs, noisy outputs, line tensions."""

    t: np.ndarray                # (N,)
    u: np.ndarray                # (N, 4): theta, wind, q_g, eta
    y: np.ndarray                # (N, 3): rotor speed, surge, pitch
    tensions: np.ndarray         # (N, n_lines) fairlead tension magnitude
    fault_log: list
    meta: dict
    states: dict | None = None


def aero_torque_thrust(aero: AeroParams, omega: float, theta: float,
                       v_rel: float) -> tuple[float, float]:
    """Aerodynamic torque [N m] and thrust [N] from the surrogate surfaces.
    v_rel below the floor is clamped (the surfaces vanish there anyway)."""
    if omega <= 0.0:
        raise ConfigurationError("rotor speed must be positive")
    v = max(v_rel, aero.v_rel_floor)
    lam = omega * aero.radius / v
    lr = lam / aero.lambda_ref
    cq = aero.cq0 * lr * math.exp(1.0 - lr) \
        * math.exp(-(theta / aero.theta_feather_q) ** 2)
    ct = aero.ct0 * lam * lam / (lam * lam + aero.ct_lam2) \
        * math.exp(-(theta / aero.theta_feather_t) ** 2)
    pref = 0.5 * aero.rho_air * math.pi * aero.radius ** 2 * v * v
    return pref * aero.radius * cq, pref * ct


def control_step(ctrl: ControllerParams, state: CtrlState, omega_meas: float,
                 dt: float) -> tuple[float, float, CtrlState]:
    """Collective-pitch PI with rate/range limits and back-calculation
    anti-windup; constant-power generator torque capped at rated."""
    err = omega_meas - ctrl.rated_speed
    integ = state.integ + ctrl.ki * err * dt
    raw = ctrl.kp * err + integ
    lo = max(state.prev_theta - ctrl.pitch_rate * dt, ctrl.pitch_min)
    hi = min(state.prev_theta + ctrl.pitch_rate * dt, ctrl.pitch_max)
    theta = min(max(raw, lo), hi)
    integ += theta - raw
    q_g = min(ctrl.rated_power / (ctrl.gear_ratio * max(omega_meas, 0.2)),
              ctrl.torque_rated)
    return theta, q_g, CtrlState(integ=integ, prev_theta=theta)


def _aero_force_vector(aero: AeroParams, q_a: float, thrust: float
                       ) -> np.ndarray:
    """Thrust along +x at hub height plus rotor torque reaction about x."""
    f = np.zeros(6)
    f[0] = thrust
    f[4] = aero.hub_height * thrust
    f[3] = -q_a
    return f


def find_equilibrium(params: PlantParams, wind: float | None = None
                     ) -> OperatingPoint:
    """Static operating point at constant wind: rotor pinned at rated speed,
    pitch from the torque balance, platform pose from the force balance.

    Above-rated winds only (the torque balance at zero pitch must exceed the
    rated generator torque), except wind == 0 which returns the unforced
    mooring-pretension balance with the rotor pinned at rated by
    convention."""
    wind = params.wind if wind is None else wind
    if wind < 0.0:
        raise ConfigurationError("wind speed must be >= 0")
    ctrl, aero = params.ctrl, params.aero
    target = ctrl.gear_ratio * ctrl.torque_rated
    omega = ctrl.rated_speed
    if wind == 0.0:
        theta_op, q_a, thrust, q_g = ctrl.pitch_min, 0.0, 0.0, 0.0
    else:
        q0, _ = aero_torque_thrust(aero, omega, ctrl.pitch_min, wind)
        if q0 < target:
            raise ConfigurationError(
                f"wind {wind} m/s is below rated: no above-rated equilibrium")
        from scipy.optimize import brentq
        theta_op = brentq(
            lambda th: aero_torque_thrust(aero, omega, th, wind)[0] - target,
            ctrl.pitch_min, ctrl.pitch_max, xtol=1e-12)
        q_a, thrust = aero_torque_thrust(aero, omega, theta_op, wind)
        q_g = ctrl.torque_rated
    f_aero = _aero_force_vector(aero, q_a, thrust)

    plat = params.platform
    states = init_line_states(params.lines)
    xi = np.zeros(6)
    scale = max(plat.mass * 9.81, 1.0)
    scales = np.array([scale] * 3 + [scale * aero.radius] * 3)
    converged = False
    for _ in range(100):
        f_moor, diags = mooring_force(params.lines, xi, states)
        f = f_aero + f_moor - plat.k_hydro @ xi
        f[2] += plat.f_buoy_net
        if np.max(np.abs(f / scales)) < 1e-8:
            converged = True
            break
        k = plat.k_hydro + linearize_mooring_stiffness(params.lines, states,
                                                       xi)
        try:
            xi = xi + np.linalg.solve(k, f)
        except np.linalg.LinAlgError as exc:
            raise NumericalError("equilibrium Newton: singular stiffness "
                                 "matrix") from exc
    if not converged:
        raise NumericalError("equilibrium solve did not converge")
    _, diags = mooring_force(params.lines, xi, states)
    return OperatingPoint(
        wind=wind, xi=xi, omega=omega, theta=theta_op,
        q_g=q_g, thrust=thrust, torque_aero=q_a,
        tensions=np.array([d.t_fair for d in diags]),
        line_h=np.array([d.h for d in diags]))


def _interp_eta(eta: np.ndarray, dt_wave: float, t: float) -> float:
    j = int(t / dt_wave)
    if j >= eta.size - 1:
        return float(eta[-1])
    frac = (t - j * dt_wave) / dt_wave
    return float(eta[j] + frac * (eta[j + 1] - eta[j]))


def simulate_plant(params: PlantParams, wave: WaveRealization | None,
                   faults=(), duration: float | None = None,
                   noise_seed: int = 0, add_noise: bool = True,
                   record_states: bool = False,
                   op: OperatingPoint | None = None,
                   xi0_offset=None) -> RunRecord:
    """Integrate the truth plant from its operating point.

    Outputs are sampled every dt_outer; the controller runs on the sampled
    (noisy) rotor speed and its commands are held over the interval, so the
    recorded inputs are exactly the zero-order-hold sequence a discrete
    linear model expects. Fault events are applied at the first sample time
    >= their scheduled time, before that sample's tension logging.
    """
    if duration is None:
        if wave is None:
            raise ConfigurationError("duration required when no wave given")
        duration = wave.duration
    if wave is not None and wave.duration < duration - 1e-9:
        raise ConfigurationError("wave realization shorter than the run")
    if op is None:
        op = find_equilibrium(params)
    dt_o, dt_i = params.dt_outer, params.dt_inner
    n_sub = int(round(dt_o / dt_i))
    n_out = int(round(duration / dt_o)) + 1
    n_lines = len(params.lines)

    plat = params.platform
    m_tot = plat.m_rb + plat.a_inf
    m_inv = np.linalg.inv(m_tot)
    k_hydro = plat.k_hydro
    d_visc = np.asarray(plat.d_visc, dtype=float)
    f_stat = np.zeros(6)
    f_stat[2] = plat.f_buoy_net

    rad, wav = params.truth_rad, params.truth_wave
    n_r, n_w = rad.order, wav.order
    n_mem = n_r + n_w
    a_mem = np.zeros((n_mem, n_mem))
    a_mem[:n_r, :n_r] = rad.a
    a_mem[n_r:, n_r:] = wav.a
    b_mem = np.zeros((n_mem, 7))
    b_mem[:n_r, :6] = rad.b
    b_mem[n_r:, 6:] = wav.b
    c_mem = np.hstack([-rad.c, wav.c])      # radiation force opposes motion

    eta_arr = wave.eta if wave is not None else None
    dt_wave = wave.dt if wave is not None else 1.0
    aero = params.aero
    j_t = params.j_drivetrain
    gear = params.ctrl.gear_ratio
    wind = params.wind
    hub = aero.hub_height

    line_states = init_line_states(params.lines)
    pending = sorted(faults, key=lambda e: e.time)
    fault_log = []

    rng = np.random.default_rng(noise_seed)
    noise = rng.standard_normal((n_out, 3)) * np.asarray(params.noise_std)
    if not add_noise:
        noise = np.zeros_like(noise)

    state = np.zeros(13 + n_mem)
    state[0] = op.omega
    state[1:7] = op.xi + (0.0 if xi0_offset is None
                          else np.asarray(xi0_offset, dtype=float))
    cs = CtrlState(integ=op.theta, prev_theta=op.theta)
    theta_held, qg_held = op.theta, op.q_g

    t_axis = dt_o * np.arange(n_out)
    u_rec = np.empty((n_out, 4))
    y_rec = np.empty((n_out, 3))
    ten_rec = np.empty((n_out, n_lines))
    if record_states:
        hist = {"omega": np.empty(n_out), "xi": np.empty((n_out, 6)),
                "xid": np.empty((n_out, 6))}

    clamp_count = 0

    def rhs(t, s):
        nonlocal clamp_count
        xid = s[7:13]
        x_mem = s[13:]
        v_rel = wind - xid[0] - hub * xid[4]
        if v_rel <= aero.v_rel_floor:
            clamp_count += 1
        q_a, thrust = aero_torque_thrust(aero, s[0], theta_held, v_rel)
        f = f_stat - k_hydro @ s[1:7] - d_visc * xid
        f += c_mem @ x_mem
        f_moor, _ = mooring_force(params.lines, s[1:7], line_states)
        f += f_moor
        f[0] += thrust
        f[4] += hub * thrust
        f[3] -= q_a
        ds = np.empty_like(s)
        ds[0] = (q_a - gear * qg_held) / j_t
        ds[1:7] = xid
        ds[7:13] = m_inv @ f
        u7 = np.empty(7)
        u7[:6] = xid
        u7[6] = _interp_eta(eta_arr, dt_wave, t) if eta_arr is not None \
            else 0.0
        ds[13:] = a_mem @ x_mem + b_mem @ u7
        return ds

    for k in range(n_out):
        t = t_axis[k]
        while pending and pending[0].time <= t + 1e-9:
            ev = pending.pop(0)
            line_states = apply_mooring_fault(line_states, ev)
            fault_log.append({"time": t, "line": ev.line, "kind": ev.kind,
                              "effective_length":
                                  line_states[ev.line].effective_length,
                              "mode": line_states[ev.line].mode})
        y_rec[k, 0] = state[0] + noise[k, 0]
        y_rec[k, 1] = state[1] + noise[k, 1]
        y_rec[k, 2] = state[5] + noise[k, 2]
        _, diags = mooring_force(params.lines, state[1:7], line_states)
        for i in range(n_lines):
            ten_rec[k, i] = diags[i].t_fair
        if record_states:
            hist["omega"][k] = state[0]
            hist["xi"][k] = state[1:7]
            hist["xid"][k] = state[7:13]
        theta_held, qg_held, cs = control_step(params.ctrl, cs, y_rec[k, 0],
                                               dt_o)
        u_rec[k, 0] = theta_held
        u_rec[k, 1] = wind
        u_rec[k, 2] = qg_held
        u_rec[k, 3] = _interp_eta(eta_arr, dt_wave, t) if eta_arr is not None \
            else 0.0
        if k == n_out - 1:
            break
        for j in range(n_sub):
            ts = t + j * dt_i
            k1 = rhs(ts, state)
            k2 = rhs(ts + 0.5 * dt_i, state + 0.5 * dt_i * k1)
            k3 = rhs(ts + 0.5 * dt_i, state + 0.5 * dt_i * k2)
            k4 = rhs(ts + dt_i, state + dt_i * k3)
            state = state + (dt_i / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(state)):
            raise NumericalError(f"plant state non-finite at t = "
                                 f"{t + dt_o:.2f} s")

    meta = {"wind": wind, "dt_inner": dt_i, "dt_outer": dt_o,
            "noise_seed": noise_seed, "add_noise": add_noise,
            "wave_seed": wave.seed if wave is not None else None,
            "noise_std": list(np.asarray(params.noise_std, dtype=float)),
            "op": op.as_dict(), "n_lines": n_lines,
            "inflow_clamped_evals": clamp_count}
    return RunRecord(t=t_axis, u=u_rec, y=y_rec, tensions=ten_rec,
                     fault_log=fault_log, meta=meta,
                     states=hist if record_states else None)
