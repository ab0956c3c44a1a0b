"""Wave-excited linear model about the operating point.

Assembly happens in discrete time: the mechanical block (rotor + 6 platform
DOF, Taylor aero coefficients, hydrostatic + mooring stiffness) is ZOH
discretized at the detector step with an extended input carrying the memory
forces, then composed with the identified radiation and wave-force models,
which are already discrete at the same step. This avoids converting the
identified models to continuous time. The continuous mechanical-only part is
kept for analysis.

Two deliberate simplifications against the truth plant, both confined to the
laterally-symmetric DOFs (sway, roll, yaw) that no input excites and no
output observes:

- the mooring-stiffness cross terms between the planar set (surge, heave,
  pitch) and the lateral set are zeroed (they vanish by port-starboard
  symmetry up to the small static roll from the rotor torque reaction, whose
  torque row is likewise dropped), and
- a small viscous damping floor is added on the lateral diagonal.

Together these decouple the lateral block exactly, so it carries zero
steady-state covariance in the observer design instead of stalling the
Riccati iteration with near-undamped unobservable modes, while the
input/output behavior of the model is unchanged to first order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, NumericalError
from .plant import (OperatingPoint, PlantParams, RunRecord,
                    aero_torque_thrust)
from .statespace import StateSpaceModel, discretize_zoh

__all__ = [
    "AeroGradients",
    "AssembledModel",
    "linearize_aero",
    "assemble_linear_model",
    "deviation_series",
    "write_block_map",
]

PLANAR_DOFS = (0, 2, 4)
LATERAL_DOFS = (1, 3, 5)
LATERAL_DAMPING_RATIO = 0.002

INPUT_LABELS = ("theta", "wind", "qg", "eta")
OUTPUT_LABELS = ("omega_rotor", "surge", "pitch_platform")


@dataclass(frozen=True)
class AeroGradients:
    """Central-difference Taylor coefficients of aero torque and thrust in
    (rotor speed, collective pitch, inflow speed) at the operating point."""

    dq_domega: float
    dq_dtheta: float
    dq_dv: float
    dt_domega: float
    dt_dtheta: float
    dt_dv: float
    flags: tuple = ()

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in
                ("dq_domega", "dq_dtheta", "dq_dv",
                 "dt_domega", "dt_dtheta", "dt_dv")}


@dataclass
class AssembledModel:
    dt_model: StateSpaceModel      # discrete, full state
    ct: StateSpaceModel            # continuous, mechanical block only
    op: OperatingPoint
    grads: AeroGradients
    k_moor: np.ndarray             # stiffness actually used (cross-zeroed)
    blocks: dict                   # state-index ranges by block name


def linearize_aero(params: PlantParams, op: OperatingPoint,
                   rel_step: float = 1e-4) -> AeroGradients:
    """Six aero partials by central differences. Steps are rel_step times a
    fixed scale per variable (rated speed, full pitch range, wind)."""
    if rel_step <= 0:
        raise ConfigurationError("rel_step must be positive")
    aero = params.aero
    scales = (params.ctrl.rated_speed, params.ctrl.pitch_max, op.wind)
    base = (op.omega, op.theta, op.wind)

    def loads(i, delta):
        args = list(base)
        args[i] += delta
        return aero_torque_thrust(aero, args[0], args[1], args[2])

    grads = []
    for i, sc in enumerate(scales):
        h = rel_step * sc
        qp, tp = loads(i, +h)
        qm, tm = loads(i, -h)
        grads.append(((qp - qm) / (2 * h), (tp - tm) / (2 * h)))
    flags = []
    if grads[1][0] >= 0.0:
        flags.append("feather_gradient_nonnegative")
    g = AeroGradients(
        dq_domega=grads[0][0], dq_dtheta=grads[1][0], dq_dv=grads[2][0],
        dt_domega=grads[0][1], dt_dtheta=grads[1][1], dt_dv=grads[2][1],
        flags=tuple(flags))
    if not all(np.isfinite(list(g.as_dict().values()))):
        raise NumericalError("non-finite aero gradient")
    return g


def _mechanical_ct(params: PlantParams, grads: AeroGradients,
                   k_moor: np.ndarray, k_hydro: np.ndarray
                   ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Continuous mechanical block, states [dOmega, dxi_dot(6), dxi(6)].
    Returns (a, b_u, b_f): b_u over (theta, wind, qg, eta) with a zero eta
    column, b_f the 6 generalized-force inputs."""
    plat = params.platform
    m_tot = plat.m_rb + plat.a_inf
    try:
        m_inv = np.linalg.inv(m_tot)
    except np.linalg.LinAlgError as exc:
        raise ConfigurationError("singular generalized mass matrix") from exc

    k_tot = k_hydro + k_moor
    d_reg = np.diag(np.asarray(plat.d_visc, dtype=float))
    for i in LATERAL_DOFS:
        floor = 2.0 * LATERAL_DAMPING_RATIO * np.sqrt(
            max(k_tot[i, i], 0.0) * m_tot[i, i])
        d_reg[i, i] = max(d_reg[i, i], floor)

    hub = params.aero.hub_height
    j_t = params.j_drivetrain
    # thrust acts along surge with a hub-height pitch moment; the rotor
    # torque reaction on roll is dropped (see module docstring)
    e_aero = np.zeros(6)
    e_aero[0] = 1.0
    e_aero[4] = hub
    # relative inflow: dv_rel = dv - dxi_dot[0] - hub*dxi_dot[4]
    s_vrel = np.zeros(6)
    s_vrel[0] = 1.0
    s_vrel[4] = hub

    a = np.zeros((13, 13))
    a[0, 0] = grads.dq_domega / j_t
    a[0, 1:7] = -grads.dq_dv * s_vrel / j_t
    a[1:7, 0] = m_inv @ e_aero * grads.dt_domega
    a[1:7, 1:7] = m_inv @ (-np.outer(e_aero * grads.dt_dv, s_vrel) - d_reg)
    a[1:7, 7:13] = -m_inv @ k_tot
    a[7:13, 1:7] = np.eye(6)

    b_u = np.zeros((13, 4))
    b_u[0, 0] = grads.dq_dtheta / j_t
    b_u[0, 1] = grads.dq_dv / j_t
    b_u[0, 2] = -params.ctrl.gear_ratio / j_t
    b_u[1:7, 0] = m_inv @ e_aero * grads.dt_dtheta
    b_u[1:7, 1] = m_inv @ e_aero * grads.dt_dv

    b_f = np.zeros((13, 6))
    b_f[1:7, :] = m_inv
    return a, b_u, b_f


def _zero_lateral_coupling(k: np.ndarray) -> np.ndarray:
    out = np.array(k, dtype=float, copy=True)
    for i in PLANAR_DOFS:
        for j in LATERAL_DOFS:
            out[i, j] = 0.0
            out[j, i] = 0.0
    return out


def assemble_linear_model(op: OperatingPoint, grads: AeroGradients,
                          k_moor: np.ndarray, k_hydro: np.ndarray,
                          rad_model: StateSpaceModel | None,
                          wave_model: StateSpaceModel | None,
                          params: PlantParams) -> AssembledModel:
    """Compose the discrete detection model from the mechanical block and
    the identified memory models (3-channel planar: surge, heave, pitch).

    State layout: [dOmega, dxi_dot(6), dxi(6), x_rad, x_wave]; inputs
    (theta, wind, qg, eta); outputs (rotor speed, surge, platform pitch).
    """
    if "feather_gradient_nonnegative" in grads.flags:
        raise ConfigurationError(
            "aero pitch gradient is not negative: operating point is not "
            "above rated, linear model would be wrong-signed")
    dt = params.dt_outer
    for m, name, n_in, n_out in ((rad_model, "radiation", 3, 3),
                                 (wave_model, "wave force", 1, 3)):
        if m is None:
            continue
        if not m.is_discrete or abs(m.dt - dt) > 1e-12:
            raise ConfigurationError(f"{name} model must be discrete at "
                                     f"dt = {dt}")
        if m.n_inputs != n_in or m.n_outputs != n_out:
            raise ConfigurationError(f"{name} model must be {n_in} in / "
                                     f"{n_out} out on the planar channels")

    k_used = _zero_lateral_coupling(k_moor)
    a_m, b_u, b_f = _mechanical_ct(params, grads, k_used, k_hydro)

    c_mech = np.zeros((3, 13))
    c_mech[0, 0] = 1.0     # rotor speed
    c_mech[1, 7] = 1.0     # surge
    c_mech[2, 11] = 1.0    # platform pitch
    ct = StateSpaceModel(a=a_m, b=b_u, c=c_mech, d=np.zeros((3, 4)),
                         input_labels=INPUT_LABELS,
                         output_labels=OUTPUT_LABELS)

    mech_ext = StateSpaceModel(a=a_m, b=np.hstack([b_u, b_f]),
                               c=np.zeros((1, 13)), d=np.zeros((1, 10)))
    mech_d = discretize_zoh(mech_ext, dt)
    ad_m = mech_d.a
    bd_u = mech_d.b[:, :4]
    bd_f = mech_d.b[:, 4:]

    # embed the planar memory channels: force rows surge/heave/pitch
    e_f = np.zeros((6, 3))
    for col, dof in enumerate(PLANAR_DOFS):
        e_f[dof, col] = 1.0
    bd_fp = bd_f @ e_f                      # 13 x 3
    s_v = np.zeros((3, 13))
    for row, dof in enumerate(PLANAR_DOFS):
        s_v[row, 1 + dof] = 1.0             # planar velocity states

    n_r = rad_model.order if rad_model is not None else 0
    n_w = wave_model.order if wave_model is not None else 0
    n = 13 + n_r + n_w
    a = np.zeros((n, n))
    b = np.zeros((n, 4))
    a[:13, :13] = ad_m
    b[:13, :] = bd_u
    if rad_model is not None:
        # radiation memory force opposes motion
        a[:13, :13] -= bd_fp @ rad_model.d @ s_v
        a[:13, 13:13 + n_r] = -bd_fp @ rad_model.c
        a[13:13 + n_r, :13] = rad_model.b @ s_v
        a[13:13 + n_r, 13:13 + n_r] = rad_model.a
    if wave_model is not None:
        a[:13, 13 + n_r:] = bd_fp @ wave_model.c
        a[13 + n_r:, 13 + n_r:] = wave_model.a
        b[13 + n_r:, 3:4] = wave_model.b

    c = np.zeros((3, n))
    c[:, :13] = c_mech
    dt_model = StateSpaceModel(a=a, b=b, c=c, d=np.zeros((3, 4)), dt=dt,
                               input_labels=INPUT_LABELS,
                               output_labels=OUTPUT_LABELS)
    if not dt_model.is_stable():
        rho = np.max(np.abs(dt_model.poles()))
        raise NumericalError(
            f"assembled model unstable: spectral radius {rho:.6f}")

    blocks = {"rotor": (0, 1), "velocity": (1, 7), "position": (7, 13),
              "radiation": (13, 13 + n_r), "wave": (13 + n_r, n)}
    return AssembledModel(dt_model=dt_model, ct=ct, op=op, grads=grads,
                          k_moor=k_used, blocks=blocks)


def deviation_series(record: RunRecord, op: OperatingPoint
                     ) -> tuple[np.ndarray, np.ndarray]:
    """Deviation inputs/outputs of a run relative to the operating point,
    ordered exactly as the assembled model expects."""
    u = np.column_stack([record.u[:, 0] - op.theta,
                         record.u[:, 1] - op.wind,
                         record.u[:, 2] - op.q_g,
                         record.u[:, 3]])
    y = np.column_stack([record.y[:, 0] - op.omega,
                         record.y[:, 1] - op.xi[0],
                         record.y[:, 2] - op.xi[4]])
    return u, y


def tracking_nrmse(am: AssembledModel, record: RunRecord,
                   window: tuple = (200.0, 1400.0)) -> np.ndarray:
    """Per-channel normalized RMS tracking error of the linear model.

    Drives the assembled discrete model with the recorded deviation inputs
    and compares its outputs with the recorded deviation outputs inside the
    time window. Each channel's RMS error is normalized by the RMS of the
    recorded deviation itself, so 0 is a perfect match and 1 is as wrong as
    predicting the operating point. The leading transient is excluded by
    starting the window after the memory states have settled.
    """
    from .statespace import simulate_discrete
    u, y = deviation_series(record, am.op)
    y_hat = simulate_discrete(am.dt_model, u)
    mask = (record.t >= window[0]) & (record.t <= window[1])
    if not np.any(mask):
        raise ConfigurationError("tracking window is outside the run")
    err = y_hat[mask] - y[mask]
    scale = np.sqrt(np.mean(y[mask] ** 2, axis=0))
    if np.any(scale <= 0.0):
        raise NumericalError("tracking normalization: zero deviation power")
    return np.sqrt(np.mean(err ** 2, axis=0)) / scale


def write_block_map(path, am: AssembledModel) -> None:
    """Sidecar naming the state indices of the assembled model."""
    lines = ["# state blocks of the assembled detection model",
             "# memory-force inputs are the generalized-mass-inverse rows "
             "applied to the identified model outputs on surge/heave/pitch"]
    for name, (i0, i1) in am.blocks.items():
        lines.append(f"{name},{i0},{i1}")
    lines.append(f"inputs,{','.join(am.dt_model.input_labels)}")
    lines.append(f"outputs,{','.join(am.dt_model.output_labels)}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
