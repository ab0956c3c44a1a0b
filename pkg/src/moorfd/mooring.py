"""Quasi-static elastic catenary mooring with seabed contact and faults.

Each line hangs from a platform fairlead to a seabed anchor. The profile
solve distinguishes three regimes by horizontal tension H:

  slack:     the fairlead-to-anchor horizontal span is shorter than the
             seabed-resting length, H = 0, the suspended part hangs vertical;
  touchdown: part of the line rests on the seabed; the suspended length
             follows in closed form from H (one stable quadratic root), so
             the outer problem is a single scalar equation in H;
  lifted:    the whole line is suspended; the anchor-side vertical force is
             found by a safeguarded Newton inner iteration.

The outer solve is a bracketed bisection/secant hybrid on H with relative
tolerance 1e-10, warm-startable from the previous step's H (the plant keeps
a per-line cache, which only changes iteration counts, never the root).

Sign conventions: the returned platform force pulls the fairlead toward the
anchor horizontally and downward with the suspended line weight. Moments are
taken about the platform reference origin in earth axes.

Elastic stretch uses constant axial stiffness EA; seabed friction is
neglected, so bottom tension equals H and the elastic term H L / EA covers
both segments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError, NumericalError

__all__ = [
    "MooringLineParams",
    "LineState",
    "FaultEvent",
    "CatenarySolution",
    "solve_catenary_spans",
    "solve_catenary",
    "init_line_states",
    "mooring_force",
    "linearize_mooring_stiffness",
    "apply_mooring_fault",
]

RHO_WATER = 1025.0
GRAVITY = 9.81

FAULT_FAIRLEAD_RELEASE = "fairlead_release"
FAULT_ANCHOR_SLIP = "anchor_slip"

MODE_HEALTHY = "healthy"
MODE_RELEASED = "fairlead_released"
MODE_SLIPPED = "anchor_slipped"


@dataclass(frozen=True)
class MooringLineParams:
    """Geometry and material of one line. anchor is an earth-frame point on
    the seabed; fairlead_body is fixed in the platform frame."""

    length: float
    mass_per_length: float
    diameter: float
    ea: float
    anchor: tuple
    fairlead_body: tuple
    rho_water: float = RHO_WATER
    g: float = GRAVITY

    def __post_init__(self):
        if min(self.length, self.mass_per_length, self.diameter,
               self.ea) <= 0.0:
            raise ConfigurationError(
                "line length, mass, diameter and EA must be positive")
        if self.submerged_weight <= 0.0:
            raise ConfigurationError(
                "line is buoyant: submerged weight must be positive")

    @property
    def submerged_weight(self) -> float:
        """Weight per unstretched length in water [N/m]."""
        buoy = self.rho_water * math.pi * self.diameter ** 2 / 4.0
        return (self.mass_per_length - buoy) * self.g


@dataclass
class LineState:
    """Mutable per-line condition. h_warm caches the last horizontal tension
    purely to warm-start the solver; it never changes the converged root."""

    mode: str = MODE_HEALTHY
    effective_length: float = 0.0
    design_length: float = 0.0
    h_warm: float | None = None


@dataclass(frozen=True)
class FaultEvent:
    """time [s], line index, kind in {fairlead_release, anchor_slip};
    theta_x is the post-slip effective unstretched length [m] and is ignored
    for releases."""

    time: float
    line: int
    kind: str
    theta_x: float | None = None

    def __post_init__(self):
        if self.kind not in (FAULT_FAIRLEAD_RELEASE, FAULT_ANCHOR_SLIP):
            raise ConfigurationError(f"unknown fault kind {self.kind!r}")
        if self.kind == FAULT_ANCHOR_SLIP:
            if self.theta_x is None or self.theta_x <= 0.0:
                raise ConfigurationError(
                    "anchor_slip fault needs a positive theta_x length")


@dataclass
class CatenarySolution:
    h: float              # horizontal tension [N], uniform along the line
    v: float              # vertical force at the fairlead [N], downward pull
    t_fair: float         # fairlead tension magnitude [N]
    l_bed: float          # unstretched length resting on the seabed [m]
    l_susp: float         # unstretched suspended length [m]
    profile: str          # slack | touchdown | lifted
    v_anchor: float = 0.0  # vertical force at the anchor (lifted only)


def _hang_length(span_z: float, w: float, ea: float) -> float:
    """Unstretched length of a vertical elastic hang reaching depth span_z."""
    return ea / w * (math.sqrt(1.0 + 2.0 * w * span_z / ea) - 1.0)


def _touchdown_suspended(h: float, span_z: float, w: float, ea: float) -> float:
    """Closed-form suspended length for the touchdown regime: the stable
    root of  alpha^2 u^2 - q u + (Z^2 + 2 Z c) = 0  with u = L_s^2,
    c = H/w, alpha = w/(2 EA), q = 2 alpha (Z + c) + 1."""
    c = h / w
    alpha = w / (2.0 * ea)
    z = span_z
    q = 2.0 * alpha * (z + c) + 1.0
    rhs = z * z + 2.0 * z * c
    disc = q * q - 4.0 * alpha * alpha * rhs
    if disc < 0.0:
        raise NumericalError("catenary: negative discriminant in touchdown "
                             "profile (inconsistent geometry)")
    u = 2.0 * rhs / (q + math.sqrt(disc))
    return math.sqrt(u)


def _touchdown_span(h: float, l_s: float, length: float, w: float,
                    ea: float) -> float:
    c = h / w
    return (length - l_s) + c * math.asinh(l_s / c) + h * length / ea


def _lifted_profile(h: float, span_z: float, length: float, w: float,
                    ea: float) -> tuple[float, float]:
    """Fully suspended line: solve the fairlead vertical force V_f >= w L
    such that the elastic catenary reaches span_z, return (span_x, V_f).
    g(V_f) is strictly increasing, safeguarded Newton."""
    wl = w * length

    def gz(v_f):
        v_a = v_f - wl
        return (math.sqrt(h * h + v_f * v_f)
                - math.sqrt(h * h + v_a * v_a)) / w \
            + (v_f * length - 0.5 * w * length * length) / ea - span_z

    def dgz(v_f):
        v_a = v_f - wl
        return (v_f / math.sqrt(h * h + v_f * v_f)
                - v_a / math.sqrt(h * h + v_a * v_a)) / w + length / ea

    lo = wl
    g_lo = gz(lo)
    if g_lo > 0.0:
        # boundary case: already deeper than required at V_a = 0; the
        # touchdown branch owns this region, return its limit
        v_f = wl
        v_a = 0.0
    else:
        hi = wl + max(w * span_z, h, 1.0)
        while gz(hi) < 0.0:
            hi *= 2.0
            if hi > 1e18:
                raise NumericalError("catenary: lifted-profile bracket "
                                     "failed to close")
        v_f = 0.5 * (lo + hi)
        for _ in range(200):
            g_v = gz(v_f)
            if g_v > 0.0:
                hi = v_f
            else:
                lo = v_f
            step = g_v / dgz(v_f)
            v_new = v_f - step
            if not lo < v_new < hi:
                v_new = 0.5 * (lo + hi)
            if abs(v_new - v_f) <= 1e-12 * max(v_f, 1.0):
                v_f = v_new
                break
            v_f = v_new
        else:
            raise NumericalError("catenary: lifted-profile Newton did not "
                                 "converge")
        v_a = v_f - wl
    span_x = (math.asinh(v_f / h) - math.asinh(v_a / h)) * h / w \
        + h * length / ea
    return span_x, v_f


def _span_of_h(h: float, span_z: float, length: float, w: float,
               ea: float):
    """Horizontal span reached at horizontal tension h > 0, plus profile
    bookkeeping (l_susp, v_fair, v_anchor, profile)."""
    l_s = _touchdown_suspended(h, span_z, w, ea)
    if l_s <= length:
        x = _touchdown_span(h, l_s, length, w, ea)
        return x, l_s, w * l_s, 0.0, "touchdown"
    x, v_f = _lifted_profile(h, span_z, length, w, ea)
    return x, length, v_f, v_f - w * length, "lifted"


def solve_catenary_spans(length: float, w: float, ea: float, span_x: float,
                         span_z: float, h_guess: float | None = None
                         ) -> CatenarySolution:
    """Solve one line given horizontal span and fairlead height above the
    anchor (both positive). Scalar core used by mooring_force."""
    if span_z <= 0.0:
        raise NumericalError(
            "catenary: fairlead is at or below the anchor plane "
            f"(span_z = {span_z:.3f} m)")
    if span_x < 0.0:
        raise ConfigurationError("span_x must be >= 0")
    l_hang = _hang_length(span_z, w, ea)
    if l_hang > length:
        # line too short to even hang to the seabed -> it is fully lifted
        # for any H; handled by the taut branch below
        pass
    elif span_x <= length - l_hang:
        v = w * l_hang
        return CatenarySolution(h=0.0, v=v, t_fair=v,
                                l_bed=length - l_hang, l_susp=l_hang,
                                profile="slack")

    h_cap = ea  # 100 percent strain: anything beyond is a setup error

    def f_of(h):
        return _span_of_h(h, span_z, length, w, ea)[0] - span_x

    # establish a sign-changing bracket; a warm guess grows a local one
    # (a few evaluations) instead of the global [~0, 4^k] expansion
    h_lo = 1e-9 * max(w * length, 1.0)
    f_lo = None
    bracket = None
    if h_guess is not None and h_lo < h_guess < h_cap:
        h0 = h_guess
        f0 = f_of(h0)
        step = 4e-3 * h0
        if f0 < 0.0:
            h1, f1 = h0, f0
            for _ in range(60):
                h2 = min(h1 + step, h_cap)
                f2 = f_of(h2)
                if f2 >= 0.0:
                    bracket = (h1, f1, h2, f2)
                    break
                if h2 >= h_cap:
                    raise NumericalError(
                        "catenary: span unreachable below 100 percent line "
                        f"strain (span_x = {span_x:.2f} m, length = "
                        f"{length:.2f} m)")
                h1, f1, step = h2, f2, step * 3.0
        else:
            h1, f1 = h0, f0
            for _ in range(60):
                h2 = h1 - step
                if h2 <= h_lo:
                    break               # fall through to the global bracket
                f2 = f_of(h2)
                if f2 < 0.0:
                    bracket = (h2, f2, h1, f1)
                    break
                h1, f1, step = h2, f2, step * 3.0
    if bracket is None:
        f_lo = f_of(h_lo)
        if f_lo >= 0.0:
            # degenerate: essentially zero horizontal tension reaches the span
            sol = _span_of_h(h_lo, span_z, length, w, ea)
            return CatenarySolution(h=h_lo, v=sol[2], t_fair=math.hypot(
                h_lo, sol[2]), l_bed=length - sol[1], l_susp=sol[1],
                profile=sol[4], v_anchor=sol[3])
        h_hi = max(w * span_z, 1e3)
        f_hi = f_of(h_hi)
        grow = 0
        while f_hi < 0.0:
            h_hi *= 4.0
            grow += 1
            if h_hi > h_cap or grow > 60:
                raise NumericalError(
                    "catenary: span unreachable below 100 percent line "
                    f"strain (span_x = {span_x:.2f} m, length = "
                    f"{length:.2f} m)")
            f_hi = f_of(h_hi)
        bracket = (h_lo, f_lo, h_hi, f_hi)

    # Illinois-damped regula falsi, relative tolerance 1e-10 on H; the
    # stale-endpoint halving keeps it superlinear where plain secant-in-
    # bracket stalls one-sided
    a, fa, b, fb = bracket
    side = 0
    for _ in range(200):
        if b - a <= 1e-10 * b:
            break
        h = b - fb * (b - a) / (fb - fa) if fb != fa else 0.5 * (a + b)
        if not a < h < b:
            h = 0.5 * (a + b)
        fh = f_of(h)
        if fh < 0.0:
            if side < 0:
                fb *= 0.5
            a, fa, side = h, fh, -1
        else:
            if side > 0:
                fa *= 0.5
            b, fb, side = h, fh, 1
    else:
        raise NumericalError("catenary: outer solve did not converge")
    h = 0.5 * (a + b)
    x, l_s, v_f, v_a, profile = _span_of_h(h, span_z, length, w, ea)
    return CatenarySolution(h=h, v=v_f, t_fair=math.hypot(h, v_f),
                            l_bed=length - l_s, l_susp=l_s,
                            profile=profile, v_anchor=v_a)


def solve_catenary(params: MooringLineParams, fairlead_pos,
                   anchor_pos=None, length: float | None = None,
                   h_guess: float | None = None) -> CatenarySolution:
    """Position-level wrapper: spans from earth-frame fairlead/anchor
    points, optional effective length override (faulted lines)."""
    anchor = np.asarray(params.anchor if anchor_pos is None else anchor_pos,
                        dtype=float)
    fair = np.asarray(fairlead_pos, dtype=float)
    span_x = math.hypot(fair[0] - anchor[0], fair[1] - anchor[1])
    span_z = fair[2] - anchor[2]
    return solve_catenary_spans(
        params.length if length is None else length,
        params.submerged_weight, params.ea, span_x, span_z, h_guess=h_guess)


def length_for_resting(line: MooringLineParams, resting: float) -> float:
    """Total unstretched length that leaves `resting` metres of line on the
    seabed with the platform at the design position.

    Inverts the monotone bed-length map L -> l_bed(L) by bisection. When the
    hanging chain alone covers the horizontal span (resting >= span) the
    slack regime gives the closed form L = l_hang + resting.
    """
    if resting <= 0.0:
        raise ConfigurationError("resting length must be positive")
    span_x = math.hypot(line.fairlead_body[0] - line.anchor[0],
                        line.fairlead_body[1] - line.anchor[1])
    span_z = line.fairlead_body[2] - line.anchor[2]
    w, ea = line.submerged_weight, line.ea
    l_hang = _hang_length(span_z, w, ea)
    if resting >= span_x:
        return l_hang + resting
    lo = math.hypot(span_x, span_z)   # taut straight line: nothing rests
    hi = l_hang + span_x              # slack onset: resting ~ span_x
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if solve_catenary_spans(mid, w, ea, span_x, span_z).l_bed < resting:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * hi:
            break
    return 0.5 * (lo + hi)


def init_line_states(lines) -> list:
    return [LineState(mode=MODE_HEALTHY, effective_length=ln.length,
                      design_length=ln.length, h_warm=None) for ln in lines]


def _rotation(roll: float, pitch: float, yaw: float) -> np.ndarray:
    cr, sr = math.cos(roll), math.sin(roll)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cy, sy = math.cos(yaw), math.sin(yaw)
    return np.array([
        [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
        [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
        [-sp, cp * sr, cp * cr]])


def mooring_force(lines, pose, states) -> tuple[np.ndarray, list]:
    """Total mooring load on the platform at the given pose.

    pose = (x, y, z, roll, pitch, yaw). Returns (f, diags) where f is the
    6-component force/moment about the platform origin in earth axes and
    diags is one CatenarySolution per line (zeroed for released lines).
    Updates each LineState's h_warm cache in place.
    """
    pose = np.asarray(pose, dtype=float)
    rot = _rotation(pose[3], pose[4], pose[5])
    f = np.zeros(6)
    diags = []
    for ln, st in zip(lines, states):
        if st.mode == MODE_RELEASED:
            diags.append(CatenarySolution(0.0, 0.0, 0.0, 0.0, 0.0,
                                          "released"))
            continue
        r_fair = rot @ np.asarray(ln.fairlead_body, dtype=float)
        fair = pose[:3] + r_fair
        anchor = np.asarray(ln.anchor, dtype=float)
        dx, dy = anchor[0] - fair[0], anchor[1] - fair[1]
        span_x = math.hypot(dx, dy)
        sol = solve_catenary_spans(st.effective_length, ln.submerged_weight,
                                   ln.ea, span_x, fair[2] - anchor[2],
                                   h_guess=st.h_warm)
        st.h_warm = sol.h if sol.h > 0.0 else None
        if span_x > 1e-12:
            fx = sol.h * dx / span_x
            fy = sol.h * dy / span_x
        else:
            fx = fy = 0.0
        fz = -sol.v
        f[0] += fx
        f[1] += fy
        f[2] += fz
        f[3] += r_fair[1] * fz - r_fair[2] * fy
        f[4] += r_fair[2] * fx - r_fair[0] * fz
        f[5] += r_fair[0] * fy - r_fair[1] * fx
        diags.append(sol)
    return f, diags


def linearize_mooring_stiffness(lines, states, pose0,
                                delta_trans: float = 0.05,
                                delta_rot: float = 2e-3) -> np.ndarray:
    """Central-difference mooring stiffness K = -dF/dxi at pose0 (6x6).

    The force Jacobian in Euler coordinates is symmetric in the translation
    and translation-rotation blocks for any conservative line field, but the
    rotation-rotation block carries a geometric term proportional to the net
    line torque, so it is genuinely asymmetric at a loaded pose. The
    energy-consistent tangent stiffness restores symmetry there, so the
    Jacobian is symmetrized after checking the blocks where symmetry is a
    finite-difference consistency statement.
    """
    pose0 = np.asarray(pose0, dtype=float)
    work = [replace(s) for s in states]     # keep caller caches untouched
    k = np.zeros((6, 6))
    deltas = [delta_trans] * 3 + [delta_rot] * 3
    for j in range(6):
        dp = np.zeros(6)
        dp[j] = deltas[j]
        f_plus, _ = mooring_force(lines, pose0 + dp, work)
        f_minus, _ = mooring_force(lines, pose0 - dp, work)
        k[:, j] = -(f_plus - f_minus) / (2.0 * deltas[j])
    asym_tt = np.max(np.abs(k[:3, :3] - k[:3, :3].T)) \
        / max(np.max(np.abs(k[:3, :3])), 1e-12)
    asym_tr = np.max(np.abs(k[:3, 3:] - k[3:, :3].T)) \
        / max(np.max(np.abs(k[:3, 3:])), np.max(np.abs(k[3:, :3])), 1e-12)
    if max(asym_tt, asym_tr) > 0.05:
        raise NumericalError(
            f"mooring stiffness asymmetry {max(asym_tt, asym_tr):.3e} "
            "exceeds tolerance; finite-difference steps unsuitable at this "
            "pose")
    return 0.5 * (k + k.T)


def apply_mooring_fault(states, event: FaultEvent) -> list:
    """Return a new line-state list with the fault applied. Idempotent: a
    repeated event leaves the states unchanged. An anchor slip whose theta_x
    equals the design length is a no-op (the line stays healthy, preserving
    the rule that a slipped line's effective length differs from design)."""
    if not 0 <= event.line < len(states):
        raise ConfigurationError(f"fault line index {event.line} out of "
                                 f"range for {len(states)} lines")
    new = [replace(s) for s in states]
    st = new[event.line]
    if event.kind == FAULT_FAIRLEAD_RELEASE:
        st.mode = MODE_RELEASED
        st.h_warm = None
    else:
        if abs(event.theta_x - st.design_length) < 1e-9:
            return new
        st.mode = MODE_SLIPPED
        st.effective_length = float(event.theta_x)
        st.h_warm = None
    return new
