"""Independent reference implementations used only by the tests.

The catenary oracle integrates the elastic-cable ODEs with a shooting
method, deliberately sharing no code path with the closed-form solver in
moorfd.mooring. This is the one place scipy's ODE integrator is allowed.
"""

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import root


def _integrate_suspended(h: float, v_low: float, l_susp: float, w: float,
                         ea: float) -> tuple[float, float]:
    """Integrate the suspended segment from its low end upward.

    State (x, z) over unstretched arc s; tension components are closed form
    (T_x = h constant, T_z = v_low + w s), only geometry is integrated.
    Returns the (x, z) run of the segment.
    """

    def rhs(s, yv):
        tz = v_low + w * s
        t = np.hypot(h, tz)
        stretch = 1.0 + t / ea
        return [stretch * h / t, stretch * tz / t]

    sol = solve_ivp(rhs, (0.0, l_susp), [0.0, 0.0], rtol=1e-11, atol=1e-12,
                    dense_output=False, method="RK45")
    if not sol.success:
        raise RuntimeError(f"oracle integration failed: {sol.message}")
    return float(sol.y[0, -1]), float(sol.y[1, -1])


def shooting_catenary(length: float, w: float, ea: float, span_x: float,
                      span_z: float, h0: float = 1e5):
    """Fairlead reaction of one elastic line with seabed contact.

    Tries the touchdown profile (unknowns: horizontal tension H and
    suspended length), and falls back to the fully lifted profile
    (unknowns: H and anchor vertical force) when the touchdown root wants
    more suspended line than exists. Returns a dict with h, v, t_fair,
    l_susp, profile.
    """

    def touchdown_res(p):
        h, l_s = p
        if h <= 0.0 or not 0.0 < l_s <= length:
            return [1e6, 1e6]
        x_s, z_s = _integrate_suspended(h, 0.0, l_s, w, ea)
        x_bed = (length - l_s) * (1.0 + h / ea)
        return [x_bed + x_s - span_x, z_s - span_z]

    sol = root(touchdown_res, [h0, min(0.9 * length, 1.4 * span_z)],
               method="hybr", options={"xtol": 1e-12})
    h, l_s = sol.x
    if sol.success and 0.0 < l_s < length:
        v = w * l_s
        return {"h": h, "v": v, "t_fair": float(np.hypot(h, v)),
                "l_susp": l_s, "profile": "touchdown"}

    def lifted_res(p):
        h, v_a = p
        if h <= 0.0:
            return [1e6, 1e6]
        x_s, z_s = _integrate_suspended(h, v_a, length, w, ea)
        return [x_s - span_x, z_s - span_z]

    sol = root(lifted_res, [h0, 0.1 * w * length], method="hybr",
               options={"xtol": 1e-12})
    if not sol.success:
        raise RuntimeError(f"oracle shooting failed: {sol.message}")
    h, v_a = sol.x
    v = v_a + w * length
    return {"h": h, "v": v, "t_fair": float(np.hypot(h, v)),
            "l_susp": length, "profile": "lifted"}
