"""Run configuration: flat INI sections validated against a fixed schema.

A shipped default file carries every key with its documented default; user
files override any subset. Unknown sections or keys fail loudly with the
offending name, since silently ignored misspellings are the classic way to
run the wrong experiment. Builders below turn the parsed config into the
typed parameter objects of the plant/mooring/hydro layers, deriving the
platform mass from the buoyancy/pretension balance so the design pose is an
exact equilibrium.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .errors import ConfigurationError
from .hydro import (WaveSpec, default_ainf, default_truth_radiation,
                    default_truth_wave)
from .mooring import (FAULT_ANCHOR_SLIP, FAULT_FAIRLEAD_RELEASE, FaultEvent,
                      MooringLineParams, init_line_states, length_for_resting,
                      mooring_force)
from .plant import AeroParams, ControllerParams, PlantParams, PlatformParams

__all__ = [
    "RunConfig",
    "load_config",
    "build_wave_spec",
    "build_mooring_lines",
    "build_plant_params",
    "scenario_faults",
    "FAULT_CASES",
]


def _boolean(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


# section -> key -> caster; every known key appears here and in default.ini
_SCHEMA = {
    "environment": {"rho_water": float, "rho_air": float, "gravity": float,
                    "wind": float},
    "wave": {"hs": float, "tp": float, "gamma": float, "omega_min": float,
             "omega_max": float, "n_omega": int},
    "simulation": {"duration": float, "dt_outer": float, "dt_inner": float,
                   "wave_seed": int, "noise_seed": int, "add_noise": _boolean,
                   "noise_omega": float, "noise_surge": float,
                   "noise_pitch": float},
    "turbine": {"radius": float, "hub_height": float,
                "rated_speed_rpm": float, "rated_power": float,
                "gear_ratio": float, "j_rotor": float, "j_generator": float,
                "kp": float, "ki": float, "pitch_min": float,
                "pitch_max": float, "pitch_rate": float,
                "cq0": float, "ct0": float},
    "platform": {"displaced_volume": float, "inertia_roll": float,
                 "inertia_pitch": float, "inertia_yaw": float,
                 "k_heave": float, "k_roll": float, "k_pitch": float,
                 "d_surge": float, "d_sway": float, "d_heave": float,
                 "d_roll": float, "d_pitch": float, "d_yaw": float},
    "mooring": {"length": float, "mass_per_length": float, "diameter": float,
                "ea": float, "anchor_radius": float, "anchor_depth": float,
                "fairlead_radius": float, "fairlead_height": float,
                "azimuth_1": float, "azimuth_2": float, "azimuth_3": float},
    "identification": {"radiation_order": int, "wave_order": int,
                       "t_d": float, "band_min": float, "band_max": float,
                       "dataset": str},
    "synthesis": {"enabled": _boolean},
    "detector": {"alpha": float, "hold": int},
    "scenarios": {"fault_time": float, "slip_1": float, "slip_2": float},
    "output": {"directory": str},
}

# the detection scenarios: (kind, 0-based line index, slip key or None)
FAULT_CASES = {
    0: None,
    1: (FAULT_FAIRLEAD_RELEASE, 0, None),
    2: (FAULT_ANCHOR_SLIP, 0, "slip_1"),
    3: (FAULT_FAIRLEAD_RELEASE, 1, None),
    4: (FAULT_ANCHOR_SLIP, 1, "slip_2"),
}


@dataclass
class RunConfig:
    values: dict                     # section -> key -> typed value
    custom_faults: list = field(default_factory=list)
    source: str = "default"
    synthesis_enabled: bool = True

    def get(self, section: str, key: str):
        return self.values[section][key]

    @property
    def out_dir(self) -> str:
        return self.values["output"]["directory"]


def _validate_ranges(v: dict) -> None:
    checks = [
        (0.0 < v["simulation"]["dt_outer"] <= 1.0,
         "simulation.dt_outer must be in (0, 1]"),
        (v["simulation"]["dt_inner"] > 0.0,
         "simulation.dt_inner must be positive"),
        (v["simulation"]["duration"] > 0.0,
         "simulation.duration must be positive"),
        (v["environment"]["wind"] >= 0.0,
         "environment.wind must be >= 0"),
        (v["detector"]["alpha"] > 1.0, "detector.alpha must exceed 1"),
        (v["detector"]["hold"] >= 1, "detector.hold must be >= 1"),
        (min(v["simulation"]["noise_omega"], v["simulation"]["noise_surge"],
             v["simulation"]["noise_pitch"]) > 0.0,
         "measurement noise levels must be positive"),
        (v["identification"]["band_min"] < v["identification"]["band_max"],
         "identification band must have band_min < band_max"),
        (v["scenarios"]["fault_time"] > 0.0,
         "scenarios.fault_time must be positive"),
        (min(v["scenarios"]["slip_1"], v["scenarios"]["slip_2"]) > 0.0,
         "scenarios slip resting lengths must be positive"),
        (v["platform"]["displaced_volume"] > 0.0,
         "platform.displaced_volume must be positive"),
        (min(v["platform"][k] for k in ("d_surge", "d_sway", "d_heave",
                                        "d_roll", "d_pitch", "d_yaw")) >= 0.0,
         "platform viscous damping must be >= 0"),
        (v["mooring"]["anchor_depth"] > 0.0,
         "mooring.anchor_depth must be positive"),
    ]
    for ok, msg in checks:
        if not ok:
            raise ConfigurationError(msg)
    ratio = v["simulation"]["dt_outer"] / v["simulation"]["dt_inner"]
    if abs(ratio - round(ratio)) > 1e-9 or ratio < 1.0 - 1e-9:
        raise ConfigurationError(
            "simulation.dt_outer must be an integer multiple of dt_inner")


def _parse_fault_entry(raw: str) -> FaultEvent:
    parts = [p.strip() for p in raw.split(",")]
    if len(parts) != 4:
        raise ConfigurationError(
            f"fault entry must be kind,line,time,theta_x; got {raw!r}")
    kind, line_s, time_s, theta_s = parts
    if kind not in (FAULT_FAIRLEAD_RELEASE, FAULT_ANCHOR_SLIP):
        raise ConfigurationError(f"unknown fault kind {kind!r}")
    try:
        line = int(line_s)
        time = float(time_s)
        theta = float(theta_s)
    except ValueError as exc:
        raise ConfigurationError(f"malformed fault entry {raw!r}") from exc
    if not 1 <= line <= 3:
        raise ConfigurationError("fault line index must be 1..3")
    return FaultEvent(time=time, line=line - 1, kind=kind,
                      theta_x=None if kind == FAULT_FAIRLEAD_RELEASE
                      else theta)


def load_config(path=None) -> RunConfig:
    """Parse the shipped defaults, then overlay the user file if given."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"),
                                   interpolation=None)
    default_text = resources.files("moorfd").joinpath(
        "default.ini").read_text(encoding="utf-8")
    cp.read_string(default_text)
    if path is not None:
        read = cp.read(path)
        if not read:
            raise ConfigurationError(f"config file not found: {path}")

    values: dict = {}
    custom = []
    for section in cp.sections():
        if section not in _SCHEMA:
            raise ConfigurationError(f"unknown config section [{section}]")
        values[section] = {}
        for key, raw in cp.items(section):
            caster = _SCHEMA[section].get(key)
            if caster is None:
                if section == "scenarios" and key.startswith("fault"):
                    custom.append(_parse_fault_entry(raw))
                    continue
                raise ConfigurationError(
                    f"unknown config key {key!r} in section [{section}]")
            try:
                values[section][key] = caster(raw)
            except ValueError as exc:
                raise ConfigurationError(
                    f"config key [{section}] {key} = {raw!r}: {exc}"
                ) from exc
    missing = [(s, k) for s, keys in _SCHEMA.items() if s != "synthesis"
               for k in keys if k not in values.get(s, {})]
    if missing:
        raise ConfigurationError(f"config missing keys: {missing}")
    _validate_ranges(values)
    synth = values.get("synthesis", {}).get("enabled", False)
    return RunConfig(values=values, custom_faults=custom,
                     source=str(path) if path else "default",
                     synthesis_enabled=bool(synth))


def build_wave_spec(cfg: RunConfig) -> WaveSpec:
    w = cfg.values["wave"]
    return WaveSpec(hs=w["hs"], tp=w["tp"], gamma=w["gamma"],
                    omega_min=w["omega_min"], omega_max=w["omega_max"],
                    n_omega=w["n_omega"])


def build_mooring_lines(cfg: RunConfig) -> list:
    m = cfg.values["mooring"]
    env = cfg.values["environment"]
    lines = []
    for i in (1, 2, 3):
        psi = math.radians(m[f"azimuth_{i}"])
        c, s = math.cos(psi), math.sin(psi)
        anchor = (m["anchor_radius"] * c, m["anchor_radius"] * s,
                  -m["anchor_depth"])
        fairlead = (m["fairlead_radius"] * c, m["fairlead_radius"] * s,
                    m["fairlead_height"])
        lines.append(MooringLineParams(
            length=m["length"], mass_per_length=m["mass_per_length"],
            diameter=m["diameter"], ea=m["ea"], anchor=anchor,
            fairlead_body=fairlead, rho_water=env["rho_water"],
            g=env["gravity"]))
    return lines


def build_plant_params(cfg: RunConfig) -> PlantParams:
    env = cfg.values["environment"]
    tb = cfg.values["turbine"]
    pf = cfg.values["platform"]
    sim = cfg.values["simulation"]
    g = env["gravity"]

    lines = build_mooring_lines(cfg)
    _, diags = mooring_force(lines, np.zeros(6), init_line_states(lines))
    v_pre = sum(d.v for d in diags)
    buoyancy = env["rho_water"] * g * pf["displaced_volume"]
    mass = (buoyancy - v_pre) / g
    if mass <= 0.0:
        raise ConfigurationError(
            "displaced volume too small: platform mass came out nonpositive")

    k_hydro = np.zeros((6, 6))
    k_hydro[2, 2] = pf["k_heave"]
    k_hydro[3, 3] = pf["k_roll"]
    k_hydro[4, 4] = pf["k_pitch"]

    aero = AeroParams(radius=tb["radius"], hub_height=tb["hub_height"],
                      rho_air=env["rho_air"], cq0=tb["cq0"], ct0=tb["ct0"])
    ctrl = ControllerParams(
        rated_speed=tb["rated_speed_rpm"] * math.pi / 30.0,
        rated_power=tb["rated_power"], gear_ratio=tb["gear_ratio"],
        kp=tb["kp"], ki=tb["ki"], pitch_min=tb["pitch_min"],
        pitch_max=tb["pitch_max"], pitch_rate=tb["pitch_rate"])
    d_visc = np.array([pf["d_surge"], pf["d_sway"], pf["d_heave"],
                       pf["d_roll"], pf["d_pitch"], pf["d_yaw"]])
    platform = PlatformParams(
        mass=mass,
        inertia=(pf["inertia_roll"], pf["inertia_pitch"], pf["inertia_yaw"]),
        k_hydro=k_hydro, a_inf=default_ainf(), f_buoy_net=buoyancy - mass * g,
        d_visc=d_visc)
    j_t = tb["j_rotor"] + tb["gear_ratio"] ** 2 * tb["j_generator"]
    noise = np.array([sim["noise_omega"], sim["noise_surge"],
                      sim["noise_pitch"]])
    return PlantParams(aero=aero, ctrl=ctrl, platform=platform,
                       truth_rad=default_truth_radiation(),
                       truth_wave=default_truth_wave(), lines=lines,
                       j_drivetrain=j_t, wind=env["wind"], noise_std=noise,
                       dt_inner=sim["dt_inner"], dt_outer=sim["dt_outer"])


def scenario_faults(cfg: RunConfig, case: int,
                    theta_x: float | None = None) -> list:
    """Fault events for a load case. Slip cases read the configured value
    as the post-slip seabed-resting unstretched length at the design
    position and derive the matching effective total length; theta_x
    overrides that effective length directly. Custom fault entries from
    the config are appended."""
    if case not in FAULT_CASES:
        raise ConfigurationError(f"load case must be one of "
                                 f"{sorted(FAULT_CASES)}; got {case}")
    sc = cfg.values["scenarios"]
    events = []
    if FAULT_CASES[case] is not None:
        kind, line, slip_key = FAULT_CASES[case]
        if kind == FAULT_ANCHOR_SLIP:
            eff = length_for_resting(build_mooring_lines(cfg)[line],
                                     sc[slip_key]) \
                if theta_x is None else theta_x
            events.append(FaultEvent(time=sc["fault_time"], line=line,
                                     kind=kind, theta_x=eff))
        else:
            if theta_x is not None:
                raise ConfigurationError(
                    "theta_x applies to anchor-slip cases only")
            events.append(FaultEvent(time=sc["fault_time"], line=line,
                                     kind=kind))
    elif theta_x is not None:
        raise ConfigurationError("theta_x applies to anchor-slip cases only")
    return events + list(cfg.custom_faults)
