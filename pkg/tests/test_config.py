"""Configuration loading, schema validation, and parameter builders."""

import math

import numpy as np
import pytest

from moorfd.config import (FAULT_CASES, build_mooring_lines,
                           build_plant_params, build_wave_spec, load_config,
                           scenario_faults)
from moorfd.errors import ConfigurationError
from moorfd.mooring import (FAULT_ANCHOR_SLIP, FAULT_FAIRLEAD_RELEASE,
                            init_line_states, length_for_resting,
                            mooring_force)


def _write(tmp_path, text):
    p = tmp_path / "user.ini"
    p.write_text(text, encoding="utf-8")
    return p


# ---------------------------------------------------------------- loading


def test_defaults_load_typed():
    cfg = load_config()
    assert cfg.source == "default"
    assert cfg.synthesis_enabled is True
    assert cfg.custom_faults == []
    sim = cfg.values["simulation"]
    assert isinstance(sim["dt_outer"], float) and sim["dt_outer"] == 0.1
    assert isinstance(sim["wave_seed"], int)
    assert sim["add_noise"] is True
    assert isinstance(cfg.values["wave"]["n_omega"], int)
    assert cfg.get("identification", "dataset") == "frd.csv"
    assert cfg.out_dir == "out"


def test_user_file_overrides_subset(tmp_path):
    p = _write(tmp_path, "[wave]\nhs = 3.5\n")
    cfg = load_config(p)
    assert cfg.values["wave"]["hs"] == 3.5
    assert cfg.values["wave"]["tp"] == load_config().values["wave"]["tp"]
    assert cfg.source == str(p)


def test_missing_file_rejected(tmp_path):
    with pytest.raises(ConfigurationError, match="not found"):
        load_config(tmp_path / "absent.ini")


def test_unknown_section_rejected(tmp_path):
    p = _write(tmp_path, "[waves]\nhs = 3.0\n")
    with pytest.raises(ConfigurationError, match=r"unknown config section"):
        load_config(p)


def test_unknown_key_rejected(tmp_path):
    p = _write(tmp_path, "[wave]\nhz = 3.0\n")
    with pytest.raises(ConfigurationError, match="hz"):
        load_config(p)


def test_bad_value_type_names_key(tmp_path):
    p = _write(tmp_path, "[wave]\nhs = banana\n")
    with pytest.raises(ConfigurationError, match="hs"):
        load_config(p)


def test_boolean_parsing(tmp_path):
    cfg = load_config(_write(tmp_path, "[simulation]\nadd_noise = off\n"))
    assert cfg.values["simulation"]["add_noise"] is False
    with pytest.raises(ConfigurationError, match="add_noise"):
        load_config(_write(tmp_path, "[simulation]\nadd_noise = maybe\n"))


@pytest.mark.parametrize("body, frag", [
    ("[simulation]\ndt_outer = 0.0\n", "dt_outer"),
    ("[simulation]\ndt_outer = 0.1\ndt_inner = 0.03\n", "integer multiple"),
    ("[simulation]\nnoise_surge = 0.0\n", "noise"),
    ("[detector]\nalpha = 1.0\n", "alpha"),
    ("[detector]\nhold = 0\n", "hold"),
    ("[scenarios]\nfault_time = -5.0\n", "fault_time"),
    ("[scenarios]\nslip_1 = 0.0\n", "slip"),
    ("[identification]\nband_min = 2.0\nband_max = 1.0\n", "band"),
    ("[mooring]\nanchor_depth = -1.0\n", "anchor_depth"),
])
def test_range_validation(tmp_path, body, frag):
    with pytest.raises(ConfigurationError, match=frag):
        load_config(_write(tmp_path, body))


# ---------------------------------------------------- custom fault entries


def test_custom_fault_entries_parsed(tmp_path):
    p = _write(tmp_path,
               "[scenarios]\n"
               "fault_a = anchor_slip, 2, 900, 650\n"
               "fault_b = fairlead_release, 3, 950, 0\n")
    cfg = load_config(p)
    assert len(cfg.custom_faults) == 2
    slip = next(f for f in cfg.custom_faults if f.kind == FAULT_ANCHOR_SLIP)
    rel = next(f for f in cfg.custom_faults
               if f.kind == FAULT_FAIRLEAD_RELEASE)
    assert slip.line == 1 and slip.time == 900.0 and slip.theta_x == 650.0
    assert rel.line == 2 and rel.time == 950.0 and rel.theta_x is None
    # customs ride along with every load case, including the healthy one
    ev0 = scenario_faults(cfg, 0)
    assert len(ev0) == 2
    ev1 = scenario_faults(cfg, 1)
    assert len(ev1) == 3 and ev1[0].kind == FAULT_FAIRLEAD_RELEASE


@pytest.mark.parametrize("entry", [
    "anchor_slip, 2, 900",            # wrong arity
    "winch_jam, 2, 900, 650",         # unknown kind
    "anchor_slip, 0, 900, 650",       # line index below 1
    "anchor_slip, 4, 900, 650",       # line index above 3
    "anchor_slip, two, 900, 650",     # non-numeric field
])
def test_custom_fault_entry_guards(tmp_path, entry):
    p = _write(tmp_path, f"[scenarios]\nfault_a = {entry}\n")
    with pytest.raises(ConfigurationError):
        load_config(p)


# ------------------------------------------------------------- load cases


def test_scenario_faults_all_cases():
    cfg = load_config()
    t0 = cfg.values["scenarios"]["fault_time"]
    assert scenario_faults(cfg, 0) == []
    for case, line in ((1, 0), (3, 1)):
        (ev,) = scenario_faults(cfg, case)
        assert (ev.kind, ev.line, ev.time) == (FAULT_FAIRLEAD_RELEASE,
                                               line, t0)
        assert ev.theta_x is None
    for case, line, key in ((2, 0, "slip_1"), (4, 1, "slip_2")):
        (ev,) = scenario_faults(cfg, case)
        assert (ev.kind, ev.line) == (FAULT_ANCHOR_SLIP, line)
        expect = length_for_resting(build_mooring_lines(cfg)[line],
                                    cfg.values["scenarios"][key])
        assert ev.theta_x == pytest.approx(expect, rel=1e-12)


def test_scenario_slip_effective_lengths_frozen():
    """The resting-length targets map to these effective total lengths
    (independently cross-checked by the catenary tests)."""
    cfg = load_config()
    (ev2,) = scenario_faults(cfg, 2)
    (ev4,) = scenario_faults(cfg, 4)
    assert ev2.theta_x == pytest.approx(605.581437, abs=1e-4)
    assert ev4.theta_x == pytest.approx(619.931774, abs=1e-4)


def test_scenario_theta_x_override_and_guards():
    cfg = load_config()
    (ev,) = scenario_faults(cfg, 2, theta_x=650.0)
    assert ev.theta_x == 650.0
    with pytest.raises(ConfigurationError, match="anchor-slip"):
        scenario_faults(cfg, 1, theta_x=650.0)
    with pytest.raises(ConfigurationError, match="anchor-slip"):
        scenario_faults(cfg, 0, theta_x=650.0)
    with pytest.raises(ConfigurationError, match="load case"):
        scenario_faults(cfg, 9)
    assert sorted(FAULT_CASES) == [0, 1, 2, 3, 4]


# ---------------------------------------------------------------- builders


def test_build_wave_spec_matches_config():
    cfg = load_config()
    spec = build_wave_spec(cfg)
    w = cfg.values["wave"]
    assert (spec.hs, spec.tp, spec.gamma) == (w["hs"], w["tp"], w["gamma"])
    grid = spec.omega_grid()
    assert grid.size == w["n_omega"]
    assert grid[0] == pytest.approx(w["omega_min"])
    assert grid[-1] == pytest.approx(w["omega_max"])


def test_build_mooring_lines_geometry():
    cfg = load_config()
    lines = build_mooring_lines(cfg)
    m = cfg.values["mooring"]
    assert len(lines) == 3
    for ln, az_key in zip(lines, ("azimuth_1", "azimuth_2", "azimuth_3")):
        psi = math.radians(m[az_key])
        assert ln.anchor[0] == pytest.approx(m["anchor_radius"]
                                             * math.cos(psi), abs=1e-9)
        assert ln.anchor[1] == pytest.approx(m["anchor_radius"]
                                             * math.sin(psi), abs=1e-9)
        assert ln.anchor[2] == -m["anchor_depth"]
        assert np.hypot(*ln.fairlead_body[:2]) == pytest.approx(
            m["fairlead_radius"])
        assert ln.fairlead_body[2] == m["fairlead_height"]
        assert ln.length == m["length"] and ln.ea == m["ea"]


def test_build_plant_params_mass_balance():
    cfg = load_config()
    params = build_plant_params(cfg)
    env = cfg.values["environment"]
    g = env["gravity"]
    buoyancy = env["rho_water"] * g * cfg.values["platform"][
        "displaced_volume"]
    lines = build_mooring_lines(cfg)
    _, diags = mooring_force(lines, np.zeros(6), init_line_states(lines))
    v_pre = sum(d.v for d in diags)
    assert params.platform.mass == pytest.approx((buoyancy - v_pre) / g,
                                                 rel=1e-12)
    # net buoyancy exactly cancels the vertical pretension at the design pose
    assert params.platform.f_buoy_net == pytest.approx(v_pre, rel=1e-12)
    tb = cfg.values["turbine"]
    assert params.j_drivetrain == pytest.approx(
        tb["j_rotor"] + tb["gear_ratio"] ** 2 * tb["j_generator"])
    assert params.ctrl.rated_speed == pytest.approx(
        tb["rated_speed_rpm"] * math.pi / 30.0)
    np.testing.assert_allclose(
        params.noise_std,
        [cfg.values["simulation"][k] for k in ("noise_omega", "noise_surge",
                                               "noise_pitch")])


def test_build_plant_params_rejects_sinking_platform(tmp_path):
    p = _write(tmp_path, "[platform]\ndisplaced_volume = 100.0\n")
    with pytest.raises(ConfigurationError, match="mass"):
        build_plant_params(load_config(p))
