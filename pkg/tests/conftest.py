import numpy as np
import pytest

from moorfd.config import (build_plant_params, build_wave_spec, load_config)
from moorfd.detect import calibrate_detector
from moorfd.hydro import generate_synthetic_hydro_dataset, \
    realize_wave_elevation
from moorfd.linmodel import assemble_linear_model, linearize_aero
from moorfd.mooring import init_line_states, linearize_mooring_stiffness
from moorfd.plant import find_equilibrium, simulate_plant
from moorfd.sysid import fit_radiation_model, fit_wave_force_model


@pytest.fixture(scope="session")
def cfg():
    return load_config(None)


@pytest.fixture(scope="session")
def dataset(cfg):
    return generate_synthetic_hydro_dataset(
        omega=build_wave_spec(cfg).omega_grid())


@pytest.fixture(scope="session")
def radiation_fit(dataset):
    return fit_radiation_model(dataset, dt=0.1)


@pytest.fixture(scope="session")
def wave_fit(dataset):
    return fit_wave_force_model(dataset, dt=0.1)


@pytest.fixture(scope="session")
def plant_params(cfg):
    return build_plant_params(cfg)


@pytest.fixture(scope="session")
def op(plant_params):
    return find_equilibrium(plant_params)


@pytest.fixture(scope="session")
def k_moor_op(plant_params, op):
    return linearize_mooring_stiffness(
        plant_params.lines, init_line_states(plant_params.lines), op.xi)


@pytest.fixture(scope="session")
def assembled(plant_params, op, k_moor_op, radiation_fit, wave_fit):
    grads = linearize_aero(plant_params, op)
    return assemble_linear_model(op, grads, k_moor_op,
                                 plant_params.platform.k_hydro,
                                 radiation_fit[0], wave_fit[0], plant_params)


@pytest.fixture(scope="session")
def wave_real(cfg):
    sim = cfg.values["simulation"]
    return realize_wave_elevation(build_wave_spec(cfg), sim["duration"],
                                  sim["dt_outer"], sim["wave_seed"])


@pytest.fixture(scope="session")
def healthy_run(cfg, plant_params, wave_real, op):
    return simulate_plant(plant_params, wave_real,
                          noise_seed=cfg.get("simulation", "noise_seed"),
                          op=op)


@pytest.fixture(scope="session")
def detector(assembled, healthy_run):
    return calibrate_detector(assembled, healthy_run)


@pytest.fixture()
def rng():
    return np.random.default_rng(823)
