"""Mooring-line fault detection workbench for a floating wind turbine.

Pipeline: synthesize or load hydrodynamic frequency-response data, fit
discrete radiation/wave-force models, assemble a linear detection model
around the operating point, calibrate a steady-state Kalman observer with
a Mahalanobis-distance detector, then run faulted load cases against it.
"""

from .config import (build_mooring_lines, build_plant_params,
                     build_wave_spec, load_config, scenario_faults)
from .detect import (DetectionReport, DetectorModel, baseline_statistics,
                     calibrate_detector, chebyshev_threshold,
                     mahalanobis_distance, run_detection, solve_dare_gain)
from .errors import ConfigurationError, NumericalError
from .hydro import (HydroFrd, WaveRealization, WaveSpec,
                    generate_synthetic_hydro_dataset, jonswap_spectrum,
                    read_hydro_csv, realize_wave_elevation, write_hydro_csv)
from .linmodel import AssembledModel, assemble_linear_model, linearize_aero
from .mooring import (FaultEvent, MooringLineParams, apply_mooring_fault,
                      init_line_states, linearize_mooring_stiffness,
                      mooring_force, solve_catenary)
from .plant import (OperatingPoint, PlantParams, RunRecord, find_equilibrium,
                    simulate_plant)
from .statespace import (StateSpaceModel, discretize_zoh, model_frf,
                         read_model_csv, simulate_discrete, write_model_csv)
from .sysid import (FitReport, band_relative_error, fit_radiation_model,
                    fit_state_space_era, fit_wave_force_model, ogilvie_frf,
                    pem_refine)

__version__ = "0.1.0"

__all__ = [
    "AssembledModel", "ConfigurationError", "DetectionReport",
    "DetectorModel", "FaultEvent", "FitReport", "HydroFrd",
    "MooringLineParams", "NumericalError", "OperatingPoint", "PlantParams",
    "RunRecord", "StateSpaceModel", "WaveRealization", "WaveSpec",
    "apply_mooring_fault", "assemble_linear_model", "band_relative_error",
    "baseline_statistics", "build_mooring_lines", "build_plant_params",
    "build_wave_spec", "calibrate_detector", "chebyshev_threshold",
    "discretize_zoh", "find_equilibrium", "fit_radiation_model",
    "fit_state_space_era", "fit_wave_force_model",
    "generate_synthetic_hydro_dataset", "init_line_states",
    "jonswap_spectrum", "linearize_aero", "linearize_mooring_stiffness",
    "load_config", "mahalanobis_distance", "model_frf", "mooring_force",
    "ogilvie_frf", "pem_refine", "read_hydro_csv", "read_model_csv",
    "realize_wave_elevation", "run_detection", "scenario_faults",
    "simulate_discrete", "simulate_plant", "solve_catenary",
    "solve_dare_gain", "write_hydro_csv", "write_model_csv",
]
