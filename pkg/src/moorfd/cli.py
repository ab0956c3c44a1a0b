"""Command-line front end for the fault-detection workbench.

Subcommands cover the pipeline stages; each stage regenerates whatever
upstream artifacts are missing from the output directory, so `moorfd run
--case 1` on a clean tree synthesizes the hydrodynamic dataset, fits the
models, calibrates the detector and then runs the scenario.

Exit codes: 0 success, 2 configuration problem, 3 numerical failure,
4 batch detection gate failed.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import hydro, sysid
from .config import (RunConfig, build_plant_params, build_wave_spec,
                     load_config, scenario_faults)
from .detect import (DetectorModel, calibrate_detector, load_calibration_csv,
                     run_detection, write_calibration_csv)
from .errors import ConfigurationError, NumericalError
from .linmodel import (assemble_linear_model, linearize_aero,
                       write_block_map)
from .mooring import init_line_states, linearize_mooring_stiffness
from .plant import find_equilibrium, simulate_plant
from .report import (fig_batch_distances, fig_detection, fig_frf_comparison,
                     fig_run_overview, write_batch_summary,
                     write_detection_csv, write_key_values, write_run_csv)
from .statespace import model_frf, read_model_csv, write_model_csv

_PLANAR_LABELS = ["surge", "heave", "pitch"]


def _resolve(out: Path, name: str) -> Path:
    p = Path(name)
    return p if p.is_absolute() else out / p


def _ainf_path(frd_path: Path) -> Path:
    return frd_path.with_name(frd_path.stem + "_ainf" + frd_path.suffix)


def _load(args) -> tuple[RunConfig, Path]:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.values["simulation"]["wave_seed"] = args.seed
        cfg.values["simulation"]["noise_seed"] = args.seed + 1000003
    out = Path(args.out) if args.out else Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return cfg, out


def _make_wave(cfg: RunConfig) -> hydro.WaveRealization:
    sim = cfg.values["simulation"]
    return hydro.realize_wave_elevation(build_wave_spec(cfg),
                                        sim["duration"], sim["dt_outer"],
                                        sim["wave_seed"])


def _ensure_dataset(cfg: RunConfig, out: Path) -> hydro.HydroFrd:
    frd_path = _resolve(out, cfg.get("identification", "dataset"))
    ainf_path = _ainf_path(frd_path)
    if not (frd_path.exists() and ainf_path.exists()):
        if not cfg.synthesis_enabled:
            raise ConfigurationError(
                f"hydrodynamic dataset missing ({frd_path}) and synthesis "
                "is disabled in the config")
        frd = hydro.generate_synthetic_hydro_dataset(
            omega=build_wave_spec(cfg).omega_grid())
        frd_path.parent.mkdir(parents=True, exist_ok=True)
        hydro.write_hydro_csv(frd, frd_path, ainf_path)
        print(f"synthesized hydrodynamic dataset -> {frd_path}")
        return frd
    return hydro.read_hydro_csv(frd_path, ainf_path)


def _fit_models(cfg: RunConfig, out: Path, force: bool):
    """Radiation/wave-force models, fitted or reloaded. Returns
    (rad, wave, reports|None)."""
    rad_path, wav_path = out / "radiation_model.csv", out / "wave_model.csv"
    if not force and rad_path.exists() and wav_path.exists():
        return read_model_csv(rad_path), read_model_csv(wav_path), None
    frd = _ensure_dataset(cfg, out)
    ident = cfg.values["identification"]
    band = (ident["band_min"], ident["band_max"])
    dt = cfg.values["simulation"]["dt_outer"]
    rad, rep_rad = sysid.fit_radiation_model(
        frd, order=ident["radiation_order"], dt=dt, band=band)
    wav, rep_wav = sysid.fit_wave_force_model(
        frd, order=ident["wave_order"], t_d=ident["t_d"], dt=dt, band=band)
    write_model_csv(rad, rad_path)
    write_model_csv(wav, wav_path)

    omega, k_ref = sysid.ogilvie_frf(frd, hydro.EXCITED_DOFS)
    fig_frf_comparison(omega, k_ref, model_frf(rad, omega), band,
                       out / "identify_radiation.png", _PLANAR_LABELS,
                       title="radiation memory: data vs fitted model")
    x_ref = (frd.x[:, list(hydro.EXCITED_DOFS)]
             * np.exp(-1j * frd.omega * ident["t_d"])[:, None])[:, :, None]
    fig_frf_comparison(frd.omega, x_ref, model_frf(wav, frd.omega), band,
                       out / "identify_wave.png", _PLANAR_LABELS,
                       title="wave excitation (causalized): data vs model")
    reports = {"radiation": rep_rad, "wave_force": rep_wav}
    pairs = {}
    for name, rep in reports.items():
        pairs[f"{name}.order"] = rep.order
        pairs[f"{name}.band_rel_error"] = rep.err_rel
        pairs[f"{name}.stable"] = rep.stable
        pairs[f"{name}.iterations"] = rep.n_iter
        pairs[f"{name}.flags"] = ";".join(rep.flags) or "none"
    write_key_values(pairs, out / "fit_report.txt")
    for rep in reports.values():
        print(rep.summary())
    return rad, wav, reports


def _assemble(cfg: RunConfig, rad, wav):
    params = build_plant_params(cfg)
    op = find_equilibrium(params)
    k_moor = linearize_mooring_stiffness(params.lines,
                                         init_line_states(params.lines),
                                         op.xi)
    grads = linearize_aero(params, op)
    am = assemble_linear_model(op, grads, k_moor, params.platform.k_hydro,
                               rad, wav, params)
    return am, params


def _ensure_calibration(cfg: RunConfig, out: Path, force: bool = False
                        ) -> DetectorModel:
    cal_path = out / "calibration.csv"
    if not force and cal_path.exists():
        return load_calibration_csv(cal_path)
    rad, wav, _ = _fit_models(cfg, out, force=False)
    am, params = _assemble(cfg, rad, wav)
    sim = cfg.values["simulation"]
    healthy = simulate_plant(params, _make_wave(cfg), faults=(),
                             noise_seed=sim["noise_seed"],
                             add_noise=sim["add_noise"], op=am.op)
    det = calibrate_detector(am, healthy,
                             alpha=cfg.values["detector"]["alpha"])
    write_calibration_csv(det, cal_path)
    rep = run_detection(det, healthy, hold=cfg.values["detector"]["hold"])
    fig_detection(rep, out / "calibration_distance.png",
                  title="healthy baseline distance")
    write_key_values(
        {"mean_d": det.mean_d, "std_d": det.std_d, "alpha": det.alpha,
         "threshold": det.d_threshold, "far_bound": det.far_bound,
         "healthy_far": rep.far, "tuned": det.meta["tuned"],
         "tune_iterations": det.meta["tune_iterations"]},
        out / "calibration_summary.txt")
    print(f"calibrated: threshold {det.d_threshold:.3f} "
          f"(mean {det.mean_d:.3f} + {det.alpha:g} x std {det.std_d:.3f}), "
          f"healthy raw exceedance {100 * rep.far:.3f}%")
    return det


def _run_case(cfg: RunConfig, out: Path, case: int,
              theta_x: float | None = None):
    """Simulate one load case against the stored calibration and write its
    artifacts. Returns (summary row, DetectionReport)."""
    det = _ensure_calibration(cfg, out)
    params = build_plant_params(cfg)
    sim = cfg.values["simulation"]
    faults = scenario_faults(cfg, case, theta_x)
    rec = simulate_plant(params, _make_wave(cfg), faults=faults,
                         noise_seed=sim["noise_seed"],
                         add_noise=sim["add_noise"])
    rep = run_detection(det, rec, hold=cfg.values["detector"]["hold"])
    if case == 0:
        detected = rep.first_confirmed_alarm is not None
    else:
        detected = rep.detection_delay is not None
    write_run_csv(rec, out / f"run_case{case}.csv")
    write_detection_csv(rep, out / f"detection_case{case}.csv")
    summary = rep.summary()
    summary.update({"case": case, "detected": detected})
    write_key_values(summary, out / f"summary_case{case}.txt")
    fig_run_overview(rec, out / f"run_case{case}.png",
                     title=f"load case {case}")
    fig_detection(rep, out / f"detection_case{case}.png",
                  title=f"load case {case}")
    row = {"case": case, "detected": detected, "delay_s": rep.detection_delay,
           "far": rep.far, "threshold": det.d_threshold, "alpha": det.alpha}
    delay = "-" if rep.detection_delay is None \
        else f"{rep.detection_delay:.1f} s"
    print(f"case {case}: detected={str(detected).lower()} delay={delay} "
          f"raw exceedance {100 * rep.far:.3f}%")
    return row, rep


def _batch_worker(config_path, out_str, seed, case):
    """Top-level so process pools can pickle it; recreates the config and
    reads the calibration written before the pool started."""
    ns = argparse.Namespace(config=config_path, out=out_str, seed=seed)
    cfg, out = _load(ns)
    return _run_case(cfg, out, case)


def cmd_frd_synth(cfg: RunConfig, out: Path, args) -> int:
    frd_path = _resolve(out, cfg.get("identification", "dataset"))
    frd = hydro.generate_synthetic_hydro_dataset(
        omega=build_wave_spec(cfg).omega_grid())
    hydro.write_hydro_csv(frd, frd_path, _ainf_path(frd_path))
    print(f"wrote {frd.omega.size}-frequency dataset -> {frd_path}")
    return 0


def cmd_wave_export(cfg: RunConfig, out: Path, args) -> int:
    wave = _make_wave(cfg)
    hydro.write_wave_csv(wave, out / "wave.csv")
    est_hs = 4.0 * float(np.std(wave.eta))
    print(f"wrote {wave.t.size} samples -> {out / 'wave.csv'} "
          f"(4*std = {est_hs:.3f} m)")
    return 0


def cmd_identify(cfg: RunConfig, out: Path, args) -> int:
    rad, wav, _ = _fit_models(cfg, out, force=True)
    am, _ = _assemble(cfg, rad, wav)
    write_model_csv(am.dt_model, out / "assembled_model.csv")
    write_block_map(out / "block_map.txt", am)
    rho = float(np.max(np.abs(am.dt_model.poles())))
    print(f"assembled detection model: {am.dt_model.order} states, "
          f"spectral radius {rho:.6f}")
    return 0


def cmd_calibrate(cfg: RunConfig, out: Path, args) -> int:
    _ensure_calibration(cfg, out, force=True)
    return 0


def cmd_run(cfg: RunConfig, out: Path, args) -> int:
    _run_case(cfg, out, args.case, args.theta_x)
    return 0


def cmd_batch(cfg: RunConfig, out: Path, args) -> int:
    _ensure_calibration(cfg, out)
    cases = (0, 1, 2, 3, 4)
    results = {}
    if args.parallel and args.parallel > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=args.parallel) as pool:
            futs = {case: pool.submit(_batch_worker, args.config, str(out),
                                      args.seed, case) for case in cases}
            for case, fut in futs.items():
                results[case] = fut.result()
    else:
        for case in cases:
            results[case] = _run_case(cfg, out, case)
    rows = [results[c][0] for c in cases]
    write_batch_summary(rows, out / "batch_summary.csv")
    fig_batch_distances({c: results[c][1] for c in cases},
                        out / "batch_distances.png")
    gate_ok = all(r["detected"] for r in rows if r["case"] != 0) \
        and not next(r["detected"] for r in rows if r["case"] == 0)
    if not args.no_gate and not gate_ok:
        print("detection gate FAILED", file=sys.stderr)
        return 4
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="moorfd",
        description="mooring-line fault detection workbench")
    p.add_argument("--config", metavar="PATH", default=None,
                   help="INI file overriding the shipped defaults")
    p.add_argument("--out", metavar="DIR", default=None,
                   help="output directory (default from config)")
    p.add_argument("--seed", type=int, default=None, metavar="N",
                   help="override wave seed (noise seed = N + 1000003)")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("frd-synth",
                   help="synthesize and write the hydrodynamic dataset")
    sub.add_parser("wave-export", help="write the wave elevation series")
    sub.add_parser("identify",
                   help="fit radiation/wave-force models and assemble the "
                        "detection model")
    sub.add_parser("calibrate",
                   help="simulate the healthy run and calibrate the detector")
    pr = sub.add_parser("run", help="simulate one load case and detect")
    pr.add_argument("--case", type=int, required=True, choices=(0, 1, 2, 3, 4),
                    help="0 healthy, 1/3 fairlead release on line 1/2, "
                         "2/4 anchor slip on line 1/2")
    pr.add_argument("--theta-x", type=float, default=None, dest="theta_x",
                    help="override the post-slip effective line length [m]")
    pb = sub.add_parser("batch", help="run all load cases and summarize")
    pb.add_argument("--parallel", type=int, default=0, metavar="N",
                    help="run cases in up to N worker processes")
    pb.add_argument("--no-gate", action="store_true",
                    help="do not exit 4 when the detection gate fails")
    return p


_DISPATCH = {"frd-synth": cmd_frd_synth, "wave-export": cmd_wave_export,
             "identify": cmd_identify, "calibrate": cmd_calibrate,
             "run": cmd_run, "batch": cmd_batch}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        cfg, out = _load(args)
        return _DISPATCH[args.command](cfg, out, args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
