"""Run/detection artifacts: delimited output plus rendered figures.

All writers are deterministic for fixed inputs: fixed float formats, no
timestamps, and PNG metadata pinned so repeated runs are byte-identical on
the same installation. Figures are rendered headless (Agg) next to the CSV
they visualize.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from .detect import DetectionReport  # noqa: E402
from .plant import RunRecord  # noqa: E402

__all__ = [
    "write_run_csv",
    "write_detection_csv",
    "write_key_values",
    "write_batch_summary",
    "fig_run_overview",
    "fig_detection",
    "fig_frf_comparison",
    "fig_batch_distances",
]

_PNG_META = {"Software": "moorfd"}
_DPI = 130


def write_run_csv(record: RunRecord, path) -> None:
    """One row per output sample: inputs, measured outputs, line tensions;
    9 significant digits."""
    n_lines = record.tensions.shape[1]
    header = "t,theta,v,qg,eta,omega_rotor,surge,pitch_platform," \
        + ",".join(f"T{i + 1}" for i in range(n_lines))
    cols = np.column_stack([record.t, record.u, record.y, record.tensions])
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for row in cols:
            fh.write(",".join(f"{v:.9g}" for v in row) + "\n")


def write_detection_csv(report: DetectionReport, path) -> None:
    raw = report.d_series > report.threshold
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t,d,threshold,alarm\n")
        for t, d, a in zip(report.t, report.d_series, raw):
            fh.write(f"{t:.9g},{d:.9g},{report.threshold:.9g},{int(a)}\n")


def write_key_values(pairs: dict, path) -> None:
    """Flat `key = value` text block (fit reports, detection summaries)."""
    with open(path, "w", encoding="utf-8") as fh:
        for key, val in pairs.items():
            if isinstance(val, float):
                fh.write(f"{key} = {val:.9g}\n")
            else:
                fh.write(f"{key} = {val}\n")


def write_batch_summary(rows: list, path) -> None:
    """rows: dicts with case, detected, delay_s, far, threshold, alpha."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("case,detected,delay_s,far,threshold,alpha\n")
        for r in sorted(rows, key=lambda r: r["case"]):
            delay = r["delay_s"]
            fh.write(",".join([
                str(r["case"]),
                "true" if r["detected"] else "false",
                "nan" if delay is None else f"{delay:.9g}",
                f"{r['far']:.9g}",
                f"{r['threshold']:.9g}",
                f"{r['alpha']:.9g}",
            ]) + "\n")


def _save(fig, path) -> None:
    fig.savefig(path, dpi=_DPI, metadata=_PNG_META)
    plt.close(fig)


def fig_run_overview(record: RunRecord, path, title: str = "") -> None:
    """Elevation, rotor speed, surge, platform pitch and line tensions."""
    fig, axes = plt.subplots(5, 1, figsize=(10, 11), sharex=True)
    t = record.t
    axes[0].plot(t, record.u[:, 3], lw=0.6, color="tab:blue")
    axes[0].set_ylabel("eta [m]")
    axes[1].plot(t, record.y[:, 0], lw=0.8, color="tab:orange")
    axes[1].set_ylabel("rotor speed [rad/s]")
    axes[2].plot(t, record.y[:, 1], lw=0.8, color="tab:green")
    axes[2].set_ylabel("surge [m]")
    axes[3].plot(t, record.y[:, 2], lw=0.8, color="tab:red")
    axes[3].set_ylabel("pitch [rad]")
    for i in range(record.tensions.shape[1]):
        axes[4].plot(t, record.tensions[:, i] / 1e6, lw=0.8,
                     label=f"line {i + 1}")
    axes[4].set_ylabel("tension [MN]")
    axes[4].set_xlabel("t [s]")
    axes[4].legend(loc="upper left", fontsize=8)
    for ev in record.fault_log:
        for ax in axes:
            ax.axvline(ev["time"], color="k", ls="--", lw=0.8)
    if title:
        axes[0].set_title(title)
    fig.tight_layout()
    _save(fig, path)


def fig_detection(report: DetectionReport, path, title: str = "") -> None:
    """Distance statistic against its threshold, fault time marked."""
    fig, ax = plt.subplots(figsize=(10, 4))
    ax.plot(report.t, report.d_series, lw=0.7, color="tab:blue",
            label="distance")
    ax.axhline(report.threshold, color="tab:red", ls="-", lw=1.0,
               label="threshold")
    if report.fault_time is not None:
        ax.axvline(report.fault_time, color="k", ls="--", lw=0.8,
                   label="fault")
    if report.first_confirmed_alarm is not None:
        ax.axvline(report.first_confirmed_alarm, color="tab:orange", ls=":",
                   lw=1.2, label="confirmed alarm")
    ax.set_yscale("log")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("Mahalanobis distance")
    ax.legend(loc="upper left", fontsize=8)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    _save(fig, path)


def fig_frf_comparison(omega: np.ndarray, h_ref: np.ndarray,
                       h_fit: np.ndarray, band: tuple, path,
                       channel_labels: list, title: str = "") -> None:
    """Magnitude overlay of reference vs fitted FRF, one panel per output
    channel (diagonal entries for square responses)."""
    h_ref = np.asarray(h_ref)
    h_fit = np.asarray(h_fit)
    p = h_ref.shape[1]
    square = h_ref.shape[2] == p
    fig, axes = plt.subplots(1, p, figsize=(4.2 * p, 3.6), squeeze=False)
    for i in range(p):
        ax = axes[0, i]
        j = i if square else 0
        ax.semilogy(omega, np.abs(h_ref[:, i, j]), color="k", lw=1.2,
                    label="data")
        ax.semilogy(omega, np.abs(h_fit[:, i, j]), color="tab:red", lw=1.0,
                    ls="--", label="model")
        ax.axvspan(band[0], band[1], color="tab:blue", alpha=0.08)
        ax.set_xlabel("omega [rad/s]")
        ax.set_title(channel_labels[i], fontsize=9)
        if i == 0:
            ax.legend(fontsize=8)
    if title:
        fig.suptitle(title, fontsize=10)
    fig.tight_layout()
    _save(fig, path)


def fig_batch_distances(reports: dict, path) -> None:
    """Distance series of every load case on a shared grid."""
    cases = sorted(reports)
    fig, axes = plt.subplots(len(cases), 1, figsize=(10, 2.4 * len(cases)),
                             sharex=True, squeeze=False)
    for ax, case in zip(axes[:, 0], cases):
        rep = reports[case]
        ax.plot(rep.t, rep.d_series, lw=0.6)
        ax.axhline(rep.threshold, color="tab:red", lw=0.9)
        if rep.fault_time is not None:
            ax.axvline(rep.fault_time, color="k", ls="--", lw=0.8)
        ax.set_yscale("log")
        ax.set_ylabel(f"case {case}")
    axes[-1, 0].set_xlabel("t [s]")
    fig.tight_layout()
    _save(fig, path)
