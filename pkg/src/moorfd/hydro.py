"""Wave environment and hydrodynamic frequency-response data.

This module owns three things:

1. JONSWAP spectrum evaluation and random-phase wave elevation synthesis.
   The spectrum's alpha constant is renormalized on the discrete frequency
   grid (rectangular weights) so that 4 sqrt(m0) equals the requested hs
   exactly in the same quadrature used by the synthesis; the realized series
   then has sample variance consistent with sum(S dw).

2. The HydroFrd container for frequency-domain hydrodynamic coefficients:
   added mass a(omega), radiation damping b(omega), wave excitation x(omega)
   per unit elevation amplitude, plus the infinite-frequency added mass. This
   is the plain-CSV exchange object the identification stage consumes.

3. Synthetic truth models that generate such a dataset from known low-order
   state space systems, so identified models can be scored against an exact
   reference. The radiation truth model is order 12: one positive-real
   second-order kernel per platform DOF, mixed by a constant congruence
   T k T' that couples surge-pitch and sway-roll; this keeps b(omega)
   symmetric positive semidefinite at every frequency by construction. The
   wave-force truth model is order 16: a shared 4th-order all-pass lag block
   (rational fit of a 4 s transport delay) cascaded into a 4th-order bandpass
   per excited DOF (surge, heave, pitch). The stored dataset coefficients
   x(omega) are the physical, non-causal ones: the generator removes the lag
   by multiplying exp(+j omega t_d), and the identification stage puts it
   back, so the shift round trip is exact regardless of how well the rational
   block approximates a pure delay.

DOF order everywhere: surge, sway, heave, roll, pitch, yaw (0..5).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import tf2ss

from .errors import ConfigurationError, NumericalError
from .statespace import StateSpaceModel, model_frf

__all__ = [
    "WaveSpec",
    "WaveRealization",
    "HydroFrd",
    "jonswap_spectrum",
    "realize_wave_elevation",
    "default_truth_radiation",
    "default_truth_wave",
    "default_ainf",
    "generate_synthetic_hydro_dataset",
    "write_hydro_csv",
    "read_hydro_csv",
    "write_wave_csv",
]

GRAVITY = 9.81

# DOFs that carry wave excitation in the planar problem.
EXCITED_DOFS = (0, 2, 4)

# Transport lag built into the wave-force truth model [s]. The dataset stores
# coefficients with this lag removed; fit_wave_force_model reapplies it.
TRUTH_WAVE_LAG = 4.0


@dataclass(frozen=True)
class WaveSpec:
    """Sea state and the frequency grid it is evaluated on."""

    hs: float
    tp: float
    gamma: float = 3.3
    omega_min: float = 0.05
    omega_max: float = 3.0
    n_omega: int = 200

    def __post_init__(self):
        if self.hs <= 0.0 or self.tp <= 0.0:
            raise ConfigurationError("hs and tp must be positive")
        if self.gamma < 1.0:
            raise ConfigurationError("gamma must be >= 1")
        if not (0.0 < self.omega_min < self.omega_max):
            raise ConfigurationError("need 0 < omega_min < omega_max")
        if self.n_omega < 2:
            raise ConfigurationError("n_omega must be >= 2")

    @property
    def omega_p(self) -> float:
        return 2.0 * np.pi / self.tp

    def omega_grid(self) -> np.ndarray:
        return np.linspace(self.omega_min, self.omega_max, self.n_omega)

    @property
    def d_omega(self) -> float:
        return (self.omega_max - self.omega_min) / (self.n_omega - 1)


@dataclass
class WaveRealization:
    """Sampled elevation series from one random-phase synthesis."""

    t: np.ndarray
    eta: np.ndarray
    dt: float
    seed: int

    @property
    def duration(self) -> float:
        return float(self.t[-1])


def _jonswap_shape(omega: np.ndarray, spec: WaveSpec) -> np.ndarray:
    """Unscaled JONSWAP shape (alpha = 1)."""
    wp = spec.omega_p
    sigma = np.where(omega <= wp, 0.07, 0.09)
    peak_arg = np.exp(-((omega - wp) ** 2) / (2.0 * sigma ** 2 * wp ** 2))
    with np.errstate(divide="ignore", over="ignore"):
        base = GRAVITY ** 2 / omega ** 5 * np.exp(-1.25 * (wp / omega) ** 4)
    return np.where(omega > 0.0, base * spec.gamma ** peak_arg, 0.0)


def jonswap_spectrum(spec: WaveSpec, omega: np.ndarray | None = None
                     ) -> np.ndarray:
    """One-sided elevation spectrum S(omega) [m^2 s].

    alpha is chosen so that the rectangular sum of S over the spec's own grid
    gives m0 = hs^2/16, i.e. the discrete variance identity holds exactly in
    the quadrature that realize_wave_elevation uses.
    """
    grid = spec.omega_grid()
    shape_grid = _jonswap_shape(grid, spec)
    m0_unscaled = float(np.sum(shape_grid) * spec.d_omega)
    if m0_unscaled <= 0.0:
        raise NumericalError("JONSWAP shape integrated to zero on the grid")
    alpha = (spec.hs ** 2 / 16.0) / m0_unscaled
    if omega is None:
        return alpha * shape_grid
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    if np.any(omega < 0.0):
        raise ConfigurationError("spectrum requested at negative frequency")
    return alpha * _jonswap_shape(omega, spec)


def realize_wave_elevation(spec: WaveSpec, duration: float, dt: float,
                           seed: int) -> WaveRealization:
    """Random-phase synthesis eta(t) = sum a_i cos(w_i t + phi_i).

    a_i = sqrt(2 S_i dw) on the spec grid, phases uniform on [0, 2pi) from
    numpy's default_rng(seed). The series has floor(duration/dt)+1 samples.
    """
    if dt <= 0.0:
        raise ConfigurationError("dt must be positive")
    if duration < 10.0 * spec.tp:
        raise ConfigurationError(
            f"duration {duration} s too short; need at least 10 Tp "
            f"= {10.0 * spec.tp:.1f} s for a meaningful realization")
    if np.pi / dt < spec.omega_max:
        raise ConfigurationError(
            f"dt {dt} cannot resolve omega_max {spec.omega_max} "
            "(Nyquist violation)")
    omega = spec.omega_grid()
    s = jonswap_spectrum(spec)
    amp = np.sqrt(2.0 * s * spec.d_omega)
    rng = np.random.default_rng(seed)
    phase = rng.uniform(0.0, 2.0 * np.pi, spec.n_omega)
    n = int(np.floor(duration / dt)) + 1
    t = np.arange(n) * dt
    eta = np.cos(np.outer(t, omega) + phase) @ amp
    return WaveRealization(t=t, eta=eta, dt=dt, seed=seed)


@dataclass
class HydroFrd:
    """Frequency-domain hydrodynamic dataset on an ascending grid.

    a, b: (n_omega, 6, 6) added mass and radiation damping.
    x:    (n_omega, 6) complex wave excitation per unit elevation amplitude.
    a_inf: (6, 6) infinite-frequency added mass.
    """

    omega: np.ndarray
    a: np.ndarray
    b: np.ndarray
    x: np.ndarray
    a_inf: np.ndarray

    def __post_init__(self):
        self.omega = np.asarray(self.omega, dtype=float)
        self.a = np.asarray(self.a, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        self.x = np.asarray(self.x, dtype=complex)
        self.a_inf = np.asarray(self.a_inf, dtype=float)
        n = self.omega.size
        if self.a.shape != (n, 6, 6) or self.b.shape != (n, 6, 6):
            raise ConfigurationError("a/b must have shape (n_omega, 6, 6)")
        if self.x.shape != (n, 6):
            raise ConfigurationError("x must have shape (n_omega, 6)")
        if self.a_inf.shape != (6, 6):
            raise ConfigurationError("a_inf must be 6x6")
        if np.any(np.diff(self.omega) <= 0.0) or self.omega[0] <= 0.0:
            raise ConfigurationError(
                "frequency grid must be positive and strictly ascending")

    def validate(self) -> None:
        """Enforce physical invariants; raises NumericalError on violation.

        - all entries finite
        - a, b, a_inf symmetric (1e-6 relative)
        - b positive semidefinite at every frequency (1e-6 relative slack)
        - |x| rolls off: magnitude at the top of the grid below 5 percent of
          the per-channel peak, so kernel reconstruction can truncate there.
        """
        for name, arr in (("a", self.a), ("b", self.b), ("x", self.x),
                          ("a_inf", self.a_inf)):
            if not np.all(np.isfinite(arr.view(float))):
                raise NumericalError(f"hydro dataset: non-finite {name}")
        scale_a = np.max(np.abs(self.a))
        scale_b = np.max(np.abs(self.b))
        if np.max(np.abs(self.a - self.a.transpose(0, 2, 1))) > 1e-6 * scale_a:
            raise NumericalError("hydro dataset: a(omega) not symmetric")
        if np.max(np.abs(self.b - self.b.transpose(0, 2, 1))) > 1e-6 * scale_b:
            raise NumericalError("hydro dataset: b(omega) not symmetric")
        if np.max(np.abs(self.a_inf - self.a_inf.T)) > 1e-6 * np.max(
                np.abs(self.a_inf)):
            raise NumericalError("hydro dataset: a_inf not symmetric")
        for i in range(self.omega.size):
            lam_min = float(np.linalg.eigvalsh(self.b[i])[0])
            if lam_min < -1e-6 * scale_b:
                raise NumericalError(
                    f"hydro dataset: b(omega={self.omega[i]:.3f}) has "
                    f"negative eigenvalue {lam_min:.3e}")
        mag = np.abs(self.x)
        peak = np.max(mag, axis=0)
        excited = peak > 0.0
        tail = mag[-1, excited] / peak[excited]
        if np.any(tail >= 0.05):
            raise NumericalError(
                "hydro dataset: wave excitation has not rolled off below "
                f"5 percent at omega_max (worst {100 * np.max(tail):.1f}%)")


def _kernel_block(omega0: float, zeta: float) -> tuple[np.ndarray, np.ndarray]:
    a = np.array([[0.0, 1.0], [-omega0 ** 2, -2.0 * zeta * omega0]])
    b = np.array([[0.0], [1.0]])
    return a, b

# Per-DOF second-order radiation kernels k_i(s) = beta s / (s^2 + 2 zeta w0 s
# + w0^2): (w0, zeta, beta). beta/(2 zeta w0) is the damping peak.
_RAD_KERNELS = (
    (0.85, 0.45, 1.53e6),   # surge
    (0.85, 0.45, 1.53e6),   # sway
    (1.10, 0.50, 8.8e5),    # heave
    (0.80, 0.50, 4.0e8),    # roll
    (0.80, 0.50, 4.0e8),    # pitch
    (0.90, 0.55, 2.0e8),    # yaw
)

# Congruence mixing: pitch rides the surge kernel with a -15 m lever, roll
# rides sway with +15 m; K(s) = T diag(k_i) T'.
_RAD_LEVER = 15.0


def _radiation_mixing() -> np.ndarray:
    t = np.eye(6)
    t[4, 0] = -_RAD_LEVER
    t[3, 1] = _RAD_LEVER
    return t


def default_truth_radiation() -> StateSpaceModel:
    """Order-12 continuous radiation truth model, 6 inputs (velocities) to
    6 outputs (radiation memory forces)."""
    t = _radiation_mixing()
    a = np.zeros((12, 12))
    b = np.zeros((12, 6))
    c_blk = np.zeros((6, 12))
    for i, (w0, zeta, beta) in enumerate(_RAD_KERNELS):
        ai, bi = _kernel_block(w0, zeta)
        a[2 * i:2 * i + 2, 2 * i:2 * i + 2] = ai
        b[2 * i:2 * i + 2, :] = bi @ t.T[i:i + 1, :]
        c_blk[i, 2 * i + 1] = beta
    return StateSpaceModel(a, b, t @ c_blk, np.zeros((6, 6)), dt=0.0)


def default_ainf() -> np.ndarray:
    """Infinite-frequency added mass consistent with the platform scale."""
    a_inf = np.diag([2.0e7, 2.0e7, 6.0e6, 1.7e10, 1.8e10, 5.0e9])
    a_inf[0, 4] = a_inf[4, 0] = -3.0e8
    a_inf[1, 3] = a_inf[3, 1] = 3.0e8
    return a_inf


def _pade_delay(lag: float) -> tuple[np.ndarray, ...]:
    """4th-order diagonal Pade approximant of exp(-lag s) as a state space.
    All-pass: |H(jw)| = 1 exactly."""
    x4 = (1.0, -0.5, 3.0 / 28.0, -1.0 / 84.0, 1.0 / 1680.0)
    num = np.array([c * lag ** k for k, c in enumerate(x4)])[::-1]
    den = np.array([abs(c) * lag ** k for k, c in enumerate(x4)])[::-1]
    return tf2ss(num, den)

# Per-channel 4th-order bandpass g s / (q_a q_b) for the excited DOFs
# (surge, heave, pitch): (w_a, zeta_a, w_b, zeta_b, peak magnitude).
# Peaks sized so the closed platform responds with realistic wave-frequency
# motion (a few cm translation, ~1e-3 rad pitch in the default sea state).
_WAVE_BANDS = (
    (0.60, 0.50, 1.30, 0.50, 1.10e6),   # surge  [N/m]
    (0.58, 0.55, 1.25, 0.55, 4.50e5),   # heave  [N/m]
    (0.62, 0.50, 1.35, 0.50, 5.00e7),   # pitch  [N m/m]
)


def _bandpass(params) -> tuple[np.ndarray, ...]:
    wa, za, wb, zb, peak = params
    den = np.convolve([1.0, 2.0 * za * wa, wa ** 2],
                      [1.0, 2.0 * zb * wb, wb ** 2])
    grid = np.linspace(0.05, 3.0, 2000)
    resp = (1j * grid) / (np.polyval(den, 1j * grid))
    gain = peak / float(np.max(np.abs(resp)))
    return tf2ss([gain, 0.0], den)


def default_truth_wave() -> StateSpaceModel:
    """Order-16 continuous wave-force truth model, elevation eta in, 6 force
    components out (only surge/heave/pitch nonzero). Includes a built-in
    4 s rational transport lag shared by all channels."""
    ap, bp, cp, dp = _pade_delay(TRUTH_WAVE_LAG)
    np_, blocks = ap.shape[0], []
    for params in _WAVE_BANDS:
        blocks.append(_bandpass(params))
    n_total = np_ + sum(blk[0].shape[0] for blk in blocks)
    a = np.zeros((n_total, n_total))
    b = np.zeros((n_total, 1))
    c = np.zeros((6, n_total))
    a[:np_, :np_] = ap
    b[:np_, 0] = bp[:, 0]
    pos = np_
    for dof, (ai, bi, ci, di) in zip(EXCITED_DOFS, blocks):
        ni = ai.shape[0]
        a[pos:pos + ni, pos:pos + ni] = ai
        a[pos:pos + ni, :np_] = bi @ cp          # lag output drives bandpass
        b[pos:pos + ni, 0] = (bi * dp)[:, 0]
        c[dof, pos:pos + ni] = ci[0]
        pos += ni
    return StateSpaceModel(a, b, c, np.zeros((6, 1)), dt=0.0)


def generate_synthetic_hydro_dataset(
        omega: np.ndarray | None = None,
        truth_radiation: StateSpaceModel | None = None,
        truth_wave: StateSpaceModel | None = None,
        a_inf: np.ndarray | None = None,
        wave_lag: float = TRUTH_WAVE_LAG) -> HydroFrd:
    """Evaluate the truth models into a HydroFrd dataset.

    b(omega) = Re K(jw), a(omega) = a_inf + Im K(jw)/w where K is the
    radiation FRF. The stored excitation is the physical non-causal
    coefficient: the truth model's built-in lag is removed with
    exp(+j w wave_lag).
    """
    if omega is None:
        omega = np.linspace(0.05, 3.0, 200)
    omega = np.asarray(omega, dtype=float)
    rad = truth_radiation if truth_radiation is not None \
        else default_truth_radiation()
    wav = truth_wave if truth_wave is not None else default_truth_wave()
    ainf = default_ainf() if a_inf is None else np.asarray(a_inf, dtype=float)

    k = model_frf(rad, omega)                       # (n, 6, 6)
    b = 0.5 * (k.real + k.real.transpose(0, 2, 1))
    a = ainf[None, :, :] + 0.5 * (k.imag + k.imag.transpose(0, 2, 1)) \
        / omega[:, None, None]
    xw = model_frf(wav, omega)[:, :, 0] * np.exp(1j * omega * wave_lag)[:, None]
    frd = HydroFrd(omega=omega, a=a, b=b, x=xw, a_inf=ainf)
    frd.validate()
    return frd


# --- plain-CSV exchange -----------------------------------------------------

def _hydro_header() -> list[str]:
    cols = ["omega"]
    cols += [f"a_{i}{j}" for i in range(6) for j in range(6)]
    cols += [f"b_{i}{j}" for i in range(6) for j in range(6)]
    cols += [f"re_x_{i}" for i in range(6)]
    cols += [f"im_x_{i}" for i in range(6)]
    return cols


def write_hydro_csv(frd: HydroFrd, frd_path, ainf_path) -> None:
    """frd.csv: one row per frequency with a, b row-major and Re/Im of x;
    ainf.csv sidecar: the 6x6 infinite-frequency added mass."""
    with open(frd_path, "w") as fh:
        fh.write(",".join(_hydro_header()) + "\n")
        for i, w in enumerate(frd.omega):
            vals = [w]
            vals += list(frd.a[i].ravel())
            vals += list(frd.b[i].ravel())
            vals += list(frd.x[i].real)
            vals += list(frd.x[i].imag)
            fh.write(",".join(f"{v:.17g}" for v in vals) + "\n")
    with open(ainf_path, "w") as fh:
        for row in frd.a_inf:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def read_hydro_csv(frd_path, ainf_path) -> HydroFrd:
    data = np.genfromtxt(frd_path, delimiter=",", skip_header=1)
    data = np.atleast_2d(data)
    if data.shape[1] != 85:
        raise ConfigurationError(
            f"{frd_path}: expected 85 columns, found {data.shape[1]}")
    n = data.shape[0]
    omega = data[:, 0]
    a = data[:, 1:37].reshape(n, 6, 6)
    b = data[:, 37:73].reshape(n, 6, 6)
    x = data[:, 73:79] + 1j * data[:, 79:85]
    a_inf = np.genfromtxt(ainf_path, delimiter=",")
    if a_inf.shape != (6, 6):
        raise ConfigurationError(f"{ainf_path}: expected a 6x6 matrix")
    frd = HydroFrd(omega=omega, a=a, b=b, x=x, a_inf=a_inf)
    frd.validate()
    return frd


def write_wave_csv(wave: WaveRealization, path) -> None:
    with open(path, "w") as fh:
        fh.write("t,eta\n")
        for t, e in zip(wave.t, wave.eta):
            fh.write(f"{t:.17g},{e:.17g}\n")
