"""Linear time-invariant state-space container and basic operations.

A single dataclass serves both continuous models (dt == 0.0) and discrete
models (dt > 0.0, zero-order-hold convention). Everything downstream
(hydrodynamic truth models, identified radiation/wave-force models, the
assembled detector model) is carried in this form, so the frequency-response
evaluation, ZOH discretization and the on-disk exchange format live here.

Model exchange format (CSV, one file per model):

    line 1: n          (state count)
    line 2: m          (input count)
    line 3: p          (output count)
    line 4: dt         (0.0 marks continuous time)
    then A (n rows), B (n rows), C (p rows), D (p rows), row-major,
    entries printed with %.17g so a write/read round trip is bit exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .errors import ConfigurationError, NumericalError

__all__ = [
    "StateSpaceModel",
    "model_frf",
    "discretize_zoh",
    "simulate_discrete",
    "write_model_csv",
    "read_model_csv",
]


@dataclass
class StateSpaceModel:
    """x' = a x + b u, y = c x + d u (continuous) or
    x[k+1] = a x[k] + b u[k], y[k] = c x[k] + d u[k] (discrete, sample dt).

    dt == 0.0 marks a continuous-time model.
    """

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    dt: float = 0.0
    input_labels: list = field(default_factory=list)
    output_labels: list = field(default_factory=list)

    def __post_init__(self):
        self.a = np.atleast_2d(np.asarray(self.a, dtype=float))
        self.b = np.atleast_2d(np.asarray(self.b, dtype=float))
        self.c = np.atleast_2d(np.asarray(self.c, dtype=float))
        self.d = np.atleast_2d(np.asarray(self.d, dtype=float))
        n = self.a.shape[0]
        if self.a.shape != (n, n):
            raise ConfigurationError("state matrix a must be square")
        if self.b.shape[0] != n:
            raise ConfigurationError(
                f"b has {self.b.shape[0]} rows, expected {n}")
        if self.c.shape[1] != n:
            raise ConfigurationError(
                f"c has {self.c.shape[1]} columns, expected {n}")
        if self.d.shape != (self.c.shape[0], self.b.shape[1]):
            raise ConfigurationError(
                f"d shape {self.d.shape} inconsistent with c/b "
                f"({self.c.shape[0]}x{self.b.shape[1]} expected)")
        if self.dt < 0.0:
            raise ConfigurationError("dt must be >= 0")

    @property
    def order(self) -> int:
        return self.a.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.b.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.c.shape[0]

    @property
    def is_discrete(self) -> bool:
        return self.dt > 0.0

    def poles(self) -> np.ndarray:
        return np.linalg.eigvals(self.a)

    def is_stable(self, margin: float = 0.0) -> bool:
        """Strict stability: Re(lambda) < -margin (continuous) or
        |lambda| < 1 - margin (discrete)."""
        lam = self.poles()
        if self.is_discrete:
            return bool(np.all(np.abs(lam) < 1.0 - margin))
        return bool(np.all(lam.real < -margin))


def model_frf(model: StateSpaceModel, omega: np.ndarray) -> np.ndarray:
    """Frequency response H(omega), shape (n_omega, p, m).

    Continuous: H = C (jw I - A)^-1 B + D evaluated at s = j omega.
    Discrete:   H = C (zI - A)^-1 B + D at z = exp(j omega dt); requests at
    or beyond the Nyquist rate (omega * dt >= pi) raise ConfigurationError.
    """
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    n, p, m = model.order, model.n_outputs, model.n_inputs
    if model.is_discrete and np.any(omega * model.dt >= np.pi):
        raise ConfigurationError(
            "frequency response requested at or beyond the Nyquist rate "
            f"(max omega*dt = {np.max(omega) * model.dt:.4f} >= pi)")
    h = np.empty((omega.size, p, m), dtype=complex)
    eye = np.eye(n)
    for i, w in enumerate(omega):
        s = np.exp(1j * w * model.dt) if model.is_discrete else 1j * w
        try:
            x = np.linalg.solve(s * eye - model.a, model.b)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(
                f"frequency response singular at omega={w}") from exc
        h[i] = model.c @ x + model.d
    return h


def discretize_zoh(model: StateSpaceModel, dt: float) -> StateSpaceModel:
    """Exact zero-order-hold discretization via the augmented matrix
    exponential exp([[A, B], [0, 0]] dt) -> [[Ad, Bd], [0, I]]."""
    if model.is_discrete:
        raise ConfigurationError("model is already discrete")
    if dt <= 0.0:
        raise ConfigurationError("dt must be > 0 for discretization")
    n, m = model.order, model.n_inputs
    aug = np.zeros((n + m, n + m))
    aug[:n, :n] = model.a * dt
    aug[:n, n:] = model.b * dt
    phi = expm(aug)
    if not np.all(np.isfinite(phi)):
        raise NumericalError("matrix exponential produced non-finite entries")
    return StateSpaceModel(phi[:n, :n], phi[:n, n:], model.c.copy(),
                           model.d.copy(), dt=dt,
                           input_labels=list(model.input_labels),
                           output_labels=list(model.output_labels))


def simulate_discrete(model: StateSpaceModel, u: np.ndarray,
                      x0: np.ndarray | None = None) -> np.ndarray:
    """Run a discrete model over an input sequence u (N, m) -> y (N, p)."""
    if not model.is_discrete:
        raise ConfigurationError("simulate_discrete needs a discrete model")
    u = np.atleast_2d(np.asarray(u, dtype=float))
    if u.shape[1] != model.n_inputs:
        raise ConfigurationError(
            f"input sequence has {u.shape[1]} columns, model expects "
            f"{model.n_inputs}")
    n = model.order
    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).copy()
    y = np.empty((u.shape[0], model.n_outputs))
    a, b, c, d = model.a, model.b, model.c, model.d
    for k in range(u.shape[0]):
        y[k] = c @ x + d @ u[k]
        x = a @ x + b @ u[k]
    if not np.all(np.isfinite(y)):
        raise NumericalError("discrete simulation diverged (non-finite output)")
    return y


def write_model_csv(model: StateSpaceModel, path) -> None:
    n, m, p = model.order, model.n_inputs, model.n_outputs
    with open(path, "w") as fh:
        fh.write(f"{n}\n{m}\n{p}\n{model.dt:.17g}\n")
        for mat in (model.a, model.b, model.c, model.d):
            for row in np.atleast_2d(mat):
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def read_model_csv(path) -> StateSpaceModel:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    try:
        n, m, p = int(lines[0]), int(lines[1]), int(lines[2])
        dt = float(lines[3])
        rows = [np.array([float(v) for v in ln.split(",")])
                for ln in lines[4:]]
    except (ValueError, IndexError) as exc:
        raise ConfigurationError(f"malformed model file {path}") from exc
    if len(rows) != n + n + p + p:
        raise ConfigurationError(
            f"model file {path} has {len(rows)} matrix rows, "
            f"expected {n + n + p + p}")
    a = np.vstack(rows[:n]) if n else np.zeros((0, 0))
    b = np.vstack(rows[n:2 * n]) if n else np.zeros((0, m))
    c = np.vstack(rows[2 * n:2 * n + p])
    d = np.vstack(rows[2 * n + p:])
    return StateSpaceModel(a, b, c, d, dt=dt)
