import numpy as np
import pytest

from moorfd.errors import ConfigurationError
from moorfd.statespace import StateSpaceModel, model_frf
from moorfd.sysid import (FitReport, acausal_residual, band_relative_error,
                          causalize, fit_state_space_era,
                          impulse_response_from_frd, pem_refine)


# --- kernel reconstruction against closed forms -------------------------------

def test_radiation_kernel_matches_analytic_second_order():
    """K(s) = beta s / (s^2 + 2 zeta w0 s + w0^2) has the closed-form kernel
    k(t) = beta e^{-s0 t} (cos(wd t) - s0/wd sin(wd t)); the cosine-transform
    reconstruction must land on it within the truncation error of the grid."""
    beta, zeta, w0 = 1.0, 0.45, 0.85
    s0 = zeta * w0
    wd = w0 * np.sqrt(1.0 - zeta ** 2)
    omega = np.linspace(1e-3, 60.0, 8000)
    k_frf = beta * 1j * omega / (-omega ** 2 + 2j * zeta * w0 * omega + w0 ** 2)
    ir = impulse_response_from_frd(k_frf[:, None, None], omega, dt=0.05,
                                   kind="radiation", duration=40.0)
    t = ir.t
    ref = beta * np.exp(-s0 * t) * (np.cos(wd * t) - s0 / wd * np.sin(wd * t))
    assert np.max(np.abs(ir.h[:, 0, 0] - ref)) < 0.01 * np.max(np.abs(ref))


def test_wave_kernel_matches_direct_quadrature():
    """The Hermitian-extension IFFT route must agree with a direct quadrature
    of k(t) = (1/pi) int [Re x cos(wt) - Im x sin(wt)] dw on a smooth test
    spectrum, including at negative times."""
    omega = np.linspace(0.01, 3.0, 600)
    amp = np.exp(-0.5 * ((omega - 0.9) / 0.25) ** 2)
    x = amp * np.exp(-1j * omega * 5.0)     # pure 5 s delay
    ir = impulse_response_from_frd(x[:, None, None], omega, dt=0.1,
                                   kind="wave", duration=40.0, lead=10.0)
    t = ir.t
    fine = np.linspace(0.0, 3.5, 20000)
    xf = np.interp(fine, omega, x.real, left=0.0, right=0.0) \
        + 1j * np.interp(fine, omega, x.imag, left=0.0, right=0.0)
    ref = np.array([np.trapezoid(xf.real * np.cos(fine * ti)
                                 - xf.imag * np.sin(fine * ti), fine) / np.pi
                    for ti in t])
    scale = np.max(np.abs(ref))
    assert np.max(np.abs(ir.h[:, 0, 0] - ref)) < 0.01 * scale
    # energy arrives around the built-in 5 s delay
    assert abs(t[np.argmax(np.abs(ir.h[:, 0, 0]))] - 5.0) < 1.0


def test_causalize_is_exact_bookkeeping():
    ir = impulse_response_from_frd(
        np.exp(-np.linspace(0.1, 3.0, 50) * 2.0)[:, None, None] + 0j,
        np.linspace(0.1, 3.0, 50), dt=0.1, kind="wave", duration=10.0,
        lead=5.0)
    fwd = causalize(ir, 2.0)
    back = causalize(fwd, -2.0)
    assert np.array_equal(back.h, ir.h)
    assert back.t0 == ir.t0 and back.t_shift == ir.t_shift
    assert fwd.t0 == ir.t0 + 2.0 and fwd.t_shift == 2.0


def test_acausal_residual_drops_with_shift():
    omega = np.linspace(0.01, 3.0, 600)
    amp = np.exp(-0.5 * ((omega - 1.2) / 0.5) ** 2)
    x = amp + 0j                            # zero phase: peak at t = 0
    ir = impulse_response_from_frd(x[:, None, None], omega, dt=0.1,
                                   kind="wave", duration=30.0, lead=10.0)
    r0 = acausal_residual(ir)
    assert r0 > 0.5                         # half the peak sits at t <= 0
    r6 = acausal_residual(causalize(ir, 6.0))
    assert r6 < 0.05
    causal_only = impulse_response_from_frd(
        x[:, None, None], omega, dt=0.1, kind="radiation", duration=10.0)
    assert acausal_residual(causal_only) == 0.0


def test_kernel_input_guards():
    omega = np.linspace(0.1, 3.0, 20)
    frf = np.ones((20, 1, 1), dtype=complex)
    with pytest.raises(ConfigurationError):
        impulse_response_from_frd(frf, omega[::-1], 0.1, "radiation")
    with pytest.raises(ConfigurationError):
        impulse_response_from_frd(frf, omega, 2.0, "radiation")
    with pytest.raises(ConfigurationError):
        impulse_response_from_frd(frf, omega, 0.1, "cepstrum")


# --- ERA -----------------------------------------------------------------------

def _random_discrete(rng, n, m, p, radius=0.9):
    lam = radius * (rng.uniform(0.3, 1.0, n // 2)
                    * np.exp(1j * rng.uniform(0.1, 2.5, n // 2)))
    a_c = np.zeros((n, n))
    for i, l in enumerate(lam):
        a_c[2 * i:2 * i + 2, 2 * i:2 * i + 2] = [[l.real, l.imag],
                                                 [-l.imag, l.real]]
    return StateSpaceModel(a_c, rng.standard_normal((n, m)),
                           rng.standard_normal((p, n)), np.zeros((p, m)),
                           dt=0.1)


def _markov_of(model, n_s):
    out = np.empty((n_s, model.n_outputs, model.n_inputs))
    x = model.b.copy()
    for k in range(n_s):
        out[k] = model.c @ x
        x = model.a @ x
    return out


def test_era_recovers_exact_markov_data(rng):
    truth = _random_discrete(rng, 6, 2, 2)
    markov = _markov_of(truth, 120)
    fit = fit_state_space_era(markov, 6, 0.1)
    refit = _markov_of(fit, 120)
    scale = np.max(np.abs(markov))
    assert np.max(np.abs(refit - markov)) < 1e-6 * scale
    omega = np.linspace(0.1, 3.0, 40)
    h_t, h_f = model_frf(truth, omega), model_frf(fit, omega)
    assert np.max(np.abs(h_t - h_f)) < 1e-6 * np.max(np.abs(h_t))


def test_era_reflects_unstable_eigenvalues(rng):
    blk = [[np.cos(0.4), np.sin(0.4)], [-np.sin(0.4), np.cos(0.4)]]
    a = np.zeros((4, 4))
    a[:2, :2] = 1.02 * np.asarray(blk)      # one pair outside the unit disc
    a[2:, 2:] = 0.70 * np.asarray(blk)
    truth = StateSpaceModel(a, rng.standard_normal((4, 1)),
                            rng.standard_normal((1, 4)), np.zeros((1, 1)),
                            dt=0.1)
    markov = _markov_of(truth, 60)
    fit, info = fit_state_space_era(markov, 4, 0.1, return_info=True)
    assert "reflected_unstable_eigenvalues" in info["flags"]
    assert fit.is_stable()


def test_era_zero_direct_term(rng):
    fit = fit_state_space_era(_markov_of(_random_discrete(rng, 4, 1, 1), 60),
                              4, 0.1)
    assert np.all(fit.d == 0.0)


def test_era_input_guards(rng):
    markov = _markov_of(_random_discrete(rng, 4, 1, 1), 9)
    with pytest.raises(ConfigurationError):
        fit_state_space_era(markov, 4, 0.1)     # 9 < 2*4+2
    with pytest.raises(ConfigurationError):
        fit_state_space_era(markov, 0, 0.1)


# --- PEM -----------------------------------------------------------------------

def test_pem_monotone_and_improves(rng):
    truth = _random_discrete(rng, 4, 1, 1)
    target = _markov_of(truth, 80)
    noisy = target + 0.01 * np.max(np.abs(target)) \
        * rng.standard_normal(target.shape)
    start = fit_state_space_era(noisy, 4, 0.1)
    refined, info = pem_refine(start, target, return_info=True)
    costs = info["costs"]
    assert all(costs[i + 1] <= costs[i] + 1e-300 for i in range(len(costs) - 1))
    assert costs[-1] < costs[0]
    assert refined.is_stable()
    assert np.array_equal(refined.d, start.d)


def test_pem_rejects_mismatched_target(rng):
    model = _random_discrete(rng, 4, 1, 1)
    with pytest.raises(ConfigurationError):
        pem_refine(model, np.zeros((40, 2, 2)))


# --- band error metric -----------------------------------------------------------

def test_band_relative_error_definition():
    m = StateSpaceModel(a=[[-1.0]], b=[[1.0]], c=[[1.0]], d=[[0.0]])
    omega = np.linspace(0.5, 2.0, 16)
    target = model_frf(m, omega)
    assert band_relative_error(m, omega, target, (0.5, 2.0)) < 1e-14
    shifted = band_relative_error(m, omega, 1.1 * target, (0.5, 2.0))
    assert abs(shifted - 0.1 / 1.1) < 1e-12


def test_band_relative_error_guards():
    m = StateSpaceModel(a=[[-1.0]], b=[[1.0]], c=[[1.0]], d=[[0.0]])
    omega = np.linspace(0.5, 2.0, 16)
    target = model_frf(m, omega)
    with pytest.raises(ConfigurationError):
        band_relative_error(m, omega, target, (5.0, 9.0))
    with pytest.raises(ConfigurationError):
        band_relative_error(m, omega, 0.0 * target, (0.5, 2.0))


# --- full pipelines on the synthetic dataset -------------------------------------

def test_radiation_fit_meets_band_error(radiation_fit, dataset):
    model, report = radiation_fit
    assert isinstance(report, FitReport)
    assert report.err_rel <= 0.05
    assert report.stable and model.is_stable()
    assert model.n_inputs == 3 and model.n_outputs == 3
    assert model.dt == 0.1


def test_wave_fit_meets_band_error(wave_fit):
    model, report = wave_fit
    assert report.err_rel <= 0.08
    assert report.stable and model.is_stable()
    # elevation enters through states only
    assert np.all(model.d == 0.0)
    assert model.n_inputs == 1 and model.n_outputs == 3
    assert report.details["acausal_residual"] < 0.05


def test_wave_fit_reproduces_causalized_response(wave_fit, dataset):
    """Dual route: the discrete model FRF must track the causalized
    excitation x(w) e^{-jw t_d} on the fit band."""
    from moorfd.hydro import EXCITED_DOFS
    model, report = wave_fit
    t_d = report.details["t_d"]
    mask = (dataset.omega >= 0.3) & (dataset.omega <= 1.8)
    omega = dataset.omega[mask]
    target = dataset.x[mask][:, list(EXCITED_DOFS)] \
        * np.exp(-1j * omega * t_d)[:, None]
    h = model_frf(model, omega)[:, :, 0]
    num = np.max(np.abs(h - target))
    den = np.max(np.abs(target))
    assert num < 0.10 * den


def test_wave_fit_insufficient_shift_raises(dataset):
    from moorfd.sysid import fit_wave_force_model
    with pytest.raises(ConfigurationError):
        fit_wave_force_model(dataset, t_d=0.0, dt=0.1)
    with pytest.raises(ConfigurationError):
        fit_wave_force_model(dataset, t_d=0.15, dt=0.1)
    with pytest.raises(ConfigurationError):
        fit_wave_force_model(dataset, t_d=-1.0, dt=0.1)
