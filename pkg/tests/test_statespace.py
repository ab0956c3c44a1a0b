import numpy as np
import pytest

from moorfd.errors import ConfigurationError
from moorfd.statespace import (StateSpaceModel, discretize_zoh, model_frf,
                               read_model_csv, simulate_discrete,
                               write_model_csv)


def _random_stable(rng, n, m, p, dt=0.0):
    a = rng.standard_normal((n, n))
    a = a - (np.max(np.real(np.linalg.eigvals(a))) + 0.5) * np.eye(n)
    return StateSpaceModel(a=a, b=rng.standard_normal((n, m)),
                           c=rng.standard_normal((p, n)),
                           d=rng.standard_normal((p, m)), dt=dt)


def test_zoh_scalar_exponential():
    m = StateSpaceModel(a=[[-1.0]], b=[[1.0]], c=[[1.0]], d=[[0.0]])
    md = discretize_zoh(m, 0.1)
    assert abs(md.a[0, 0] - np.exp(-0.1)) < 1e-12
    # b integral of the exponential over one step
    assert abs(md.b[0, 0] - (1.0 - np.exp(-0.1))) < 1e-12
    assert md.dt == 0.1 and md.is_discrete


def test_zoh_eigenvalue_map(rng):
    m = _random_stable(rng, 8, 2, 2)
    md = discretize_zoh(m, 0.05)
    lam_c = np.sort_complex(np.linalg.eigvals(m.a))
    lam_d = np.sort_complex(np.linalg.eigvals(md.a))
    assert np.allclose(lam_d, np.exp(lam_c * 0.05), rtol=1e-9, atol=1e-9)


def test_zoh_substep_consistency(rng):
    """Holding the input, one dt step must equal 16 substeps of dt/16."""
    m = _random_stable(rng, 5, 2, 1)
    md = discretize_zoh(m, 0.2)
    mf = discretize_zoh(m, 0.2 / 16)
    u = rng.standard_normal(2)
    x = np.zeros(5)
    for _ in range(16):
        x = mf.a @ x + mf.b @ u
    assert np.allclose(md.a @ np.zeros(5) + md.b @ u, x, rtol=0, atol=1e-12)


def test_frf_matches_analytic_first_order():
    m = StateSpaceModel(a=[[-2.0]], b=[[3.0]], c=[[1.5]], d=[[0.25]])
    omega = np.linspace(0.1, 5.0, 40)
    h = model_frf(m, omega)
    ref = 1.5 * 3.0 / (1j * omega - (-2.0)) + 0.25
    assert np.allclose(h[:, 0, 0], ref, rtol=1e-12, atol=1e-14)

    md = discretize_zoh(m, 0.1)
    hd = model_frf(md, omega)
    z = np.exp(1j * omega * 0.1)
    ref_d = md.c[0, 0] * md.b[0, 0] / (z - md.a[0, 0]) + md.d[0, 0]
    assert np.allclose(hd[:, 0, 0], ref_d, rtol=1e-12, atol=1e-14)


def test_frf_rejects_beyond_nyquist():
    md = discretize_zoh(
        StateSpaceModel(a=[[-1.0]], b=[[1.0]], c=[[1.0]], d=[[0.0]]), 0.1)
    with pytest.raises(ConfigurationError):
        model_frf(md, np.array([0.5, 40.0]))


def test_simulate_discrete_reproduces_markov(rng):
    m = _random_stable(rng, 4, 1, 1)
    md = discretize_zoh(m, 0.1)
    n_k = 12
    u = np.zeros((n_k, 1))
    u[0, 0] = 1.0
    y = simulate_discrete(md, u)
    ref = [md.d[0, 0]]
    ak = np.eye(4)
    for _ in range(n_k - 1):
        ref.append((md.c @ ak @ md.b)[0, 0])
        ak = md.a @ ak
    assert np.allclose(y[:, 0], ref, rtol=0, atol=1e-12)


def test_model_csv_round_trip(tmp_path, rng):
    m = discretize_zoh(_random_stable(rng, 6, 3, 2), 0.1)
    m = StateSpaceModel(a=m.a, b=m.b, c=m.c, d=m.d, dt=m.dt,
                        input_labels=["u1", "u2", "u3"],
                        output_labels=["ya", "yb"])
    path = tmp_path / "m.csv"
    write_model_csv(m, path)
    back = read_model_csv(path)
    for f in ("a", "b", "c", "d"):
        assert np.array_equal(getattr(m, f), getattr(back, f))
    assert back.dt == m.dt


def test_shape_validation():
    with pytest.raises(ConfigurationError):
        StateSpaceModel(a=np.zeros((2, 3)), b=np.zeros((2, 1)),
                        c=np.zeros((1, 2)), d=np.zeros((1, 1)))
    with pytest.raises(ConfigurationError):
        StateSpaceModel(a=np.zeros((2, 2)), b=np.zeros((3, 1)),
                        c=np.zeros((1, 2)), d=np.zeros((1, 1)))


def test_stability_margin():
    m = StateSpaceModel(a=[[0.999, 0.0], [0.0, -0.5]], b=[[1.0], [1.0]],
                        c=[[1.0, 0.0]], d=[[0.0]], dt=0.1)
    assert m.is_stable()
    assert not m.is_stable(margin=0.01)
