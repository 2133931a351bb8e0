import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from hetsvar.simulate import (
    PRESETS,
    DgpSpec,
    UnstableSpecError,
    companion_matrix,
    empirical_sigma_check,
    generate,
    preset,
    spectral_radius,
)


def _spec(omega, rho, T=300, seed=0, **kw):
    N = len(omega)
    return DgpSpec(B0=np.eye(N), A=np.zeros((N, N + 1)), omega=omega, rho=rho, T=T, seed=seed, **kw)


def test_zero_omega_is_homoskedastic():
    sim = generate(_spec((0.0, 0.0), (0.9, 0.5), T=4000))
    assert np.all(sim.sigma2 == 1.0)
    var = sim.w.var(axis=0)
    assert np.all(np.abs(var - 1.0) < 3 * np.sqrt(2 / 4000))


def test_h_lag_one_autocorrelation():
    T = 5000
    sim = generate(_spec((0.5, 0.5), (0.8, 0.3), T=T, seed=1))
    for n, rho in enumerate((0.8, 0.3)):
        h = sim.h[n]
        r = np.corrcoef(h[:-1], h[1:])[0, 1]
        assert abs(r - rho) < 3 * np.sqrt((1 - rho ** 2) / T)


def test_initial_condition():
    # h_0 = 0 sits before the first row, so the first variance is exp(omega * e_1)
    spec = _spec((0.7,), (0.9,), T=50, seed=2)
    sim = generate(spec)
    e = np.random.default_rng(2).standard_normal((50, 1))
    assert_allclose(sim.h[0, 0], e[0, 0], rtol=1e-15)
    assert_allclose(sim.sigma2[0, 0], np.exp(0.7 * e[0, 0]), rtol=1e-15)
    assert_allclose(sim.h[0, 1], 0.9 * e[0, 0] + e[1, 0], rtol=1e-14)


def test_data_follow_the_var():
    spec = preset("heteroskedastic", T=200, seed=3)
    sim = generate(spec)
    Y = sim.data.Y
    u = np.linalg.solve(spec.B0, sim.w.T).T
    A1, C = spec.A[:, :2], spec.A[:, 2:]
    assert_allclose(Y[0], C @ spec.D[0] + u[0], rtol=1e-14)
    assert_allclose(Y[1:], Y[:-1] @ A1.T + spec.D[1:] @ C.T + u[1:], rtol=1e-12, atol=1e-13)
    assert sim.data.names == ("y1", "y2")


def test_determinism():
    a = generate(preset(seed=11))
    b = generate(preset(seed=11))
    c = generate(preset(seed=12))
    assert a.data.Y.tobytes() == b.data.Y.tobytes()
    assert_array_equal(a.h, b.h)
    assert not np.array_equal(a.data.Y, c.data.Y)


def test_presets():
    assert set(PRESETS) == {"heteroskedastic", "homoskedastic", "heteroskedastic-both"}
    spec = preset()
    assert spec.N == 2 and spec.T == 300 and spec.p == 1 and spec.d == 1
    assert_array_equal(spec.omega, [0.8, 0.0])
    assert_allclose(np.linalg.inv(spec.B0), [[1.0, 0.0], [0.5, 1.0]])
    with pytest.raises(KeyError):
        preset("garch")


def test_unstable_spec_names_radius():
    A = np.array([[1.2, 0.0], [0.0, 0.5]])
    assert_allclose(spectral_radius(A, 1), 1.2)
    with pytest.raises(UnstableSpecError, match="1.2"):
        DgpSpec(B0=np.eye(2), A=A, omega=(0, 0), rho=(0, 0), T=10)
    spec = DgpSpec(B0=np.eye(2), A=A, omega=(0, 0), rho=(0, 0), T=10, allow_unstable=True)
    assert np.isfinite(generate(spec).data.Y).all()


def test_spec_validation():
    with pytest.raises(ValueError):
        _spec((0.1, 0.1), (1.0, 0.5))
    with pytest.raises(ValueError):
        DgpSpec(B0=np.ones((2, 2)), A=np.zeros((2, 3)), omega=(0, 0), rho=(0, 0), T=10)
    with pytest.raises(ValueError):
        DgpSpec(B0=np.eye(2), A=np.zeros((2, 4)), omega=(0, 0), rho=(0, 0), T=10)


def test_companion_two_lags():
    A = np.arange(8.0).reshape(2, 4)
    C = companion_matrix(A, 2)
    assert_array_equal(C[:2], A)
    assert_array_equal(C[2:], [[1, 0, 0, 0], [0, 1, 0, 0]])


def test_sigma_check_fixed_omega_is_lognormal():
    res = empirical_sigma_check(_spec((0.8,), (0.7,)), 0, 5, 100_000)
    assert res["p_value"] > 0.01
    assert_allclose(res["factor"], (1 - 0.7 ** 10) / (1 - 0.49))


def test_sigma_check_prior_omega_is_log_normal_product():
    res = empirical_sigma_check(_spec((0.8,), (0.7,)), 0, 5, 100_000, sigma2_omega=0.1, seed=1)
    assert res["ks_distance"] < 0.02


def test_sigma_check_first_period_factor():
    res = empirical_sigma_check(_spec((0.8,), (0.95,)), 0, 1, 1000)
    assert res["factor"] == 1.0
    with pytest.raises(ValueError):
        empirical_sigma_check(_spec((0.8,), (0.95,)), 0, 0, 10)
    res = empirical_sigma_check(_spec((0.0,), (0.5,)), 0, 3, 100)
    assert res["ks_distance"] == 0.0


def test_recovery_of_b0_and_h_paths():
    from hetsvar.gibbs import GibbsConfig, run_chain
    from hetsvar.model import ModelConfig, PriorConfig
    from hetsvar.structural import NormalizationBenchmark, normalize_sample

    spec = preset("heteroskedastic-both", T=500, seed=21)
    sim = generate(spec)
    cfg = ModelConfig.for_data(sim.data, p=1)
    s = run_chain(sim.data, cfg, PriorConfig(), GibbsConfig(n_burn=1500, n_keep=2500, seed=21))
    s = normalize_sample(s, NormalizationBenchmark(spec.B0))
    assert np.sqrt(np.mean((s.B0.mean(axis=0) - spec.B0) ** 2)) < 0.2
    # (omega, h) and (-omega, -h) give the same variances, so align h by the sign of omega
    aligned = (np.sign(s.omega)[:, :, None] * s.h).mean(axis=0)
    for n in range(2):
        # the estimation sample drops the first observation
        assert np.corrcoef(aligned[n], sim.h[n, 1:])[0, 1] > 0.6
