import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from hetsvar.gibbs import initial_state
from hetsvar.model import (
    MIXTURE,
    MixtureTable,
    ModelConfig,
    PosteriorSample,
    PriorConfig,
    StructuralState,
    TimeSeriesData,
    build_regressors,
    prior_mean_A,
    validate_state,
)


def test_mixture_moments_match_log_chi2():
    # E log chi2_1 = digamma(1/2) + log 2, Var = pi^2 / 2
    rng = np.random.default_rng(0)
    z = np.log(rng.standard_normal(2_000_000) ** 2)
    assert_allclose(z.mean(), -1.27036, atol=5e-3)
    assert_allclose(z.var(), 4.93480, atol=3e-2)
    assert abs(MIXTURE.mean - (-1.27036)) < 1e-2
    assert abs(MIXTURE.variance - math.pi ** 2 / 2) < 1e-1
    assert MIXTURE.n_components == 10


def test_mixture_table_validation():
    with pytest.raises(ValueError):
        MixtureTable([0.5, 0.6], [0.0, 1.0], [1.0, 1.0])
    with pytest.raises(ValueError):
        MixtureTable([0.5, 0.5], [0.0, 1.0], [1.0, -1.0])
    with pytest.raises(ValueError):
        MixtureTable([1.0], [0.0, 1.0], [1.0, 1.0])
    with pytest.raises(ValueError):
        MIXTURE.probs[0] = 0.5


def test_timeseries_rejects_missing_values():
    Y = np.ones((5, 2))
    Y[3, 1] = np.nan
    with pytest.raises(ValueError, match="row 3, column 1"):
        TimeSeriesData(Y)
    with pytest.raises(ValueError):
        TimeSeriesData(np.ones((5, 2)), D=np.ones((4, 1)))
    with pytest.raises(ValueError):
        TimeSeriesData(np.ones((5, 2)), names=["a"])


def test_build_regressors_lag_alignment():
    data = TimeSeriesData(np.arange(1.0, 6.0))
    Yt, X = build_regressors(data, ModelConfig(p=1, stationary_flags=(False,)))
    assert_array_equal(Yt[:, 0], [2, 3, 4, 5])
    assert_array_equal(X[:, 0], [1, 2, 3, 4])


def test_build_regressors_two_lags_and_constant():
    rng = np.random.default_rng(0)
    Y = rng.normal(size=(20, 3))
    data = TimeSeriesData(Y, D=np.ones(20))
    cfg = ModelConfig.for_data(data, p=2)
    Yt, X = build_regressors(data, cfg)
    assert Yt.shape == (18, 3) and X.shape == (18, 7)
    assert_array_equal(Yt, Y[2:])
    assert_array_equal(X[:, :3], Y[1:-1])
    assert_array_equal(X[:, 3:6], Y[:-2])
    assert_array_equal(X[:, -1], 1.0)


def test_build_regressors_errors():
    data = TimeSeriesData(np.ones((2, 2)))
    with pytest.raises(ValueError, match="insufficient"):
        build_regressors(data, ModelConfig(p=1, stationary_flags=(False, False)))
    data = TimeSeriesData(np.ones((30, 2)))
    with pytest.raises(ValueError):
        build_regressors(data, ModelConfig(p=1, stationary_flags=(False,) * 3))
    with pytest.raises(ValueError):
        ModelConfig(p=0)


@given(N=st.integers(1, 4), p=st.integers(1, 3), d=st.integers(0, 2), T=st.integers(0, 10))
@settings(max_examples=60, deadline=None)
def test_build_regressors_shapes(N, p, d, T):
    T = N * p + d + 1 + p + T
    data = TimeSeriesData(np.zeros((T, N)), D=np.zeros((T, d)) if d else None)
    Yt, X = build_regressors(data, ModelConfig.for_data(data, p=p))
    assert Yt.shape == (T - p, N)
    assert X.shape == (T - p, N * p + d)


def test_prior_mean_A():
    cfg = ModelConfig(p=2, stationary_flags=(False, False), n_det=1)
    assert_array_equal(prior_mean_A(cfg), np.hstack([np.eye(2), np.zeros((2, 3))]))
    cfg = ModelConfig(p=1, stationary_flags=(True, True, True))
    assert_array_equal(prior_mean_A(cfg), np.zeros((3, 3)))
    cfg = ModelConfig(p=1, stationary_flags=(True, False))
    assert_array_equal(prior_mean_A(cfg), np.diag([0.0, 1.0]))


def test_prior_config_defaults_and_roundtrip():
    pr = PriorConfig()
    assert (pr.S_omega, pr.A_omega) == (0.05, 1.0)
    assert (pr.nu_0, pr.nu_gamma0, pr.s_s0, pr.nu_s0) == (10, 10, 100, 1)
    assert (pr.nu_A, pr.nu_gammaA, pr.s_sA, pr.nu_sA) == (10, 10, 10, 10)
    assert pr.shape_B0(3) == 3
    assert PriorConfig.from_dict(pr.to_dict()) == pr
    assert PriorConfig.from_dict({}) == pr
    with pytest.raises(KeyError):
        PriorConfig.from_dict({"bogus": 1})
    with pytest.raises(ValueError):
        PriorConfig(S_omega=-1.0)


def test_omega_bar_layout():
    ob = PriorConfig().omega_bar(N=2, p=3, d=1)
    assert_allclose(ob, [1, 1, 0.5, 0.5, 1 / 3, 1 / 3, 100])


def _fresh_state(N=3, T=40, seed=0):
    rng = np.random.default_rng(seed)
    Y = rng.normal(size=(T, N))
    data = TimeSeriesData(Y, D=np.ones(T))
    Yt, X = build_regressors(data, ModelConfig.for_data(data))
    return initial_state(Yt, X, PriorConfig())


def test_fresh_state_is_valid():
    assert validate_state(_fresh_state()) == []


def test_validate_state_flags_bound_violation():
    s = _fresh_state()
    s.sv[1].rho, s.sv[1].sigma2_omega = 0.999, 0.5
    bad = validate_state(s)
    assert len(bad) == 1 and "sv[1].rho" in bad[0]
    assert validate_state(s, soft_bound=True) == []


def test_validate_state_flags_singular_b0_and_more():
    s = _fresh_state()
    s.B0[2] = s.B0[0] * 2.0
    s.sv[0].rho = 1.2
    s.sv[2].s[0] = 10
    s.hyper.gamma_A[0] = 0.0
    bad = validate_state(s)
    assert any(m.startswith("B0: singular") for m in bad)
    assert any("sv[0].rho" in m for m in bad)
    assert any("sv[2].s" in m for m in bad)
    assert any("hyper.gamma_A" in m for m in bad)


def _sample(n=6, N=2, T=5, seed=0):
    rng = np.random.default_rng(seed)
    f = lambda *shape: rng.uniform(0.1, 0.9, size=shape)
    return PosteriorSample(
        B0=rng.normal(size=(n, N, N)), A=rng.normal(size=(n, N, 2 * N)), omega=rng.normal(size=(n, N)),
        rho=f(n, N), sigma2_omega=f(n, N), gamma_0=f(n, N), s_0=f(n, N), s_gamma0=f(n),
        gamma_A=f(n, N), s_A=f(n, N), s_gammaA=f(n), omega_mean=rng.normal(size=(n, N)), omega_var=f(n, N),
        h=rng.normal(size=(n, N, T)), s=rng.integers(0, 10, size=(n, N, T)),
    )


def test_posterior_sample_indexing_roundtrip():
    ps = _sample()
    states = list(ps)
    assert len(states) == 6 and isinstance(states[0], StructuralState)
    back = PosteriorSample.from_states(states, ps.omega_mean, ps.omega_var)
    for name in ("B0", "A", "omega", "rho", "sigma2_omega", "gamma_0", "s_0", "s_gamma0", "h", "s"):
        assert_array_equal(getattr(back, name), getattr(ps, name))
    assert_array_equal(ps[-1].B0, ps.B0[5])
    sub = ps[1:4]
    assert len(sub) == 3
    assert_array_equal(sub.omega, ps.omega[1:4])
    assert ps.sddr_moments.shape == (6, 2, 2)
    assert_allclose(ps.conditional_variances(), np.exp(ps.omega[:, :, None] * ps.h))
    with pytest.raises(IndexError):
        ps[6]


def test_posterior_sample_checks_lengths():
    ps = _sample()
    with pytest.raises(ValueError):
        PosteriorSample(**{**ps.__dict__, "rho": ps.rho[:3]})
    with pytest.raises(ValueError):
        PosteriorSample(**{**ps.__dict__, "omega_var": -ps.omega_var})
