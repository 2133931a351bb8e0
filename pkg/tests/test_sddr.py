import io
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from hetsvar.model import PriorConfig
from hetsvar.sddr import (
    VerificationInfeasible,
    batch_log_sddr,
    compute_sddr,
    evidence_category,
    log_posterior_ordinate_at_zero,
    log_prior_ordinate_at_zero,
    posterior_ordinate_at_zero,
    prior_ordinate_at_zero,
    sddr_nse,
    write_sddr_table,
)


def test_single_pair_is_standard_normal_ordinate():
    assert_allclose(posterior_ordinate_at_zero([(0.0, 1.0)]), 0.3989423, atol=5e-8)


def test_pair_average():
    assert_allclose(posterior_ordinate_at_zero([(0.0, 1.0), (0.0, 4.0)]), 0.2992067, atol=5e-8)


def test_summation_oracle():
    rng = np.random.default_rng(0)
    n = 100_000
    comp = rng.integers(0, 2, size=n)
    m = np.column_stack([np.where(comp, rng.normal(2, 1, n), rng.normal(-1, 0.3, n)),
                         np.where(comp, rng.uniform(0.1, 1, n), rng.uniform(1, 3, n))])
    mpmath.mp.dps = 30
    total = mpmath.fsum(mpmath.npdf(0, mu, mpmath.sqrt(v)) for mu, v in m)
    exact = float(total / n)
    mpmath.mp.dps = 15
    assert_allclose(posterior_ordinate_at_zero(m), exact, rtol=1e-12)


def test_log_ordinate_survives_underflow():
    # every ordinate is ~exp(-5000), far below the smallest double
    m = np.array([[100.0, 1.0], [100.0, 1.0], [99.0, 1.0]])
    lo = log_posterior_ordinate_at_zero(m)
    expected = -0.5 * math.log(2 * math.pi) + math.log((2 * math.exp(-5000 + 4900.5) + 1) / 3) - 4900.5
    assert_allclose(lo, expected, rtol=1e-12)


def test_ordinate_input_errors():
    with pytest.raises(ValueError):
        posterior_ordinate_at_zero(np.empty((0, 2)))
    with pytest.raises(ValueError):
        posterior_ordinate_at_zero([(0.0, 0.0)])
    with pytest.raises(ValueError):
        posterior_ordinate_at_zero([0.0, 1.0])


@given(st.lists(st.tuples(st.floats(-10, 10), st.floats(0.01, 10)), min_size=1, max_size=20))
@settings(max_examples=80, deadline=None)
def test_ordinate_invariant_to_sign_of_means(pairs):
    m = np.array(pairs)
    flipped = m * [-1.0, 1.0]
    assert log_posterior_ordinate_at_zero(flipped) == log_posterior_ordinate_at_zero(m)


def test_prior_ordinate_defaults():
    assert_allclose(prior_ordinate_at_zero(PriorConfig()), math.sqrt(10), rtol=1e-12)
    assert_allclose(prior_ordinate_at_zero(PriorConfig()), 3.1623, rtol=1e-4)


def test_prior_ordinate_infeasible():
    with pytest.raises(VerificationInfeasible):
        prior_ordinate_at_zero(PriorConfig(A_omega=0.5))
    with pytest.raises(VerificationInfeasible):
        log_prior_ordinate_at_zero(PriorConfig(A_omega=0.3))


def test_prior_ordinate_scaling_in_S():
    a = prior_ordinate_at_zero(PriorConfig(S_omega=0.05))
    b = prior_ordinate_at_zero(PriorConfig(S_omega=0.1))
    assert_allclose(b, a / math.sqrt(2), rtol=1e-12)


def _moments_sample(make_sample, mean, var, n=60):
    return make_sample(n=n, N=2, omega_mean=np.asarray(mean, float), omega_var=np.asarray(var, float))


def test_compute_sddr_far_from_zero_is_strong(make_sample):
    n = 60
    ps = _moments_sample(make_sample, np.full((n, 2), 5.0), np.full((n, 2), 0.01))
    r = compute_sddr(ps, 0, PriorConfig())
    assert r.log_sddr < -1000
    assert r.category == "strong"
    assert r.nse == 0.0
    assert r.log_sddr == r.log_numerator - r.log_denominator


def test_compute_sddr_ratio_one_is_zero(make_sample):
    # a normal ordinate equal to sqrt(10): mean 0, variance 1 / (20 pi)
    n = 60
    var = 1.0 / (2 * math.pi * 10)
    ps = _moments_sample(make_sample, np.zeros((n, 2)), np.full((n, 2), var))
    r = compute_sddr(ps, 1, PriorConfig())
    assert abs(r.log_sddr) < 1e-12
    assert (r.n_draws, r.n_subsamples) == (60, 30)


def test_identical_batches_give_zero_nse():
    block = np.array([[0.3, 0.5], [1.0, 0.2], [-0.4, 2.0]])
    m = np.tile(block, (30, 1))
    assert sddr_nse(m, 30) == 0.0


def test_two_batch_closed_form():
    m = np.array([[0.0, 1.0], [0.0, 4.0]])
    a, b = math.log(0.3989422804014327), math.log(0.19947114020071635)
    # sample sd of two points is |a - b| / sqrt(2); dividing by sqrt(2) gives |a - b| / 2
    assert_allclose(sddr_nse(m, 2), abs(a - b) / 2, rtol=1e-12)
    d = math.log(math.sqrt(10))
    assert_allclose(batch_log_sddr(m, 2, PriorConfig()), [a - d, b - d], rtol=1e-12)


def test_trailing_draws_are_dropped():
    m = np.array([[0.0, 1.0], [0.0, 4.0], [9.0, 0.1]])
    assert_allclose(sddr_nse(m, 2), sddr_nse(m[:2], 2), rtol=0)


def test_nse_errors():
    with pytest.raises(ValueError):
        sddr_nse(np.ones((10, 2)), 1)
    with pytest.raises(ValueError):
        sddr_nse(np.ones((10, 2)), 30)


def test_nse_rate_on_iid_moments():
    rng = np.random.default_rng(3)
    sizes = np.array([600, 1200, 2400, 4800, 9600, 19200])
    reps = 40
    nse = []
    for S in sizes:
        vals = []
        for _ in range(reps):
            m = np.column_stack([rng.normal(1.0, 0.5, S), rng.uniform(0.2, 0.6, S)])
            vals.append(sddr_nse(m, 30))
        nse.append(np.mean(vals))
    slope = np.polyfit(np.log(sizes), np.log(nse), 1)[0]
    assert abs(slope + 0.5) < 0.15


@pytest.mark.parametrize("value, label", [
    (-25.0, "strong"), (-20.0, "positive"), (-3.5, "positive"), (-3.0, "weak"),
    (-0.1, "weak"), (0.0, "homoskedastic"), (2.0, "homoskedastic"),
])
def test_evidence_category(value, label):
    assert evidence_category(value) == label


def test_table_columns(make_sample):
    # N(0; 0, 1) = 0.399 sits below the prior ordinate sqrt(10), so the log ratio is mildly negative
    n = 60
    ps = _moments_sample(make_sample, np.zeros((n, 2)), np.ones((n, 2)))
    res = [compute_sddr(ps, k, PriorConfig()) for k in range(2)]
    buf = io.StringIO()
    write_sddr_table(res, ["y1", "y2"], buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "equation,log_sddr,nse,category"
    assert lines[1].split(",")[0] == "y1" and lines[1].split(",")[3] == "weak"
    buf = io.StringIO()
    write_sddr_table(res, ["y1", "y2"], buf, verbose=True)
    head = buf.getvalue().splitlines()[0].split(",")
    assert head[:4] == ["equation", "log_sddr", "nse", "category"] and "batch_sd" in head
