import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy.stats import ortho_group

from hetsvar.theory import (
    IdentificationAmbiguity,
    VarianceSequence,
    check_condition,
    equal_variance_groups,
    identification_report,
    recover_column,
    recover_columns,
    recover_row,
    rotation_ambiguity_probe,
    sign_normalize,
)


def _seq(*cols):
    return VarianceSequence(np.array(cols, dtype=float).T)


def test_condition_examples():
    seq = _seq([1, 2, 1], [1, 1, 1])
    assert check_condition(seq, 0) and check_condition(seq, 1)
    seq = _seq([1, 2, 1], [1, 2, 1])
    assert not check_condition(seq, 0) and not check_condition(seq, 1)
    # proportional but unequal after the unit first period
    seq = _seq([1, 2, 4], [1, 3, 9])
    assert check_condition(seq, 0) and check_condition(seq, 1)


def test_condition_tolerance():
    seq = _seq([1, 2, 1], [1, 2 + 1e-13, 1], [1, 2 + 1e-9, 1])
    assert not check_condition(seq, 0)
    assert check_condition(seq, 2)
    assert equal_variance_groups(seq) == [[0, 1], [2]]


def test_variance_sequence_validation():
    with pytest.raises(ValueError):
        VarianceSequence(np.array([[1.0, 1.0]]))
    with pytest.raises(ValueError):
        VarianceSequence(np.array([[1.0, 1.0], [0.0, 2.0]]))
    with pytest.raises(ValueError):
        VarianceSequence(np.array([[1.0, 2.0], [1.0, 2.0]]))


def test_sign_normalize():
    assert_allclose(sign_normalize([0.0, -2.0, 1.0]), [0.0, 2.0, -1.0])
    assert_allclose(sign_normalize([3.0, -1.0]), [3.0, -1.0])
    assert_allclose(sign_normalize([0.0, 0.0]), [0.0, 0.0])


def test_hand_two_by_two():
    B = np.array([[1.0, 1.0], [0.0, 1.0]])
    seq = _seq([1, 2], [1, 1])
    S = seq.covariances(B)
    col = recover_column(S, 0, seq, np.random.default_rng(0))
    assert_allclose(col, [1.0, 0.0], atol=1e-8)
    assert_allclose(recover_column(S, 1, seq, np.random.default_rng(0)), [1.0, 1.0], atol=1e-8)


def test_identity_b_gives_unit_columns():
    seq = _seq([1, 2, 0.5], [1, 0.3, 3], [1, 1, 1])
    Bhat = recover_columns(seq.covariances(np.eye(3)), seq, np.random.default_rng(1))
    assert_allclose(np.abs(Bhat), np.eye(3), atol=1e-10)


def test_random_three_variable_round_trip():
    rng = np.random.default_rng(2)
    B = rng.normal(size=(3, 3))
    lam = np.vstack([np.ones(3), rng.uniform(0.2, 5.0, size=(3, 3))])
    seq = VarianceSequence(lam)
    Bhat = recover_columns(seq.covariances(B), seq, rng)
    for n in range(3):
        assert_allclose(Bhat[:, n], sign_normalize(B[:, n]), atol=1e-8)


def test_unidentified_column_raises():
    seq = _seq([1, 2, 3], [1, 2, 3], [1, 0.5, 0.5])
    S = seq.covariances(np.eye(3))
    with pytest.raises(IdentificationAmbiguity):
        recover_column(S, 0, seq)
    recover_column(S, 2, seq, np.random.default_rng(0))


def test_probe_separates_identified_and_tied_columns():
    rng = np.random.default_rng(3)
    B = rng.normal(size=(3, 3))
    seq = _seq([1, 2, 3], [1, 2, 3], [1, 0.5, 0.5])
    S = seq.covariances(B)
    res = rotation_ambiguity_probe(S, seq, 2, rng=rng)
    assert res["column_n"] < 1e-10
    assert np.all(res["others"][:2] > 0.1)
    assert res["fit"] < 1e-10


def test_probe_distinct_patterns_all_invariant():
    rng = np.random.default_rng(4)
    seq = _seq([1, 2, 3], [1, 0.4, 1.5], [1, 0.5, 0.7])
    res = rotation_ambiguity_probe(seq.covariances(rng.normal(size=(3, 3))), seq, 0, rng=rng)
    assert np.all(res["others"] < 1e-10)


def test_probe_orthogonal_b_exact():
    B = ortho_group.rvs(3, random_state=5)
    seq = _seq([1, 2, 3], [1, 4, 1], [1, 4, 1])
    res = rotation_ambiguity_probe(seq.covariances(B), seq, 0, rng=np.random.default_rng(5))
    assert res["column_n"] < 1e-12


def test_row_duality():
    rng = np.random.default_rng(6)
    B = rng.normal(size=(3, 3))
    lam = np.vstack([np.ones(3), rng.uniform(0.2, 5.0, size=(2, 3))])
    seq = VarianceSequence(lam)
    S = seq.covariances(B)
    Binv = np.linalg.inv(recover_columns(S, seq, rng))
    for n in range(3):
        row = recover_row(S, n, seq, rng)
        assert_allclose(row, sign_normalize(Binv[n]), atol=1e-8)


def _instance(rng):
    N = int(rng.choice([2, 3, 4]))
    K = int(rng.choice([2, 3, 5]))
    B = rng.normal(size=(N, N))
    while np.linalg.cond(B) > 1e3:
        B = rng.normal(size=(N, N))
    lam = np.vstack([np.ones(N), rng.uniform(0.2, 5.0, size=(K, N))])
    if rng.random() < 0.5:
        i, j = rng.choice(N, size=2, replace=False)
        lam[:, j] = lam[:, i]
    return B, VarianceSequence(lam)


def test_two_hundred_random_instances():
    rng = np.random.default_rng(7)
    n_tied = 0
    for _ in range(200):
        B, seq = _instance(rng)
        S = seq.covariances(B)
        Bhat = recover_columns(S, seq, rng)
        tied = [n for n in range(seq.N) if not check_condition(seq, n)]
        for n in range(seq.N):
            if n not in tied:
                assert np.max(np.abs(Bhat[:, n] - sign_normalize(B[:, n]))) < 1e-8
        if tied:
            n_tied += 1
            res = rotation_ambiguity_probe(S, seq, tied[0], n_rotations=20, rng=rng)
            assert min(res["others"][tied]) >= 1e-3
    assert 50 < n_tied < 150


def test_report_with_and_without_lambdas():
    B = np.array([[1.0, 1.0], [0.0, 1.0]])
    seq = _seq([1, 2], [1, 1])
    S = seq.covariances(B)
    rep = identification_report(S, seq.lambdas)
    assert [r["identified"] for r in rep] == [True, True]
    assert_allclose(rep[0]["vector"], [1.0, 0.0], atol=1e-8)
    rep = identification_report(S)
    assert all(r["identified"] for r in rep)
    seq = _seq([1, 2, 3], [1, 2, 3], [1, 0.5, 0.5])
    rep = identification_report(seq.covariances(np.eye(3)))
    assert sorted(r["identified"] for r in rep) == [False, False, True]


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=40, deadline=None)
def test_recovered_columns_reproduce_covariances(seed):
    rng = np.random.default_rng(seed)
    B, seq = _instance(rng)
    S = seq.covariances(B)
    Bhat = recover_columns(S, seq, rng)
    assert_allclose(seq.covariances(Bhat), S, atol=1e-8 * np.abs(S).max())
