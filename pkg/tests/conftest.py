import numpy as np
import pytest

from hetsvar.model import PosteriorSample


def _make_sample(n=6, N=2, T=5, K=None, seed=0, omega_mean=None, omega_var=None, store_h=True):
    rng = np.random.default_rng(seed)
    K = 2 * N if K is None else K
    f = lambda *shape: rng.uniform(0.1, 0.9, size=shape)
    return PosteriorSample(
        B0=rng.normal(size=(n, N, N)) + 3 * np.eye(N), A=0.1 * rng.normal(size=(n, N, K)),
        omega=rng.normal(size=(n, N)), rho=f(n, N), sigma2_omega=f(n, N), gamma_0=f(n, N), s_0=f(n, N),
        s_gamma0=f(n), gamma_A=f(n, N), s_A=f(n, N), s_gammaA=f(n),
        omega_mean=rng.normal(size=(n, N)) if omega_mean is None else omega_mean,
        omega_var=f(n, N) if omega_var is None else omega_var,
        h=rng.normal(size=(n, N, T)) if store_h else None,
        s=rng.integers(0, 10, size=(n, N, T)) if store_h else None,
    )


@pytest.fixture
def make_sample():
    """Factory for synthetic :class:`PosteriorSample` objects."""
    return _make_sample


_ACCEPTANCE = {}


@pytest.fixture
def criterion():
    """Record one acceptance criterion result; printed in the terminal summary."""

    def record(number, ok, detail):
        _ACCEPTANCE[number] = (bool(ok), detail)
        print(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in range(1, 13):
        if number in _ACCEPTANCE:
            ok, detail = _ACCEPTANCE[number]
            tr.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        else:
            tr.write_line(f"criterion {number:2d}: NOT RUN")
