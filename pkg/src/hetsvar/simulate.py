"""Synthetic data from the SVAR with non-centred stochastic volatility."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import stats

from .model import TimeSeriesData
from .special import np_cdf

__all__ = [
    "UnstableSpecError",
    "DgpSpec",
    "Simulation",
    "PRESETS",
    "preset",
    "companion_matrix",
    "spectral_radius",
    "generate",
    "empirical_sigma_check",
]


class UnstableSpecError(ValueError):
    """The VAR part of a spec is explosive and no override was given."""


@dataclass(frozen=True)
class DgpSpec:
    """Ground truth of a simulated SVAR.

    ``A`` has ``N p + d`` columns laid out as ``(A_1, ..., A_p, C)`` where
    ``C`` multiplies the deterministic terms.  ``D`` defaults to a constant
    when ``d == 1`` and must be given otherwise.
    """

    B0: np.ndarray
    A: np.ndarray
    omega: np.ndarray
    rho: np.ndarray
    T: int
    p: int = 1
    seed: int = 0
    D: Optional[np.ndarray] = None
    allow_unstable: bool = False
    names: tuple = field(default=())

    def __post_init__(self):
        B0 = np.atleast_2d(np.asarray(self.B0, dtype=float))
        N = B0.shape[0]
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        omega = np.asarray(self.omega, dtype=float).reshape(N)
        rho = np.asarray(self.rho, dtype=float).reshape(N)
        if B0.shape != (N, N) or abs(np.linalg.det(B0)) < 1e-12:
            raise ValueError("B0 must be square and nonsingular")
        if A.shape[0] != N or A.shape[1] < N * self.p:
            raise ValueError(f"A must have {N} rows and at least {N * self.p} columns, got {A.shape}")
        if np.any(np.abs(rho) >= 1):
            raise ValueError("every |rho| must be below 1")
        if self.T <= self.p:
            raise ValueError("T must exceed p")
        d = A.shape[1] - N * self.p
        D = self.D
        if D is None:
            if d > 1:
                raise ValueError(f"A has {d} deterministic columns; supply D")
            D = np.ones((self.T, d))
        D = np.asarray(D, dtype=float).reshape(self.T, d)
        for name, value in (("B0", B0), ("A", A), ("omega", omega), ("rho", rho), ("D", D)):
            object.__setattr__(self, name, value)
        if not self.allow_unstable:
            r = spectral_radius(A[:, : N * self.p], self.p)
            if r >= 1.0:
                raise UnstableSpecError(
                    f"companion matrix has spectral radius {r:.6g} >= 1; pass allow_unstable to override"
                )

    @property
    def N(self) -> int:
        return self.B0.shape[0]

    @property
    def d(self) -> int:
        return self.D.shape[1]


@dataclass(frozen=True)
class Simulation:
    """Simulated data with the latent truth.

    ``h`` and ``sigma2`` have shape (N, T) and ``w`` has shape (T, N),
    aligned with the rows of ``data.Y``.
    """

    data: TimeSeriesData
    h: np.ndarray
    sigma2: np.ndarray
    w: np.ndarray
    spec: DgpSpec


def companion_matrix(A_lags: np.ndarray, p: int) -> np.ndarray:
    N = A_lags.shape[0]
    C = np.zeros((N * p, N * p))
    C[:N] = A_lags[:, : N * p]
    if p > 1:
        C[N:, :-N] = np.eye(N * (p - 1))
    return C


def spectral_radius(A_lags: np.ndarray, p: int) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(companion_matrix(A_lags, p)))))


_PRESET_B0 = np.linalg.inv(np.array([[1.0, 0.0], [0.5, 1.0]]))
_PRESET_A = np.array([[0.5, 0.1, 0.0], [0.0, 0.4, 0.0]])

PRESETS = {
    "heteroskedastic": dict(omega=(0.8, 0.0), rho=(0.8, 0.8)),
    "homoskedastic": dict(omega=(0.0, 0.0), rho=(0.8, 0.8)),
    "heteroskedastic-both": dict(omega=(0.8, 0.8), rho=(0.8, 0.8)),
}


def preset(name: str = "heteroskedastic", T: int = 300, seed: int = 0) -> DgpSpec:
    """Desk-scale bivariate DGP with one lag and a constant.

    ``B0`` is the inverse of the lower-triangular ``[[1, 0], [0.5, 1]]``.
    """
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    cfg = PRESETS[name]
    return DgpSpec(B0=_PRESET_B0.copy(), A=_PRESET_A.copy(), T=T, p=1, seed=seed, **cfg)


def generate(spec: DgpSpec) -> Simulation:
    """Simulate ``spec.T`` observations.

    ``h`` starts from zero before the first observation, lagged ``y`` values
    before the sample are zero, and no burn-in is discarded.
    """
    rng = np.random.default_rng(spec.seed)
    N, T, p = spec.N, spec.T, spec.p
    e = rng.standard_normal((T, N))
    eps = rng.standard_normal((T, N))
    h = np.empty((T, N))
    prev = np.zeros(N)
    for t in range(T):
        prev = spec.rho * prev + e[t]
        h[t] = prev
    sigma2 = np.exp(spec.omega * h)
    w = np.sqrt(sigma2) * eps
    u = np.linalg.solve(spec.B0, w.T).T
    A_lags = [spec.A[:, i * N:(i + 1) * N] for i in range(p)]
    C = spec.A[:, N * p:]
    Y = np.zeros((T, N))
    for t in range(T):
        y = C @ spec.D[t] + u[t]
        for lag in range(1, min(p, t) + 1):
            y = y + A_lags[lag - 1] @ Y[t - lag]
        Y[t] = y
    names = spec.names or tuple(f"y{i + 1}" for i in range(N))
    data = TimeSeriesData(Y, spec.D, names)
    return Simulation(data=data, h=h.T.copy(), sigma2=sigma2.T.copy(), w=w, spec=spec)


def empirical_sigma_check(spec: DgpSpec, n: int, t: int, n_rep: int,
                          sigma2_omega: Optional[float] = None, seed: int = 0) -> dict:
    """Compare the simulated law of ``sigma2_{n.t}`` with its analytic form.

    With ``sigma2_omega=None`` the spec's ``omega_n`` is used and
    ``log sigma2_{n.t}`` is normal with variance
    ``omega^2 (1 - rho^{2t}) / (1 - rho^2)``.  Otherwise ``omega_n`` is drawn
    afresh from ``N(0, sigma2_omega)`` in each replication and
    ``log sigma2_{n.t}`` is normal-product with variance parameter
    ``sigma2_omega (1 - rho^{2t}) / (1 - rho^2)``.

    Returns the Kolmogorov distance, its p-value, the variance factor
    ``(1 - rho^{2t}) / (1 - rho^2)`` and the simulated log variances.
    """
    if t < 1:
        raise ValueError("t must be at least 1")
    rng = np.random.default_rng(seed)
    rho = float(spec.rho[n])
    h = np.zeros(n_rep)
    for _ in range(t):
        h = rho * h + rng.standard_normal(n_rep)
    factor = (1.0 - rho ** (2 * t)) / (1.0 - rho * rho)
    if sigma2_omega is None:
        omega = float(spec.omega[n])
        log_s2 = omega * h
        sd = abs(omega) * math.sqrt(factor)
        if sd == 0.0:
            return {"ks_distance": 0.0, "p_value": 1.0, "factor": factor, "log_sigma2": log_s2}
        res = stats.kstest(log_s2, stats.norm(scale=sd).cdf)
    else:
        omega = math.sqrt(sigma2_omega) * rng.standard_normal(n_rep)
        log_s2 = omega * h
        res = stats.kstest(log_s2, lambda z: np_cdf(z, sigma2_omega * factor))
    return {"ks_distance": float(res.statistic), "p_value": float(res.pvalue), "factor": factor,
            "log_sigma2": log_s2}
