"""Data model: observations, configuration, priors, parameter states and posterior storage.

Notation follows the structural form ``B0 u_t = w_t`` with reduced form
``y_t = A x_t + u_t`` and regressors ``x_t = (y_{t-1}, ..., y_{t-p}, d_t)``.
Structural shock ``n`` has conditional variance ``exp(omega_n h_{n.t})`` where
``h_n`` is a standardised AR(1) path started at zero.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "MixtureTable",
    "MIXTURE",
    "TimeSeriesData",
    "ModelConfig",
    "PriorConfig",
    "SvEquationState",
    "Hyper",
    "StructuralState",
    "PosteriorSample",
    "build_regressors",
    "prior_mean_A",
    "validate_state",
]


# ---------------------------------------------------------------------------
# Ten-component normal mixture approximating log(chi^2_1)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MixtureTable:
    """Normal mixture ``sum_j probs[j] N(means[j], variances[j])``."""

    probs: np.ndarray
    means: np.ndarray
    variances: np.ndarray

    def __post_init__(self):
        for name in ("probs", "means", "variances"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not (self.probs.shape == self.means.shape == self.variances.shape):
            raise ValueError("mixture arrays must share one shape")
        if np.any(self.variances <= 0) or np.any(self.probs < 0):
            raise ValueError("mixture variances must be positive and weights nonnegative")
        if abs(self.probs.sum() - 1.0) > 1e-10:
            raise ValueError(f"mixture weights sum to {self.probs.sum()}, not 1")

    @property
    def n_components(self) -> int:
        return self.probs.size

    @property
    def mean(self) -> float:
        return float(self.probs @ self.means)

    @property
    def variance(self) -> float:
        return float(self.probs @ (self.variances + self.means ** 2) - self.mean ** 2)


# Omori, Chib, Shephard and Nakajima (2007), Table 1.
MIXTURE = MixtureTable(
    probs=[0.00609, 0.04775, 0.13057, 0.20674, 0.22715, 0.18842, 0.12047, 0.05591, 0.01575, 0.00115],
    means=[1.92677, 1.34744, 0.73504, 0.02266, -0.85173, -1.97278, -3.46788, -5.55246, -8.68384, -14.65000],
    variances=[0.11265, 0.17788, 0.26768, 0.40611, 0.62699, 0.98583, 1.57469, 2.54498, 4.16591, 7.33342],
)


# ---------------------------------------------------------------------------
# Observations and configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TimeSeriesData:
    """Observed series ``Y`` (T x N) with deterministic terms ``D`` (T x d).

    Missing values are rejected; pre-transform and impute before construction.
    """

    Y: np.ndarray
    D: Optional[np.ndarray] = None
    names: Optional[Sequence[str]] = None

    def __post_init__(self):
        Y = np.array(self.Y, dtype=float)
        if Y.ndim == 1:
            Y = Y[:, None]
        if Y.ndim != 2 or Y.shape[0] == 0 or Y.shape[1] == 0:
            raise ValueError(f"Y must be a nonempty T x N matrix, got shape {Y.shape}")
        D = np.zeros((Y.shape[0], 0)) if self.D is None else np.array(self.D, dtype=float)
        if D.ndim == 1:
            D = D[:, None]
        if D.ndim != 2 or D.shape[0] != Y.shape[0]:
            raise ValueError(f"D must have {Y.shape[0]} rows, got shape {D.shape}")
        for label, arr in (("Y", Y), ("D", D)):
            bad = np.argwhere(~np.isfinite(arr))
            if bad.size:
                r, c = bad[0]
                raise ValueError(f"{label} has a non-finite entry at row {r}, column {c}")
        names = tuple(self.names) if self.names is not None else tuple(f"y{i + 1}" for i in range(Y.shape[1]))
        if len(names) != Y.shape[1]:
            raise ValueError(f"expected {Y.shape[1]} names, got {len(names)}")
        Y.setflags(write=False)
        D.setflags(write=False)
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "names", names)

    @property
    def T(self) -> int:
        return self.Y.shape[0]

    @property
    def N(self) -> int:
        return self.Y.shape[1]

    @property
    def d(self) -> int:
        return self.D.shape[1]


@dataclass(frozen=True)
class ModelConfig:
    """Lag order and prior-mean layout.

    Parameters
    ----------
    p : int
        Lag order, at least 1.
    stationary_flags : sequence of bool
        One flag per variable.  A stationary variable gets prior mean 0 on its
        own first lag; a unit-root variable gets 1.
    n_det : int
        Number of deterministic columns ``d``.
    """

    p: int = 1
    stationary_flags: tuple = ()
    n_det: int = 0

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 1:
            raise ValueError(f"lag order p must be an integer >= 1, got {self.p}")
        if self.n_det < 0:
            raise ValueError("n_det must be nonnegative")
        object.__setattr__(self, "stationary_flags", tuple(bool(f) for f in self.stationary_flags))

    @classmethod
    def for_data(cls, data: TimeSeriesData, p: int = 1, stationary=False) -> "ModelConfig":
        """Configuration matching ``data``; ``stationary`` is a bool or one bool per variable."""
        flags = [stationary] * data.N if np.ndim(stationary) == 0 else list(stationary)
        return cls(p=p, stationary_flags=tuple(flags), n_det=data.d)

    @property
    def N(self) -> int:
        return len(self.stationary_flags)

    @property
    def K(self) -> int:
        """Number of regressors ``N p + d``."""
        return self.N * self.p + self.n_det


@dataclass(frozen=True)
class PriorConfig:
    """Hyperparameters of the prior.  Defaults are the recommended settings.

    ``S_omega`` and ``A_omega`` are the scale and shape of the gamma prior on
    the variance of ``omega``.  The ``*_0`` and ``*_A`` entries parameterise
    the three-level shrinkage hierarchies of B0 and A.  ``nu_B0`` is the
    shape of the generalised-normal prior on B0 (``None`` means ``N``, which
    makes every row normal).  ``w_offset`` is added to squared shocks before
    taking logs.
    """

    S_omega: float = 0.05
    A_omega: float = 1.0
    nu_0: float = 10.0
    nu_gamma0: float = 10.0
    s_s0: float = 100.0
    nu_s0: float = 1.0
    nu_A: float = 10.0
    nu_gammaA: float = 10.0
    s_sA: float = 10.0
    nu_sA: float = 10.0
    nu_B0: Optional[float] = None
    deterministic_scale: float = 100.0
    w_offset: float = 1e-10

    def __post_init__(self):
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"prior setting {f.name} must be positive and finite, got {value!r}")

    def shape_B0(self, N: int) -> float:
        return float(N) if self.nu_B0 is None else float(self.nu_B0)

    def omega_bar(self, N: int, p: int, d: int) -> np.ndarray:
        """Diagonal of the prior covariance kernel of each row of A.

        Lag ``l`` slopes get ``1/l``; deterministic terms get ``deterministic_scale``.
        """
        lags = np.repeat(1.0 / np.arange(1, p + 1), N)
        return np.concatenate([lags, np.full(d, self.deterministic_scale)])

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, cfg: dict) -> "PriorConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(cfg) - known
        if unknown:
            raise KeyError(f"unknown prior settings: {sorted(unknown)}")
        return cls(**cfg)


def build_regressors(data: TimeSeriesData, cfg: ModelConfig):
    """Stack the lagged regressors.

    Returns
    -------
    Yt : ndarray, shape (T - p, N)
        ``y_t`` for ``t = p, ..., T-1``.
    X : ndarray, shape (T - p, N p + d)
        Row ``t`` is ``(y_{t-1}, ..., y_{t-p}, d_t)``.
    """
    T, N, p = data.T, data.N, cfg.p
    if cfg.N and cfg.N != N:
        raise ValueError(f"configuration describes {cfg.N} variables, data has {N}")
    if cfg.N and cfg.n_det != data.d:
        raise ValueError(f"configuration declares {cfg.n_det} deterministic terms, data has {data.d}")
    if T <= N * p + data.d or T <= p:
        raise ValueError(f"insufficient observations: T={T} must exceed N*p + d = {N * p + data.d}")
    Yt = data.Y[p:].copy()
    lags = [data.Y[p - lag:T - lag] for lag in range(1, p + 1)]
    X = np.hstack(lags + [data.D[p:]])
    return Yt, X


def prior_mean_A(cfg: ModelConfig) -> np.ndarray:
    """Prior mean ``[diag(1 - stationary_flags) | 0]`` of A, shape (N, N p + d)."""
    N = cfg.N
    out = np.zeros((N, cfg.K))
    out[:, :N] = np.diag([0.0 if f else 1.0 for f in cfg.stationary_flags])
    return out


# ---------------------------------------------------------------------------
# Parameter states
# ---------------------------------------------------------------------------

@dataclass
class SvEquationState:
    """Stochastic-volatility block of one structural shock.

    ``s`` holds zero-based mixture indicators (component ``j`` of
    :data:`MIXTURE` is stored as ``j``).  ``h`` and ``s`` may be ``None`` for
    draws stored without latent paths.
    """

    h: Optional[np.ndarray]
    omega: float
    rho: float
    sigma2_omega: float
    s: Optional[np.ndarray]

    def copy(self) -> "SvEquationState":
        return SvEquationState(
            None if self.h is None else self.h.copy(),
            float(self.omega),
            float(self.rho),
            float(self.sigma2_omega),
            None if self.s is None else self.s.copy(),
        )


@dataclass
class Hyper:
    """Shrinkage hyperparameters of the B0 and A hierarchies."""

    gamma_0: np.ndarray
    s_0: np.ndarray
    s_gamma0: float
    gamma_A: np.ndarray
    s_A: np.ndarray
    s_gammaA: float

    def copy(self) -> "Hyper":
        return Hyper(
            self.gamma_0.copy(), self.s_0.copy(), float(self.s_gamma0),
            self.gamma_A.copy(), self.s_A.copy(), float(self.s_gammaA),
        )


@dataclass
class StructuralState:
    """One full parameter draw."""

    B0: np.ndarray
    A: np.ndarray
    sv: list
    hyper: Hyper

    @property
    def N(self) -> int:
        return self.B0.shape[0]

    def copy(self) -> "StructuralState":
        return StructuralState(self.B0.copy(), self.A.copy(), [e.copy() for e in self.sv], self.hyper.copy())

    def conditional_variances(self) -> np.ndarray:
        """``sigma2[n, t] = exp(omega_n h_{n.t})``, shape (N, T)."""
        return np.exp(np.array([e.omega * e.h for e in self.sv]))


def _b0_singular(B0: np.ndarray) -> bool:
    scale = np.prod(np.linalg.norm(B0, axis=1))
    if not np.isfinite(scale) or scale == 0:
        return True
    return abs(np.linalg.det(B0)) <= B0.shape[0] * np.finfo(float).eps * scale


def validate_state(state: StructuralState, soft_bound: bool = False) -> list:
    """List the violated invariants of ``state``; empty when all hold.

    With ``soft_bound=True`` the joint restriction ``rho^2 + sigma2_omega < 1``
    is not reported (the sampler enforces it only through the draw of rho).
    """
    out = []
    B0, A = np.asarray(state.B0), np.asarray(state.A)
    N = B0.shape[0]
    if B0.shape != (N, N):
        out.append(f"B0: expected a square matrix, got shape {B0.shape}")
    elif not np.all(np.isfinite(B0)):
        out.append("B0: non-finite entries")
    elif _b0_singular(B0):
        out.append(f"B0: singular (|det| = {abs(np.linalg.det(B0)):.3e})")
    if A.ndim != 2 or A.shape[0] != N:
        out.append(f"A: expected {N} rows, got shape {A.shape}")
    elif not np.all(np.isfinite(A)):
        out.append("A: non-finite entries")
    if len(state.sv) != N:
        out.append(f"sv: expected {N} equation states, got {len(state.sv)}")
    lengths = {e.h.size for e in state.sv if e.h is not None}
    if len(lengths) > 1:
        out.append(f"sv: h paths of unequal lengths {sorted(lengths)}")
    for n, e in enumerate(state.sv):
        tag = f"sv[{n}]"
        if not np.isfinite(e.omega):
            out.append(f"{tag}.omega: non-finite")
        if not -1.0 < e.rho < 1.0:
            out.append(f"{tag}.rho: {e.rho} outside (-1, 1)")
        if not 0.0 < e.sigma2_omega < 1.0:
            out.append(f"{tag}.sigma2_omega: {e.sigma2_omega} outside (0, 1)")
        elif not soft_bound and abs(e.rho) >= math.sqrt(1.0 - e.sigma2_omega):
            out.append(
                f"{tag}.rho: |rho| = {abs(e.rho)} violates |rho| < sqrt(1 - sigma2_omega) = "
                f"{math.sqrt(1.0 - e.sigma2_omega)}"
            )
        if e.h is not None and not np.all(np.isfinite(e.h)):
            out.append(f"{tag}.h: non-finite entries")
        if e.s is not None and (np.any(e.s < 0) or np.any(e.s >= MIXTURE.n_components)):
            out.append(f"{tag}.s: indicator outside 0..{MIXTURE.n_components - 1}")
    hy = state.hyper
    for name in ("gamma_0", "s_0", "s_gamma0", "gamma_A", "s_A", "s_gammaA"):
        value = np.asarray(getattr(hy, name), dtype=float)
        if not np.all(np.isfinite(value) & (value > 0)):
            out.append(f"hyper.{name}: must be strictly positive and finite")
    return out


# ---------------------------------------------------------------------------
# Posterior storage
# ---------------------------------------------------------------------------

_SCALAR_FIELDS = ("omega", "rho", "sigma2_omega")
_HYPER_VEC = ("gamma_0", "s_0", "gamma_A", "s_A")
_HYPER_SCALAR = ("s_gamma0", "s_gammaA")


@dataclass
class PosteriorSample:
    """Stacked posterior draws.

    Arrays carry the draw index first.  ``omega_mean`` and ``omega_var`` hold,
    per draw and equation, the mean and variance of the normal full
    conditional of ``omega``; these feed the Savage-Dickey numerator.  The
    object behaves as a sequence of :class:`StructuralState`.
    """

    B0: np.ndarray
    A: np.ndarray
    omega: np.ndarray
    rho: np.ndarray
    sigma2_omega: np.ndarray
    gamma_0: np.ndarray
    s_0: np.ndarray
    s_gamma0: np.ndarray
    gamma_A: np.ndarray
    s_A: np.ndarray
    s_gammaA: np.ndarray
    omega_mean: np.ndarray
    omega_var: np.ndarray
    h: Optional[np.ndarray] = None
    s: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.B0.shape[0]
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if isinstance(value, np.ndarray) and value.shape[0] != n:
                raise ValueError(f"{f.name} holds {value.shape[0]} draws, B0 holds {n}")
        if np.any(self.omega_var <= 0):
            raise ValueError("stored omega variances must be positive")

    @classmethod
    def from_states(cls, states, omega_mean, omega_var, meta=None, store_h: bool = True):
        states = list(states)
        if not states:
            raise ValueError("no draws to store")
        kw = dict(
            B0=np.stack([st.B0 for st in states]),
            A=np.stack([st.A for st in states]),
            omega_mean=np.asarray(omega_mean, dtype=float),
            omega_var=np.asarray(omega_var, dtype=float),
            meta=dict(meta or {}),
        )
        for name in _SCALAR_FIELDS:
            kw[name] = np.array([[getattr(e, name) for e in st.sv] for st in states])
        for name in _HYPER_VEC + _HYPER_SCALAR:
            kw[name] = np.stack([np.asarray(getattr(st.hyper, name), dtype=float) for st in states])
        if store_h and states[0].sv[0].h is not None:
            kw["h"] = np.stack([np.stack([e.h for e in st.sv]) for st in states])
            kw["s"] = np.stack([np.stack([e.s for e in st.sv]) for st in states]).astype(np.int64)
        return cls(**kw)

    def __len__(self) -> int:
        return self.B0.shape[0]

    def __getitem__(self, i):
        if isinstance(i, slice):
            return self.subset(np.arange(len(self))[i])
        i = int(i)
        if i < 0:
            i += len(self)
        if not 0 <= i < len(self):
            raise IndexError(i)
        sv = [
            SvEquationState(
                None if self.h is None else self.h[i, n].copy(),
                float(self.omega[i, n]),
                float(self.rho[i, n]),
                float(self.sigma2_omega[i, n]),
                None if self.s is None else self.s[i, n].copy(),
            )
            for n in range(self.N)
        ]
        hyper = Hyper(
            self.gamma_0[i].copy(), self.s_0[i].copy(), float(self.s_gamma0[i]),
            self.gamma_A[i].copy(), self.s_A[i].copy(), float(self.s_gammaA[i]),
        )
        return StructuralState(self.B0[i].copy(), self.A[i].copy(), sv, hyper)

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def subset(self, idx) -> "PosteriorSample":
        kw = {}
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            kw[f.name] = value[idx] if isinstance(value, np.ndarray) else value
        kw["meta"] = dict(self.meta)
        return PosteriorSample(**kw)

    @property
    def N(self) -> int:
        return self.B0.shape[1]

    @property
    def sddr_moments(self) -> np.ndarray:
        """Array of shape (draws, N, 2) with ``(mean, variance)`` pairs."""
        return np.stack([self.omega_mean, self.omega_var], axis=-1)

    def conditional_variances(self) -> np.ndarray:
        """``exp(omega h)`` per draw, equation and period; needs stored h paths."""
        if self.h is None:
            raise ValueError("h paths were not stored with this sample")
        return np.exp(self.omega[:, :, None] * self.h)
