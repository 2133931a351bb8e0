"""Gibbs sampler for the SVAR with non-centred stochastic volatility.

One sweep updates, in this order: the rows of B0, the rows of A, the B0
shrinkage hierarchy, the A shrinkage hierarchy, and then for every structural
shock the mixture indicators, the log-volatility path ``h``, ``omega``, an
ancillarity-sufficiency interweaving step, ``rho`` and ``sigma2_omega``.

``prior_only=True`` drops every likelihood term, so the chain targets the
prior.  This is used to test the sampler against analytic prior marginals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg

from .model import (
    MIXTURE,
    Hyper,
    ModelConfig,
    PosteriorSample,
    PriorConfig,
    StructuralState,
    SvEquationState,
    TimeSeriesData,
    build_regressors,
    prior_mean_A,
    validate_state,
)
from .special import sample_generalized_normal_row, sample_gig, sample_truncnorm

__all__ = [
    "GibbsConfig",
    "GibbsError",
    "initial_state",
    "sample_B0",
    "sample_A_row",
    "sample_hyper_B0",
    "sample_hyper_A",
    "sample_mixture_indicators",
    "h_precision_banded",
    "sample_h",
    "sample_omega",
    "asis_interweave",
    "sample_rho",
    "sample_sigma2_omega",
    "log_squared_shocks",
    "run_chain",
    "ancestral_sv_prior",
    "geweke_sv",
]

_LOG_2PI = math.log(2.0 * math.pi)
_MIX_LOGP = np.log(MIXTURE.probs)
_MIX_MU = np.asarray(MIXTURE.means)
_MIX_VAR = np.asarray(MIXTURE.variances)
_MIX_CUMP = np.cumsum(MIXTURE.probs)
_PRIOR_MODE_COMPONENT = int(np.argmax(MIXTURE.probs))


@dataclass(frozen=True)
class GibbsConfig:
    """Run-length and mode settings of one chain.

    ``fixed`` pins SV parameters at given values and skips their updates;
    recognised keys are ``"rho"``, ``"sigma2_omega"`` and ``"omega"`` with a
    scalar or one value per equation.  Pinning ``omega`` also disables the
    interweaving step.
    """

    n_burn: int = 1000
    n_keep: int = 1000
    thin: int = 1
    seed: int = 0
    prior_only: bool = False
    store_h: bool = True
    fixed: dict = field(default_factory=dict)
    debug: bool = False

    def __post_init__(self):
        if self.n_burn < 0:
            raise ValueError("n_burn must be nonnegative")
        if self.n_keep < 1:
            raise ValueError("n_keep must be at least 1")
        if self.thin < 1:
            raise ValueError("thin must be at least 1")
        unknown = set(self.fixed) - {"rho", "sigma2_omega", "omega"}
        if unknown:
            raise ValueError(f"cannot fix {sorted(unknown)}")


class GibbsError(RuntimeError):
    """A conditional update failed; ``iteration`` gives the sweep index."""

    def __init__(self, iteration: int, message: str):
        super().__init__(f"iteration {iteration}: {message}")
        self.iteration = iteration


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def _ig2(scale, dof, rng, size=None):
    # IG2(s, nu): s / chi2(nu), density ~ x^{-(nu+2)/2} exp(-s/(2x))
    return scale / rng.chisquare(dof, size=size)


def _draw_normal_precision(P, b, rng):
    """Draw from N(P^{-1} b, P^{-1}) given a dense SPD precision."""
    L = linalg.cholesky(P, lower=True, check_finite=False)
    mean = linalg.cho_solve((L, True), b, check_finite=False)
    z = rng.standard_normal(P.shape[0])
    return mean + linalg.solve_triangular(L, z, lower=True, trans="T", check_finite=False)


def log_squared_shocks(w, offset=1e-10):
    """``log(w^2 + offset)``; the offset keeps exact zeros finite."""
    return np.log(np.square(w) + offset)


# ---------------------------------------------------------------------------
# Structural parameters
# ---------------------------------------------------------------------------

def sample_B0(state, Yt, X, priors: PriorConfig, rng, prior_only=False):
    """Redraw every row of B0 from its generalised-normal full conditional.

    Row ``n`` has kernel ``|det B0|^(nu_bar - N) exp(-b S_n b' / 2)`` with
    ``S_n = I / gamma_0n + sum_t u_t u_t' / sigma2_nt`` and
    ``nu_bar = T + nu``, where ``nu`` is the prior shape.
    """
    B0 = state.B0.copy()
    N = B0.shape[0]
    nu = priors.shape_B0(N)
    if prior_only:
        U = None
        nu_bar = nu
    else:
        U = Yt - X @ state.A.T
        nu_bar = U.shape[0] + nu
        sig2 = state.conditional_variances()
    eye = np.eye(N)
    for n in range(N):
        S_inv = eye / state.hyper.gamma_0[n]
        if U is not None:
            S_inv = S_inv + (U / sig2[n][:, None]).T @ U
        others = np.delete(B0, n, axis=0)
        try:
            B0[n] = sample_generalized_normal_row(S_inv, nu_bar, others, rng)
        except np.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError(f"B0 row {n}: {exc}") from exc
    return B0


def sample_A_row(n, state, Yt, X, A_bar, omega_bar, rng, prior_only=False):
    """Draw row ``n`` of A given the other rows.

    Writing ``z_t = B0 (y_t - A_0 x_t)`` with row ``n`` of A zeroed in
    ``A_0``, the model reads ``z_t = b_n (A_n x_t) + w_t`` where ``b_n`` is
    column ``n`` of B0.  With ``c_t = sum_i B0[i, n]^2 / sigma2_it`` the
    conditional precision is ``diag(1/omega_bar)/gamma_An + X' diag(c) X``.
    """
    return _sample_A_row(n, state, Yt, X, 1.0 / np.asarray(omega_bar, dtype=float), A_bar, rng, prior_only)


def _sample_A_row(n, state, Yt, X, omega_bar_inv, A_bar, rng, prior_only):
    gamma = state.hyper.gamma_A[n]
    prec = np.diag(omega_bar_inv / gamma)
    loc = omega_bar_inv * A_bar[n] / gamma
    if not prior_only:
        B0 = state.B0
        sig2 = state.conditional_variances()
        A0 = state.A.copy()
        A0[n] = 0.0
        Z = (Yt - X @ A0.T) @ B0.T
        inv_s = 1.0 / sig2.T
        bn = B0[:, n]
        c = inv_s @ (bn * bn)
        r = (Z * inv_s) @ bn
        prec = prec + (X * c[:, None]).T @ X
        loc = loc + X.T @ r
    try:
        return _draw_normal_precision(prec, loc, rng)
    except linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"A row {n}: posterior precision is not positive definite") from exc


def sample_hyper_B0(state, priors: PriorConfig, rng):
    """Three-level update gamma_0 -> s_0 -> s_gamma0 of the B0 shrinkage.

    ``gamma_0n ~ IG2(s_0n + |B0_n|^2, nu_0 + nu)`` where ``nu`` is the
    generalised-normal shape (``N`` by default).
    """
    N = state.N
    hy = state.hyper
    sq = np.sum(state.B0 ** 2, axis=1)
    gamma = _ig2(hy.s_0 + sq, priors.nu_0 + priors.shape_B0(N), rng, size=N)
    scale = 1.0 / (1.0 / hy.s_gamma0 + 1.0 / (2.0 * gamma))
    s0 = rng.gamma(priors.nu_gamma0 + 0.5 * priors.nu_0, scale)
    s_gamma = _ig2(priors.s_s0 + 2.0 * s0.sum(), priors.nu_s0 + 2.0 * N * priors.nu_gamma0, rng)
    return gamma, s0, float(s_gamma)


def sample_hyper_A(state, priors: PriorConfig, A_bar, omega_bar, rng):
    """Three-level update gamma_A -> s_A -> s_gammaA of the A shrinkage."""
    N, K = state.A.shape
    hy = state.hyper
    dev = state.A - A_bar
    quad = np.sum(dev * dev / omega_bar, axis=1)
    gamma = _ig2(hy.s_A + quad, priors.nu_A + K, rng, size=N)
    scale = 1.0 / (1.0 / hy.s_gammaA + 1.0 / (2.0 * gamma))
    sA = rng.gamma(priors.nu_gammaA + 0.5 * priors.nu_A, scale)
    s_gamma = _ig2(priors.s_sA + 2.0 * sA.sum(), priors.nu_sA + 2.0 * N * priors.nu_gammaA, rng)
    return gamma, sA, float(s_gamma)


# ---------------------------------------------------------------------------
# Stochastic volatility block
# ---------------------------------------------------------------------------

def mixture_probabilities(resid):
    """Posterior component probabilities for residuals ``w~ - omega h``, shape (T, 10)."""
    r = np.asarray(resid, dtype=float)[:, None] - _MIX_MU
    logp = _MIX_LOGP - 0.5 * (_LOG_2PI + np.log(_MIX_VAR) + r * r / _MIX_VAR)
    logp -= logp.max(axis=1, keepdims=True)
    p = np.exp(logp)
    return p / p.sum(axis=1, keepdims=True)


def sample_mixture_indicators(eq: SvEquationState, w_tilde, rng, prior_only=False):
    """Draw the zero-based mixture indicators of one equation."""
    T = eq.h.size
    u = rng.random(T)
    if prior_only:
        return np.minimum(np.searchsorted(_MIX_CUMP, u * _MIX_CUMP[-1], side="right"), 9)
    p = mixture_probabilities(w_tilde - eq.omega * eq.h)
    cp = np.cumsum(p, axis=1)
    idx = (cp < (u * cp[:, -1])[:, None]).sum(axis=1)
    return np.minimum(idx, 9)


def h_precision_banded(omega, rho, inv_var):
    """Upper banded form (2, T) of ``omega^2 diag(inv_var) + H'H``.

    ``H`` is the first-difference-type matrix with ones on the diagonal and
    ``-rho`` below it, so ``H'H`` has diagonal ``1 + rho^2`` except a final 1.
    """
    T = inv_var.size
    ab = np.empty((2, T))
    ab[1] = 1.0 + rho * rho
    ab[1, -1] = 1.0
    ab[1] += omega * omega * inv_var
    ab[0, 0] = 0.0
    ab[0, 1:] = -rho
    return ab


def sample_h(eq: SvEquationState, w_tilde, rng, prior_only=False):
    """Draw the log-volatility path from ``N(P^{-1} b, P^{-1})``.

    ``P = omega^2 diag(1/sigma2_s) + H'H`` is tridiagonal and
    ``b = omega diag(1/sigma2_s)(w~ - mu_s)``.  Uses a banded Cholesky
    factor, so the cost is linear in T.
    """
    T = eq.h.size
    if prior_only:
        inv_var = np.zeros(T)
        b = np.zeros(T)
        omega = 0.0
    else:
        if not np.all(np.isfinite(w_tilde)):
            raise ValueError("log squared shocks contain non-finite values")
        inv_var = 1.0 / _MIX_VAR[eq.s]
        omega = eq.omega
        b = omega * inv_var * (w_tilde - _MIX_MU[eq.s])
    ab = h_precision_banded(omega, eq.rho, inv_var)
    U = linalg.cholesky_banded(ab, lower=False, check_finite=False)
    mean = linalg.cho_solve_banded((U, False), b, check_finite=False)
    z = rng.standard_normal(T)
    return mean + linalg.solve_banded((0, 1), U, z, check_finite=False)


def sample_omega(eq: SvEquationState, w_tilde, rng, prior_only=False):
    """Draw ``omega`` from its normal full conditional.

    Returns ``(omega, mean, var)``; ``mean`` and ``var`` are the moments of
    the conditional, stored for the Savage-Dickey numerator.
    """
    if prior_only:
        var = eq.sigma2_omega
        mean = 0.0
    else:
        inv_var = 1.0 / _MIX_VAR[eq.s]
        hw = eq.h * inv_var
        var = 1.0 / (hw @ eq.h + 1.0 / eq.sigma2_omega)
        mean = var * (hw @ (w_tilde - _MIX_MU[eq.s]))
    return mean + math.sqrt(var) * rng.standard_normal(), mean, var


def _ar1_quadratic(x, rho):
    # x' H'H x with x_0 = 0 before the sample
    d0 = x[0]
    e = x[1:] - rho * x[:-1]
    return d0 * d0 + e @ e


def asis_interweave(eq: SvEquationState, rng):
    """Interweave the centred parameterisation ``(h~, sigma2_v) = (omega h, omega^2)``.

    Draws ``sigma2_v ~ GIG(-(T-1)/2, h~' H'H h~, 1/sigma2_omega)`` and maps
    back keeping the sign of ``omega``; ``omega * h`` is unchanged.  When
    ``omega`` is exactly zero the centred variables carry no information and
    the state is returned as is.
    """
    if eq.omega == 0.0:
        return eq.omega, eq.h
    h_tilde = eq.omega * eq.h
    T = h_tilde.size
    chi = _ar1_quadratic(h_tilde, eq.rho)
    if not chi > 0.0:
        return eq.omega, eq.h
    s2 = sample_gig(-(T - 1) / 2.0, chi, 1.0 / eq.sigma2_omega, rng)
    omega = math.copysign(math.sqrt(s2), eq.omega)
    return omega, h_tilde / omega


def rho_bound(sigma2_omega):
    """Upper bound ``sqrt(1 - sigma2_omega)`` on ``|rho|``, floored to stay positive."""
    return math.sqrt(max(1.0 - sigma2_omega, 1e-12))


def sample_rho(eq: SvEquationState, rng):
    """Draw ``rho`` from the truncated normal AR(1) posterior on ``|rho| < sqrt(1 - sigma2_omega)``."""
    bound = rho_bound(eq.sigma2_omega)
    h = eq.h
    denom = h[:-1] @ h[:-1]
    if not denom > 0.0:
        return bound * (2.0 * rng.random() - 1.0)
    mean = (h[1:] @ h[:-1]) / denom
    return sample_truncnorm(mean, 1.0 / denom, -bound, bound, rng)


def sample_sigma2_omega(eq: SvEquationState, priors: PriorConfig, rng):
    """Draw ``sigma2_omega ~ GIG(A - 1/2, omega^2, 2/S)`` without truncation."""
    return sample_gig(priors.A_omega - 0.5, eq.omega ** 2, 2.0 / priors.S_omega, rng)


def _sv_step(eq, w_tilde, priors, rng, prior_only, fixed_n):
    eq.s = sample_mixture_indicators(eq, w_tilde, rng, prior_only)
    eq.h = sample_h(eq, w_tilde, rng, prior_only)
    omega, mean, var = sample_omega(eq, w_tilde, rng, prior_only)
    if "omega" not in fixed_n:
        eq.omega = omega
        eq.omega, eq.h = asis_interweave(eq, rng)
    if "rho" not in fixed_n:
        eq.rho = sample_rho(eq, rng)
    if "sigma2_omega" not in fixed_n:
        eq.sigma2_omega = sample_sigma2_omega(eq, priors, rng)
    return mean, var


# ---------------------------------------------------------------------------
# Chain orchestration
# ---------------------------------------------------------------------------

def _ig2_centre(scale, dof):
    # prior mean when it exists, else the mode
    return scale / (dof - 2.0) if dof > 2.0 else scale / (dof + 2.0)


def initial_state(Yt, X, priors: PriorConfig, T=None):
    """Starting point of a chain.

    A is the ridge-regularised least-squares fit, B0 the inverse lower
    Cholesky factor of the residual covariance, ``h = 0``, ``omega = 0.1``,
    ``rho = 0.5``, ``sigma2_omega = 0.05``, indicators at the modal mixture
    component and hyperparameters at their prior centres.
    """
    Tn, N = Yt.shape
    K = X.shape[1]
    XtX = X.T @ X
    ridge = 1e-6 * max(np.trace(XtX) / max(K, 1), 1e-12)
    A = linalg.solve(XtX + ridge * np.eye(K), X.T @ Yt, assume_a="pos").T
    U = Yt - X @ A.T
    Sigma = U.T @ U / Tn
    Sigma += 1e-10 * np.trace(Sigma) / N * np.eye(N)
    B0 = linalg.inv(linalg.cholesky(Sigma, lower=True))
    T_sv = Tn if T is None else T
    sv = [
        SvEquationState(np.zeros(T_sv), 0.1, 0.5, 0.05, np.full(T_sv, _PRIOR_MODE_COMPONENT, dtype=np.int64))
        for _ in range(N)
    ]
    s_gamma0 = _ig2_centre(priors.s_s0, priors.nu_s0)
    s0 = s_gamma0 * priors.nu_gamma0
    s_gammaA = _ig2_centre(priors.s_sA, priors.nu_sA)
    sA = s_gammaA * priors.nu_gammaA
    hyper = Hyper(
        np.full(N, _ig2_centre(s0, priors.nu_0)), np.full(N, s0), s_gamma0,
        np.full(N, _ig2_centre(sA, priors.nu_A)), np.full(N, sA), s_gammaA,
    )
    return StructuralState(B0, A, sv, hyper)


def _fixed_for(fixed, n):
    out = {}
    for key, value in fixed.items():
        out[key] = float(value) if np.ndim(value) == 0 else float(np.asarray(value)[n])
    return out


def _sweep(state, Yt, X, priors, A_bar, omega_bar, rng, prior_only, fixed_by_eq):
    N = state.N
    omega_bar_inv = 1.0 / omega_bar
    state.B0 = sample_B0(state, Yt, X, priors, rng, prior_only)
    for n in range(N):
        state.A[n] = _sample_A_row(n, state, Yt, X, omega_bar_inv, A_bar, rng, prior_only)
    hy = state.hyper
    hy.gamma_0, hy.s_0, hy.s_gamma0 = sample_hyper_B0(state, priors, rng)
    hy.gamma_A, hy.s_A, hy.s_gammaA = sample_hyper_A(state, priors, A_bar, omega_bar, rng)
    if prior_only:
        W_tilde = [None] * N
    else:
        W = (Yt - X @ state.A.T) @ state.B0.T
        W_tilde = log_squared_shocks(W, priors.w_offset).T
    means = np.empty(N)
    variances = np.empty(N)
    for n in range(N):
        means[n], variances[n] = _sv_step(state.sv[n], W_tilde[n], priors, rng, prior_only, fixed_by_eq[n])
    return means, variances


def run_chain(data: TimeSeriesData, cfg: ModelConfig, priors: PriorConfig, gcfg: GibbsConfig,
              init: Optional[StructuralState] = None, chain_id: int = 0) -> PosteriorSample:
    """Run one Gibbs chain and return the thinned post-burn-in draws.

    The result is bit-for-bit reproducible given ``gcfg.seed``.

    Raises
    ------
    GibbsError
        When a conditional update fails; the sweep index is attached.
    """
    Yt, X = build_regressors(data, cfg)
    if cfg.N != data.N:
        raise ValueError(f"configuration describes {cfg.N} variables, data has {data.N}")
    rng = np.random.default_rng(gcfg.seed)
    N, K = data.N, cfg.K
    T = Yt.shape[0]
    A_bar = prior_mean_A(cfg)
    omega_bar = priors.omega_bar(N, cfg.p, cfg.n_det)
    state = initial_state(Yt, X, priors) if init is None else init.copy()
    fixed_by_eq = [_fixed_for(gcfg.fixed, n) for n in range(N)]
    for n, eq in enumerate(state.sv):
        for key, value in fixed_by_eq[n].items():
            setattr(eq, key, value)

    n_keep = gcfg.n_keep
    out = {
        "B0": np.empty((n_keep, N, N)),
        "A": np.empty((n_keep, N, K)),
        "omega": np.empty((n_keep, N)),
        "rho": np.empty((n_keep, N)),
        "sigma2_omega": np.empty((n_keep, N)),
        "gamma_0": np.empty((n_keep, N)),
        "s_0": np.empty((n_keep, N)),
        "s_gamma0": np.empty(n_keep),
        "gamma_A": np.empty((n_keep, N)),
        "s_A": np.empty((n_keep, N)),
        "s_gammaA": np.empty(n_keep),
        "omega_mean": np.empty((n_keep, N)),
        "omega_var": np.empty((n_keep, N)),
    }
    if gcfg.store_h:
        out["h"] = np.empty((n_keep, N, T))
        out["s"] = np.empty((n_keep, N, T), dtype=np.int8)

    total = gcfg.n_burn + n_keep * gcfg.thin
    k = 0
    for it in range(total):
        try:
            means, variances = _sweep(state, Yt, X, priors, A_bar, omega_bar, rng, gcfg.prior_only, fixed_by_eq)
        except (np.linalg.LinAlgError, linalg.LinAlgError, ValueError, FloatingPointError) as exc:
            raise GibbsError(it, str(exc)) from exc
        if gcfg.debug:
            bad = validate_state(state, soft_bound=True)
            if bad:
                raise GibbsError(it, "; ".join(bad))
        if it < gcfg.n_burn or (it - gcfg.n_burn) % gcfg.thin:
            continue
        out["B0"][k] = state.B0
        out["A"][k] = state.A
        for n, eq in enumerate(state.sv):
            out["omega"][k, n] = eq.omega
            out["rho"][k, n] = eq.rho
            out["sigma2_omega"][k, n] = eq.sigma2_omega
            if gcfg.store_h:
                out["h"][k, n] = eq.h
                out["s"][k, n] = eq.s
        hy = state.hyper
        out["gamma_0"][k] = hy.gamma_0
        out["s_0"][k] = hy.s_0
        out["s_gamma0"][k] = hy.s_gamma0
        out["gamma_A"][k] = hy.gamma_A
        out["s_A"][k] = hy.s_A
        out["s_gammaA"][k] = hy.s_gammaA
        out["omega_mean"][k] = means
        out["omega_var"][k] = variances
        k += 1
    meta = {
        "seed": int(gcfg.seed),
        "chain": int(chain_id),
        "n_burn": int(gcfg.n_burn),
        "thin": int(gcfg.thin),
        "prior_only": bool(gcfg.prior_only),
        "p": int(cfg.p),
        "n_det": int(cfg.n_det),
    }
    return PosteriorSample(meta=meta, **out)


# ---------------------------------------------------------------------------
# Joint-distribution (Geweke) check of the SV block
# ---------------------------------------------------------------------------

def ancestral_sv_prior(priors: PriorConfig, T, rng):
    """One draw of ``(sigma2_omega, rho, omega, h, s)`` from the SV prior.

    ``sigma2_omega`` is gamma restricted to (0, 1), ``rho`` is uniform on
    ``|rho| < sqrt(1 - sigma2_omega)``, ``omega`` is ``N(0, sigma2_omega)``,
    ``h`` is the AR(1) path from ``h_0 = 0`` and ``s`` follows the mixture weights.
    """
    while True:
        s2 = rng.gamma(priors.A_omega, priors.S_omega)
        if s2 < 1.0:
            break
    rho = rho_bound(s2) * (2.0 * rng.random() - 1.0)
    omega = math.sqrt(s2) * rng.standard_normal()
    e = rng.standard_normal(T)
    h = np.empty(T)
    prev = 0.0
    for t in range(T):
        prev = rho * prev + e[t]
        h[t] = prev
    s = np.minimum(np.searchsorted(_MIX_CUMP, rng.random(T) * _MIX_CUMP[-1], side="right"), 9)
    return SvEquationState(h, omega, rho, s2, s)


def _simulate_w_tilde(eq, rng):
    return eq.omega * eq.h + _MIX_MU[eq.s] + np.sqrt(_MIX_VAR[eq.s]) * rng.standard_normal(eq.h.size)


def geweke_sv(n_iter, priors: PriorConfig = PriorConfig(), T=20, seed=0):
    """Successive-conditional simulator for the SV block of one equation.

    Alternates data ``w~ | (omega, h, s)`` under the mixture model with one
    SV sweep given the data.  If every update leaves its full conditional
    invariant the draws of the parameters follow the prior.

    Returns
    -------
    dict
        ``"chain"`` and ``"prior"`` arrays of shape (n_iter, 3) with columns
        ``(omega, rho, sigma2_omega)``; the prior draws are independent.
    """
    rng = np.random.default_rng(seed)
    eq = ancestral_sv_prior(priors, T, rng)
    chain = np.empty((n_iter, 3))
    prior = np.empty((n_iter, 3))
    for i in range(n_iter):
        w_tilde = _simulate_w_tilde(eq, rng)
        _sv_step(eq, w_tilde, priors, rng, False, {})
        chain[i] = eq.omega, eq.rho, eq.sigma2_omega
        d = ancestral_sv_prior(priors, T, rng)
        prior[i] = d.omega, d.rho, d.sigma2_omega
    return {"chain": chain, "prior": prior}
