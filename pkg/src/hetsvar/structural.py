"""Structural analysis of posterior draws.

Impulse responses, row sign and order normalisation against a benchmark B0,
conditional variance paths with HPD bands, and correlations of structural
shocks with an external instrument.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg
from scipy.optimize import linear_sum_assignment

from .model import PosteriorSample, PriorConfig, StructuralState

__all__ = [
    "IrfResult",
    "NormalizationBenchmark",
    "NormalizationError",
    "lag_matrices",
    "compute_phi",
    "compute_irf",
    "irf_draws",
    "irf_quantiles",
    "write_irf_csv",
    "normalization_objective",
    "normalize_draw",
    "normalize_sample",
    "three_matrix_benchmark",
    "fiscal_benchmark",
    "log_posterior_kernel",
    "benchmark_from_mode",
    "hpd_interval",
    "conditional_variance_paths",
    "structural_shocks",
    "shock_instrument_correlation",
    "write_csv",
]

MAX_EXHAUSTIVE_N = 8


# ---------------------------------------------------------------------------
# Impulse responses
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IrfResult:
    """``theta[i]`` is the N x N response matrix at horizon ``i``; column j is shock j."""

    theta: np.ndarray

    @property
    def horizon(self) -> int:
        return self.theta.shape[0] - 1


def lag_matrices(A: np.ndarray, p: int) -> list:
    """Split ``A = (A_1, ..., A_p, C)`` into the p slope blocks."""
    N = A.shape[0]
    if A.shape[1] < N * p:
        raise ValueError(f"A has {A.shape[1]} columns, fewer than N*p = {N * p}")
    return [A[:, j * N:(j + 1) * N] for j in range(p)]


def compute_phi(A_matrices, H: int) -> np.ndarray:
    """Reduced-form responses ``Phi_0 = I``, ``Phi_i = sum_{j=1}^{i} A_j Phi_{i-j}``.

    ``A_j`` is zero beyond the supplied lags.  Returns shape (H+1, N, N).
    """
    if H < 0:
        raise ValueError("horizon must be nonnegative")
    A_matrices = [np.asarray(a, dtype=float) for a in A_matrices]
    N = A_matrices[0].shape[0]
    p = len(A_matrices)
    phi = np.empty((H + 1, N, N))
    phi[0] = np.eye(N)
    for i in range(1, H + 1):
        acc = np.zeros((N, N))
        for j in range(1, min(i, p) + 1):
            acc += A_matrices[j - 1] @ phi[i - j]
        phi[i] = acc
    return phi


def _rescale(theta, shock, variable, impact):
    base = theta[0, variable, shock]
    if base == 0.0:
        raise ValueError(f"shock {shock} has no impact effect on variable {variable}; cannot rescale")
    theta[:, :, shock] *= impact / base
    return theta


def compute_irf(draw: StructuralState, H: int, p: int, shock: Optional[int] = None,
                variable: Optional[int] = None, impact: float = 1.0) -> IrfResult:
    """Structural responses ``Theta_i = Phi_i B0^{-1}``.

    With ``shock`` and ``variable`` given, column ``shock`` is scaled so that
    ``variable`` moves by ``impact`` at horizon 0.
    """
    B0 = np.asarray(draw.B0, dtype=float)
    try:
        B = linalg.inv(B0)
    except linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("B0 is singular") from exc
    theta = compute_phi(lag_matrices(draw.A, p), H) @ B
    if shock is not None:
        theta = _rescale(theta, shock, variable if variable is not None else shock, impact)
    return IrfResult(theta)


def irf_draws(sample: PosteriorSample, H: int, p: int, shock=None, variable=None, impact=1.0) -> np.ndarray:
    """Responses for every draw, shape (draws, H+1, N, N)."""
    out = np.empty((len(sample), H + 1, sample.N, sample.N))
    for s in range(len(sample)):
        B = linalg.inv(sample.B0[s])
        theta = compute_phi(lag_matrices(sample.A[s], p), H) @ B
        if shock is not None:
            theta = _rescale(theta, shock, variable if variable is not None else shock, impact)
        out[s] = theta
    return out


def irf_quantiles(sample: PosteriorSample, H: int, p: int, probs=(0.05, 0.5, 0.95), **kw) -> np.ndarray:
    """Pointwise posterior quantiles of the responses, shape (len(probs), H+1, N, N)."""
    return np.quantile(irf_draws(sample, H, p, **kw), probs, axis=0)


def write_csv(fh, header, rows) -> None:
    """RFC-4180 CSV with a header row; floats written with full precision."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def write_irf_csv(fh, quantiles: np.ndarray, probs, names) -> None:
    """Long-format CSV: ``horizon, variable, shock`` followed by one column per quantile."""
    Q, H1, N, _ = quantiles.shape
    header = ["horizon", "variable", "shock"] + [f"q{p:g}" for p in probs]
    rows = (
        [i, names[v], f"shock{j + 1}"] + [quantiles[q, i, v, j] for q in range(Q)]
        for i in range(H1) for v in range(N) for j in range(N)
    )
    write_csv(fh, header, rows)


# ---------------------------------------------------------------------------
# Row sign and order normalisation
# ---------------------------------------------------------------------------

class NormalizationError(ValueError):
    """The requested normalisation cannot be carried out."""


@dataclass(frozen=True)
class NormalizationBenchmark:
    """Benchmark ``B0_hat`` and weighting ``Omega_hat`` (identity when ``None``).

    The distance of a candidate ``C = P D B0`` is
    ``vec((C - B0_hat)')' Omega_hat^{-1} vec((C - B0_hat)')``, i.e. the
    differences are stacked row by row.
    """

    B0_hat: np.ndarray
    Omega_hat: Optional[np.ndarray] = None

    def __post_init__(self):
        B = np.asarray(self.B0_hat, dtype=float)
        N = B.shape[0]
        if B.shape != (N, N) or abs(np.linalg.det(B)) < 1e-12:
            raise ValueError("B0_hat must be square and nonsingular")
        object.__setattr__(self, "B0_hat", B)
        if self.Omega_hat is not None:
            Om = np.asarray(self.Omega_hat, dtype=float)
            if Om.shape != (N * N, N * N) or not np.allclose(Om, Om.T):
                raise ValueError(f"Omega_hat must be a symmetric {N * N} x {N * N} matrix")
            try:
                np.linalg.cholesky(Om)
            except np.linalg.LinAlgError as exc:
                raise ValueError("Omega_hat must be positive definite") from exc
            object.__setattr__(self, "Omega_hat", Om)

    @property
    def N(self) -> int:
        return self.B0_hat.shape[0]

    def weight(self) -> np.ndarray:
        """``Omega_hat^{-1}``."""
        if self.Omega_hat is None:
            return np.eye(self.N * self.N)
        return linalg.inv(self.Omega_hat)


def normalization_objective(B0, perm, signs, bench: NormalizationBenchmark, W=None) -> float:
    """Distance of ``P D B0`` from the benchmark; new row i is ``signs[i] * B0[perm[i]]``."""
    W = bench.weight() if W is None else W
    C = np.asarray(signs, dtype=float)[:, None] * np.asarray(B0)[list(perm)]
    r = (C - bench.B0_hat).ravel()
    return float(r @ W @ r)


def _row_separable(W, N):
    blocks = W.reshape(N, N, N, N).transpose(0, 2, 1, 3)
    mask = ~np.eye(N, dtype=bool)
    return not np.any(blocks[mask])


def _solve_separable(B0, B_hat, W):
    N = B0.shape[0]
    blocks = W.reshape(N, N, N, N)
    cost = np.empty((N, N))
    sign = np.empty((N, N))
    for i in range(N):
        Wi = blocks[i, :, i, :]
        for j in range(N):
            dp = B0[j] - B_hat[i]
            dm = -B0[j] - B_hat[i]
            cp, cm = dp @ Wi @ dp, dm @ Wi @ dm
            cost[i, j] = min(cp, cm)
            sign[i, j] = 1.0 if cp <= cm else -1.0
    rows, cols = linear_sum_assignment(cost)
    perm = cols[np.argsort(rows)]
    return perm, sign[np.arange(N), perm]


def _solve_exhaustive(B0, B_hat, W):
    N = B0.shape[0]
    blocks = W.reshape(N, N, N, N)
    perms = np.array(list(itertools.permutations(range(N))))
    signs = np.array(list(itertools.product((1.0, -1.0), repeat=N)))
    const = float(B_hat.ravel() @ W @ B_hat.ravel())
    best = (math.inf, None, None)
    for start in range(0, len(perms), 5040):
        P = perms[start:start + 5040]
        X = B0[P]
        M = np.einsum("pia,iakb,pkb->pik", X, blocks, X)
        c = np.einsum("pia,iakb,kb->pi", X, blocks, B_hat)
        vals = np.einsum("si,pik,sk->ps", signs, M, signs) - 2.0 * c @ signs.T + const
        k = int(np.argmin(vals))
        pi, si = divmod(k, len(signs))
        if vals[pi, si] < best[0]:
            best = (vals[pi, si], P[pi], signs[si])
    return best[1], best[2]


def _choose(B0, bench: NormalizationBenchmark, W):
    N = B0.shape[0]
    if _row_separable(W, N):
        perm, signs = _solve_separable(B0, bench.B0_hat, W)
    elif N <= MAX_EXHAUSTIVE_N:
        perm, signs = _solve_exhaustive(B0, bench.B0_hat, W)
    else:
        raise NormalizationError(
            f"a non-separable Omega_hat needs exhaustive search, limited to N <= {MAX_EXHAUSTIVE_N} (N = {N})"
        )
    ident_perm = np.arange(N)
    ident_signs = np.ones(N)
    f_id = normalization_objective(B0, ident_perm, ident_signs, bench, W)
    f_best = normalization_objective(B0, perm, signs, bench, W)
    # keep the draw as is unless a candidate is clearly better; makes the map idempotent
    if not f_best < f_id - 1e-10 * max(abs(f_id), 1e-300):
        return ident_perm, ident_signs
    return np.asarray(perm), np.asarray(signs, dtype=float)


def normalize_draw(draw: StructuralState, bench: NormalizationBenchmark):
    """Reorder and re-sign the rows of B0 to minimise the distance to the benchmark.

    The SV states and B0 shrinkage hyperparameters follow their rows.  A is
    the reduced-form slope matrix, which no row operation on B0 changes.

    Returns
    -------
    (StructuralState, perm, signs)
        New row ``i`` is ``signs[i] * B0[perm[i]]``.
    """
    W = bench.weight()
    B0 = np.asarray(draw.B0, dtype=float)
    perm, signs = _choose(B0, bench, W)
    out = draw.copy()
    out.B0 = signs[:, None] * B0[perm]
    out.sv = [draw.sv[j].copy() for j in perm]
    out.hyper.gamma_0 = draw.hyper.gamma_0[perm].copy()
    out.hyper.s_0 = draw.hyper.s_0[perm].copy()
    return out, perm, signs


def normalize_sample(sample: PosteriorSample, bench: NormalizationBenchmark) -> PosteriorSample:
    """Apply :func:`normalize_draw` to every draw, moving SV quantities and moments with their rows."""
    W = bench.weight()
    out = sample.subset(np.arange(len(sample)))
    per_eq = ["omega", "rho", "sigma2_omega", "gamma_0", "s_0", "omega_mean", "omega_var", "h", "s"]
    for k in range(len(sample)):
        perm, signs = _choose(sample.B0[k], bench, W)
        if np.array_equal(perm, np.arange(sample.N)) and np.all(signs == 1.0):
            continue
        out.B0[k] = signs[:, None] * sample.B0[k][perm]
        for name in per_eq:
            arr = getattr(out, name)
            if arr is not None:
                arr[k] = getattr(sample, name)[k][perm]
    return out


def three_matrix_benchmark(scales, M1, M2) -> np.ndarray:
    """``diag(scales)^{-1} M1^{-1} M2``, the benchmark built from a structural model
    written as ``M1^{-1} M2 u_t = diag(scales) w_t``."""
    scales = np.asarray(scales, dtype=float)
    return np.diag(1.0 / scales) @ linalg.solve(np.asarray(M1, dtype=float), np.asarray(M2, dtype=float))


def fiscal_benchmark(sigma, theta_gs, gamma_ttr, theta_gdp, gamma_gdp, zeta_ttr, zeta_gs) -> np.ndarray:
    """Three-variable (tax, spending, output) benchmark from elasticity parameters.

    ``sigma`` holds the three shock scales; no parameter values are shipped.
    """
    M1 = np.array([[1.0, theta_gs, 0.0], [gamma_ttr, 1.0, 0.0], [0.0, 0.0, 1.0]])
    M2 = np.array([[1.0, 0.0, -theta_gdp], [0.0, 1.0, -gamma_gdp], [-zeta_ttr, -zeta_gs, 1.0]])
    return three_matrix_benchmark(sigma, M1, M2)


def _log_ig2(x, s, nu):
    return 0.5 * nu * math.log(0.5 * s) - math.lgamma(0.5 * nu) - 0.5 * (nu + 2) * math.log(x) - 0.5 * s / x


def _log_gamma(x, scale, shape):
    return -math.lgamma(shape) - shape * math.log(scale) + (shape - 1) * math.log(x) - x / scale


def log_posterior_kernel(draw: StructuralState, Yt, X, priors: PriorConfig, A_bar, omega_bar) -> float:
    """Unnormalised log posterior of a complete draw (needs its h paths).

    Sums the Gaussian likelihood with variances ``exp(omega h)``, the priors
    of B0, A, the SV parameters and paths, and the shrinkage hierarchies.
    """
    N = draw.N
    if any(e.h is None for e in draw.sv):
        raise ValueError("log posterior kernel needs the h paths of the draw")
    T = Yt.shape[0]
    B0, A = draw.B0, draw.A
    W = (Yt - X @ A.T) @ B0.T
    logvar = np.array([e.omega * e.h for e in draw.sv]).T
    sign, logdet = np.linalg.slogdet(B0)
    if sign == 0:
        return -math.inf
    lp = T * logdet - 0.5 * np.sum(logvar + W * W / np.exp(logvar))
    hy = draw.hyper
    nu = priors.shape_B0(N)
    K = A.shape[1]
    for n in range(N):
        lp += -0.5 * nu * math.log(hy.gamma_0[n]) - 0.5 * B0[n] @ B0[n] / hy.gamma_0[n]
        dev = A[n] - A_bar[n]
        lp += -0.5 * K * math.log(hy.gamma_A[n]) - 0.5 * np.sum(dev * dev / omega_bar) / hy.gamma_A[n]
        lp += _log_ig2(hy.gamma_0[n], hy.s_0[n], priors.nu_0)
        lp += _log_gamma(hy.s_0[n], hy.s_gamma0, priors.nu_gamma0)
        lp += _log_ig2(hy.gamma_A[n], hy.s_A[n], priors.nu_A)
        lp += _log_gamma(hy.s_A[n], hy.s_gammaA, priors.nu_gammaA)
        e = draw.sv[n]
        s2 = e.sigma2_omega
        if not (0.0 < s2 < 1.0 and abs(e.rho) < math.sqrt(1.0 - s2)):
            return -math.inf
        innov = np.diff(np.concatenate([[0.0], e.h])) + (1.0 - e.rho) * np.concatenate([[0.0], e.h[:-1]])
        lp += -0.5 * innov @ innov
        lp += -0.5 * math.log(s2) - 0.5 * e.omega ** 2 / s2
        lp += _log_gamma(s2, priors.S_omega, priors.A_omega) - 0.5 * math.log(1.0 - s2)
    lp += _log_ig2(hy.s_gamma0, priors.s_s0, priors.nu_s0)
    lp += _log_ig2(hy.s_gammaA, priors.s_sA, priors.nu_sA)
    return float(lp)


def benchmark_from_mode(sample: PosteriorSample, Yt, X, priors: PriorConfig, A_bar, omega_bar) -> np.ndarray:
    """B0 of the draw with the highest unnormalised posterior kernel."""
    if sample.h is None:
        raise ValueError("selecting the posterior mode needs stored h paths (run with store_h)")
    scores = [log_posterior_kernel(sample[k], Yt, X, priors, A_bar, omega_bar) for k in range(len(sample))]
    return sample.B0[int(np.argmax(scores))].copy()


# ---------------------------------------------------------------------------
# Conditional variances, shocks and instruments
# ---------------------------------------------------------------------------

def hpd_interval(draws, level: float = 0.90, axis: int = 0):
    """Shortest interval holding ``ceil(level * n)`` of the sorted draws, along ``axis``."""
    if not 0.0 < level <= 1.0:
        raise ValueError("level must be in (0, 1]")
    x = np.sort(np.moveaxis(np.asarray(draws, dtype=float), axis, 0), axis=0)
    n = x.shape[0]
    k = max(int(math.ceil(level * n)), 1)
    widths = x[k - 1:] - x[: n - k + 1]
    i = np.argmin(widths, axis=0)
    lo = np.take_along_axis(x, i[None], axis=0)[0]
    hi = np.take_along_axis(x, (i + k - 1)[None], axis=0)[0]
    return lo, hi


def conditional_variance_paths(sample: PosteriorSample, level: float = 0.90, include_initial: bool = False):
    """Posterior mean and HPD band of ``sigma2_{n.t} = exp(omega_n h_{n.t})``.

    Returns ``(mean, lower, upper)``, each of shape (N, T), or (N, T+1) with
    ``include_initial`` which prepends the fixed value 1 at ``t = 0``.
    """
    s2 = sample.conditional_variances()
    mean = s2.mean(axis=0)
    lo, hi = hpd_interval(s2, level, axis=0)
    if include_initial:
        ones = np.ones((sample.N, 1))
        mean, lo, hi = (np.hstack([ones, a]) for a in (mean, lo, hi))
    return mean, lo, hi


def structural_shocks(sample: PosteriorSample, Yt, X) -> np.ndarray:
    """Posterior mean of ``w_t = B0 (y_t - A x_t)``, shape (T, N)."""
    acc = np.zeros(Yt.shape)
    for k in range(len(sample)):
        acc += (Yt - X @ sample.A[k].T) @ sample.B0[k].T
    return acc / len(sample)


def shock_instrument_correlation(sample: PosteriorSample, Yt, X, instrument) -> np.ndarray:
    """Pearson correlation of each posterior-mean shock with an instrument.

    Missing instrument values are NaN and are skipped.
    """
    z = np.asarray(instrument, dtype=float)
    if z.shape != (Yt.shape[0],):
        raise ValueError(f"instrument must have length {Yt.shape[0]}")
    ok = np.isfinite(z)
    if ok.sum() < 3:
        raise ValueError("fewer than 3 non-missing instrument observations")
    w = structural_shocks(sample, Yt, X)[ok]
    return np.array([np.corrcoef(w[:, n], z[ok])[0, 1] for n in range(w.shape[1])])
