"""Normal-product and log-normal-product densities and the marginal prior of omega."""

import math

import numpy as np
from scipy import special as sc

from .bessel import bessel_k, log_bessel_k

__all__ = [
    "np_pdf",
    "np_logpdf",
    "np_cdf",
    "lognp_pdf",
    "lognp_logpdf",
    "mnp_logpdf",
    "mlognp_logpdf",
    "marginal_omega_pdf",
    "marginal_omega_logpdf",
    "marginal_omega_at_zero",
]


def _check_positive(name, value):
    if not (np.isfinite(value) and value > 0):
        raise ValueError(f"{name} must be a finite positive number, got {value!r}")


def _scalar_np_logpdf(z, sigma):
    if z == 0.0:
        return math.inf
    return log_bessel_k(0.0, abs(z) / sigma) - math.log(math.pi * sigma)


def np_logpdf(z, sigma2):
    """Log density of the zero-mean normal product distribution with variance ``sigma2``.

    Returns ``+inf`` at ``z == 0`` (logarithmic pole of K_0).
    """
    _check_positive("sigma2", sigma2)
    sigma = math.sqrt(sigma2)
    if np.ndim(z) == 0:
        return _scalar_np_logpdf(float(z), sigma)
    z = np.asarray(z, dtype=float)
    return np.vectorize(_scalar_np_logpdf, otypes=[float])(z, sigma)


def np_pdf(z, sigma2):
    """Density of z = x*y for independent zero-mean normals with var(x)var(y) = sigma2.

    ``pdf(z) = K_0(|z| / sigma) / (pi * sigma)``; even in ``z`` with a pole at 0.
    """
    return np.exp(np_logpdf(z, sigma2))


def _k0_integral(a):
    # int_0^a K_0(u) du via modified Struve functions; tends to pi/2.
    if a > 700.0:
        return 0.5 * math.pi
    l_m1 = sc.modstruve(1, a) + 2.0 / math.pi
    return 0.5 * math.pi * a * (bessel_k(0.0, a) * l_m1 + bessel_k(1.0, a) * sc.modstruve(0, a))


def np_cdf(z, sigma2):
    """Distribution function of the normal product distribution."""
    _check_positive("sigma2", sigma2)
    sigma = math.sqrt(sigma2)

    def one(v):
        if v == 0.0:
            return 0.5
        val = 0.5 + math.copysign(_k0_integral(abs(v) / sigma) / math.pi, v)
        return min(max(val, 0.0), 1.0)

    if np.ndim(z) == 0:
        return one(float(z))
    return np.vectorize(one, otypes=[float])(np.asarray(z, dtype=float))


def lognp_logpdf(q, sigma2):
    """Log density of q = exp(z), z normal-product with variance ``sigma2``."""
    q_arr = np.asarray(q, dtype=float)
    if np.any(~(q_arr > 0)):
        raise ValueError("lognp density requires q > 0")
    logq = np.log(q_arr)
    out = np_logpdf(logq if q_arr.ndim else float(logq), sigma2) - logq
    return float(out) if q_arr.ndim == 0 else out


def lognp_pdf(q, sigma2):
    """Density of the log normal product distribution; ``+inf`` at ``q == 1``."""
    return np.exp(lognp_logpdf(q, sigma2))


def _mvnp_parts(Z, sigma2, Sigma):
    _check_positive("sigma2", sigma2)
    Z = np.atleast_1d(np.asarray(Z, dtype=float))
    Sigma = np.atleast_2d(np.asarray(Sigma, dtype=float))
    T = Z.shape[0]
    if Z.ndim != 1 or Sigma.shape != (T, T):
        raise ValueError(f"dimension mismatch: Z has shape {Z.shape}, Sigma has shape {Sigma.shape}")
    if not np.allclose(Sigma, Sigma.T):
        raise ValueError("Sigma must be symmetric")
    L = np.linalg.cholesky(Sigma)
    y = np.linalg.solve(L, Z)
    r2 = float(y @ y) / sigma2
    logdet = 2.0 * np.sum(np.log(np.diag(L))) + T * math.log(sigma2)
    return T, r2, logdet


def mnp_logpdf(Z, sigma2, Sigma):
    """Log density of the T-variate normal product Z = x*Y, x ~ N(0, sigma2), Y ~ N_T(0, Sigma).

    The density is::

        2^{-(T-1)/2} pi^{-(T+1)/2} det(sigma2 Sigma)^{-1/2} r^{-(T-1)/2} K_{(T-1)/2}(r),
        r^2 = Z' Sigma^{-1} Z / sigma2.

    For T = 1 this is :func:`np_logpdf`.  Returns ``+inf`` at ``Z = 0``.
    """
    T, r2, logdet = _mvnp_parts(Z, sigma2, Sigma)
    if r2 == 0.0:
        return math.inf
    order = 0.5 * (T - 1)
    return (
        -order * math.log(2.0)
        - 0.5 * (T + 1) * math.log(math.pi)
        - 0.5 * logdet
        - 0.5 * order * math.log(r2)
        + log_bessel_k(order, math.sqrt(r2))
    )


def mlognp_logpdf(Q, sigma2, Sigma):
    """Log density of Q = exp(Z) elementwise, Z multivariate normal product."""
    Q = np.atleast_1d(np.asarray(Q, dtype=float))
    if np.any(~(Q > 0)):
        raise ValueError("multivariate lognp density requires all entries of Q > 0")
    logQ = np.log(Q)
    return mnp_logpdf(logQ, sigma2, Sigma) - float(np.sum(logQ))


def marginal_omega_at_zero(S, A):
    """Limit of the marginal prior density of omega at 0.

    Finite, ``Gamma(A + 3/2) / (Gamma(A) (A^2 - 1/4) sqrt(2 pi S))``, iff ``A > 1/2``;
    ``+inf`` otherwise.
    """
    _check_positive("S", S)
    _check_positive("A", A)
    if A <= 0.5:
        return math.inf
    return math.exp(
        math.lgamma(A + 1.5) - math.lgamma(A) - math.log(A * A - 0.25) - 0.5 * math.log(2.0 * math.pi * S)
    )


def _scalar_marginal_omega_logpdf(omega, S, A):
    if omega == 0.0:
        return math.log(marginal_omega_at_zero(S, A)) if A > 0.5 else math.inf
    lam = A - 0.5
    a = abs(omega)
    log_const = (
        0.5 * math.log(math.pi)
        + 0.5 * (A - 1.5) * math.log(2.0)
        + math.lgamma(A)
        + 0.5 * (A + 0.5) * math.log(S)
    )
    return lam * math.log(a) + log_bessel_k(lam, math.sqrt(2.0 / S) * a) - log_const


def marginal_omega_logpdf(omega, S, A):
    """Log of :func:`marginal_omega_pdf`."""
    _check_positive("S", S)
    _check_positive("A", A)
    if np.ndim(omega) == 0:
        return _scalar_marginal_omega_logpdf(float(omega), S, A)
    return np.vectorize(_scalar_marginal_omega_logpdf, otypes=[float])(
        np.asarray(omega, dtype=float), S, A
    )


def marginal_omega_pdf(omega, S, A):
    """Marginal prior density of omega when omega | s2 ~ N(0, s2) and s2 ~ Gamma(scale=S, shape=A).

    The gamma prior is the unrestricted one.  At ``omega == 0`` the limit from
    :func:`marginal_omega_at_zero` is returned.
    """
    return np.exp(marginal_omega_logpdf(omega, S, A))
