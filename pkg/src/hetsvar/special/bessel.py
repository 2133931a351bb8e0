"""Modified Bessel function of the second kind, K_nu(x), for real order.

Two regimes are used for the fractional order mu = nu - round(nu):

* x <= 2: Temme's series for K_mu and K_{mu+1};
* x > 2: Steed's continued fraction (CF2) for the exponentially scaled pair.

Integer steps in the order are then taken by the forward recurrence
K_{m+1} = (2m/x) K_m + K_{m-1}, which is stable for K.  The recurrence keeps
a separate log-scale so that log K stays finite where K itself overflows.
"""

import math
import warnings

import numpy as np

__all__ = ["BesselOverflowWarning", "bessel_k", "log_bessel_k"]

_EPS = 1e-16
_MAXIT = 10000
_XMIN = 2.0
_RESCALE = 1e250
_LOG_RESCALE = math.log(_RESCALE)

# Taylor coefficients of 1/Gamma(1+z) about z = 0.
_RGAMMA_TAYLOR = (
    1.00000000000000000e+00,
    5.77215664901532866e-01,
    -6.55878071520253902e-01,
    -4.20026350340952370e-02,
    1.66538611382291479e-01,
    -4.21977345555443334e-02,
    -9.62197152787697303e-03,
    7.21894324666309990e-03,
    -1.16516759185906517e-03,
    -2.15241674114950975e-04,
    1.28050282388116196e-04,
    -2.01348547807882387e-05,
    -1.25049348214267063e-06,
    1.13302723198169593e-06,
    -2.05633841697760707e-07,
    6.11609510448141609e-09,
    5.00200764446922295e-09,
    -1.18127457048702004e-09,
    1.04342671169110054e-10,
    7.78226343990507081e-12,
    -3.69680561864220598e-12,
    5.10037028745447575e-13,
    -2.05832605356650664e-14,
    -5.34812253942301782e-15,
    1.22677862823826084e-15,
    -1.18125930169745883e-16,
    1.18669225475160037e-18,
    1.41238065531803186e-18,
    -2.29874568443537022e-19,
)


class BesselOverflowWarning(RuntimeWarning):
    """K_nu(x) exceeds the double range; +inf was returned."""


def _gamma_parts(mu):
    # gam1 = (1/G(1-mu) - 1/G(1+mu)) / (2 mu), gam2 = (1/G(1-mu) + 1/G(1+mu)) / 2
    even = 0.0
    odd = 0.0
    for k in range(len(_RGAMMA_TAYLOR) - 1, -1, -1):
        if k % 2 == 0:
            even = even * mu * mu + _RGAMMA_TAYLOR[k]
        else:
            odd = odd * mu * mu + _RGAMMA_TAYLOR[k]
    # 1/G(1+mu) = even + mu*odd, 1/G(1-mu) = even - mu*odd
    gampl = even + mu * odd
    gammi = even - mu * odd
    return -odd, even, gampl, gammi


def _temme(mu, x):
    """K_mu(x) and K_{mu+1}(x) for |mu| <= 1/2 and 0 < x <= 2."""
    x2 = 0.5 * x
    pimu = math.pi * mu
    fact = 1.0 + pimu * pimu / 6.0 if abs(pimu) < 1e-8 else pimu / math.sin(pimu)
    d = -math.log(x2)
    e = mu * d
    fact2 = 1.0 + e * e / 6.0 if abs(e) < 1e-8 else math.sinh(e) / e
    gam1, gam2, gampl, gammi = _gamma_parts(mu)
    ff = fact * (gam1 * math.cosh(e) + gam2 * fact2 * d)
    total = ff
    e = math.exp(e)
    p = 0.5 * e / gampl
    q = 0.5 / (e * gammi)
    c = 1.0
    d = x2 * x2
    total1 = p
    mu2 = mu * mu
    for i in range(1, _MAXIT):
        ff = (i * ff + p + q) / (i * i - mu2)
        c *= d / i
        p /= i - mu
        q /= i + mu
        delta = c * ff
        total += delta
        total1 += c * (p - i * ff)
        if abs(delta) < abs(total) * _EPS:
            break
    else:  # pragma: no cover
        raise RuntimeError("Temme series failed to converge")
    return total, total1 * 2.0 / x


def _steed_scaled(mu, x):
    """exp(x) K_mu(x) and exp(x) K_{mu+1}(x) for |mu| <= 1/2 and x > 2."""
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = delh = d
    q1 = 0.0
    q2 = 1.0
    a1 = 0.25 - mu * mu
    q = c = a1
    a = -a1
    s = 1.0 + q * delh
    for i in range(2, _MAXIT):
        a -= 2 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1 = q2
        q2 = qnew
        q += c * qnew
        b += 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h += delh
        dels = q * delh
        s += dels
        if abs(dels / s) < _EPS:
            break
    else:  # pragma: no cover
        raise RuntimeError("Steed continued fraction failed to converge")
    h = a1 * h
    k_mu = math.sqrt(math.pi / (2.0 * x)) / s
    k_mu1 = k_mu * (mu + x + 0.5 - h) / x
    return k_mu, k_mu1


def _kv_parts(nu, x):
    """Return (m, log_scale) with K_nu(x) = m * exp(log_scale - x)."""
    nu = abs(float(nu))
    nl = int(nu + 0.5)
    mu = nu - nl
    if x <= _XMIN:
        k0, k1 = _temme(mu, x)
        k0 *= math.exp(x)
        k1 *= math.exp(x)
    else:
        k0, k1 = _steed_scaled(mu, x)
    log_scale = 0.0
    two_over_x = 2.0 / x
    for i in range(1, nl + 1):
        k0, k1 = k1, (mu + i) * two_over_x * k1 + k0
        if k1 > _RESCALE:
            k0 /= _RESCALE
            k1 /= _RESCALE
            log_scale += _LOG_RESCALE
    return k0, log_scale


def _check_x(x):
    if not x > 0.0:
        raise ValueError(f"bessel_k requires x > 0, got {x!r}")


def _scalar_log_kv(nu, x):
    x = float(x)
    _check_x(x)
    if math.isinf(x):
        return -math.inf
    m, log_scale = _kv_parts(nu, x)
    return math.log(m) + log_scale - x


def _scalar_kv(nu, x):
    x = float(x)
    _check_x(x)
    if math.isinf(x):
        return 0.0
    m, log_scale = _kv_parts(nu, x)
    expo = log_scale - x
    if expo + math.log(m) > 709.78:
        warnings.warn(
            f"K_{nu}({x}) overflows double precision", BesselOverflowWarning, stacklevel=3
        )
        return math.inf
    return m * math.exp(expo)


def log_bessel_k(nu, x):
    """Natural log of K_nu(x); finite wherever K_nu(x) is positive and finite in log space.

    Broadcasts over array arguments.
    """
    if np.ndim(nu) == 0 and np.ndim(x) == 0:
        return _scalar_log_kv(nu, x)
    nu_b, x_b = np.broadcast_arrays(np.asarray(nu, dtype=float), np.asarray(x, dtype=float))
    out = np.empty(nu_b.shape)
    for idx in np.ndindex(out.shape):
        out[idx] = _scalar_log_kv(nu_b[idx], x_b[idx])
    return out


def bessel_k(nu, x):
    """Modified Bessel function of the second kind K_nu(x) for real nu and x > 0.

    Parameters
    ----------
    nu : float or array_like
        Order.  K is even in its order, so ``bessel_k(-nu, x) == bessel_k(nu, x)``.
    x : float or array_like
        Argument, strictly positive.

    Returns
    -------
    float or ndarray
        K_nu(x).  Values beyond the double range are returned as ``+inf`` and a
        :class:`BesselOverflowWarning` is emitted.

    Raises
    ------
    ValueError
        If any ``x <= 0``.
    """
    if np.ndim(nu) == 0 and np.ndim(x) == 0:
        return _scalar_kv(nu, x)
    nu_b, x_b = np.broadcast_arrays(np.asarray(nu, dtype=float), np.asarray(x, dtype=float))
    out = np.empty(nu_b.shape)
    for idx in np.ndindex(out.shape):
        out[idx] = _scalar_kv(nu_b[idx], x_b[idx])
    return out
