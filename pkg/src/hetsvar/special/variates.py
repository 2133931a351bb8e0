"""Random variate generators: GIG, truncated normal, generalised-normal rows.

Every sampler takes an explicit ``numpy.random.Generator``.
"""

import math

import numpy as np
from scipy import linalg

__all__ = ["sample_gig", "sample_truncnorm", "sample_generalized_normal_row"]

_SQRT_2PI = math.sqrt(2.0 * math.pi)


# --------------------------------------------------------------------------
# Generalised inverse Gaussian, density ~ x^(lam-1) exp(-(chi/x + psi*x)/2)
# --------------------------------------------------------------------------

def _gig_mode(lam, omega):
    if lam >= 1.0:
        return (math.sqrt((lam - 1.0) ** 2 + omega * omega) + (lam - 1.0)) / omega
    return omega / (math.sqrt((1.0 - lam) ** 2 + omega * omega) + (1.0 - lam))


def _gig_rou_shift(lam, omega, rng):
    # ratio-of-uniforms with mode shift (lam > 2 or omega > 3)
    t = 0.5 * (lam - 1.0)
    s = 0.25 * omega
    xm = _gig_mode(lam, omega)
    nc = t * math.log(xm) - s * (xm + 1.0 / xm)

    a = -(2.0 * (lam + 1.0) / omega + xm)
    b = 2.0 * (lam - 1.0) * xm / omega - 1.0
    c = xm
    p = b - a * a / 3.0
    q = 2.0 * a ** 3 / 27.0 - a * b / 3.0 + c
    fi = math.acos(-q / (2.0 * math.sqrt(-(p ** 3) / 27.0)))
    fak = 2.0 * math.sqrt(-p / 3.0)
    y1 = fak * math.cos(fi / 3.0) - a / 3.0
    y2 = fak * math.cos(fi / 3.0 + 4.0 / 3.0 * math.pi) - a / 3.0
    uplus = (y1 - xm) * math.exp(t * math.log(y1) - s * (y1 + 1.0 / y1) - nc)
    uminus = (y2 - xm) * math.exp(t * math.log(y2) - s * (y2 + 1.0 / y2) - nc)

    while True:
        u = uminus + rng.random() * (uplus - uminus)
        v = rng.random()
        x = u / v + xm
        if x <= 0.0 or v == 0.0:
            continue
        if math.log(v) <= t * math.log(x) - s * (x + 1.0 / x) - nc:
            return x


def _gig_rou_noshift(lam, omega, rng):
    t = 0.5 * (lam - 1.0)
    s = 0.25 * omega
    xm = _gig_mode(lam, omega)
    nc = t * math.log(xm) - s * (xm + 1.0 / xm)
    ym = ((lam + 1.0) + math.sqrt((lam + 1.0) ** 2 + omega * omega)) / omega
    um = math.exp(0.5 * (lam + 1.0) * math.log(ym) - s * (ym + 1.0 / ym) - nc)
    while True:
        u = um * rng.random()
        v = rng.random()
        if u == 0.0 or v == 0.0:
            continue
        x = u / v
        if math.log(v) <= t * math.log(x) - s * (x + 1.0 / x) - nc:
            return x


def _gig_concave_hat(lam, omega, rng):
    # rejection from a piecewise hat, for 0 <= lam < 1 and small omega
    xm = _gig_mode(lam, omega)
    x0 = omega / (1.0 - lam)
    k0 = math.exp((lam - 1.0) * math.log(xm) - 0.5 * omega * (xm + 1.0 / xm))
    a0 = k0 * x0
    if x0 >= 2.0 / omega:
        k1 = 0.0
        a1 = 0.0
        k2 = x0 ** (lam - 1.0)
        a2 = k2 * 2.0 * math.exp(-omega * x0 / 2.0) / omega
    else:
        k1 = math.exp(-omega)
        if lam == 0.0:
            a1 = k1 * math.log(2.0 / (omega * omega))
        else:
            a1 = k1 / lam * ((2.0 / omega) ** lam - x0 ** lam)
        k2 = (2.0 / omega) ** (lam - 1.0)
        a2 = k2 * 2.0 * math.exp(-1.0) / omega
    total = a0 + a1 + a2
    while True:
        v = total * rng.random()
        if v <= a0:
            x = x0 * v / a0
            hx = k0
        elif v <= a0 + a1:
            v -= a0
            if lam == 0.0:
                x = omega * math.exp(math.exp(omega) * v)
                hx = k1 / x
            else:
                x = (x0 ** lam + lam / k1 * v) ** (1.0 / lam)
                hx = k1 * x ** (lam - 1.0)
        else:
            v -= a0 + a1
            a = max(x0, 2.0 / omega)
            x = -2.0 / omega * math.log(math.exp(-omega / 2.0 * a) - omega / (2.0 * k2) * v)
            hx = k2 * math.exp(-omega / 2.0 * x)
        u = rng.random() * hx
        if x > 0.0 and u > 0.0 and math.log(u) <= (lam - 1.0) * math.log(x) - omega / 2.0 * (x + 1.0 / x):
            return x


def _gig_standard(lam, omega, rng):
    """Draw from density ~ x^(lam-1) exp(-omega/2 (x + 1/x)), lam >= 0."""
    if lam > 2.0 or omega > 3.0:
        return _gig_rou_shift(lam, omega, rng)
    if lam >= 1.0 - 2.25 * omega * omega or omega > 0.2:
        return _gig_rou_noshift(lam, omega, rng)
    return _gig_concave_hat(lam, omega, rng)


def sample_gig(lam, chi, psi, rng, size=None):
    """Draw from GIG(lam, chi, psi) with density proportional to
    ``x**(lam - 1) * exp(-(chi / x + psi * x) / 2)``.

    Uses the ratio-of-uniforms family of Hoermann and Leydold, exact
    gamma / inverse-gamma limits when ``chi`` or ``psi`` is zero, and the
    inverse Gaussian closed form when ``lam == -1/2`` (or its reciprocal when
    ``lam == 1/2``).

    Raises
    ------
    ValueError
        For ``chi < 0``, ``psi < 0``, or a boundary combination without a
        proper density (``chi == 0`` needs ``lam > 0``; ``psi == 0`` needs
        ``lam < 0``).
    """
    lam = float(lam)
    chi = float(chi)
    psi = float(psi)
    if not (chi >= 0.0 and psi >= 0.0) or math.isinf(chi) or math.isinf(psi):
        raise ValueError(f"GIG requires finite chi >= 0 and psi >= 0, got chi={chi}, psi={psi}")
    if size is not None:
        return np.array([sample_gig(lam, chi, psi, rng) for _ in range(int(np.prod(size)))]).reshape(size)

    if chi == 0.0 or psi == 0.0:
        if chi == 0.0 and lam > 0.0 and psi > 0.0:
            return rng.gamma(lam, 2.0 / psi)
        if psi == 0.0 and lam < 0.0 and chi > 0.0:
            return 1.0 / rng.gamma(-lam, 2.0 / chi)
        raise ValueError(f"GIG({lam}, {chi}, {psi}) is not a proper distribution")

    if lam == -0.5:
        return rng.wald(math.sqrt(chi / psi), chi)
    if lam == 0.5:
        return 1.0 / rng.wald(math.sqrt(psi / chi), psi)

    omega = math.sqrt(chi * psi)
    alpha = math.sqrt(chi / psi)
    if omega < 1e-12 and lam != 0.0:
        # the exp(-chi/(2x)) (or exp(-psi x/2)) factor is numerically inert
        if lam > 0.0:
            return rng.gamma(lam, 2.0 / psi)
        return 1.0 / rng.gamma(-lam, 2.0 / chi)
    x = _gig_standard(abs(lam), omega, rng)
    if lam < 0.0:
        x = 1.0 / x
    return alpha * x


# --------------------------------------------------------------------------
# Truncated normal (Robert 1995 accept-reject family)
# --------------------------------------------------------------------------

def _tn_positive(a, b, rng):
    # standard normal restricted to [a, b], 0 <= a < b <= inf
    width = b - a
    if a <= 0.5 and width >= 1.0:
        while True:
            z = abs(rng.standard_normal())
            if a <= z <= b:
                return z
    if width <= max(1.0 / a if a > 0 else math.inf, 1.0):
        while True:
            z = a + width * rng.random()
            if math.log(rng.random()) <= 0.5 * (a * a - z * z):
                return z
    alpha = 0.5 * (a + math.sqrt(a * a + 4.0))
    while True:
        z = a + rng.exponential(1.0 / alpha)
        if z > b:
            continue
        if math.log(rng.random()) <= -0.5 * (z - alpha) ** 2:
            return z


def _tn_standard(a, b, rng):
    if a >= 0.0:
        return _tn_positive(a, b, rng)
    if b <= 0.0:
        return -_tn_positive(-b, -a, rng)
    if b - a >= _SQRT_2PI:
        while True:
            z = rng.standard_normal()
            if a <= z <= b:
                return z
    while True:
        z = a + (b - a) * rng.random()
        if math.log(rng.random()) <= -0.5 * z * z:
            return z


def sample_truncnorm(mu, var, lo, hi, rng):
    """Draw from N(mu, var) restricted to (lo, hi); bounds may be infinite."""
    if not lo < hi:
        raise ValueError(f"truncation interval must satisfy lo < hi, got ({lo}, {hi})")
    if not var > 0:
        raise ValueError(f"variance must be positive, got {var}")
    sd = math.sqrt(var)
    return mu + sd * _tn_standard((lo - mu) / sd, (hi - mu) / sd, rng)


# --------------------------------------------------------------------------
# Generalised-normal row of B0 (Waggoner-Zha construction)
# --------------------------------------------------------------------------

def sample_generalized_normal_row(S_bar_inv, nu_bar, B0_others, rng, size=None, rank_tol=1e-10):
    """Draw one row ``b`` of B0 with density proportional to

        |det B0|^(nu_bar - N) * exp(-b S_bar_inv b' / 2)

    holding the remaining N-1 rows (``B0_others``) fixed.

    With ``S_bar_inv = L L'`` write ``b' = L^{-T} beta``.  The determinant is
    linear in ``beta`` along the direction ``v = L^{-1} w`` where ``w`` spans the
    null space of ``B0_others``; along ``v`` the coefficient has density
    ``|beta_1|^(nu_bar - N) exp(-beta_1^2/2)`` (a signed square root of a
    chi-square with ``nu_bar - N + 1`` degrees of freedom) and the orthogonal
    complement is standard normal.

    Returns an N-vector, or a ``(size, N)`` array of independent draws.
    """
    S_bar_inv = np.atleast_2d(np.asarray(S_bar_inv, dtype=float))
    N = S_bar_inv.shape[0]
    B0_others = np.asarray(B0_others, dtype=float).reshape(N - 1, N)
    k = float(nu_bar) - N
    if k <= -1.0:
        raise ValueError(f"nu_bar - N must exceed -1, got {k}")

    if N == 1:
        w = np.ones(1)
    else:
        _, sv, vt = np.linalg.svd(B0_others)
        if sv[-1] <= rank_tol * max(sv[0], 1.0):
            raise np.linalg.LinAlgError("conditioning rows of B0 are rank deficient")
        w = vt[-1]

    try:
        L = linalg.cholesky(S_bar_inv, lower=True, check_finite=False)
    except linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("S_bar_inv is not positive definite") from exc
    v = linalg.solve_triangular(L, w, lower=True, check_finite=False)
    v /= np.linalg.norm(v)

    n = 1 if size is None else int(size)
    z = rng.standard_normal((n, N))
    beta1 = np.sqrt(rng.chisquare(k + 1.0, size=n)) * np.where(rng.random(n) < 0.5, -1.0, 1.0)
    beta = z - np.outer(z @ v, v) + np.outer(beta1, v)
    b = linalg.solve_triangular(L, beta.T, lower=True, trans="T", check_finite=False).T
    return b[0] if size is None else b
