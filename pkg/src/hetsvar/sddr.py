"""Savage-Dickey density ratios for the homoskedasticity restriction ``omega_n = 0``.

The numerator is the Gelfand-Smith estimate of the marginal posterior
density of ``omega_n`` at zero, the average over draws of the normal full
conditional ordinate.  The denominator is the marginal prior density of
``omega_n`` at zero under the unrestricted gamma prior for its variance.
Everything is computed on the log scale.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .model import PosteriorSample, PriorConfig
from .special import marginal_omega_at_zero

__all__ = [
    "VerificationInfeasible",
    "SddrResult",
    "log_posterior_ordinate_at_zero",
    "posterior_ordinate_at_zero",
    "log_prior_ordinate_at_zero",
    "prior_ordinate_at_zero",
    "batch_log_sddr",
    "sddr_nse",
    "compute_sddr",
    "evidence_category",
    "write_sddr_table",
]

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


class VerificationInfeasible(ValueError):
    """The prior density of omega at zero is unbounded (shape A <= 1/2)."""


@dataclass(frozen=True)
class SddrResult:
    """Log Savage-Dickey ratio for one equation.

    ``nse`` is the batch-means numerical standard error; ``batch_sd`` is the
    raw standard deviation of the batch estimates before dividing by
    ``sqrt(n_subsamples)``.
    """

    log_numerator: float
    log_denominator: float
    log_sddr: float
    nse: float
    n_draws: int
    n_subsamples: int
    batch_sd: float

    @property
    def category(self) -> str:
        return evidence_category(self.log_sddr)


def _moments(moments):
    m = np.asarray(moments, dtype=float)
    if m.ndim != 2 or m.shape[1] != 2:
        raise ValueError(f"moments must have shape (draws, 2), got {m.shape}")
    if m.shape[0] == 0:
        raise ValueError("no moments supplied")
    if np.any(~(m[:, 1] > 0)):
        raise ValueError("conditional variances must be positive")
    return m


def log_posterior_ordinate_at_zero(moments) -> float:
    """``log mean_s N(0; mean_s, var_s)`` for rows ``(mean_s, var_s)``."""
    m = _moments(moments)
    mean, var = m[:, 0], m[:, 1]
    logf = -_HALF_LOG_2PI - 0.5 * np.log(var) - 0.5 * mean * mean / var
    return float(logsumexp(logf) - math.log(m.shape[0]))


def posterior_ordinate_at_zero(moments) -> float:
    """Gelfand-Smith estimate of the marginal posterior density of omega at 0."""
    return math.exp(log_posterior_ordinate_at_zero(moments))


def log_prior_ordinate_at_zero(priors: PriorConfig) -> float:
    if priors.A_omega <= 0.5:
        raise VerificationInfeasible(
            f"A_omega = {priors.A_omega} <= 0.5: the prior density of omega at zero is unbounded, "
            "so the Savage-Dickey ratio is identically zero"
        )
    return math.log(marginal_omega_at_zero(priors.S_omega, priors.A_omega))


def prior_ordinate_at_zero(priors: PriorConfig) -> float:
    """Marginal prior density of omega at zero; requires ``A_omega > 0.5``."""
    return math.exp(log_prior_ordinate_at_zero(priors))


def batch_log_sddr(moments, n_subsamples: int, priors: PriorConfig) -> np.ndarray:
    """Log ratios computed on contiguous equal-length batches.

    Trailing draws that do not fill a batch are dropped.
    """
    m = _moments(moments)
    if n_subsamples < 2:
        raise ValueError("at least two subsamples are needed")
    if m.shape[0] < n_subsamples:
        raise ValueError(f"{m.shape[0]} draws cannot fill {n_subsamples} subsamples")
    size = m.shape[0] // n_subsamples
    log_den = log_prior_ordinate_at_zero(priors)
    return np.array(
        [log_posterior_ordinate_at_zero(m[i * size:(i + 1) * size]) - log_den for i in range(n_subsamples)]
    )


def sddr_nse(moments, n_subsamples: int = 30, priors: PriorConfig = PriorConfig()) -> float:
    """Batch-means numerical standard error of the log ratio."""
    b = batch_log_sddr(moments, n_subsamples, priors)
    return _batch_sd(b) / math.sqrt(n_subsamples)


def _batch_sd(b):
    # centring on one batch makes identical batches give exactly zero
    return float(np.std(b - b[0], ddof=1))


def compute_sddr(sample: PosteriorSample, equation: int, priors: PriorConfig,
                 n_subsamples: int = 30) -> SddrResult:
    """Log Savage-Dickey ratio for ``omega_equation = 0``; negative values favour heteroskedasticity."""
    moments = sample.sddr_moments[:, equation, :]
    log_num = log_posterior_ordinate_at_zero(moments)
    log_den = log_prior_ordinate_at_zero(priors)
    batches = batch_log_sddr(moments, n_subsamples, priors)
    batch_sd = _batch_sd(batches)
    return SddrResult(
        log_numerator=log_num,
        log_denominator=log_den,
        log_sddr=log_num - log_den,
        nse=batch_sd / math.sqrt(n_subsamples),
        n_draws=int(moments.shape[0]),
        n_subsamples=int(n_subsamples),
        batch_sd=batch_sd,
    )


def evidence_category(log_sddr: float) -> str:
    """Kass-Raftery style label for evidence against homoskedasticity.

    ``strong`` below -20, ``positive`` below -3, ``weak`` below 0 and
    ``homoskedastic`` otherwise.
    """
    if log_sddr < -20.0:
        return "strong"
    if log_sddr < -3.0:
        return "positive"
    if log_sddr < 0.0:
        return "weak"
    return "homoskedastic"


def write_sddr_table(results, labels, fh, verbose: bool = False) -> None:
    """Write a CSV with columns ``equation, log_sddr, nse, category``.

    ``verbose`` appends the log numerator, log denominator, raw batch
    standard deviation and draw count.
    """
    writer = csv.writer(fh, lineterminator="\n")
    header = ["equation", "log_sddr", "nse", "category"]
    if verbose:
        header += ["log_numerator", "log_denominator", "batch_sd", "n_draws"]
    writer.writerow(header)
    for label, r in zip(labels, results):
        row = [label, repr(r.log_sddr), repr(r.nse), r.category]
        if verbose:
            row += [repr(r.log_numerator), repr(r.log_denominator), repr(r.batch_sd), r.n_draws]
        writer.writerow(row)
