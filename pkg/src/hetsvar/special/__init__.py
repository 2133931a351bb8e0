"""Special functions, density families and random variate generators."""

from .bessel import BesselOverflowWarning, bessel_k, log_bessel_k
from .densities import (
    lognp_logpdf,
    lognp_pdf,
    marginal_omega_at_zero,
    marginal_omega_logpdf,
    marginal_omega_pdf,
    mlognp_logpdf,
    mnp_logpdf,
    np_cdf,
    np_logpdf,
    np_pdf,
)
from .variates import sample_generalized_normal_row, sample_gig, sample_truncnorm

__all__ = [
    "BesselOverflowWarning",
    "bessel_k",
    "log_bessel_k",
    "lognp_logpdf",
    "lognp_pdf",
    "marginal_omega_at_zero",
    "marginal_omega_logpdf",
    "marginal_omega_pdf",
    "mlognp_logpdf",
    "mnp_logpdf",
    "np_cdf",
    "np_logpdf",
    "np_pdf",
    "sample_generalized_normal_row",
    "sample_gig",
    "sample_truncnorm",
]
