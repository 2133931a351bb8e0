"""Structural VARs with non-centred stochastic volatility.

Bayesian estimation by Gibbs sampling, Savage-Dickey checks of
heteroskedasticity per structural shock, impulse responses, row
normalisation of B0 draws and constructive identification checks.
"""

from .gibbs import GibbsConfig, GibbsError, run_chain
from .model import (
    MIXTURE,
    ModelConfig,
    PosteriorSample,
    PriorConfig,
    StructuralState,
    TimeSeriesData,
    build_regressors,
    prior_mean_A,
    validate_state,
)
from .sddr import SddrResult, VerificationInfeasible, compute_sddr, evidence_category
from .simulate import DgpSpec, generate, preset
from .structural import NormalizationBenchmark, compute_irf, irf_quantiles, normalize_draw, normalize_sample

__version__ = "0.1.0"

__all__ = [
    "MIXTURE",
    "DgpSpec",
    "GibbsConfig",
    "GibbsError",
    "ModelConfig",
    "NormalizationBenchmark",
    "PosteriorSample",
    "PriorConfig",
    "SddrResult",
    "StructuralState",
    "TimeSeriesData",
    "VerificationInfeasible",
    "build_regressors",
    "compute_irf",
    "compute_sddr",
    "evidence_category",
    "generate",
    "irf_quantiles",
    "normalize_draw",
    "normalize_sample",
    "preset",
    "prior_mean_A",
    "run_chain",
    "validate_state",
]
