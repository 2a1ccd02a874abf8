"""Large Bayesian VARs under a normal-gamma shrinkage prior.

Covers panel ingest, temporal disaggregation, Gibbs estimation, recursive
identification with normalized impulse responses, and a robustness battery.
"""

__version__ = "0.1.0"

from .config import RunConfig, load_config, euro_area_ordering
from .disaggregate import AggregationRule, ChowLinFit, chow_lin, spline_disaggregate
from .gig import sample_gig
from .irf import IrfSet, QuantileBand, ShockSpec, compute_irf, impact_matrix, irf_set, quantile_bands
from .panel import Panel, TimeSeries, assemble_panel, growth_rate, invert_series, load_csv
from .robustness import StabilityReport, companion_eigen_max, derive_spread, run_battery
from .sampler import (
    DrawState,
    NgHyper,
    PosteriorSample,
    VarDesign,
    build_design,
    gibbs_step,
    lambda_for_lag,
    run_mcmc,
)

__all__ = [
    "AggregationRule", "ChowLinFit", "DrawState", "IrfSet", "NgHyper", "Panel",
    "PosteriorSample", "QuantileBand", "RunConfig", "ShockSpec", "StabilityReport",
    "TimeSeries", "VarDesign", "assemble_panel", "build_design", "chow_lin",
    "companion_eigen_max", "compute_irf", "derive_spread", "gibbs_step", "growth_rate",
    "impact_matrix", "invert_series", "irf_set", "lambda_for_lag", "load_config", "load_csv",
    "euro_area_ordering", "quantile_bands", "run_battery", "run_mcmc", "sample_gig",
    "spline_disaggregate",
]
