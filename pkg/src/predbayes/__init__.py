"""Bayesian shrinkage estimation and testing of return predictability in a
restricted predictive VAR, with OLS and reduced-bias baselines and a
replication harness."""

from .bayes import BfResult, bayes_factor_01, posterior_ordinate_beta, \
    posterior_summary, prior_ordinate_beta
from .dataio import build_series, load_dataset, load_returns_csv, parse_config, \
    save_dataset
from .diag import EssReport, acf, convergence_filter, ess, ess_report, pacf
from .dists import RngStream
from .estimators import (
    BayesianPredictiveRegression,
    PredictiveRegressionOLS,
    PredictiveRegressionRBE,
)
from .freq import FreqFit, kendall_bias, ols_fit, rbe_fit, stambaugh_bias, t_test
from .model import (
    ControlFormParams,
    Dataset,
    ReducedFormParams,
    Residuals,
    exact_loglik,
    residuals,
    sigma0_beta,
    simulate_dataset,
    to_control_form,
    to_reduced_form,
)
from .sampler import (
    ChainRecord,
    PriorConfig,
    SamplerOptions,
    SamplerState,
    Schedule,
    run_chain,
)
from .study import DGP0, DGP1, StudyConfig, StudyResult, emit_tables, \
    error_rates, metrics, run_study

__version__ = "0.1.0"

__all__ = [
    "BfResult", "bayes_factor_01", "posterior_ordinate_beta",
    "posterior_summary", "prior_ordinate_beta",
    "build_series", "load_dataset", "load_returns_csv", "parse_config",
    "save_dataset",
    "EssReport", "acf", "convergence_filter", "ess", "ess_report", "pacf",
    "RngStream",
    "BayesianPredictiveRegression", "PredictiveRegressionOLS",
    "PredictiveRegressionRBE",
    "FreqFit", "kendall_bias", "ols_fit", "rbe_fit", "stambaugh_bias", "t_test",
    "ControlFormParams", "Dataset", "ReducedFormParams", "Residuals",
    "exact_loglik", "residuals", "sigma0_beta", "simulate_dataset",
    "to_control_form", "to_reduced_form",
    "ChainRecord", "PriorConfig", "SamplerOptions", "SamplerState", "Schedule",
    "run_chain",
    "DGP0", "DGP1", "StudyConfig", "StudyResult", "emit_tables",
    "error_rates", "metrics", "run_study",
    "__version__",
]
