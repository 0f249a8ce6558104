"""Scikit-learn style estimator front end.

Each estimator fits the two-equation predictive system from a predictor
series ``x`` (levels, including the initial one, length T + 1) and a response
series ``y`` (length T, aligned so ``y[t]`` is regressed on ``x[t]``'s lag).
``predict`` returns the conditional response expectation for given predictor
levels.  Hyperparameters follow the usual ``get_params`` / ``set_params``
protocol, so the classes compose with model-selection tooling.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from . import bayes, freq
from .dists import RngStream
from .model import Dataset
from .sampler import PriorConfig, SamplerOptions, Schedule, run_chain
from .validation import check_vector, dataset_from_xy


class _PredictiveRegressionBase(BaseEstimator):
    def _check_fitted(self):
        if not hasattr(self, "beta_"):
            raise NotFittedError("call fit before using this estimator")

    def predict(self, x):
        """Expected response for predictor levels ``x``."""
        self._check_fitted()
        xv = check_vector("x", np.atleast_1d(np.asarray(x, dtype=float)))
        return self.alpha_y_ + self.beta_ * xv


class PredictiveRegressionOLS(_PredictiveRegressionBase):
    """Equation-by-equation least squares baseline."""

    def fit(self, x, y=None):
        d = dataset_from_xy(x, y)
        fit = freq.ols_fit(d)
        self._store(fit, d)
        return self

    def _store(self, fit: freq.FreqFit, d: Dataset):
        self.alpha_x_ = fit.alpha_x_hat
        self.phi_ = fit.phi_hat
        self.alpha_y_ = fit.alpha_y_hat
        self.beta_ = fit.beta_hat
        self.se_phi_ = fit.se_phi
        self.se_beta_ = fit.se_beta
        self.result_ = fit
        self.n_obs_ = d.T

    def beta_test(self, level: float = 0.05) -> freq.TTest:
        """Two-sided test of a zero predictive coefficient."""
        self._check_fitted()
        return freq.t_test(self.beta_, self.se_beta_, self.result_.dof_beta, level)


class PredictiveRegressionRBE(PredictiveRegressionOLS):
    """Two-step reduced-bias estimator baseline."""

    def __init__(self, include_second_order: bool = True):
        self.include_second_order = include_second_order

    def fit(self, x, y=None):
        d = dataset_from_xy(x, y)
        fit = freq.rbe_fit(d, include_second_order=self.include_second_order)
        self._store(fit, d)
        return self


class BayesianPredictiveRegression(_PredictiveRegressionBase):
    """Shrinkage-prior Bayesian estimator of the predictive system.

    Fitting runs the Metropolis-within-Gibbs sampler; point estimates are
    posterior means of the kept draws.  ``bayes_factor`` tests the point null
    of no predictability via the Savage-Dickey ratio.
    """

    def __init__(self, prior: PriorConfig | None = None, m0: int = 2000,
                 m1: int = 81000, thin: int = 45, seed: int = 0,
                 step1_mode: str = "marginal", sigma_x2_mode: str = "augmented",
                 bf_prior_draws: int | None = None):
        self.prior = prior
        self.m0 = m0
        self.m1 = m1
        self.thin = thin
        self.seed = seed
        self.step1_mode = step1_mode
        self.sigma_x2_mode = sigma_x2_mode
        self.bf_prior_draws = bf_prior_draws

    def fit(self, x, y=None):
        d = dataset_from_xy(x, y)
        prior = (self.prior or PriorConfig()).resolved(d)
        options = SamplerOptions(step1_mode=self.step1_mode,
                                 sigma_x2_mode=self.sigma_x2_mode)
        schedule = Schedule(m0=self.m0, m1=self.m1, c=self.thin)
        rng = RngStream(self.seed, 0)
        rec = run_chain(d, prior, schedule, rng.child(0), options)
        self.chain_ = rec
        self.prior_ = prior
        self.summary_ = bayes.posterior_summary(rec)
        self.alpha_x_ = self.summary_["alpha_x"]["mean"]
        self.phi_ = self.summary_["phi"]["mean"]
        self.alpha_y_ = self.summary_["alpha_y"]["mean"]
        self.beta_ = self.summary_["beta"]["mean"]
        self.bf_ = bayes.bayes_factor_01(rec, prior, self.bf_prior_draws,
                                         rng.child(1))
        self.n_obs_ = d.T
        return self

    def bayes_factor(self) -> bayes.BfResult:
        self._check_fitted()
        return self.bf_
