import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from predbayes.dists import RngStream
from predbayes.errors import DataValidationError
from predbayes.estimators import (
    BayesianPredictiveRegression,
    PredictiveRegressionOLS,
    PredictiveRegressionRBE,
)
from predbayes.freq import ols_fit, rbe_fit
from predbayes.model import simulate_dataset
from predbayes.study import DGP0


@pytest.fixture(scope="module")
def xy():
    d = simulate_dataset(DGP0, 100, RngStream(121, 0))
    return np.concatenate(([d.x0], d.x)), d.y, d


def test_ols_estimator_matches_functional_fit(xy):
    x, y, d = xy
    est = PredictiveRegressionOLS().fit(x, y)
    fit = ols_fit(d)
    assert est.beta_ == fit.beta_hat
    assert est.phi_ == fit.phi_hat
    assert est.se_beta_ == fit.se_beta
    assert est.n_obs_ == d.T


def test_rbe_estimator_matches_functional_fit(xy):
    x, y, d = xy
    est = PredictiveRegressionRBE().fit(x, y)
    fit = rbe_fit(d)
    assert est.beta_ == fit.beta_hat and est.phi_ == fit.phi_hat
    est1 = PredictiveRegressionRBE(include_second_order=False).fit(x, y)
    assert est1.phi_ == rbe_fit(d, include_second_order=False).phi_hat


def test_estimator_accepts_dataset_directly(xy):
    _, _, d = xy
    est = PredictiveRegressionOLS().fit(d)
    assert est.beta_ == ols_fit(d).beta_hat
    with pytest.raises(DataValidationError):
        PredictiveRegressionOLS().fit(d, d.y)


def test_predict_is_affine(xy):
    x, y, _ = xy
    est = PredictiveRegressionOLS().fit(x, y)
    grid = np.array([-3.5, -3.0, -2.5])
    pred = est.predict(grid)
    assert pred.shape == (3,)
    assert pred[1] == pytest.approx(est.alpha_y_ + est.beta_ * -3.0)


def test_not_fitted_estimators_raise(xy):
    with pytest.raises(NotFittedError):
        PredictiveRegressionOLS().predict([0.0])
    with pytest.raises(NotFittedError):
        BayesianPredictiveRegression().bayes_factor()


def test_input_validation(xy):
    x, y, _ = xy
    with pytest.raises(DataValidationError):
        PredictiveRegressionOLS().fit(x[:-1], y)  # length mismatch
    bad = x.copy()
    bad[3] = np.nan
    with pytest.raises(DataValidationError):
        PredictiveRegressionOLS().fit(bad, y)


def test_get_set_params_and_clone():
    est = BayesianPredictiveRegression(m0=100, m1=400, thin=2, seed=9)
    params = est.get_params()
    assert params["m0"] == 100 and params["seed"] == 9
    est.set_params(seed=11)
    assert est.seed == 11
    fresh = clone(est)
    assert fresh.get_params() == est.get_params()
    assert not hasattr(fresh, "beta_")


def test_bayesian_estimator_end_to_end(xy):
    x, y, _ = xy
    est = BayesianPredictiveRegression(m0=200, m1=800, thin=4, seed=3).fit(x, y)
    assert est.chain_.M == 200
    assert np.isfinite(est.beta_)
    assert 0.0 <= est.phi_ < 1.0
    bf = est.bayes_factor()
    assert bf.bf01 > 0
    assert bf.decision in ("H0", "H1")
    assert set(est.summary_) >= {"alpha_x", "alpha_y", "phi", "beta", "psi"}
    # refitting with the same seed reproduces the chain
    est2 = BayesianPredictiveRegression(m0=200, m1=800, thin=4, seed=3).fit(x, y)
    assert np.array_equal(est.chain_.draws["beta"], est2.chain_.draws["beta"])


def test_bayesian_estimator_prediction(xy):
    x, y, _ = xy
    est = BayesianPredictiveRegression(m0=100, m1=400, thin=4, seed=3).fit(x, y)
    val = est.predict(x[-1])
    assert val.shape == (1,)
    assert np.isfinite(val[0])
