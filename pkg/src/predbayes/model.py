"""Domain types for the bivariate predictive system, the mapping between its
two parameterizations, the exact (unconditional) log likelihood, the shrinkage
prior variance for the predictive coefficient, and the data simulator.

The system couples an AR(1) equation for the log dividend-price ratio ``x``
with a regression of log returns ``y`` on the lagged ratio:

    x_t = alpha_x + phi * x_{t-1} + eps_x_t
    y_t = alpha_y + beta * x_{t-1} + eps_y_t

with jointly normal, contemporaneously correlated errors.  The orthogonalized
("control function") form regresses the return innovations on the ratio
innovations instead, which decorrelates the error terms:

    y_t = alpha_y + beta * x_{t-1} + psi * eps_x_t + eps_y_tilde_t
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.signal import lfilter

from .dists import RngStream
from .errors import (
    DataValidationError,
    InvalidCovarianceError,
    NonstationaryParametersError,
)

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class Dataset:
    """Observed series: initial ratio ``x0`` plus T pairs ``(x_t, y_t)``.

    ``x[t-1]`` and ``y[t-1]`` hold the observations with time index t for
    t = 1..T; lag bookkeeping is centralized in :attr:`x_lag`, whose t-th
    entry is x_{t-1}.
    """

    x0: float
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).copy()
        y = np.asarray(self.y, dtype=float).copy()
        if x.ndim != 1 or y.ndim != 1 or len(x) != len(y):
            raise DataValidationError("x and y must be 1-d arrays of equal length")
        if len(x) < 2:
            raise DataValidationError("need at least T = 2 observations")
        if not (math.isfinite(self.x0) and np.isfinite(x).all() and np.isfinite(y).all()):
            raise DataValidationError("all observations must be finite")
        x.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def T(self) -> int:
        return len(self.x)

    @cached_property
    def x_lag(self) -> np.ndarray:
        lag = np.concatenate(([self.x0], self.x[:-1]))
        lag.flags.writeable = False
        return lag


@dataclass(frozen=True)
class ReducedFormParams:
    """Parameters of the correlated-error form with full error covariance."""

    alpha_x: float
    alpha_y: float
    phi: float
    beta: float
    sigma_x2: float
    sigma_y2: float
    sigma_xy: float

    def __post_init__(self):
        if abs(self.phi) >= 1.0:
            raise NonstationaryParametersError(f"|phi| must be < 1, got {self.phi}")
        if self.sigma_x2 <= 0.0 or self.sigma_y2 <= 0.0:
            raise InvalidCovarianceError("error variances must be positive")
        if self.sigma_xy ** 2 >= self.sigma_x2 * self.sigma_y2:
            raise InvalidCovarianceError(
                "error covariance matrix is not positive definite")


@dataclass(frozen=True)
class ControlFormParams:
    """Parameters of the orthogonalized form with independent errors."""

    alpha_x: float
    alpha_y: float
    phi: float
    beta: float
    sigma_x2: float
    psi: float
    sigma_y2_tilde: float

    def __post_init__(self):
        if abs(self.phi) >= 1.0:
            raise NonstationaryParametersError(f"|phi| must be < 1, got {self.phi}")
        if self.sigma_x2 <= 0.0 or self.sigma_y2_tilde <= 0.0:
            raise InvalidCovarianceError("error variances must be positive")


@dataclass(frozen=True)
class Residuals:
    """Per-observation residuals of both forms under given parameters.

    ``u_tilde`` and ``sigma_x2_tilde`` belong to the bias-corrected ratio
    regression obtained by conditioning the ratio innovations on the return
    innovations.
    """

    eps_x: np.ndarray
    eps_y: np.ndarray
    eps_y_tilde: np.ndarray
    u_tilde: np.ndarray
    sigma_x2_tilde: float


def to_control_form(p: ReducedFormParams) -> ControlFormParams:
    """Map reduced-form parameters to the orthogonalized parameterization."""
    psi = p.sigma_xy / p.sigma_x2
    sigma_y2_tilde = p.sigma_y2 - p.sigma_xy ** 2 / p.sigma_x2
    if sigma_y2_tilde <= 0.0:
        raise InvalidCovarianceError("implied orthogonal variance is not positive")
    return ControlFormParams(p.alpha_x, p.alpha_y, p.phi, p.beta,
                             p.sigma_x2, psi, sigma_y2_tilde)


def to_reduced_form(p: ControlFormParams) -> ReducedFormParams:
    """Inverse of :func:`to_control_form`; positive definite by construction."""
    sigma_xy = p.psi * p.sigma_x2
    sigma_y2 = p.sigma_y2_tilde + p.sigma_x2 * p.psi ** 2
    return ReducedFormParams(p.alpha_x, p.alpha_y, p.phi, p.beta,
                             p.sigma_x2, sigma_y2, sigma_xy)


def stationary_mean(alpha_x: float, phi: float) -> float:
    return alpha_x / (1.0 - phi)


def stationary_variance(sigma_x2: float, phi: float) -> float:
    return sigma_x2 / (1.0 - phi * phi)


def simulate_dataset(p: ReducedFormParams, T: int, rng: RngStream) -> Dataset:
    """Simulate T observations, drawing x0 from the stationary distribution."""
    if T < 2:
        raise DataValidationError("need T >= 2")
    g = rng.generator
    x0 = float(g.normal(stationary_mean(p.alpha_x, p.phi),
                        math.sqrt(stationary_variance(p.sigma_x2, p.phi))))
    z1 = g.standard_normal(T)
    z2 = g.standard_normal(T)
    sx = math.sqrt(p.sigma_x2)
    eps_x = sx * z1
    # Cholesky factor of the error covariance.
    c = p.sigma_xy / sx
    eps_y = c * z1 + math.sqrt(p.sigma_y2 - c * c) * z2
    x = lfilter([1.0], [1.0, -p.phi], p.alpha_x + eps_x, zi=[p.phi * x0])[0]
    x_lag = np.concatenate(([x0], x[:-1]))
    y = p.alpha_y + p.beta * x_lag + eps_y
    return Dataset(x0=x0, x=x, y=y)


def sigma0_beta(phi: float, psi: float, sigma_x2: float,
                sigma_y2_tilde: float, Sigma_beta: float) -> float:
    """Implied prior variance of the predictive coefficient.

    Equals ``Sigma_beta * (sigma_y2 / sigma_x2) * (1 - phi^2)`` written in the
    orthogonalized parameters, so a fixed prior on the population R-squared in
    the return equation translates into a coefficient scale that shrinks with
    the persistence and the signal variance of the predictor.
    """
    if sigma_x2 <= 0.0 or sigma_y2_tilde <= 0.0 or Sigma_beta <= 0.0:
        raise InvalidCovarianceError("variance arguments must be positive")
    if abs(phi) >= 1.0:
        raise NonstationaryParametersError(f"|phi| must be < 1, got {phi}")
    return Sigma_beta * (sigma_y2_tilde / sigma_x2 + psi * psi) * (1.0 - phi * phi)


def residuals(p: ControlFormParams, d: Dataset) -> Residuals:
    """Residuals of both forms plus the bias-corrected regression pieces."""
    x_lag = d.x_lag
    eps_x = d.x - p.alpha_x - p.phi * x_lag
    eps_y = d.y - p.alpha_y - p.beta * x_lag
    eps_y_tilde = eps_y - p.psi * eps_x
    sigma_y2 = p.sigma_y2_tilde + p.sigma_x2 * p.psi ** 2
    slope = p.sigma_x2 * p.psi / sigma_y2
    u_tilde = slope * eps_y
    sigma_x2_tilde = p.sigma_x2 * p.sigma_y2_tilde / sigma_y2
    return Residuals(eps_x=eps_x, eps_y=eps_y, eps_y_tilde=eps_y_tilde,
                     u_tilde=u_tilde, sigma_x2_tilde=sigma_x2_tilde)


def exact_loglik(p: ControlFormParams, d: Dataset) -> float:
    """Unconditional log likelihood: return terms, ratio terms, and the
    stationary density of the initial observation."""
    r = residuals(p, d)
    T = d.T
    ll_y = -0.5 * T * (_LOG_2PI + math.log(p.sigma_y2_tilde)) \
        - 0.5 * float(r.eps_y_tilde @ r.eps_y_tilde) / p.sigma_y2_tilde
    ll_x = -0.5 * T * (_LOG_2PI + math.log(p.sigma_x2)) \
        - 0.5 * float(r.eps_x @ r.eps_x) / p.sigma_x2
    one_m_phi2 = 1.0 - p.phi * p.phi
    dev = d.x0 - stationary_mean(p.alpha_x, p.phi)
    ll_x0 = 0.5 * (math.log(one_m_phi2) - _LOG_2PI - math.log(p.sigma_x2)) \
        - 0.5 * one_m_phi2 * dev * dev / p.sigma_x2
    return ll_y + ll_x + ll_x0
