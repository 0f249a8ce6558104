"""Frequentist baselines: per-equation OLS, the closed-form bias
approximations, the two-step reduced-bias estimator, and t-tests."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy import stats as sstats

from .errors import SingularDesignError
from .model import Dataset


@dataclass(frozen=True)
class FreqFit:
    """Point estimates with conventional standard errors.

    ``sigma_*_hat`` is the residual covariance with a T - 2 denominator.
    ``dof_phi`` / ``dof_beta`` are the residual degrees of freedom of the
    regressions that produced the respective standard errors.
    """

    alpha_x_hat: float
    phi_hat: float
    alpha_y_hat: float
    beta_hat: float
    se_phi: float
    se_beta: float
    sigma_x2_hat: float
    sigma_y2_hat: float
    sigma_xy_hat: float
    method: Literal["OLS", "RBE"]
    dof_phi: int
    dof_beta: int


@dataclass(frozen=True)
class TTest:
    statistic: float
    p_value: float
    reject: bool


def _check_design(x_lag: np.ndarray) -> None:
    if float(np.ptp(x_lag)) == 0.0:
        raise SingularDesignError("lagged regressor is constant")


def _ols_line(z: np.ndarray, x_lag: np.ndarray) -> tuple[float, float, np.ndarray]:
    """Least squares of z on (1, x_lag); returns (intercept, slope, residuals)."""
    xbar = x_lag.mean()
    sxx = float(((x_lag - xbar) ** 2).sum())
    slope = float(((x_lag - xbar) * (z - z.mean())).sum()) / sxx
    intercept = float(z.mean() - slope * xbar)
    resid = z - intercept - slope * x_lag
    return intercept, slope, resid


def ols_fit(d: Dataset) -> FreqFit:
    """Equation-by-equation least squares on (1, x_{t-1})."""
    if d.T < 3:
        raise SingularDesignError("need T >= 3 for OLS standard errors")
    x_lag = d.x_lag
    _check_design(x_lag)
    T = d.T
    a_x, phi, res_x = _ols_line(d.x, x_lag)
    a_y, beta, res_y = _ols_line(d.y, x_lag)
    dof = T - 2
    sxx = float(((x_lag - x_lag.mean()) ** 2).sum())
    s2_x = float(res_x @ res_x) / dof
    s2_y = float(res_y @ res_y) / dof
    return FreqFit(
        alpha_x_hat=a_x, phi_hat=phi, alpha_y_hat=a_y, beta_hat=beta,
        se_phi=math.sqrt(s2_x / sxx), se_beta=math.sqrt(s2_y / sxx),
        sigma_x2_hat=s2_x, sigma_y2_hat=s2_y,
        sigma_xy_hat=float(res_x @ res_y) / dof,
        method="OLS", dof_phi=dof, dof_beta=dof,
    )


def kendall_bias(phi: float, T: int) -> float:
    """First-order bias of the OLS AR(1) coefficient: -(1 + 3 phi) / T."""
    if T < 1:
        raise ValueError("T must be >= 1")
    return -(1.0 + 3.0 * phi) / T


def stambaugh_bias(sigma_xy: float, sigma_x2: float, phi_bias: float) -> float:
    """Predictive-coefficient bias implied by the AR-coefficient bias."""
    if sigma_x2 <= 0.0:
        raise ValueError("sigma_x2 must be positive")
    return (sigma_xy / sigma_x2) * phi_bias


def rbe_phi(phi_ols: float, T: int, include_second_order: bool = True) -> float:
    """Bias-adjusted AR coefficient; no truncation at 1 is applied."""
    corr = (1.0 + 3.0 * phi_ols) / T
    out = phi_ols + corr
    if include_second_order:
        out += 3.0 * corr / T
    return out


def rbe_fit(d: Dataset, include_second_order: bool = True,
            se_correction: bool = True) -> FreqFit:
    """Two-step reduced-bias estimator.

    The AR coefficient is bias-adjusted in closed form, the intercept is
    re-estimated so the adjusted residuals have mean zero, and those residuals
    enter the return regression as an additional regressor.

    With ``se_correction`` (the default) the reported standard error of the
    predictive coefficient adds the error propagated from the adjusted AR
    coefficient to the augmented-regression standard error:
    ``se^2 = se_augmented^2 + psi_hat^2 * se(phi_adjusted)^2``.  The plain
    augmented-regression standard error ignores that the extra regressor is
    estimated and materially understates the sampling variability here.
    """
    if d.T < 4:
        raise SingularDesignError("need T >= 4 for the augmented regression")
    ols = ols_fit(d)
    T = d.T
    x_lag = d.x_lag
    phi = rbe_phi(ols.phi_hat, T, include_second_order)
    alpha_x = float(d.x.mean() - phi * x_lag.mean())
    eps_x = d.x - alpha_x - phi * x_lag

    X = np.column_stack((np.ones(T), x_lag, eps_x))
    XtX = X.T @ X
    if np.linalg.cond(XtX) > 1e12:
        raise SingularDesignError("augmented design is numerically singular")
    coef = np.linalg.solve(XtX, X.T @ d.y)
    resid = d.y - X @ coef
    dof = T - 3
    s2 = float(resid @ resid) / dof
    cov = s2 * np.linalg.inv(XtX)
    # Delta method through the deterministic bias adjustment.
    se_phi = ols.se_phi * abs(1.0 + 3.0 / T + (9.0 / T ** 2 if include_second_order else 0.0))
    se_beta = math.sqrt(cov[1, 1])
    if se_correction:
        se_beta = math.sqrt(se_beta ** 2 + coef[2] ** 2 * se_phi ** 2)

    eps_y = d.y - coef[0] - coef[1] * x_lag
    denom = T - 2
    return FreqFit(
        alpha_x_hat=alpha_x, phi_hat=phi,
        alpha_y_hat=float(coef[0]), beta_hat=float(coef[1]),
        se_phi=se_phi, se_beta=se_beta,
        sigma_x2_hat=float(eps_x @ eps_x) / denom,
        sigma_y2_hat=float(eps_y @ eps_y) / denom,
        sigma_xy_hat=float(eps_x @ eps_y) / denom,
        method="RBE", dof_phi=T - 2, dof_beta=dof,
    )


def t_test(estimate: float, se: float, dof: int, level: float = 0.05) -> TTest:
    """Two-sided Student-t test of a zero null."""
    if se <= 0.0:
        raise ValueError("standard error must be positive")
    if dof < 1:
        raise ValueError("degrees of freedom must be >= 1")
    if not 0.0 < level < 1.0:
        raise ValueError("level must be in (0, 1)")
    stat = estimate / se
    p = 2.0 * float(sstats.t.sf(abs(stat), dof))
    return TTest(statistic=stat, p_value=p, reject=p < level)
