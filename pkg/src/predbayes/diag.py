"""Chain diagnostics: autocorrelation, partial autocorrelation, effective
sample size via the spectral density at frequency zero, and the
replication-filter rule that drops poorly mixing chains."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import InsufficientDrawsError, ZeroVarianceError

DEFAULT_MONITORED = ("beta", "phi", "psi")


@dataclass(frozen=True)
class AcfResult:
    """Sample (partial) autocorrelations indexed by lag, so ``values[k]`` is
    the lag-k value and ``values[0] == 1``; ``band`` is the two-sided 95%
    white-noise band half-width."""

    values: np.ndarray
    band: float


@dataclass(frozen=True)
class EssReport:
    M: int
    m_eff: dict[str, float]
    passed: bool


def _as_clean_series(series) -> np.ndarray:
    x = np.asarray(series, dtype=float).ravel()
    if x.size and float(np.ptp(x)) == 0.0:
        raise ZeroVarianceError("series is constant")
    return x


def acf(series, max_lag: int) -> AcfResult:
    """Autocorrelations at lags 0..max_lag with 1/M covariance normalization."""
    x = _as_clean_series(series)
    M = x.size
    if M < max_lag + 2:
        raise InsufficientDrawsError("series too short for requested lags")
    xc = x - x.mean()
    c0 = float(xc @ xc) / M
    values = np.empty(max_lag + 1)
    values[0] = 1.0
    for k in range(1, max_lag + 1):
        values[k] = float(xc[:-k] @ xc[k:]) / M / c0
    return AcfResult(values=values, band=1.96 / math.sqrt(M))


def pacf(series, max_lag: int) -> AcfResult:
    """Partial autocorrelations at lags 0..max_lag via Durbin-Levinson."""
    rho = acf(series, max_lag).values
    M = np.asarray(series).size
    values = np.empty(max_lag + 1)
    values[0] = 1.0
    prev = np.zeros(0)
    var = 1.0
    for k in range(1, max_lag + 1):
        num = rho[k] - float(prev @ rho[k - 1:0:-1]) if k > 1 else rho[1]
        kappa = num / var
        values[k] = kappa
        if k < max_lag:
            new = np.empty(k)
            new[:k - 1] = prev - kappa * prev[::-1]
            new[k - 1] = kappa
            prev = new
            var *= (1.0 - kappa * kappa)
            if var <= 0.0:
                values[k + 1:] = 0.0
                break
    return AcfResult(values=values, band=1.96 / math.sqrt(M))


def _levinson_all_orders(acov: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Prediction-error variances and AR coefficients for orders 0..p_max."""
    p_max = len(acov) - 1
    sigma2 = np.empty(p_max + 1)
    sigma2[0] = acov[0]
    coeffs: list[np.ndarray] = [np.zeros(0)]
    a = np.zeros(0)
    for k in range(1, p_max + 1):
        num = acov[k] - float(a @ acov[k - 1:0:-1]) if k > 1 else acov[1]
        if sigma2[k - 1] <= 0.0:
            sigma2[k:] = sigma2[k - 1]
            coeffs.extend(coeffs[-1] for _ in range(k, p_max + 1))
            break
        kappa = num / sigma2[k - 1]
        new = np.empty(k)
        new[:k - 1] = a - kappa * a[::-1]
        new[k - 1] = kappa
        a = new
        coeffs.append(a)
        sigma2[k] = sigma2[k - 1] * (1.0 - kappa * kappa)
    return sigma2, coeffs


def ess(series) -> float:
    """Effective sample size from an AR spectral estimate at frequency zero.

    An autoregression with AIC-selected order (up to min(100, M/10)) yields
    the long-run variance; the result is capped at 2M to guard against
    estimator noise on nearly independent chains.
    """
    x = _as_clean_series(series)
    M = x.size
    if M < 100:
        raise InsufficientDrawsError("need at least 100 draws for ess")
    xc = x - x.mean()
    var = float(xc @ xc) / M
    p_max = int(min(100, M // 10))
    acov = np.empty(p_max + 1)
    for k in range(p_max + 1):
        acov[k] = float(xc[:M - k] @ xc[k:]) / M
    sigma2, coeffs = _levinson_all_orders(acov)
    with np.errstate(divide="ignore", invalid="ignore"):
        aic = M * np.log(np.maximum(sigma2, 1e-300)) + 2.0 * np.arange(p_max + 1)
    order = int(np.argmin(aic))
    a = coeffs[order]
    denom = (1.0 - float(a.sum())) ** 2
    spec0 = sigma2[order] / denom if denom > 0.0 else math.inf
    if not math.isfinite(spec0) or spec0 <= 0.0:
        return 1.0
    return float(min(M * var / spec0, 2.0 * M))


def ess_report(record, monitored: Sequence[str] = DEFAULT_MONITORED) -> EssReport:
    """Effective sample sizes of the monitored columns of a chain record."""
    m_eff = {name: ess(record.draws[name]) for name in monitored}
    M = record.M
    return EssReport(M=M, m_eff=m_eff, passed=min(m_eff.values()) >= M / 3.0)


def convergence_filter(records: Iterable, monitored: Sequence[str] = DEFAULT_MONITORED
                       ) -> tuple[list, list[EssReport]]:
    """Drop every chain whose minimum monitored effective sample size falls
    below a third of the kept draws; returns (kept records, all reports)."""
    records = list(records)
    if not records:
        raise InsufficientDrawsError("no chain records to filter")
    reports = [ess_report(r, monitored) for r in records]
    kept = [r for r, rep in zip(records, reports) if rep.passed]
    return kept, reports
