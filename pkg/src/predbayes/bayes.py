"""Savage-Dickey Bayes factor for the point null "no predictability", with
median-based ordinate estimators, plus posterior summaries.

Both ordinates are accumulated in log space and median-reduced there: the
median commutes with the monotone exponential, so this is exact and immune to
underflow when the posterior mass sits far from zero.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Literal

import numpy as np

from .dists import RngStream
from .errors import DegeneratePriorError, InsufficientDrawsError
from .sampler import ChainRecord, PARAM_COLUMNS, PriorConfig

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class BfResult:
    bf01: float
    prior_ordinate: float
    posterior_ordinate: float
    decision: Literal["H0", "H1"]
    M_used: int

    def to_json(self) -> str:
        return json.dumps(asdict(self))

    @classmethod
    def from_json(cls, text: str) -> "BfResult":
        return cls(**json.loads(text))


def _log_ordinates_from_g(log_g: np.ndarray, mu0_beta: float) -> np.ndarray:
    """Log normal ordinates at zero given log prior variances."""
    g = np.exp(log_g)
    return -0.5 * (_LOG_2PI + log_g) - 0.5 * mu0_beta * mu0_beta / g


def sample_prior_g(prior: PriorConfig, M: int, rng: RngStream) -> np.ndarray:
    """M independent draws of the implied beta prior variance.

    Draws the shrinkage shape, the shrinkage scale, the AR coefficient from
    its reference prior, the innovation-regression coefficient, and both
    innovation variances, then evaluates the prior-variance map at each tuple.
    """
    g = rng.generator
    a = np.where(g.random(M) < prior.p_aR, prior.aR_high, prior.aR_low)
    sigma_beta = g.standard_gamma(a) / g.standard_gamma(prior.b0_R, M)
    phi = np.sin(0.5 * math.pi * g.random(M))
    psi = g.normal(prior.mu0_psi, math.sqrt(prior.Sigma0_psi), M)
    sigma_x2 = prior.S0_x / g.standard_gamma(prior.nu_x, M)
    sigma_y2_tilde = prior.S0_y / g.standard_gamma(prior.nu_y, M)
    return sigma_beta * (sigma_y2_tilde / sigma_x2 + psi ** 2) * (1.0 - phi ** 2)


def prior_ordinate_beta(prior: PriorConfig, M: int, rng: RngStream) -> float:
    """Monte Carlo median estimate of the prior density of beta at zero."""
    if M < 100:
        raise InsufficientDrawsError("need at least 100 prior draws")
    g = sample_prior_g(prior, M, rng)
    logs = _log_ordinates_from_g(np.log(g), prior.mu0_beta)
    return float(np.exp(np.median(logs)))


def _log_posterior_ordinates(rec: ChainRecord) -> np.ndarray:
    b = rec.draws["b_T"]
    B = rec.draws["B_T"]
    return -0.5 * (_LOG_2PI + np.log(B)) - 0.5 * b * b / B


def posterior_ordinate_beta(rec: ChainRecord) -> float:
    """Median over kept iterations of the conditional posterior density of
    beta at zero."""
    if rec.M == 0:
        raise InsufficientDrawsError("empty chain record")
    return float(np.exp(np.median(_log_posterior_ordinates(rec))))


def bayes_factor_01(rec: ChainRecord, prior: PriorConfig,
                    M_prior: int | None = None,
                    rng: RngStream | None = None) -> BfResult:
    """Savage-Dickey Bayes factor of the point null against the alternative.

    The prior ordinate comes from fresh prior simulation with ``M_prior``
    draws (defaulting to the chain length), unless the chain was run with a
    fixed beta prior variance, in which case it is available in closed form.
    The null is retained when the factor exceeds one; ties go to the
    alternative.
    """
    if rec.M == 0:
        raise InsufficientDrawsError("empty chain record")
    log_post = float(np.median(_log_posterior_ordinates(rec)))
    fixed = rec.options.fixed_sigma0_beta
    if fixed is not None:
        log_prior = float(_log_ordinates_from_g(
            np.array([math.log(fixed)]), prior.mu0_beta)[0])
        m_used = rec.M
    else:
        if rng is None:
            raise ValueError("rng is required when the prior ordinate is simulated")
        m_used = max(rec.M, 100) if M_prior is None else M_prior
        if m_used < 100:
            raise InsufficientDrawsError("need at least 100 prior draws")
        g = sample_prior_g(prior, m_used, rng)
        log_prior = float(np.median(_log_ordinates_from_g(np.log(g), prior.mu0_beta)))
    if not math.isfinite(log_prior):
        raise DegeneratePriorError("prior ordinate at zero is degenerate")
    bf01 = math.exp(log_post - log_prior)
    decision = "H0" if bf01 > 1.0 else "H1"
    return BfResult(bf01=bf01, prior_ordinate=math.exp(log_prior),
                    posterior_ordinate=math.exp(log_post),
                    decision=decision, M_used=m_used)


def posterior_summary(rec: ChainRecord) -> dict[str, dict[str, float]]:
    """Mean, standard deviation and 5/50/95% quantiles per parameter."""
    if rec.M == 0:
        raise InsufficientDrawsError("empty chain record")
    out: dict[str, dict[str, float]] = {}
    for name in PARAM_COLUMNS:
        col = rec.draws[name]
        q05, q50, q95 = np.quantile(col, [0.05, 0.50, 0.95])
        out[name] = {
            "mean": float(col.mean()),
            "sd": float(col.std(ddof=1)) if len(col) > 1 else 0.0,
            "q05": float(q05), "q50": float(q50), "q95": float(q95),
        }
    return out
