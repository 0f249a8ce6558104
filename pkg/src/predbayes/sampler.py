"""Metropolis-within-Gibbs sampler for the predictive system.

One sweep updates, in order:

1. return-equation coefficients (alpha_y, beta), a direct bivariate normal
   draw whose conditional moments also feed the Savage-Dickey ordinate;
2. ratio-equation coefficients (alpha_x, phi) by independence MH with an
   auxiliary flat-prior regression posterior as proposal;
3. the innovation-regression coefficient psi (MH, conjugate proposal);
4. the ratio innovation variance sigma_x2 (MH, inverse-gamma proposal);
5. the orthogonal return variance sigma_y2_tilde (MH, inverse-gamma proposal);
6. the shrinkage scale Sigma_beta via its gamma/inverse-gamma augmentation;
7. the binary shrinkage shape a0R (MH flip between its two support points).

Steps 2-5 leave well-known families because the implied prior variance of
beta depends on (phi, psi, sigma_x2, sigma_y2_tilde); each acceptance ratio
therefore carries the ratio of beta prior ordinates, and step 2 additionally
carries the stationary density of the initial observation, the true
coefficient prior, and the auxiliary-prior correction.

All per-iteration quantities reduce to closed forms in a handful of data
moments, so a sweep costs O(1) after a single O(T) pass over the data.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Literal

import numpy as np

from . import dists
from .dists import RngStream
from .errors import (
    ConfigError,
    DataValidationError,
    NumericalFailureError,
    ParameterDomainError,
    SingularDesignError,
)
from .model import Dataset, sigma0_beta
from .freq import ols_fit

_LOG_2PI = math.log(2.0 * math.pi)

PARAM_COLUMNS = ("alpha_x", "alpha_y", "phi", "beta", "sigma_x2", "psi",
                 "sigma_y2_tilde", "Sigma_beta", "Z_beta", "a0R")
RECORD_COLUMNS = PARAM_COLUMNS + ("b_T", "B_T", "g")
MH_STEPS = ("ar_coeffs", "psi", "sigma_x2", "sigma_y2_tilde", "a0R")


@dataclass(frozen=True)
class PriorConfig:
    """Hyperparameters of every prior block.

    ``mu0_mu_x`` is the prior mean of the stationary level of the ratio
    series; ``None`` means "use the sample mean of the observed series",
    resolved against the data via :meth:`resolved`.  ``aux_b0`` / ``aux_B0``
    parameterize the flat auxiliary prior behind the step-2 proposal.
    """

    mu0_alpha_y: float = 0.0
    Sigma0_alpha_y: float = 10.0
    mu0_psi: float = 0.0
    Sigma0_psi: float = 10.0
    mu0_mu_x: float | None = None
    S0_mu_x: float = 0.2
    nu_x: float = 4.0
    S0_x: float = 0.06
    nu_y: float = 2.5
    S0_y: float = 0.03
    mu0_beta: float = 0.0
    b0_R: float = 1.0
    aR_low: float = 0.1
    aR_high: float = 0.5
    p_aR: float = 0.5
    aux_b0: tuple[float, float] = (0.0, 0.0)
    aux_B0: tuple[float, float] = (1e12, 1e8)

    def __post_init__(self):
        positive = {
            "Sigma0_alpha_y": self.Sigma0_alpha_y,
            "Sigma0_psi": self.Sigma0_psi,
            "S0_mu_x": self.S0_mu_x,
            "nu_x": self.nu_x, "S0_x": self.S0_x,
            "nu_y": self.nu_y, "S0_y": self.S0_y,
            "b0_R": self.b0_R,
            "aR_low": self.aR_low, "aR_high": self.aR_high,
        }
        bad = [k for k, v in positive.items() if not v > 0.0]
        if len(self.aux_b0) != 2 or len(self.aux_B0) != 2:
            bad.append("aux_b0/aux_B0 must have two entries")
        elif not (self.aux_B0[0] > 0.0 and self.aux_B0[1] > 0.0):
            bad.append("aux_B0")
        if not 0.0 < self.p_aR < 1.0:
            bad.append("p_aR")
        if bad:
            raise ParameterDomainError(f"invalid prior hyperparameters: {bad}")
        object.__setattr__(self, "aux_b0", (float(self.aux_b0[0]), float(self.aux_b0[1])))
        object.__setattr__(self, "aux_B0", (float(self.aux_B0[0]), float(self.aux_B0[1])))

    def resolved(self, d: Dataset) -> "PriorConfig":
        """Fill the data-driven default for ``mu0_mu_x``."""
        if self.mu0_mu_x is not None:
            return self
        mean_x = (d.x0 + float(d.x.sum())) / (d.T + 1)
        return replace(self, mu0_mu_x=mean_x)


@dataclass(frozen=True)
class Schedule:
    """Chain length bookkeeping: burn-in ``m0``, kept phase ``m1``, thinning
    ``c``.  ``m = m1 // c`` draws are retained."""

    m0: int
    m1: int
    c: int

    def __post_init__(self):
        if self.m0 < 1 or self.m1 < 1:
            raise ConfigError("m0 and m1 must be >= 1")
        if not 1 <= self.c <= self.m1:
            raise ConfigError("thinning must satisfy 1 <= c <= m1")

    @property
    def m(self) -> int:
        return self.m1 // self.c


@dataclass(frozen=True)
class SamplerOptions:
    """Algorithm variants.

    step1_mode
        ``"marginal"`` draws (alpha_y, beta) from the return-equation
        regression with the marginal error variance; ``"conditional"``
        regresses on the orthogonalized response (subtracting psi times the
        ratio innovations) with the orthogonal variance.
    sigma_x2_mode
        ``"augmented"`` folds the initial-observation term into the
        inverse-gamma proposal; ``"plain"`` keeps the conditional-likelihood
        proposal and moves that term into the acceptance ratio.  Both target
        the same posterior.
    fixed_sigma0_beta
        When set, the beta prior variance is this constant instead of the
        state-dependent shrinkage variance; the MH prior-ratio factors then
        cancel.
    condition_on_x0
        When True the initial observation enters no density (the likelihood
        conditions on it); default False keeps its stationary density.
    fix_a0R
        Pin the shrinkage shape to a fixed value and skip its update.
    """

    step1_mode: Literal["marginal", "conditional"] = "marginal"
    sigma_x2_mode: Literal["augmented", "plain"] = "augmented"
    fixed_sigma0_beta: float | None = None
    condition_on_x0: bool = False
    fix_a0R: float | None = None

    def __post_init__(self):
        if self.step1_mode not in ("marginal", "conditional"):
            raise ConfigError(f"unknown step1_mode: {self.step1_mode!r}")
        if self.sigma_x2_mode not in ("augmented", "plain"):
            raise ConfigError(f"unknown sigma_x2_mode: {self.sigma_x2_mode!r}")
        if self.fixed_sigma0_beta is not None and not self.fixed_sigma0_beta > 0.0:
            raise ConfigError("fixed_sigma0_beta must be positive")
        if self.fix_a0R is not None and not self.fix_a0R > 0.0:
            raise ConfigError("fix_a0R must be positive")


@dataclass
class SamplerState:
    alpha_x: float
    alpha_y: float
    phi: float
    beta: float
    sigma_x2: float
    psi: float
    sigma_y2_tilde: float
    Sigma_beta: float
    Z_beta: float
    a0R: float

    def copy(self) -> "SamplerState":
        return replace(self)


@dataclass
class ChainRecord:
    """Retained draws plus the step-1 conditional moments (b_T, B_T) and the
    beta prior variance g evaluated at each kept state."""

    draws: dict[str, np.ndarray]
    m0: int
    m1: int
    c: int
    accepted: dict[str, int]
    proposed: dict[str, int]
    options: SamplerOptions = field(default_factory=SamplerOptions)

    @property
    def M(self) -> int:
        return len(self.draws["beta"])

    def acceptance_rates(self) -> dict[str, float]:
        return {k: self.accepted[k] / self.proposed[k]
                for k in self.proposed if self.proposed[k] > 0}

    def column(self, name: str) -> np.ndarray:
        return self.draws[name]

    def to_csv(self, path) -> None:
        cols = [self.draws[k] for k in RECORD_COLUMNS]
        with open(path, "w") as fh:
            fh.write(",".join(RECORD_COLUMNS) + "\n")
            for row in zip(*cols):
                fh.write(",".join(format(v, ".17g") for v in row) + "\n")
        meta = {
            "m0": self.m0, "m1": self.m1, "c": self.c,
            "accepted": self.accepted, "proposed": self.proposed,
            "options": asdict(self.options),
        }
        with open(str(path) + ".meta.json", "w") as fh:
            json.dump(meta, fh, indent=1)

    @classmethod
    def from_csv(cls, path) -> "ChainRecord":
        with open(path) as fh:
            header = fh.readline().strip().split(",")
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        if sorted(header) != sorted(RECORD_COLUMNS):
            raise DataValidationError(f"unexpected chain columns: {header}")
        draws = {name: np.ascontiguousarray(data[:, i])
                 for i, name in enumerate(header)}
        meta_path = str(path) + ".meta.json"
        try:
            with open(meta_path) as fh:
                meta = json.load(fh)
            options = SamplerOptions(**{
                k: (tuple(v) if isinstance(v, list) else v)
                for k, v in meta["options"].items()})
            return cls(draws=draws, m0=meta["m0"], m1=meta["m1"], c=meta["c"],
                       accepted=meta["accepted"], proposed=meta["proposed"],
                       options=options)
        except FileNotFoundError:
            m = len(draws["beta"])
            return cls(draws=draws, m0=0, m1=m, c=1,
                       accepted={}, proposed={})


class _DirectDraws:
    """Scalar draws straight from a numpy generator."""

    __slots__ = ("_gen",)

    def __init__(self, gen: np.random.Generator):
        self._gen = gen

    def normal(self) -> float:
        return float(self._gen.standard_normal())

    def uniform(self) -> float:
        return float(self._gen.random())

    def gamma(self, shape: float) -> float:
        return float(self._gen.standard_gamma(shape))


class _BufferedDraws:
    """Block-buffered scalar draws; cuts per-call overhead in the chain loop.

    All blocks come from one generator, so the stream is reproducible: refill
    order is a deterministic function of the seed and the chain trajectory.
    Gamma buffers are keyed by shape (the sampler uses a few fixed shapes).
    """

    __slots__ = ("_gen", "_size", "_n", "_ni", "_u", "_ui", "_g")

    def __init__(self, gen: np.random.Generator, size: int = 8192):
        self._gen = gen
        self._size = size
        self._n = gen.standard_normal(size)
        self._ni = 0
        self._u = gen.random(size)
        self._ui = 0
        self._g: dict[float, list] = {}

    def normal(self) -> float:
        i = self._ni
        if i == self._size:
            self._n = self._gen.standard_normal(self._size)
            i = 0
        self._ni = i + 1
        return float(self._n[i])

    def uniform(self) -> float:
        i = self._ui
        if i == self._size:
            self._u = self._gen.random(self._size)
            i = 0
        self._ui = i + 1
        return float(self._u[i])

    def gamma(self, shape: float) -> float:
        buf = self._g.get(shape)
        if buf is None or buf[1] == 2048:
            self._g[shape] = buf = [self._gen.standard_gamma(shape, 2048), 0]
        v = buf[0][buf[1]]
        buf[1] += 1
        return float(v)


def _accept(dr, log_a: float) -> bool:
    if log_a >= 0.0:
        return True
    u = dr.uniform()
    if u <= 0.0:
        return log_a > -math.inf
    return math.log(u) < log_a


class _Stats:
    """Data moments that reduce every sweep to O(1) scalar arithmetic."""

    __slots__ = ("n", "x0", "sl", "sll", "sx", "sxx", "sxl",
                 "sy", "syy", "syl", "sxy")

    def __init__(self, d: Dataset):
        xl, x, y = d.x_lag, d.x, d.y
        self.n = d.T
        self.x0 = float(d.x0)
        self.sl = float(xl.sum())
        self.sll = float(xl @ xl)
        self.sx = float(x.sum())
        self.sxx = float(x @ x)
        self.sxl = float(x @ xl)
        self.sy = float(y.sum())
        self.syy = float(y @ y)
        self.syl = float(y @ xl)
        self.sxy = float(x @ y)


class _AuxCache:
    """Step-2 auxiliary posterior covariance (data and prior fixed per run)."""

    __slots__ = ("BT11", "BT12", "BT22", "L11", "L21", "L22",
                 "B0inv1", "B0inv2", "b01", "b02")

    def __init__(self, s: _Stats, prior: PriorConfig):
        self.B0inv1 = 1.0 / prior.aux_B0[0]
        self.B0inv2 = 1.0 / prior.aux_B0[1]
        self.b01, self.b02 = prior.aux_b0
        m11 = s.n + self.B0inv1
        m22 = s.sll + self.B0inv2
        m12 = s.sl
        det = m11 * m22 - m12 * m12
        if det <= 0.0:
            raise SingularDesignError("degenerate lagged-regressor design")
        self.BT11 = m22 / det
        self.BT12 = -m12 / det
        self.BT22 = m11 / det
        self.L11 = math.sqrt(self.BT11)
        self.L21 = self.BT12 / self.L11
        l22sq = self.BT22 - self.L21 * self.L21
        if l22sq <= 0.0:
            raise SingularDesignError("degenerate lagged-regressor design")
        self.L22 = math.sqrt(l22sq)


# -- closed-form residual moments -------------------------------------------

def _sum_eps_x_sq(s: _Stats, ax: float, ph: float) -> float:
    return (s.sxx + ax * ax * s.n + ph * ph * s.sll
            - 2.0 * ax * s.sx - 2.0 * ph * s.sxl + 2.0 * ax * ph * s.sl)


def _sum_eps_y_sq(s: _Stats, ay: float, b: float) -> float:
    return (s.syy + ay * ay * s.n + b * b * s.sll
            - 2.0 * ay * s.sy - 2.0 * b * s.syl + 2.0 * ay * b * s.sl)


def _sum_eps_xy(s: _Stats, ax: float, ph: float, ay: float, b: float) -> float:
    return (s.sxy - ay * s.sx - b * s.sxl - ax * s.sy + ax * ay * s.n
            + ax * b * s.sl - ph * s.syl + ph * ay * s.sl + ph * b * s.sll)


def _beta_prior_var(state: SamplerState, opt: SamplerOptions, *,
                    phi=None, psi=None, sigma_x2=None, sigma_y2_tilde=None) -> float:
    # unchecked inline form of model.sigma0_beta; chain invariants keep the
    # arguments in-domain and this sits on the hot path
    if opt.fixed_sigma0_beta is not None:
        return opt.fixed_sigma0_beta
    ph = state.phi if phi is None else phi
    ps = state.psi if psi is None else psi
    sx = state.sigma_x2 if sigma_x2 is None else sigma_x2
    sy = state.sigma_y2_tilde if sigma_y2_tilde is None else sigma_y2_tilde
    return state.Sigma_beta * (sy / sx + ps * ps) * (1.0 - ph * ph)


def _normal_logratio(x: float, mu: float, v_new: float, v_old: float) -> float:
    """log N(x; mu, v_new) - log N(x; mu, v_old)."""
    z = x - mu
    return 0.5 * math.log(v_old / v_new) + 0.5 * z * z * (1.0 / v_old - 1.0 / v_new)


# -- step 1: return-equation coefficients ------------------------------------

def _step1_moments(s: _Stats, state: SamplerState, prior: PriorConfig,
                   opt: SamplerOptions) -> tuple[float, float, float, float, float]:
    """Conditional posterior moments (mu1, mu2, S11, S12, S22) of
    (alpha_y, beta)."""
    g = _beta_prior_var(state, opt)
    if opt.step1_mode == "marginal":
        var = state.sigma_y2_tilde + state.sigma_x2 * state.psi * state.psi
        r1, r2 = s.sy, s.syl
    else:
        var = state.sigma_y2_tilde
        sum_ex = s.sx - state.alpha_x * s.n - state.phi * s.sl
        sum_ex_lag = s.sxl - state.alpha_x * s.sl - state.phi * s.sll
        r1 = s.sy - state.psi * sum_ex
        r2 = s.syl - state.psi * sum_ex_lag
    a11 = s.n / var + 1.0 / prior.Sigma0_alpha_y
    a12 = s.sl / var
    a22 = s.sll / var + 1.0 / g
    b1 = r1 / var + prior.mu0_alpha_y / prior.Sigma0_alpha_y
    b2 = r2 / var + prior.mu0_beta / g
    det = a11 * a22 - a12 * a12
    if det <= 0.0 or a11 <= 0.0:
        raise NumericalFailureError("step-1 posterior covariance is not PD")
    S11 = a22 / det
    S12 = -a12 / det
    S22 = a11 / det
    mu1 = S11 * b1 + S12 * b2
    mu2 = S12 * b1 + S22 * b2
    return mu1, mu2, S11, S12, S22


def _do_step1(state: SamplerState, s: _Stats, prior: PriorConfig,
              opt: SamplerOptions, dr) -> tuple[float, float]:
    mu1, mu2, S11, S12, S22 = _step1_moments(s, state, prior, opt)
    L11 = math.sqrt(S11)
    L21 = S12 / L11
    l22sq = S22 - L21 * L21
    if l22sq <= 0.0:
        raise NumericalFailureError("step-1 posterior covariance is not PD")
    z1 = dr.normal()
    z2 = dr.normal()
    state.alpha_y = mu1 + L11 * z1
    state.beta = mu2 + L21 * z1 + math.sqrt(l22sq) * z2
    return mu2, S22


# -- step 2: ratio-equation coefficients --------------------------------------

def _ar_log_accept(axn: float, phn: float, axo: float, pho: float, *,
                   state: SamplerState, prior: PriorConfig, opt: SamplerOptions,
                   x0: float, sigma_x2_tilde: float) -> float:
    """Log acceptance ratio of the step-2 independence MH move.

    Factors: initial-observation density ratio, beta prior-ordinate ratio,
    true coefficient-prior ratio, and the auxiliary-prior correction.
    """
    one_m_o = 1.0 - pho * pho
    one_m_n = 1.0 - phn * phn
    mu_o = axo / (1.0 - pho)
    mu_n = axn / (1.0 - phn)
    la = 0.0
    if not opt.condition_on_x0:
        do = x0 - mu_o
        dn = x0 - mu_n
        la += 0.5 * math.log(one_m_n / one_m_o) \
            + (do * do * one_m_o - dn * dn * one_m_n) / (2.0 * state.sigma_x2)
    if opt.fixed_sigma0_beta is None:
        g_o = _beta_prior_var(state, opt, phi=pho)
        g_n = _beta_prior_var(state, opt, phi=phn)
        la += _normal_logratio(state.beta, prior.mu0_beta, g_n, g_o)
    la += math.log((1.0 - pho) / (1.0 - phn)) \
        + ((mu_o - prior.mu0_mu_x) ** 2 - (mu_n - prior.mu0_mu_x) ** 2) / (2.0 * prior.S0_mu_x) \
        + 0.5 * math.log(one_m_o / one_m_n)
    B0inv1 = 1.0 / prior.aux_B0[0]
    B0inv2 = 1.0 / prior.aux_B0[1]
    b01, b02 = prior.aux_b0
    q_n = (axn - b01) ** 2 * B0inv1 + (phn - b02) ** 2 * B0inv2
    q_o = (axo - b01) ** 2 * B0inv1 + (pho - b02) ** 2 * B0inv2
    la += (q_n - q_o) / (2.0 * sigma_x2_tilde)
    return la


def _do_step2(state: SamplerState, s: _Stats, aux: _AuxCache, prior: PriorConfig,
              opt: SamplerOptions, dr, accepted: dict, proposed: dict) -> None:
    sigma_y2 = state.sigma_y2_tilde + state.sigma_x2 * state.psi * state.psi
    c_u = state.psi * state.sigma_x2 / sigma_y2
    st_x2 = state.sigma_x2 * state.sigma_y2_tilde / sigma_y2
    ey_sum = s.sy - state.alpha_y * s.n - state.beta * s.sl
    ey_lag = s.syl - state.alpha_y * s.sl - state.beta * s.sll
    t1 = (s.sx - c_u * ey_sum) + aux.B0inv1 * aux.b01
    t2 = (s.sxl - c_u * ey_lag) + aux.B0inv2 * aux.b02
    bT1 = aux.BT11 * t1 + aux.BT12 * t2
    bT2 = aux.BT12 * t1 + aux.BT22 * t2
    sd = math.sqrt(st_x2)
    z1 = dr.normal()
    z2 = dr.normal()
    axn = bT1 + sd * aux.L11 * z1
    phn = bT2 + sd * (aux.L21 * z1 + aux.L22 * z2)
    proposed["ar_coeffs"] += 1
    if not 0.0 <= phn < 1.0:
        return
    la = _ar_log_accept(axn, phn, state.alpha_x, state.phi, state=state,
                        prior=prior, opt=opt, x0=s.x0, sigma_x2_tilde=st_x2)
    if _accept(dr, la):
        state.alpha_x = axn
        state.phi = phn
        accepted["ar_coeffs"] += 1


# -- step 3: innovation-regression coefficient -------------------------------

def _psi_moments(sum_ex_sq: float, sum_ex_ey: float, sigma_y2_tilde: float,
                 prior: PriorConfig) -> tuple[float, float]:
    prec = 1.0 / prior.Sigma0_psi + sum_ex_sq / sigma_y2_tilde
    var = 1.0 / prec
    mean = var * (prior.mu0_psi / prior.Sigma0_psi + sum_ex_ey / sigma_y2_tilde)
    return mean, var


def _do_step3(state: SamplerState, s: _Stats, prior: PriorConfig,
              opt: SamplerOptions, dr, accepted: dict, proposed: dict) -> None:
    sum_ex_sq = _sum_eps_x_sq(s, state.alpha_x, state.phi)
    sum_ex_ey = _sum_eps_xy(s, state.alpha_x, state.phi, state.alpha_y, state.beta)
    mean, var = _psi_moments(sum_ex_sq, sum_ex_ey, state.sigma_y2_tilde, prior)
    psn = mean + math.sqrt(var) * dr.normal()
    proposed["psi"] += 1
    if opt.fixed_sigma0_beta is None:
        g_o = _beta_prior_var(state, opt)
        g_n = _beta_prior_var(state, opt, psi=psn)
        la = _normal_logratio(state.beta, prior.mu0_beta, g_n, g_o)
    else:
        la = 0.0
    if _accept(dr, la):
        state.psi = psn
        accepted["psi"] += 1


# -- steps 4 and 5: innovation variances -------------------------------------

def _sigma_x2_proposal(state: SamplerState, s: _Stats, prior: PriorConfig,
                       opt: SamplerOptions) -> tuple[float, float]:
    """(shape, scale) of the inverse-gamma proposal for sigma_x2."""
    sum_ex_sq = _sum_eps_x_sq(s, state.alpha_x, state.phi)
    shape = prior.nu_x + 0.5 * s.n
    scale = prior.S0_x + 0.5 * sum_ex_sq
    if opt.sigma_x2_mode == "augmented" and not opt.condition_on_x0:
        one_m = 1.0 - state.phi * state.phi
        dev = s.x0 - state.alpha_x / (1.0 - state.phi)
        shape += 0.5
        scale += 0.5 * one_m * dev * dev
    return shape, scale


def _do_step4(state: SamplerState, s: _Stats, prior: PriorConfig,
              opt: SamplerOptions, dr, accepted: dict, proposed: dict) -> None:
    shape, scale = _sigma_x2_proposal(state, s, prior, opt)
    sxn = scale / dr.gamma(shape)
    proposed["sigma_x2"] += 1
    la = 0.0
    if opt.fixed_sigma0_beta is None:
        g_o = _beta_prior_var(state, opt)
        g_n = _beta_prior_var(state, opt, sigma_x2=sxn)
        la += _normal_logratio(state.beta, prior.mu0_beta, g_n, g_o)
    if opt.sigma_x2_mode == "plain" and not opt.condition_on_x0:
        # Initial-observation term absent from the proposal moves here.
        one_m = 1.0 - state.phi * state.phi
        dev = s.x0 - state.alpha_x / (1.0 - state.phi)
        la += 0.5 * math.log(state.sigma_x2 / sxn) \
            + 0.5 * one_m * dev * dev * (1.0 / state.sigma_x2 - 1.0 / sxn)
    if _accept(dr, la):
        state.sigma_x2 = sxn
        accepted["sigma_x2"] += 1


def _sigma_y2_proposal(state: SamplerState, s: _Stats,
                       prior: PriorConfig) -> tuple[float, float]:
    """(shape, scale) of the inverse-gamma proposal for sigma_y2_tilde."""
    sum_ex_sq = _sum_eps_x_sq(s, state.alpha_x, state.phi)
    sum_ey_sq = _sum_eps_y_sq(s, state.alpha_y, state.beta)
    sum_ex_ey = _sum_eps_xy(s, state.alpha_x, state.phi, state.alpha_y, state.beta)
    resid = sum_ey_sq - 2.0 * state.psi * sum_ex_ey + state.psi * state.psi * sum_ex_sq
    return prior.nu_y + 0.5 * s.n, prior.S0_y + 0.5 * resid


def _do_step5(state: SamplerState, s: _Stats, prior: PriorConfig,
              opt: SamplerOptions, dr, accepted: dict, proposed: dict) -> None:
    shape, scale = _sigma_y2_proposal(state, s, prior)
    syn = scale / dr.gamma(shape)
    proposed["sigma_y2_tilde"] += 1
    if opt.fixed_sigma0_beta is None:
        g_o = _beta_prior_var(state, opt)
        g_n = _beta_prior_var(state, opt, sigma_y2_tilde=syn)
        la = _normal_logratio(state.beta, prior.mu0_beta, g_n, g_o)
    else:
        la = 0.0
    if _accept(dr, la):
        state.sigma_y2_tilde = syn
        accepted["sigma_y2_tilde"] += 1


# -- step 6: shrinkage scale ---------------------------------------------------

def shrinkage_quadratic(beta: float, mu0_beta: float, phi: float, psi: float,
                        sigma_x2: float, sigma_y2_tilde: float) -> float:
    """Quadratic term entering the shrinkage-scale posterior scale."""
    dev = beta - mu0_beta
    factor = sigma_y2_tilde / sigma_x2 + psi * psi
    return dev * dev / (2.0 * (1.0 - phi * phi)) / factor


def _do_step6(state: SamplerState, prior: PriorConfig, opt: SamplerOptions,
              dr) -> None:
    rate = 1.0 + 1.0 / state.Sigma_beta
    state.Z_beta = dr.gamma(state.a0R + prior.b0_R) / rate
    if opt.fixed_sigma0_beta is None:
        s_beta = shrinkage_quadratic(state.beta, prior.mu0_beta, state.phi,
                                     state.psi, state.sigma_x2, state.sigma_y2_tilde)
        shape = prior.b0_R + 0.5
    else:
        # Beta decoupled from the shrinkage scale: conditional is the prior.
        s_beta = 0.0
        shape = prior.b0_R
    state.Sigma_beta = (state.Z_beta + s_beta) / dr.gamma(shape)


# -- step 7: shrinkage shape ----------------------------------------------------

def _a0R_log_accept(a_new: float, a_old: float, Sigma_beta: float,
                    prior: PriorConfig) -> float:
    la = (a_new - a_old) * (math.log(Sigma_beta) - math.log1p(Sigma_beta)) \
        + math.lgamma(a_old) - math.lgamma(a_old + prior.b0_R) \
        + math.lgamma(a_new + prior.b0_R) - math.lgamma(a_new)
    p_new = prior.p_aR if a_new == prior.aR_high else 1.0 - prior.p_aR
    p_old = prior.p_aR if a_old == prior.aR_high else 1.0 - prior.p_aR
    return la + math.log(p_new / p_old)


def _do_step7(state: SamplerState, prior: PriorConfig, opt: SamplerOptions,
              dr, accepted: dict, proposed: dict) -> None:
    if opt.fix_a0R is not None:
        return
    a_new = prior.aR_high if state.a0R == prior.aR_low else prior.aR_low
    proposed["a0R"] += 1
    la = _a0R_log_accept(a_new, state.a0R, state.Sigma_beta, prior)
    if _accept(dr, la):
        state.a0R = a_new
        accepted["a0R"] += 1


# -- public per-step interfaces (tests drive these directly) -----------------

def step_return_coeffs(state: SamplerState, d: Dataset, prior: PriorConfig,
                       rng: RngStream, options: SamplerOptions | None = None
                       ) -> tuple[float, float, float, float]:
    """Draw (alpha_y, beta); returns them with the conditional posterior mean
    and variance of beta (b_T, B_T)."""
    opt = options or SamplerOptions()
    work = state.copy()
    bT, BT = _do_step1(work, _Stats(d), prior.resolved(d), opt,
                       _DirectDraws(rng.generator))
    return work.alpha_y, work.beta, bT, BT


def step_ar_coeffs(state: SamplerState, d: Dataset, prior: PriorConfig,
                   rng: RngStream, options: SamplerOptions | None = None
                   ) -> tuple[float, float, bool]:
    opt = options or SamplerOptions()
    s = _Stats(d)
    p = prior.resolved(d)
    work = state.copy()
    acc, prop = _new_counters()
    _do_step2(work, s, _AuxCache(s, p), p, opt, _DirectDraws(rng.generator),
              acc, prop)
    return work.alpha_x, work.phi, acc["ar_coeffs"] == 1


def step_psi(state: SamplerState, d: Dataset, prior: PriorConfig,
             rng: RngStream, options: SamplerOptions | None = None
             ) -> tuple[float, bool]:
    opt = options or SamplerOptions()
    work = state.copy()
    acc, prop = _new_counters()
    _do_step3(work, _Stats(d), prior.resolved(d), opt,
              _DirectDraws(rng.generator), acc, prop)
    return work.psi, acc["psi"] == 1


def step_sigma_x2(state: SamplerState, d: Dataset, prior: PriorConfig,
                  rng: RngStream, options: SamplerOptions | None = None
                  ) -> tuple[float, bool]:
    opt = options or SamplerOptions()
    work = state.copy()
    acc, prop = _new_counters()
    _do_step4(work, _Stats(d), prior.resolved(d), opt,
              _DirectDraws(rng.generator), acc, prop)
    return work.sigma_x2, acc["sigma_x2"] == 1


def step_sigma_y2_tilde(state: SamplerState, d: Dataset, prior: PriorConfig,
                        rng: RngStream, options: SamplerOptions | None = None
                        ) -> tuple[float, bool]:
    opt = options or SamplerOptions()
    work = state.copy()
    acc, prop = _new_counters()
    _do_step5(work, _Stats(d), prior.resolved(d), opt,
              _DirectDraws(rng.generator), acc, prop)
    return work.sigma_y2_tilde, acc["sigma_y2_tilde"] == 1


def step_sigma_beta(state: SamplerState, prior: PriorConfig, rng: RngStream,
                    options: SamplerOptions | None = None) -> tuple[float, float]:
    opt = options or SamplerOptions()
    work = state.copy()
    _do_step6(work, prior, opt, _DirectDraws(rng.generator))
    return work.Sigma_beta, work.Z_beta


def step_a0R(state: SamplerState, prior: PriorConfig, rng: RngStream,
             options: SamplerOptions | None = None) -> tuple[float, bool]:
    opt = options or SamplerOptions()
    work = state.copy()
    acc, prop = _new_counters()
    _do_step7(work, prior, opt, _DirectDraws(rng.generator), acc, prop)
    return work.a0R, acc["a0R"] == 1


def _new_counters() -> tuple[dict, dict]:
    return {k: 0 for k in MH_STEPS}, {k: 0 for k in MH_STEPS}


# -- orchestration ------------------------------------------------------------

def initial_state(d: Dataset, prior: PriorConfig,
                  options: SamplerOptions | None = None) -> SamplerState:
    """Starting values from equation-by-equation least squares."""
    opt = options or SamplerOptions()
    ols = ols_fit(d)
    sigma_x2 = max(ols.sigma_x2_hat, 1e-12)
    psi = ols.sigma_xy_hat / sigma_x2
    sigma_y2_tilde = ols.sigma_y2_hat - ols.sigma_xy_hat ** 2 / sigma_x2
    sigma_y2_tilde = max(sigma_y2_tilde, 1e-8 * ols.sigma_y2_hat, 1e-12)
    a0R = opt.fix_a0R if opt.fix_a0R is not None else prior.aR_high
    return SamplerState(
        alpha_x=ols.alpha_x_hat,
        alpha_y=ols.alpha_y_hat,
        phi=min(max(ols.phi_hat, 0.0), 0.999),
        beta=ols.beta_hat,
        sigma_x2=sigma_x2,
        psi=psi,
        sigma_y2_tilde=sigma_y2_tilde,
        Sigma_beta=1.0,
        Z_beta=1.0,
        a0R=a0R,
    )


def sample_prior_state(prior: PriorConfig, rng: RngStream,
                       options: SamplerOptions | None = None) -> SamplerState:
    """One draw of the full parameter vector from its prior.

    Requires a concrete ``mu0_mu_x`` (resolve the prior against data first,
    or set the field explicitly)."""
    opt = options or SamplerOptions()
    if prior.mu0_mu_x is None:
        raise ConfigError("sample_prior_state needs a concrete mu0_mu_x")
    if opt.fix_a0R is not None:
        a0R = opt.fix_a0R
    else:
        a0R = prior.aR_high if float(rng.generator.random()) < prior.p_aR \
            else prior.aR_low
    Z_beta = dists.sample(dists.Gamma(a0R, 1.0), rng)
    Sigma_beta = dists.sample(dists.InverseGamma(prior.b0_R, Z_beta), rng)
    phi = dists.sample_phi_reference(rng)
    mu_x = dists.sample(dists.Normal(prior.mu0_mu_x, prior.S0_mu_x), rng)
    alpha_x = mu_x * (1.0 - phi)
    alpha_y = dists.sample(dists.Normal(prior.mu0_alpha_y, prior.Sigma0_alpha_y), rng)
    psi = dists.sample(dists.Normal(prior.mu0_psi, prior.Sigma0_psi), rng)
    sigma_x2 = dists.sample(dists.InverseGamma(prior.nu_x, prior.S0_x), rng)
    sigma_y2_tilde = dists.sample(dists.InverseGamma(prior.nu_y, prior.S0_y), rng)
    if opt.fixed_sigma0_beta is not None:
        g = opt.fixed_sigma0_beta
    else:
        g = sigma0_beta(phi, psi, sigma_x2, sigma_y2_tilde, Sigma_beta)
    beta = dists.sample(dists.Normal(prior.mu0_beta, g), rng)
    return SamplerState(alpha_x=alpha_x, alpha_y=alpha_y, phi=phi, beta=beta,
                        sigma_x2=sigma_x2, psi=psi, sigma_y2_tilde=sigma_y2_tilde,
                        Sigma_beta=Sigma_beta, Z_beta=Z_beta, a0R=a0R)


def run_sweep(state: SamplerState, d: Dataset, prior: PriorConfig,
              rng: RngStream, options: SamplerOptions | None = None
              ) -> tuple[float, float]:
    """One full sweep over all seven updates, mutating ``state`` in place.

    Returns the step-1 conditional moments (b_T, B_T)."""
    opt = options or SamplerOptions()
    s = _Stats(d)
    p = prior.resolved(d)
    aux = _AuxCache(s, p)
    acc, prop = _new_counters()
    dr = _DirectDraws(rng.generator)
    bT, BT = _do_step1(state, s, p, opt, dr)
    _do_step2(state, s, aux, p, opt, dr, acc, prop)
    _do_step3(state, s, p, opt, dr, acc, prop)
    _do_step4(state, s, p, opt, dr, acc, prop)
    _do_step5(state, s, p, opt, dr, acc, prop)
    _do_step6(state, p, opt, dr)
    _do_step7(state, p, opt, dr, acc, prop)
    return bT, BT


def run_chain(d: Dataset, prior: PriorConfig, schedule: Schedule,
              rng: RngStream, options: SamplerOptions | None = None) -> ChainRecord:
    """Run the sampler for ``m0 + m1`` sweeps, discard the first ``m0``, keep
    every ``c``-th of the remainder, and record the kept draws together with
    (b_T, B_T) and the beta prior variance g at each kept state."""
    opt = options or SamplerOptions()
    s = _Stats(d)
    p = prior.resolved(d)
    aux = _AuxCache(s, p)
    state = initial_state(d, p, opt)
    accepted, proposed = _new_counters()
    dr = _BufferedDraws(rng.generator)

    m = schedule.m
    out = {name: np.empty(m) for name in RECORD_COLUMNS}
    kept = 0
    total = schedule.m0 + schedule.m1
    for it in range(1, total + 1):
        bT, BT = _do_step1(state, s, p, opt, dr)
        _do_step2(state, s, aux, p, opt, dr, accepted, proposed)
        _do_step3(state, s, p, opt, dr, accepted, proposed)
        _do_step4(state, s, p, opt, dr, accepted, proposed)
        _do_step5(state, s, p, opt, dr, accepted, proposed)
        _do_step6(state, p, opt, dr)
        _do_step7(state, p, opt, dr, accepted, proposed)
        k = it - schedule.m0
        if k > 0 and k % schedule.c == 0 and kept < m:
            out["alpha_x"][kept] = state.alpha_x
            out["alpha_y"][kept] = state.alpha_y
            out["phi"][kept] = state.phi
            out["beta"][kept] = state.beta
            out["sigma_x2"][kept] = state.sigma_x2
            out["psi"][kept] = state.psi
            out["sigma_y2_tilde"][kept] = state.sigma_y2_tilde
            out["Sigma_beta"][kept] = state.Sigma_beta
            out["Z_beta"][kept] = state.Z_beta
            out["a0R"][kept] = state.a0R
            out["b_T"][kept] = bT
            out["B_T"][kept] = BT
            out["g"][kept] = _beta_prior_var(state, opt)
            kept += 1
    return ChainRecord(draws=out, m0=schedule.m0, m1=schedule.m1, c=schedule.c,
                       accepted=accepted, proposed=proposed, options=opt)
