"""Replicated simulation studies: run all three estimators on simulated
datasets, filter Bayesian replications by effective sample size, aggregate
the error metrics and test error rates, and emit table and figure data.

Replication i of a study with seed s uses the random stream (s, i), so serial
and parallel executions are bit-identical.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from . import bayes, diag
from .dists import RngStream, kde
from .errors import (
    ConfigError,
    InsufficientDataError,
    PredbayesError,
    StudyError,
)
from .freq import ols_fit, rbe_fit, t_test
from .model import ReducedFormParams, simulate_dataset
from .sampler import ChainRecord, PriorConfig, SamplerOptions, Schedule, run_chain

DGP0 = ReducedFormParams(alpha_x=-0.15, alpha_y=0.6, phi=0.95, beta=0.0,
                         sigma_x2=0.02, sigma_y2=0.04, sigma_xy=-0.02)
DGP1 = replace(DGP0, beta=0.1)

DESK_SCHEDULE = Schedule(m0=2000, m1=81000, c=45)
FULL_SCHEDULE = Schedule(m0=10_000, m1=90_000, c=45)
EMPIRICAL_SCHEDULE = Schedule(m0=100_000, m1=900_000, c=30)

DEFAULT_KDE_GRID = np.linspace(-0.3, 0.4, 201)

METHODS = ("ols", "rbe", "bay")
AR_MODES = ("hyperprior", "fixed_low", "fixed_high")


@dataclass(frozen=True)
class Metrics:
    """Bias, dispersion, root mean square error and mean absolute error of a
    point estimator across replications (all with a 1/n denominator, so
    rmse^2 = B^2 + sigma^2 exactly)."""

    B: float
    sigma: float
    rmse: float
    mae: float


def metrics(estimates: Sequence[float], truth: float) -> Metrics:
    est = np.asarray(estimates, dtype=float)
    if est.size == 0:
        raise InsufficientDataError("no estimates to aggregate")
    err = est - truth
    b = float(err.mean())
    sigma = float(np.sqrt(((est - est.mean()) ** 2).mean()))
    rmse = float(np.sqrt((err ** 2).mean()))
    mae = float(np.abs(err).mean())
    return Metrics(B=b, sigma=sigma, rmse=rmse, mae=mae)


def error_rates(decisions: Sequence[str], truth_is_H0: bool) -> float:
    """False positive rate when the null is true, false negative otherwise."""
    dec = list(decisions)
    if not dec:
        raise InsufficientDataError("no decisions to aggregate")
    if truth_is_H0:
        return sum(d == "H1" for d in dec) / len(dec)
    return sum(d == "H0" for d in dec) / len(dec)


@dataclass(frozen=True)
class StudyConfig:
    dgp: ReducedFormParams = DGP0
    beta_grid: tuple[float, ...] = (0.0,)
    T: int = 100
    n: int = 200
    schedule: Schedule = DESK_SCHEDULE
    aR_mode: str = "hyperprior"
    alpha_level: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError("need at least one replication")
        if not 0.0 < self.alpha_level < 1.0:
            raise ConfigError("alpha_level must be in (0, 1)")
        if len(self.beta_grid) == 0:
            raise ConfigError("beta_grid must be nonempty")
        if self.aR_mode not in AR_MODES:
            raise ConfigError(f"aR_mode must be one of {AR_MODES}")
        if self.T < 4:
            raise ConfigError("need T >= 4")
        object.__setattr__(self, "beta_grid", tuple(float(b) for b in self.beta_grid))


@dataclass(frozen=True)
class ReplicationOutcome:
    index: int
    beta_true: float
    failed: bool = False
    error: str | None = None
    estimates: dict = field(default_factory=dict)
    ses: dict = field(default_factory=dict)
    decisions: dict = field(default_factory=dict)
    t_stats: dict = field(default_factory=dict)
    bf01: float = math.nan
    a0R_mean: float = math.nan
    m_eff: dict = field(default_factory=dict)
    ess_passed: bool = False
    beta_density: np.ndarray | None = None
    chain: ChainRecord | None = None


@dataclass
class StudyCell:
    beta_true: float
    truth_is_H0: bool
    outcomes: list[ReplicationOutcome]
    n: int
    n_d: int
    param_metrics: dict
    error_rate: dict

    def kept(self) -> list[ReplicationOutcome]:
        return [o for o in self.outcomes if not o.failed and o.ess_passed]


@dataclass
class StudyResult:
    config: StudyConfig
    prior: PriorConfig
    options: SamplerOptions
    cells: list[StudyCell]
    kde_grid: np.ndarray
    prior_beta_density: np.ndarray

    def digest(self) -> str:
        """Content hash over everything that determines the emitted files."""
        h = hashlib.sha256()
        for cell in self.cells:
            h.update(f"{cell.beta_true:.17g};{cell.n};{cell.n_d}".encode())
            for param, per_method in sorted(cell.param_metrics.items()):
                for method, m in sorted(per_method.items()):
                    h.update(f"{param}.{method}:{m.B:.17g},{m.sigma:.17g},"
                             f"{m.rmse:.17g},{m.mae:.17g}".encode())
            for method, rate in sorted(cell.error_rate.items()):
                h.update(f"{method}={rate:.17g}".encode())
            for o in cell.outcomes:
                h.update(f"{o.index}:{o.bf01:.17g}:{o.a0R_mean:.17g}".encode())
                for method in METHODS:
                    est = o.estimates.get(method, {})
                    h.update(f"{est.get('phi', math.nan):.17g},"
                             f"{est.get('beta', math.nan):.17g}".encode())
        return h.hexdigest()


def _effective_options(cfg: StudyConfig, prior: PriorConfig,
                       options: SamplerOptions) -> SamplerOptions:
    if cfg.aR_mode == "fixed_low":
        return replace(options, fix_a0R=prior.aR_low)
    if cfg.aR_mode == "fixed_high":
        return replace(options, fix_a0R=prior.aR_high)
    return options


def run_replication(cfg: StudyConfig, prior: PriorConfig, options: SamplerOptions,
                    index: int, beta_true: float, keep_trace: bool = False,
                    bf_prior_draws: int | None = None,
                    kde_grid: np.ndarray | None = None) -> ReplicationOutcome:
    """One simulated dataset pushed through all three estimators and tests."""
    grid = DEFAULT_KDE_GRID if kde_grid is None else kde_grid
    rng = RngStream(cfg.seed, index)
    try:
        dgp = replace(cfg.dgp, beta=beta_true)
        d = simulate_dataset(dgp, cfg.T, rng.child(0))
        ols = ols_fit(d)
        rbe = rbe_fit(d)
        t_ols = t_test(ols.beta_hat, ols.se_beta, ols.dof_beta, cfg.alpha_level)
        t_rbe = t_test(rbe.beta_hat, rbe.se_beta, rbe.dof_beta, cfg.alpha_level)
        rec = run_chain(d, prior, cfg.schedule, rng.child(1), options)
        bf = bayes.bayes_factor_01(rec, prior.resolved(d), bf_prior_draws,
                                   rng.child(2))
        try:
            report = diag.ess_report(rec)
            m_eff, passed = report.m_eff, report.passed
        except PredbayesError:
            # Chains too short to diagnose are kept.
            m_eff, passed = {}, True
        beta_draws = rec.draws["beta"]
        density = kde(beta_draws, grid) if float(np.ptp(beta_draws)) > 0 else None
        return ReplicationOutcome(
            index=index, beta_true=beta_true,
            estimates={
                "ols": {"phi": ols.phi_hat, "beta": ols.beta_hat},
                "rbe": {"phi": rbe.phi_hat, "beta": rbe.beta_hat},
                "bay": {"phi": float(rec.draws["phi"].mean()),
                        "beta": float(beta_draws.mean())},
            },
            ses={"ols": {"phi": ols.se_phi, "beta": ols.se_beta},
                 "rbe": {"phi": rbe.se_phi, "beta": rbe.se_beta}},
            decisions={"ols": "H1" if t_ols.reject else "H0",
                       "rbe": "H1" if t_rbe.reject else "H0",
                       "bay": bf.decision},
            t_stats={"ols": t_ols.statistic, "rbe": t_rbe.statistic},
            bf01=bf.bf01,
            a0R_mean=float(rec.draws["a0R"].mean()),
            m_eff=m_eff, ess_passed=passed,
            beta_density=density,
            chain=rec if keep_trace else None,
        )
    except PredbayesError as exc:
        return ReplicationOutcome(index=index, beta_true=beta_true,
                                  failed=True, error=f"{type(exc).__name__}: {exc}")


def _run_replication_packed(task) -> ReplicationOutcome:
    return run_replication(*task)


def aggregate_cell(cfg: StudyConfig, beta_true: float,
                   outcomes: list[ReplicationOutcome]) -> StudyCell:
    """Aggregate one grid point: metrics over ESS-kept replications plus the
    test error rate per method.  Outcomes are reduced in replication order so
    the aggregates do not depend on arrival order."""
    truth_is_H0 = beta_true == 0.0
    outcomes = sorted(outcomes, key=lambda o: o.index)
    kept = [o for o in outcomes if not o.failed and o.ess_passed]
    param_metrics: dict = {}
    error_rate: dict = {}
    if kept:
        truths = {"phi": cfg.dgp.phi, "beta": beta_true}
        for param, truth in truths.items():
            param_metrics[param] = {
                method: metrics([o.estimates[method][param] for o in kept], truth)
                for method in METHODS
            }
        error_rate = {
            method: error_rates([o.decisions[method] for o in kept], truth_is_H0)
            for method in METHODS
        }
    return StudyCell(beta_true=beta_true, truth_is_H0=truth_is_H0,
                     outcomes=outcomes, n=len(outcomes), n_d=len(kept),
                     param_metrics=param_metrics, error_rate=error_rate)


def run_study(cfg: StudyConfig, prior: PriorConfig | None = None,
              options: SamplerOptions | None = None, jobs: int = 1,
              keep_traces: bool = False, bf_prior_draws: int | None = None,
              kde_grid: np.ndarray | None = None) -> StudyResult:
    """Run the full replication study over the configured beta grid."""
    prior = prior or PriorConfig()
    opt = _effective_options(cfg, prior, options or SamplerOptions())
    grid = DEFAULT_KDE_GRID if kde_grid is None else np.asarray(kde_grid, float)

    tasks = []
    for cell_idx, beta_true in enumerate(cfg.beta_grid):
        for rep in range(cfg.n):
            index = cell_idx * cfg.n + rep
            tasks.append((cfg, prior, opt, index, beta_true, keep_traces,
                          bf_prior_draws, grid))
    if jobs > 1:
        import multiprocessing

        with multiprocessing.Pool(jobs) as pool:
            outcomes = pool.map(_run_replication_packed, tasks, chunksize=1)
    else:
        outcomes = [_run_replication_packed(t) for t in tasks]

    n_failed = sum(o.failed for o in outcomes)
    if n_failed > 0.1 * len(outcomes):
        raise StudyError(f"{n_failed} of {len(outcomes)} replications failed")

    cells = []
    for cell_idx, beta_true in enumerate(cfg.beta_grid):
        chunk = outcomes[cell_idx * cfg.n:(cell_idx + 1) * cfg.n]
        cells.append(aggregate_cell(cfg, beta_true, chunk))

    # Prior density of the predictive coefficient on the figure grid.
    g_draws = bayes.sample_prior_g(prior, 20_000, RngStream(cfg.seed, 2 ** 31))
    dens = np.zeros_like(grid)
    mu0 = prior.mu0_beta
    for lo in range(0, len(g_draws), 4000):
        gg = g_draws[lo:lo + 4000][None, :]
        z = (grid[:, None] - mu0) ** 2 / gg
        dens += (np.exp(-0.5 * z) / np.sqrt(2.0 * math.pi * gg)).sum(axis=1)
    dens /= len(g_draws)

    return StudyResult(config=cfg, prior=prior, options=opt, cells=cells,
                       kde_grid=grid, prior_beta_density=dens)


# -- emission -----------------------------------------------------------------

def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _write_csv(path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def emit_tables(result: StudyResult, path) -> list[str]:
    """Write table and figure data CSVs plus a manifest; returns the paths."""
    if all(cell.n_d == 0 for cell in result.cells):
        raise InsufficientDataError("no usable replications to emit")
    os.makedirs(path, exist_ok=True)
    tables_dir = os.path.join(path, "tables")
    figures_dir = os.path.join(path, "figures")
    os.makedirs(tables_dir, exist_ok=True)
    os.makedirs(figures_dir, exist_ok=True)
    written: list[str] = []

    for param in ("phi", "beta"):
        rows = []
        for cell in result.cells:
            if not cell.param_metrics:
                continue
            for method in METHODS:
                m = cell.param_metrics[param][method]
                row = [_fmt(cell.beta_true), method.upper(), _fmt(m.B),
                       _fmt(m.sigma), _fmt(m.rmse), _fmt(m.mae)]
                if param == "beta":
                    kind = "FP" if cell.truth_is_H0 else "FN"
                    row += [kind, _fmt(cell.error_rate[method])]
                rows.append(row)
        header = ["beta_true", "estimator", "B", "sigma", "RMSE", "MAE"]
        if param == "beta":
            header += ["error_kind", "error_rate"]
        p = os.path.join(tables_dir, f"{param}_metrics.csv")
        _write_csv(p, header, rows)
        written.append(p)

    p = os.path.join(figures_dir, "beta_estimates.csv")
    rows = [[_fmt(c.beta_true), o.index] + [_fmt(o.estimates[m]["beta"]) for m in METHODS]
            for c in result.cells for o in c.kept()]
    _write_csv(p, ["beta_true", "replication", "ols", "rbe", "bay"], rows)
    written.append(p)

    p = os.path.join(figures_dir, "a0r_posterior_means.csv")
    rows = [[_fmt(c.beta_true), o.index, _fmt(o.a0R_mean)]
            for c in result.cells for o in c.kept()]
    _write_csv(p, ["beta_true", "replication", "a0R_posterior_mean"], rows)
    written.append(p)

    p = os.path.join(figures_dir, "beta_posterior_quantiles.csv")
    rows = []
    for cell in result.cells:
        densities = [o.beta_density for o in cell.kept() if o.beta_density is not None]
        if not densities:
            continue
        stack = np.vstack(densities)
        q05, q50, q95 = np.quantile(stack, [0.05, 0.50, 0.95], axis=0)
        for j, b in enumerate(result.kde_grid):
            rows.append([_fmt(cell.beta_true), _fmt(b), _fmt(q05[j]),
                         _fmt(q50[j]), _fmt(q95[j]),
                         _fmt(result.prior_beta_density[j])])
    _write_csv(p, ["beta_true", "beta", "q05", "q50", "q95", "prior_density"], rows)
    written.append(p)

    p = os.path.join(figures_dir, "test_statistics.csv")
    rows = [[_fmt(c.beta_true), o.index, _fmt(o.bf01),
             _fmt(o.t_stats["ols"]), _fmt(o.t_stats["rbe"])]
            for c in result.cells for o in c.kept()]
    _write_csv(p, ["beta_true", "replication", "bf01", "t_ols", "t_rbe"], rows)
    written.append(p)

    p = os.path.join(tables_dir, "ess_reports.csv")
    rows = [[o.index, param, _fmt(m_eff), str(o.ess_passed).lower()]
            for c in result.cells for o in c.outcomes if not o.failed
            for param, m_eff in sorted(o.m_eff.items())]
    _write_csv(p, ["replication", "parameter", "m_eff", "passed"], rows)
    written.append(p)

    traces = [(c, o) for c in result.cells for o in c.outcomes if o.chain is not None]
    if traces:
        rep_dir = os.path.join(path, "replications")
        os.makedirs(rep_dir, exist_ok=True)
        for _, o in traces:
            p = os.path.join(rep_dir, f"rep{o.index:05d}.csv")
            o.chain.to_csv(p)
            written.append(p)

    manifest = {
        "config": {
            "dgp": asdict(result.config.dgp),
            "beta_grid": list(result.config.beta_grid),
            "T": result.config.T, "n": result.config.n,
            "schedule": asdict(result.config.schedule),
            "aR_mode": result.config.aR_mode,
            "alpha_level": result.config.alpha_level,
            "seed": result.config.seed,
        },
        "prior": {k: v for k, v in asdict(result.prior).items()},
        "options": asdict(result.options),
        "n_d": {str(c.beta_true): c.n_d for c in result.cells},
        "content_hash": result.digest(),
    }
    p = os.path.join(path, "manifest.json")
    with open(p, "w") as fh:
        json.dump(manifest, fh, indent=1)
    written.append(p)
    return written
