"""Command-line interface.

Subcommands: ``simulate`` (emit a simulated dataset), ``fit`` (one estimator
on one dataset), ``test`` (frequentist t-tests plus the Bayes factor),
``study`` (full replication study), ``diagnose`` (chain diagnostics export).

Exit codes: 0 success, 1 usage error, 2 data or configuration error,
3 numerical failure.  The environment variable ``PREDBAYES_SEED`` overrides
``--seed``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, replace

from . import bayes, diag
from .dataio import (
    AppConfig,
    default_config,
    load_dataset,
    parse_config,
    render_config,
    save_dataset,
)
from .dists import RngStream
from .errors import (
    ConfigError,
    DataValidationError,
    InsufficientDataError,
    InsufficientDrawsError,
    NumericalFailureError,
    PredbayesError,
    StudyError,
)
from .freq import ols_fit, rbe_fit, t_test
from .model import simulate_dataset
from .sampler import ChainRecord, run_chain
from .study import emit_tables, run_study

_USAGE_EXIT = 1
_DATA_EXIT = 2
_NUMERICAL_EXIT = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    p = _Parser(prog="predbayes", description=__doc__,
                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="emit a simulated dataset CSV")
    sp.add_argument("--config", help="configuration file")
    sp.add_argument("--seed", type=int, help="random seed")
    sp.add_argument("--out", required=True, help="output directory")

    fp = sub.add_parser("fit", help="fit one estimator to a dataset")
    fp.add_argument("--method", required=True, choices=("ols", "rbe", "bayes"))
    fp.add_argument("--data", required=True, help="dataset CSV")
    fp.add_argument("--config", help="configuration file")
    fp.add_argument("--seed", type=int, help="random seed")
    fp.add_argument("--out", required=True, help="output directory")

    tp = sub.add_parser("test", help="predictability tests on a dataset")
    tp.add_argument("--data", required=True, help="dataset CSV")
    tp.add_argument("--config", help="configuration file")
    tp.add_argument("--seed", type=int, help="random seed")

    yp = sub.add_parser("study", help="run the replication study")
    yp.add_argument("--config", help="configuration file")
    yp.add_argument("--seed", type=int, help="random seed")
    yp.add_argument("--jobs", type=int, default=1, help="parallel workers")
    yp.add_argument("--keep-traces", action="store_true",
                    help="also write per-replication chain CSVs")
    yp.add_argument("--out", required=True, help="output directory")

    dp = sub.add_parser("diagnose", help="chain diagnostics export")
    dp.add_argument("--chain", required=True, help="chain CSV from 'fit --method bayes'")
    dp.add_argument("--max-lag", type=int, default=None)
    dp.add_argument("--out", required=True, help="output directory")
    return p


def _load_config(path) -> AppConfig:
    return parse_config(path) if path else default_config()


def _resolve_seed(args, cfg: AppConfig) -> int:
    env = os.environ.get("PREDBAYES_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"PREDBAYES_SEED must be an integer, got {env!r}")
    if getattr(args, "seed", None) is not None:
        return args.seed
    return cfg.study.seed


def _freq_payload(fit, alpha_level: float) -> dict:
    test = t_test(fit.beta_hat, fit.se_beta, fit.dof_beta, alpha_level)
    corr = fit.sigma_xy_hat / (fit.sigma_x2_hat * fit.sigma_y2_hat) ** 0.5
    return {
        "method": fit.method,
        "alpha_x": fit.alpha_x_hat, "phi": fit.phi_hat,
        "alpha_y": fit.alpha_y_hat, "beta": fit.beta_hat,
        "se_phi": fit.se_phi, "se_beta": fit.se_beta,
        "sigma_x2": fit.sigma_x2_hat, "sigma_y2": fit.sigma_y2_hat,
        "sigma_xy": fit.sigma_xy_hat, "corr_xy": corr,
        "dof_phi": fit.dof_phi, "dof_beta": fit.dof_beta,
        "t_beta": {"statistic": test.statistic, "p_value": test.p_value,
                   "reject": test.reject, "level": alpha_level},
    }


def _cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    seed = _resolve_seed(args, cfg)
    cfg = replace(cfg, study=replace(cfg.study, seed=seed))
    rng = RngStream(seed, 0)
    d = simulate_dataset(cfg.study.dgp, cfg.study.T, rng)
    os.makedirs(args.out, exist_ok=True)
    out_csv = os.path.join(args.out, "dataset.csv")
    save_dataset(d, out_csv)
    with open(os.path.join(args.out, "config_effective.txt"), "w") as fh:
        fh.write(render_config(cfg))
    print(f"wrote {out_csv} (T={d.T}, seed={seed})")
    return 0


def _cmd_fit(args) -> int:
    cfg = _load_config(args.config)
    seed = _resolve_seed(args, cfg)
    d = load_dataset(args.data)
    os.makedirs(args.out, exist_ok=True)
    if args.method in ("ols", "rbe"):
        fit = ols_fit(d) if args.method == "ols" else rbe_fit(d)
        payload = _freq_payload(fit, cfg.study.alpha_level)
        out = os.path.join(args.out, f"fit_{args.method}.json")
        with open(out, "w") as fh:
            json.dump(payload, fh, indent=1)
        print(f"{fit.method}: phi={fit.phi_hat:.5f} beta={fit.beta_hat:.5f} "
              f"(se={fit.se_beta:.5f}) -> {out}")
        return 0

    prior = cfg.prior.resolved(d)
    rng = RngStream(seed, 0)
    rec = run_chain(d, prior, cfg.study.schedule, rng.child(0), cfg.options)
    chain_path = os.path.join(args.out, "chain.csv")
    rec.to_csv(chain_path)
    summary = bayes.posterior_summary(rec)
    with open(os.path.join(args.out, "posterior_summary.csv"), "w") as fh:
        fh.write("parameter,mean,sd,q05,q50,q95\n")
        for name, row in summary.items():
            fh.write(f"{name}," + ",".join(format(row[k], ".17g")
                     for k in ("mean", "sd", "q05", "q50", "q95")) + "\n")
    bf = bayes.bayes_factor_01(rec, prior, cfg.bf_prior_draws, rng.child(1))
    manifest = {
        "method": "bayes", "seed": seed,
        "schedule": asdict(cfg.study.schedule),
        "prior": asdict(prior),
        "options": asdict(cfg.options),
        "acceptance_rates": rec.acceptance_rates(),
        "posterior_mean": {k: summary[k]["mean"] for k in summary},
        "bayes_factor": asdict(bf),
    }
    with open(os.path.join(args.out, "fit_bayes.json"), "w") as fh:
        json.dump(manifest, fh, indent=1)
    print(f"BAY: phi={summary['phi']['mean']:.5f} beta={summary['beta']['mean']:.5f} "
          f"BF01={bf.bf01:.4f} -> {chain_path}")
    return 0


def _cmd_test(args) -> int:
    cfg = _load_config(args.config)
    seed = _resolve_seed(args, cfg)
    d = load_dataset(args.data)
    level = cfg.study.alpha_level
    ols = ols_fit(d)
    rbe = rbe_fit(d)
    prior = cfg.prior.resolved(d)
    rng = RngStream(seed, 0)
    rec = run_chain(d, prior, cfg.study.schedule, rng.child(0), cfg.options)
    bf = bayes.bayes_factor_01(rec, prior, cfg.bf_prior_draws, rng.child(1))
    doc = {
        "bayes_factor": asdict(bf),
        "t_test_ols": _freq_payload(ols, level)["t_beta"],
        "t_test_rbe": _freq_payload(rbe, level)["t_beta"],
        "estimates": {"ols_beta": ols.beta_hat, "rbe_beta": rbe.beta_hat,
                      "bay_beta": float(rec.draws["beta"].mean())},
        "seed": seed,
    }
    json.dump(doc, sys.stdout, indent=1)
    print()
    return 0


def _cmd_study(args) -> int:
    cfg = _load_config(args.config)
    seed = _resolve_seed(args, cfg)
    study_cfg = replace(cfg.study, seed=seed)
    result = run_study(study_cfg, prior=cfg.prior, options=cfg.options,
                       jobs=max(1, args.jobs), keep_traces=args.keep_traces,
                       bf_prior_draws=cfg.bf_prior_draws)
    written = emit_tables(result, args.out)
    for cell in result.cells:
        kind = "FP" if cell.truth_is_H0 else "FN"
        rate = cell.error_rate.get("bay", float("nan"))
        print(f"beta={cell.beta_true:g}: n_d={cell.n_d}/{cell.n} "
              f"BAY {kind}={rate:.3f}")
    print(f"wrote {len(written)} files under {args.out}")
    return 0


def _cmd_diagnose(args) -> int:
    rec = ChainRecord.from_csv(args.chain)
    if rec.M < 4:
        raise InsufficientDrawsError("chain too short to diagnose")
    os.makedirs(args.out, exist_ok=True)
    max_lag = args.max_lag or min(50, rec.M // 4)
    params = ("alpha_x", "alpha_y", "phi", "beta", "psi",
              "sigma_x2", "sigma_y2_tilde", "Sigma_beta", "a0R")
    with open(os.path.join(args.out, "acf.csv"), "w") as fa, \
            open(os.path.join(args.out, "pacf.csv"), "w") as fp:
        fa.write("parameter,lag,value,band\n")
        fp.write("parameter,lag,value,band\n")
        for name in params:
            col = rec.draws[name]
            if float(col.max() - col.min()) == 0.0:
                continue
            a = diag.acf(col, max_lag)
            p = diag.pacf(col, max_lag)
            for lag in range(max_lag + 1):
                fa.write(f"{name},{lag},{a.values[lag]:.17g},{a.band:.17g}\n")
                fp.write(f"{name},{lag},{p.values[lag]:.17g},{p.band:.17g}\n")
    ess_rows = []
    for name in params:
        col = rec.draws[name]
        if float(col.max() - col.min()) == 0.0:
            continue
        m_eff = diag.ess(col)
        ess_rows.append((name, rec.M, m_eff, m_eff >= rec.M / 3.0))
    with open(os.path.join(args.out, "ess.csv"), "w") as fh:
        fh.write("parameter,M,m_eff,passed\n")
        for name, M, m_eff, ok in ess_rows:
            fh.write(f"{name},{M},{m_eff:.17g},{str(ok).lower()}\n")
    with open(os.path.join(args.out, "trace.csv"), "w") as fh:
        fh.write("iteration," + ",".join(params) + "\n")
        for i in range(rec.M):
            fh.write(str(i) + "," + ",".join(
                format(rec.draws[p][i], ".17g") for p in params) + "\n")
    worst = min((r[2] for r in ess_rows), default=float("nan"))
    print(f"diagnosed {rec.M} draws; min ESS={worst:.1f} -> {args.out}")
    return 0


_HANDLERS = {
    "simulate": _cmd_simulate,
    "fit": _cmd_fit,
    "test": _cmd_test,
    "study": _cmd_study,
    "diagnose": _cmd_diagnose,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return _USAGE_EXIT
    except SystemExit:
        # argparse exits directly for --help; treat as success
        return 0
    try:
        return _HANDLERS[args.command](args)
    except (NumericalFailureError, StudyError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return _NUMERICAL_EXIT
    except (ConfigError, DataValidationError, InsufficientDataError,
            InsufficientDrawsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _DATA_EXIT
    except PredbayesError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _DATA_EXIT
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return _DATA_EXIT


if __name__ == "__main__":
    sys.exit(main())
