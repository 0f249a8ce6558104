import json
import os

import numpy as np
import pytest

from predbayes.cli import main
from predbayes.dataio import load_dataset

_FAST_CFG = """
study.t = 60
study.n = 3
schedule.m0 = 100
schedule.m1 = 400
schedule.c = 4
"""


@pytest.fixture
def fast_cfg(tmp_path):
    p = tmp_path / "fast.cfg"
    p.write_text(_FAST_CFG)
    return str(p)


@pytest.fixture
def dataset_csv(tmp_path, fast_cfg):
    out = tmp_path / "sim"
    assert main(["simulate", "--config", fast_cfg, "--seed", "4",
                 "--out", str(out)]) == 0
    return str(out / "dataset.csv")


def test_simulate_writes_loadable_dataset(dataset_csv):
    d = load_dataset(dataset_csv)
    assert d.T == 60


def test_simulate_effective_config_round_trips(tmp_path, fast_cfg):
    out = tmp_path / "sim2"
    assert main(["simulate", "--config", fast_cfg, "--seed", "4",
                 "--out", str(out)]) == 0
    from predbayes.dataio import parse_config
    cfg = parse_config(out / "config_effective.txt")
    assert cfg.study.T == 60
    assert cfg.study.seed == 4


def test_fit_ols_and_rbe(tmp_path, dataset_csv, capsys):
    out = tmp_path / "fit"
    assert main(["fit", "--method", "ols", "--data", dataset_csv,
                 "--out", str(out)]) == 0
    assert main(["fit", "--method", "rbe", "--data", dataset_csv,
                 "--out", str(out)]) == 0
    with open(out / "fit_ols.json") as fh:
        doc = json.load(fh)
    assert doc["method"] == "OLS"
    assert "t_beta" in doc and 0.0 <= doc["t_beta"]["p_value"] <= 1.0
    assert abs(doc["corr_xy"]) <= 1.0


def test_fit_bayes_writes_chain_summary_manifest(tmp_path, dataset_csv, fast_cfg):
    out = tmp_path / "bayes"
    assert main(["fit", "--method", "bayes", "--data", dataset_csv,
                 "--config", fast_cfg, "--seed", "5", "--out", str(out)]) == 0
    assert (out / "chain.csv").exists()
    assert (out / "posterior_summary.csv").exists()
    with open(out / "fit_bayes.json") as fh:
        manifest = json.load(fh)
    assert manifest["seed"] == 5
    # the data-driven stationary-level prior mean is echoed
    d = load_dataset(dataset_csv)
    expected = (d.x0 + d.x.sum()) / (d.T + 1)
    assert manifest["prior"]["mu0_mu_x"] == pytest.approx(expected, rel=1e-12)
    assert "bayes_factor" in manifest


def test_test_command_emits_json(dataset_csv, fast_cfg, capsys):
    assert main(["test", "--data", dataset_csv, "--config", fast_cfg,
                 "--seed", "6"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["bayes_factor"]["decision"] in ("H0", "H1")
    assert doc["bayes_factor"]["bf01"] > 0
    assert 0.0 <= doc["t_test_ols"]["p_value"] <= 1.0
    assert 0.0 <= doc["t_test_rbe"]["p_value"] <= 1.0


def test_study_command(tmp_path, fast_cfg, capsys):
    out = tmp_path / "study"
    assert main(["study", "--config", fast_cfg, "--seed", "7",
                 "--jobs", "1", "--out", str(out)]) == 0
    assert (out / "manifest.json").exists()
    assert (out / "tables" / "beta_metrics.csv").exists()
    text = capsys.readouterr().out
    assert "n_d=" in text


def test_diagnose_command(tmp_path, dataset_csv, fast_cfg):
    fit_out = tmp_path / "bayes"
    assert main(["fit", "--method", "bayes", "--data", dataset_csv,
                 "--config", fast_cfg, "--seed", "5", "--out", str(fit_out)]) == 0
    diag_out = tmp_path / "diag"
    assert main(["diagnose", "--chain", str(fit_out / "chain.csv"),
                 "--out", str(diag_out)]) == 0
    for name in ("acf.csv", "pacf.csv", "ess.csv", "trace.csv"):
        assert (diag_out / name).exists()
    with open(diag_out / "ess.csv") as fh:
        header = fh.readline().strip()
        assert header == "parameter,M,m_eff,passed"
        assert len(fh.readlines()) >= 5


def test_fit_accepts_raw_returns_schema(tmp_path):
    rows = ["year,ret_incl,ret_excl"]
    import numpy as np
    g = np.random.default_rng(5)
    for i in range(40):
        excl = max(0.6, 1.0 + 0.12 * g.standard_normal())
        rows.append(f"{1950 + i},{excl * (1.045 + 0.01 * abs(g.standard_normal())):.6f},{excl:.6f}")
    raw = tmp_path / "returns.csv"
    raw.write_text("\n".join(rows) + "\n")
    out = tmp_path / "fit"
    assert main(["fit", "--method", "ols", "--data", str(raw), "--out", str(out)]) == 0
    with open(out / "fit_ols.json") as fh:
        doc = json.load(fh)
    assert -1.0 <= doc["corr_xy"] <= 1.0


def test_usage_errors_exit_1():
    assert main(["nonsense"]) == 1
    assert main(["fit", "--method", "weird", "--data", "x", "--out", "y"]) == 1
    assert main([]) == 1


def test_data_errors_exit_2(tmp_path):
    assert main(["fit", "--method", "ols", "--data", "/does/not/exist.csv",
                 "--out", str(tmp_path)]) == 2
    bad = tmp_path / "bad.cfg"
    bad.write_text("dgp.phi = 1.5\n")
    assert main(["simulate", "--config", str(bad), "--out", str(tmp_path)]) == 2
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    assert main(["fit", "--method", "ols", "--data", str(empty),
                 "--out", str(tmp_path)]) == 2


def test_env_seed_overrides_flag(tmp_path, fast_cfg, monkeypatch):
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    out_c = tmp_path / "c"
    monkeypatch.setenv("PREDBAYES_SEED", "42")
    assert main(["simulate", "--config", fast_cfg, "--seed", "4",
                 "--out", str(out_a)]) == 0
    monkeypatch.delenv("PREDBAYES_SEED")
    assert main(["simulate", "--config", fast_cfg, "--seed", "42",
                 "--out", str(out_b)]) == 0
    assert main(["simulate", "--config", fast_cfg, "--seed", "4",
                 "--out", str(out_c)]) == 0
    da = load_dataset(out_a / "dataset.csv")
    db = load_dataset(out_b / "dataset.csv")
    dc = load_dataset(out_c / "dataset.csv")
    assert np.array_equal(da.x, db.x)       # env seed won
    assert not np.array_equal(da.x, dc.x)   # and differs from the flag seed


def test_env_seed_must_be_integer(tmp_path, fast_cfg, monkeypatch):
    monkeypatch.setenv("PREDBAYES_SEED", "xyz")
    assert main(["simulate", "--config", fast_cfg, "--out", str(tmp_path / "z")]) == 2
