"""Data ingestion and configuration parsing.

Two input schemas are accepted for series files, auto-detected from the
header: raw annual return indexes with and without distributions
(``year,ret_incl,ret_excl``), from which the log payout-price ratio is
constructed, or an already-built pair (``year,x,y`` or ``t,x,y``).

Configuration files are plain ``key = value`` lines with ``#`` comments and
dotted section names; every omitted key falls back to its default.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, CsvParseError, DataValidationError, LogDomainError
from .model import Dataset
from .sampler import PriorConfig, SamplerOptions, Schedule
from .study import DESK_SCHEDULE, DGP0, StudyConfig

RAW_HEADER = ("year", "ret_incl", "ret_excl")
BUILT_HEADERS = (("year", "x", "y"), ("t", "x", "y"))


@dataclass(frozen=True)
class ReturnsRow:
    """One year of with- and without-distribution gross returns."""

    year: str
    ret_incl: float
    ret_excl: float

    def __post_init__(self):
        if not (self.ret_excl > 0.0 and math.isfinite(self.ret_excl)):
            raise DataValidationError(
                f"year {self.year}: return excluding distributions must be positive")
        if not (math.isfinite(self.ret_incl) and self.ret_incl >= self.ret_excl):
            raise DataValidationError(
                f"year {self.year}: return including distributions must be >= "
                "the return excluding them")


def _read_rows(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip().lower() for h in next(reader)]
        except StopIteration:
            raise CsvParseError("empty file") from None
        rows = [row for row in reader if row and any(c.strip() for c in row)]
    return header, rows


def load_returns_csv(path) -> list[ReturnsRow]:
    """Parse and validate a raw returns file, in chronological order."""
    header, rows = _read_rows(path)
    if tuple(header) != RAW_HEADER:
        raise CsvParseError(f"expected header {','.join(RAW_HEADER)}, got {','.join(header)}")
    out = []
    for i, row in enumerate(rows, start=2):
        if len(row) != 3:
            raise CsvParseError("expected 3 fields", line=i)
        year = row[0].strip()
        try:
            r_incl = float(row[1])
            r_excl = float(row[2])
        except ValueError as exc:
            raise CsvParseError(str(exc), line=i) from None
        try:
            out.append(ReturnsRow(year=year, ret_incl=r_incl, ret_excl=r_excl))
        except DataValidationError as exc:
            raise CsvParseError(str(exc), line=i) from None
    return out


def build_series(rows: list[ReturnsRow]) -> Dataset:
    """Log payout-price ratio and log returns from raw return indexes.

    The first constructed ratio becomes the initial observation, so n input
    rows yield T = n - 1 aligned pairs.
    """
    if len(rows) < 3:
        raise DataValidationError("need at least 3 return rows")
    x_level = []
    y_level = []
    for row in rows:
        ratio = row.ret_incl / row.ret_excl - 1.0
        if ratio <= 0.0:
            raise LogDomainError(
                f"year {row.year}: payout-price ratio is not positive, log undefined")
        x_level.append(math.log(ratio))
        y_level.append(math.log(row.ret_incl))
    return Dataset(x0=x_level[0], x=np.array(x_level[1:]), y=np.array(y_level[1:]))


def load_dataset(path) -> Dataset:
    """Load either schema into a Dataset."""
    header, rows = _read_rows(path)
    if tuple(header) == RAW_HEADER:
        return build_series(load_returns_csv(path))
    if tuple(header) in BUILT_HEADERS:
        xs, ys = [], []
        for i, row in enumerate(rows, start=2):
            if len(row) != 3:
                raise CsvParseError("expected 3 fields", line=i)
            try:
                xs.append(float(row[1]))
                ys.append(math.nan if row[2].strip() == "" else float(row[2]))
            except ValueError as exc:
                raise CsvParseError(str(exc), line=i) from None
        if len(xs) < 3:
            raise DataValidationError("need at least 3 series rows")
        if any(math.isnan(v) for v in ys[1:]):
            raise DataValidationError("y may be empty only in the first row")
        return Dataset(x0=xs[0], x=np.array(xs[1:]), y=np.array(ys[1:]))
    raise CsvParseError(f"unrecognized header: {','.join(header)}")


def save_dataset(d: Dataset, path) -> None:
    """Write a Dataset in the built schema; row 0 carries the initial ratio."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("t", "x", "y"))
        w.writerow(("0", format(d.x0, ".17g"), ""))
        for t in range(d.T):
            w.writerow((str(t + 1), format(d.x[t], ".17g"), format(d.y[t], ".17g")))


# -- configuration ------------------------------------------------------------

@dataclass(frozen=True)
class AppConfig:
    prior: PriorConfig
    study: StudyConfig
    options: SamplerOptions
    bf_prior_draws: int | None = None


def default_config() -> AppConfig:
    return AppConfig(prior=PriorConfig(), study=StudyConfig(),
                     options=SamplerOptions(), bf_prior_draws=None)


def _parse_float(text: str) -> float:
    v = float(text)
    if math.isnan(v):
        raise ValueError("nan is not allowed")
    return v


def _parse_int(text: str) -> int:
    v = float(text)
    if v != int(v):
        raise ValueError(f"expected an integer, got {text}")
    return int(v)


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "1", "yes"):
        return True
    if t in ("false", "0", "no"):
        return False
    raise ValueError(f"expected a boolean, got {text}")


def _parse_floats(text: str) -> tuple[float, ...]:
    parts = [p for p in text.replace(",", " ").split() if p]
    return tuple(_parse_float(p) for p in parts)


def _parse_optional_float(text: str, sentinel: str) -> float | None:
    if text.strip().lower() == sentinel:
        return None
    return _parse_float(text)


def _parse_optional_int(text: str, sentinel: str) -> int | None:
    if text.strip().lower() == sentinel:
        return None
    return _parse_int(text)


# key -> (target, field, parser, renderer)
def _render_float(v) -> str:
    return format(float(v), ".17g")


def _render_floats(v) -> str:
    return ", ".join(format(float(x), ".17g") for x in v)


_SPEC = {
    "prior.mu0_alpha_y": ("prior", "mu0_alpha_y", _parse_float, _render_float),
    "prior.sigma0_alpha_y": ("prior", "Sigma0_alpha_y", _parse_float, _render_float),
    "prior.mu0_psi": ("prior", "mu0_psi", _parse_float, _render_float),
    "prior.sigma0_psi": ("prior", "Sigma0_psi", _parse_float, _render_float),
    "prior.mu0_mu_x": ("prior", "mu0_mu_x",
                       lambda t: _parse_optional_float(t, "data"),
                       lambda v: "data" if v is None else _render_float(v)),
    "prior.s0_mu_x": ("prior", "S0_mu_x", _parse_float, _render_float),
    "prior.nu_x": ("prior", "nu_x", _parse_float, _render_float),
    "prior.s0_x": ("prior", "S0_x", _parse_float, _render_float),
    "prior.nu_y": ("prior", "nu_y", _parse_float, _render_float),
    "prior.s0_y": ("prior", "S0_y", _parse_float, _render_float),
    "prior.mu0_beta": ("prior", "mu0_beta", _parse_float, _render_float),
    "prior.b0_r": ("prior", "b0_R", _parse_float, _render_float),
    "prior.ar_low": ("prior", "aR_low", _parse_float, _render_float),
    "prior.ar_high": ("prior", "aR_high", _parse_float, _render_float),
    "prior.p_ar": ("prior", "p_aR", _parse_float, _render_float),
    "prior.aux_mean": ("prior", "aux_b0", _parse_floats, _render_floats),
    "prior.aux_scale": ("prior", "aux_B0", _parse_floats, _render_floats),
    "dgp.alpha_x": ("dgp", "alpha_x", _parse_float, _render_float),
    "dgp.alpha_y": ("dgp", "alpha_y", _parse_float, _render_float),
    "dgp.phi": ("dgp", "phi", _parse_float, _render_float),
    "dgp.beta": ("dgp", "beta", _parse_float, _render_float),
    "dgp.sigma_x2": ("dgp", "sigma_x2", _parse_float, _render_float),
    "dgp.sigma_y2": ("dgp", "sigma_y2", _parse_float, _render_float),
    "dgp.sigma_xy": ("dgp", "sigma_xy", _parse_float, _render_float),
    "study.t": ("study", "T", _parse_int, str),
    "study.n": ("study", "n", _parse_int, str),
    "study.beta_grid": ("study", "beta_grid", _parse_floats, _render_floats),
    "study.alpha_level": ("study", "alpha_level", _parse_float, _render_float),
    "study.ar_mode": ("study", "aR_mode", lambda t: t.strip(), str),
    "study.seed": ("study", "seed", _parse_int, str),
    "schedule.m0": ("schedule", "m0", _parse_int, str),
    "schedule.m1": ("schedule", "m1", _parse_int, str),
    "schedule.c": ("schedule", "c", _parse_int, str),
    "sampler.step1_mode": ("options", "step1_mode", lambda t: t.strip(), str),
    "sampler.sigma_x2_mode": ("options", "sigma_x2_mode", lambda t: t.strip(), str),
    "sampler.fixed_sigma0_beta": ("options", "fixed_sigma0_beta",
                                  lambda t: _parse_optional_float(t, "none"),
                                  lambda v: "none" if v is None else _render_float(v)),
    "sampler.condition_on_x0": ("options", "condition_on_x0", _parse_bool,
                                lambda v: "true" if v else "false"),
    "sampler.fix_a0r": ("options", "fix_a0R",
                        lambda t: _parse_optional_float(t, "none"),
                        lambda v: "none" if v is None else _render_float(v)),
    "bf.prior_draws": ("misc", "bf_prior_draws",
                       lambda t: _parse_optional_int(t, "chain"),
                       lambda v: "chain" if v is None else str(v)),
}


def parse_config_text(text: str) -> AppConfig:
    values: dict[str, dict] = {"prior": {}, "dgp": {}, "study": {},
                               "schedule": {}, "options": {}, "misc": {}}
    problems: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append(f"line {lineno}: expected 'key = value'")
            continue
        key, _, val = line.partition("=")
        key = key.strip().lower()
        val = val.strip()
        spec = _SPEC.get(key)
        if spec is None:
            problems.append(f"line {lineno}: unknown key {key!r}")
            continue
        target, field_name, parser, _ = spec
        try:
            values[target][field_name] = parser(val)
        except ValueError as exc:
            problems.append(f"line {lineno}: {key}: {exc}")
    if problems:
        raise ConfigError("; ".join(problems))

    try:
        prior = PriorConfig(**values["prior"])
        dgp = replace(DGP0, **values["dgp"]) if values["dgp"] else DGP0
        schedule = Schedule(**values["schedule"]) if values["schedule"] else DESK_SCHEDULE
        study = StudyConfig(dgp=dgp, schedule=schedule, **values["study"])
        options = SamplerOptions(**values["options"])
    except (ConfigError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return AppConfig(prior=prior, study=study, options=options,
                     bf_prior_draws=values["misc"].get("bf_prior_draws"))


def parse_config(path) -> AppConfig:
    """Parse a configuration file; missing keys use the documented defaults."""
    with open(path) as fh:
        return parse_config_text(fh.read())


def render_config(cfg: AppConfig) -> str:
    """Full effective configuration as text; re-parses to an equal AppConfig."""
    lines = ["# effective configuration"]
    for key, (target, field_name, _, renderer) in _SPEC.items():
        if target == "prior":
            v = getattr(cfg.prior, field_name)
        elif target == "dgp":
            v = getattr(cfg.study.dgp, field_name)
        elif target == "study":
            v = getattr(cfg.study, field_name)
        elif target == "schedule":
            v = getattr(cfg.study.schedule, field_name)
        elif target == "options":
            v = getattr(cfg.options, field_name)
        else:
            v = cfg.bf_prior_draws
        lines.append(f"{key} = {renderer(v)}")
    return "\n".join(lines) + "\n"
