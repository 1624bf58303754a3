"""``garma`` command line: simulate, estimate, impute and Monte Carlo runs.

Settings come from an optional INI-style ``--config`` file with sections
``[model]``, ``[params]``, ``[simulation]``, ``[imputation]``, ``[mc]`` and
``[output]``; any key can be overridden by the matching flag.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import DomainError, Family, ModelSpec, ObservedSeries, ParamVector, param_names
from .engine import simulate
from .harness import (SCENARIOS, expand_grid, run_scenario, summarize, write_records,
                      write_summary)
from .imputation import Criterion, ImputationConfig, ImputationError, run_algorithm1
from .missing import RunTooShortError
from .pmle import EstimationError, estimate_pmle

log = logging.getLogger("garma_mi")

DEFAULTS = {
    "model": {"model": "barma", "p": "1", "q": "1", "rho": "0.5"},
    "params": {"alpha": "0.5", "phi": "-0.4", "theta": "-0.6", "nu": "20"},
    "simulation": {"n": "500", "burn_in": "100", "seed": "2024"},
    "imputation": {"K": "25", "H": "30", "tau": "0.01", "criterion": "vrsc",
                   "gap_bridge": "0", "restart": "false"},
    "mc": {"scenarios": "1", "models": "", "rates": "0.1,0.4,0.7", "replications": "100",
           "jobs": "1"},
    "output": {"out": ""},
}

# flag name -> (section, key)
FLAG_KEYS = {
    "model": ("model", "model"), "p": ("model", "p"), "q": ("model", "q"),
    "rho": ("model", "rho"),
    "alpha": ("params", "alpha"), "phi": ("params", "phi"), "theta": ("params", "theta"),
    "nu": ("params", "nu"),
    "n": ("simulation", "n"), "burn_in": ("simulation", "burn_in"),
    "seed": ("simulation", "seed"),
    "K": ("imputation", "K"), "H": ("imputation", "H"), "tau": ("imputation", "tau"),
    "criterion": ("imputation", "criterion"), "gap_bridge": ("imputation", "gap_bridge"),
    "restart": ("imputation", "restart"),
    "scenarios": ("mc", "scenarios"), "r": ("mc", "rates"),
    "replications": ("mc", "replications"), "jobs": ("mc", "jobs"),
    "out": ("output", "out"),
}


class ConfigError(ValueError):
    pass


class SeriesFormatError(ValueError):
    pass


@dataclass
class RunConfig:
    spec: ModelSpec
    gamma: ParamVector
    n: int = 500
    burn_in: int = 100
    seed: int = 2024
    imputation: ImputationConfig = field(default_factory=ImputationConfig)
    criteria: tuple[str, ...] = ("vrsc",)
    scenarios: tuple[str, ...] = ("1",)
    models: tuple[str, ...] = ("barma",)
    rates: tuple[float, ...] = (0.1, 0.4, 0.7)
    replications: int = 100
    jobs: int = 1
    out: str = ""


def _floats(text: str) -> list[float]:
    text = text.strip()
    return [float(v) for v in text.replace(";", ",").split(",") if v.strip()] if text else []


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    parser = configparser.ConfigParser()
    parser.optionxform = str  # keys such as K and H are case sensitive
    parser.read_dict(DEFAULTS)
    if path is not None:
        try:
            with open(path) as fh:
                parser.read_file(fh, source=str(path))
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for flag, value in (overrides or {}).items():
        if value is None:
            continue
        section, key = FLAG_KEYS[flag]
        parser[section][key] = str(value).lower() if isinstance(value, bool) else str(value)

    def get(section, key, conv):
        raw = parser[section][key]
        try:
            return conv(raw)
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"[{section}] {key} = {raw!r}: {exc}") from None

    family = get("model", "model", Family.parse)
    p, q = get("model", "p", int), get("model", "q", int)
    phi, theta = get("params", "phi", _floats), get("params", "theta", _floats)
    # orders follow the coefficient lists when these are given explicitly
    if len(phi) != p:
        phi = (phi + [0.0] * p)[:p]
    if len(theta) != q:
        theta = (theta + [0.0] * q)[:q]
    try:
        spec = ModelSpec(family, p, q, get("model", "rho", float))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    gamma = ParamVector(get("params", "alpha", float), phi, theta, get("params", "nu", float))
    criterion = get("imputation", "criterion", str).lower()
    if criterion not in ("cvsc", "vrsc", "both"):
        raise ConfigError(f"[imputation] criterion = {criterion!r}: expected cvsc, vrsc or both")
    criteria = ("cvsc", "vrsc") if criterion == "both" else (criterion,)
    try:
        imputation = ImputationConfig(
            K=get("imputation", "K", int), H=get("imputation", "H", int),
            tau=get("imputation", "tau", float), criterion=criteria[0],
            L=get("imputation", "gap_bridge", int), seed=get("simulation", "seed", int),
            restart=get("imputation", "restart", _bool))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    models = get("mc", "models", str)
    return RunConfig(
        spec=spec, gamma=gamma, n=get("simulation", "n", int),
        burn_in=get("simulation", "burn_in", int), seed=get("simulation", "seed", int),
        imputation=imputation, criteria=criteria,
        scenarios=tuple(s.strip() for s in get("mc", "scenarios", str).split(",") if s.strip()),
        models=tuple(m.strip() for m in models.split(",") if m.strip()) or (family.value,),
        rates=tuple(get("mc", "rates", _floats)),
        replications=get("mc", "replications", int), jobs=get("mc", "jobs", int),
        out=get("output", "out", str))


def _bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


# -- series files ----------------------------------------------------------------

def write_series(path, y) -> None:
    y = np.asarray(y, dtype=float)
    with _open_out(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "y"])
        for t, v in enumerate(y, start=1):
            writer.writerow([t, "" if math.isnan(v) else format(v, ".17g")])


def read_series(path) -> ObservedSeries:
    """Read a ``t,y`` CSV; empty ``y`` fields are missing values."""
    values = []
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise SeriesFormatError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["t", "y"]:
            raise SeriesFormatError(f"{path}: expected header 't,y'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise SeriesFormatError(f"{path}: row {lineno}: expected 2 fields, got {len(row)}")
            text = row[1].strip()
            if text == "":
                values.append(math.nan)
                continue
            try:
                v = float(text)
            except ValueError:
                raise SeriesFormatError(f"{path}: row {lineno}: cannot parse y={text!r}") from None
            if not 0.0 < v < 1.0:
                raise SeriesFormatError(f"{path}: row {lineno}: y={v} outside (0, 1)")
            values.append(v)
    if not values:
        raise SeriesFormatError(f"{path}: no data rows")
    return ObservedSeries(np.array(values))


class _open_out:
    def __init__(self, path):
        self.path = path

    def __enter__(self):
        if not self.path or self.path == "-":
            self.fh = None
            return sys.stdout
        try:
            self.fh = open(self.path, "w", newline="")
        except OSError as exc:
            raise OSError(f"cannot write {self.path}: {exc}") from exc
        return self.fh

    def __exit__(self, *exc):
        if self.fh is not None:
            self.fh.close()


# -- commands --------------------------------------------------------------------

def _report(lines: dict, stream=None):
    stream = stream or sys.stdout
    for key, value in lines.items():
        stream.write(f"{key} = {value}\n")


def _fmt(x) -> str:
    return format(float(x), ".10g")


def _param_lines(gamma: ParamVector) -> dict:
    names = param_names(len(gamma.phi), len(gamma.theta))
    return {name: _fmt(v) for name, v in zip(names, gamma.to_array())}


def cmd_simulate(cfg: RunConfig) -> int:
    rng = np.random.default_rng(cfg.seed)
    sim = simulate(cfg.gamma, cfg.spec, cfg.n, cfg.burn_in, rng)
    write_series(cfg.out, sim.y)
    return 0


def cmd_estimate(cfg: RunConfig, series_path) -> int:
    series = read_series(series_path)
    if not series.is_complete:
        raise SeriesFormatError(f"{series_path}: {series.n_missing} missing values; "
                                "use 'garma impute' for incomplete series")
    res = estimate_pmle(series.values, cfg.spec)
    report = {"model": cfg.spec.family.value, **_param_lines(res.gamma_hat),
              "loglik": _fmt(res.loglik), "converged": str(res.converged).lower(),
              "n_evals": res.n_evals}
    _report(report)
    if cfg.out:
        with _open_out(cfg.out) as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(list(report))
            writer.writerow(list(report.values()))
    if not res.converged:
        log.warning("warning: optimizer did not converge")
    return 0


def cmd_impute(cfg: RunConfig, series_path) -> int:
    series = read_series(series_path)
    if len(cfg.criteria) != 1:
        raise ConfigError("impute runs one stopping criterion; choose cvsc or vrsc")
    try:
        res = run_algorithm1(series, cfg.spec, cfg.imputation)
    except RunTooShortError as exc:
        raise RunTooShortError(f"initial estimate infeasible: {exc}. Rerun with a larger "
                               f"--gap-bridge L") from None
    names = param_names(cfg.spec.p, cfg.spec.q)
    report = {"model": cfg.spec.family.value, "criterion": cfg.imputation.criterion.value,
              **_param_lines(res.gamma_hat), "iterations": res.iterations,
              "converged": str(res.converged).lower(), "n_missing": series.n_missing,
              **{f"sd_{name}": _fmt(v) for name, v in zip(names, res.uncertainty_sd)}}
    _report(report)
    if cfg.out:
        write_series(cfg.out, res.completed)
        report_path = Path(cfg.out).with_suffix(".report.txt")
        with open(report_path, "w") as fh:
            _report(report, fh)
    if not res.converged:
        print(f"warning: no convergence within H={cfg.imputation.H} iterations", file=sys.stderr)
    return 0


def cmd_mc(cfg: RunConfig) -> int:
    for name in cfg.scenarios:
        if name not in SCENARIOS:
            raise ConfigError(f"[mc] scenarios: unknown scenario {name!r} "
                              f"(known: {', '.join(SCENARIOS)})")
    specs = expand_grid(cfg.scenarios, cfg.models, cfg.rates, cfg.criteria,
                        rho=cfg.spec.rho, n=cfg.n, burn_in=cfg.burn_in,
                        replications=cfg.replications, config=cfg.imputation,
                        master_seed=cfg.seed)
    records, rows = [], []
    for spec in specs:
        log.info("running %s (%s), R=%d", spec.name, spec.criterion.value, spec.replications)
        recs = run_scenario(spec, jobs=cfg.jobs)
        records += recs
        table = summarize(recs, spec.gamma_true,
                          include_complete=spec.criterion.value == cfg.criteria[0])
        rows += table.rows
    from .harness import SummaryTable
    prefix = cfg.out or "garma_mc"
    write_records(records, f"{prefix}_records.csv")
    write_summary(SummaryTable(rows), f"{prefix}_summary.csv")
    n_bad = sum(not rec.converged for rec in records)
    print(f"wrote {len(records)} records to {prefix}_records.csv "
          f"and summary to {prefix}_summary.csv")
    if n_bad:
        print(f"warning: {n_bad} of {len(records)} replications did not converge",
              file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI-style configuration file")
    common.add_argument("--model", choices=[f.value for f in Family])
    common.add_argument("--p", type=int)
    common.add_argument("--q", type=int)
    common.add_argument("--rho", type=float)
    common.add_argument("--alpha", type=float)
    common.add_argument("--phi", help="comma-separated AR coefficients")
    common.add_argument("--theta", help="comma-separated MA coefficients")
    common.add_argument("--nu", type=float)
    common.add_argument("--n", type=int)
    common.add_argument("--burn-in", dest="burn_in", type=int)
    common.add_argument("--r", help="missing proportion(s), comma-separated")
    common.add_argument("--criterion", choices=["cvsc", "vrsc", "both"])
    common.add_argument("--K", type=int)
    common.add_argument("--H", type=int)
    common.add_argument("--tau", type=float)
    common.add_argument("--gap-bridge", dest="gap_bridge", type=int, metavar="L")
    common.add_argument("--restart", action="store_const", const=True)
    common.add_argument("--seed", type=int)
    common.add_argument("--jobs", type=int)
    common.add_argument("--out")

    parser = argparse.ArgumentParser(prog="garma", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="simulate a series to a t,y CSV")
    est = sub.add_parser("estimate", parents=[common], help="PMLE on a complete series")
    est.add_argument("series")
    imp = sub.add_parser("impute", parents=[common], help="multiple-imputation estimate")
    imp.add_argument("series")
    mc = sub.add_parser("mc", parents=[common], help="Monte Carlo grid")
    mc.add_argument("--scenarios", help="comma-separated scenario ids (1, 2, 3)")
    mc.add_argument("--replications", "--R", dest="replications", type=int)
    return parser


def _setup_logging():
    level = os.environ.get("GARMA_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    overrides = {k: v for k, v in vars(args).items() if k in FLAG_KEYS}
    try:
        cfg = load_config(args.config, overrides)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "estimate":
            return cmd_estimate(cfg, args.series)
        if args.command == "impute":
            return cmd_impute(cfg, args.series)
        return cmd_mc(cfg)
    except (ConfigError, SeriesFormatError, RunTooShortError, EstimationError,
            ImputationError, DomainError, OSError) as exc:
        print(f"garma: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
