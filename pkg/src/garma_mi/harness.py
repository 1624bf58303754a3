"""Monte Carlo harness: simulate, mask, impute, estimate and summarize."""

from __future__ import annotations

import csv
import hashlib
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .core import Family, ModelSpec, ObservedSeries, ParamVector, param_names
from .engine import simulate
from .imputation import Criterion, ImputationConfig, run_algorithm1
from .missing import RunTooShortError, longest_run_length, make_mcar_mask
from .pmle import estimate_pmle

log = logging.getLogger(__name__)

#: Parameter scenarios of the simulation design, as (alpha, phi, theta, nu).
SCENARIOS = {
    "1": ParamVector(0.5, [-0.4], [-0.6], 20.0),
    "2": ParamVector(0.5, [-0.5], [-0.3], 30.0),
    "3": ParamVector(0.5, [-0.4], [-0.2], 20.0),
}

RECORD_FIELDS = [
    "scenario", "model", "r", "criterion", "rep", "seed", "converged", "iterations",
    "alpha_full", "phi_full", "theta_full", "nu_full",
    "alpha_imp", "phi_imp", "theta_imp", "nu_imp",
    "sd_alpha", "sd_phi", "sd_theta", "sd_nu",
]
SUMMARY_FIELDS = [
    "scenario", "model", "r", "criterion", "param", "true", "median", "bias", "sd",
    "mean_iters", "pct_nonconv",
]

MASK64 = (1 << 64) - 1
MAX_BRIDGE = 10


def splitmix64(x: int) -> int:
    """One round of the SplitMix64 output function."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def replication_seed(master_seed: int, scenario: str, rep: int) -> int:
    """64-bit seed of one replication.

    ``splitmix64(splitmix64(master ^ h) ^ rep)`` where ``h`` is the first 8
    bytes (little endian) of the BLAKE2b digest of the scenario name.  Both
    criteria of a scenario therefore see identical series and masks.
    """
    h = int.from_bytes(hashlib.blake2b(scenario.encode(), digest_size=8).digest(), "little")
    return splitmix64(splitmix64((master_seed ^ h) & MASK64) ^ rep)


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    gamma_true: ParamVector
    model: ModelSpec = field(default_factory=ModelSpec)
    n: int = 500
    burn_in: int = 100
    r: float = 0.1
    criterion: Criterion = Criterion.VRSC
    replications: int = 100
    config: ImputationConfig = field(default_factory=ImputationConfig)
    master_seed: int = 2024
    # raise L automatically when the longest run is too short for a start value
    auto_bridge: bool = True

    def __post_init__(self):
        object.__setattr__(self, "criterion", Criterion.parse(self.criterion))
        if self.replications < 1:
            raise ValueError("need at least one replication")
        if len(self.gamma_true.phi) != self.model.p or len(self.gamma_true.theta) != self.model.q:
            raise ValueError("gamma_true does not match the model orders")


@dataclass
class ReplicationRecord:
    scenario: str
    model: str
    r: float
    criterion: str
    rep: int
    seed: int
    converged: bool
    iterations: int
    full: ParamVector | None
    imputed: ParamVector | None
    sd: np.ndarray | None

    def __eq__(self, other):
        if not isinstance(other, ReplicationRecord):
            return NotImplemented
        return _record_row(self) == _record_row(other)


def _bridge_needed(mask, model: ModelSpec, L: int) -> int:
    need = model.m + model.n_params
    while longest_run_length(mask, L) <= need:
        if L >= MAX_BRIDGE:
            raise RunTooShortError(f"no feasible start value with L <= {MAX_BRIDGE}")
        L += 1
    return L


def run_replication(spec: ScenarioSpec, rep: int) -> ReplicationRecord:
    seed = replication_seed(spec.master_seed, spec.name, rep)
    base = dict(scenario=spec.name, model=spec.model.family.value, r=spec.r,
                criterion=spec.criterion.value, rep=rep, seed=seed)
    full = imputed = sd = None
    try:
        sim_rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0, 0)))
        mask_rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0, 1)))
        y = simulate(spec.gamma_true, spec.model, spec.n, spec.burn_in, sim_rng).y
        full = estimate_pmle(y, spec.model).gamma_hat
        mask = make_mcar_mask(spec.n, spec.r, mask_rng)
        series = ObservedSeries.from_complete(y, mask)
        L = spec.config.L
        if spec.auto_bridge:
            L = _bridge_needed(mask, spec.model, L)
        config = replace(spec.config, criterion=spec.criterion, L=L, seed=seed)
        result = run_algorithm1(series, spec.model, config)
    except Exception as exc:  # recorded in-band, never aborts the batch
        log.warning("scenario %s rep %d failed: %s", spec.name, rep, exc)
        return ReplicationRecord(**base, converged=False, iterations=0, full=full,
                                 imputed=imputed, sd=sd)
    return ReplicationRecord(**base, converged=result.converged, iterations=result.iterations,
                             full=full, imputed=result.gamma_hat, sd=result.uncertainty_sd)


def run_scenario(spec: ScenarioSpec, jobs: int = 1) -> list[ReplicationRecord]:
    reps = range(spec.replications)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(run_replication, [spec] * len(reps), reps))
    else:
        records = [run_replication(spec, rep) for rep in reps]
    return sorted(records, key=lambda rec: rep_key(rec))


def rep_key(rec: ReplicationRecord):
    return rec.scenario, rec.criterion, rec.r, rec.rep


def expand_grid(scenarios, models, rates, criteria, rho: float = 0.5,
                **kwargs) -> list[ScenarioSpec]:
    """Cartesian product of scenario names, model families, rates and criteria.

    The scenario name used for seeding omits the criterion, so both criteria
    of a cell run on identical series and masks.
    """
    specs = []
    for name in scenarios:
        gamma = SCENARIOS[name]
        for model in models:
            fam = Family.parse(model)
            spec = ModelSpec(fam, len(gamma.phi), len(gamma.theta), rho)
            for r in rates:
                for crit in criteria:
                    specs.append(ScenarioSpec(name=f"{name}-{fam.value}-r{r:g}", gamma_true=gamma,
                                              model=spec, r=r, criterion=crit, **kwargs))
    return specs


# -- summaries -----------------------------------------------------------------

@dataclass(frozen=True)
class SummaryRow:
    scenario: str
    model: str
    r: float
    criterion: str
    param: str
    true: float
    median: float
    bias: float
    sd: float
    mean_iters: float
    pct_nonconv: float


@dataclass
class SummaryTable:
    rows: list[SummaryRow]

    def row(self, criterion: str, param: str) -> SummaryRow:
        for row in self.rows:
            if row.criterion == criterion and row.param == param:
                return row
        raise KeyError((criterion, param))


def _stats(values, truth):
    values = np.asarray(values, dtype=float)
    if len(values) == 0:
        return math.nan, math.nan, math.nan
    sd = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
    return float(np.median(values)), float(np.mean(values) - truth), sd


def summarize(records: list[ReplicationRecord], gamma_true: ParamVector,
              include_complete: bool = True) -> SummaryTable:
    """Per-parameter median, bias (mean minus truth) and SD of the estimates.

    Imputed-series statistics and the mean iteration count use converged
    replications only; the non-convergence percentage uses all of them.
    Rows with criterion ``complete`` summarize the complete-series estimates.
    """
    if not records:
        raise ValueError("no records to summarize")
    truth = gamma_true.to_array()
    names = param_names(len(gamma_true.phi), len(gamma_true.theta))
    rows = []
    groups: dict[tuple, list[ReplicationRecord]] = {}
    for rec in records:
        groups.setdefault((rec.scenario, rec.model, rec.r, rec.criterion), []).append(rec)
    for (scenario, model, r, criterion), recs in groups.items():
        ok = [rec for rec in recs if rec.converged and rec.imputed is not None]
        est = np.array([rec.imputed.to_array() for rec in ok]).reshape(len(ok), len(truth))
        iters = [rec.iterations for rec in ok]
        mean_iters = float(np.mean(iters)) if iters else math.nan
        pct = 100.0 * (len(recs) - len(ok)) / len(recs)
        for j, name in enumerate(names):
            med, bias, sd = _stats(est[:, j], truth[j])
            rows.append(SummaryRow(scenario, model, r, criterion, name, float(truth[j]),
                                   med, bias, sd, mean_iters, pct))
    if include_complete:
        seen = {}
        for rec in records:
            if rec.full is not None:
                seen.setdefault((rec.scenario, rec.model, rec.r), {})[rec.rep] = rec.full
        for (scenario, model, r), by_rep in seen.items():
            est = np.array([g.to_array() for g in by_rep.values()])
            for j, name in enumerate(names):
                med, bias, sd = _stats(est[:, j], truth[j])
                rows.append(SummaryRow(scenario, model, r, "complete", name, float(truth[j]),
                                       med, bias, sd, math.nan, math.nan))
    return SummaryTable(rows)


# -- CSV -----------------------------------------------------------------------

def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    return "" if math.isnan(x) else format(x, ".17g")


def _fmt_vec(values) -> str:
    return ";".join(_fmt(v) for v in values)


def _parse_float(s: str) -> float:
    return math.nan if s == "" else float(s)


def _parse_vec(s: str) -> tuple[float, ...]:
    return () if s == "" else tuple(float(v) for v in s.split(";"))


def _param_cols(g: ParamVector | None):
    if g is None:
        return ["", "", "", ""]
    return [_fmt(g.alpha), _fmt_vec(g.phi), _fmt_vec(g.theta), _fmt(g.nu)]


def _record_row(rec: ReplicationRecord) -> list[str]:
    if rec.sd is None:
        sd_cols = ["", "", "", ""]
    else:
        p = len(rec.imputed.phi) if rec.imputed is not None else 1
        sd = np.asarray(rec.sd, dtype=float)
        sd_cols = [_fmt(sd[0]), _fmt_vec(sd[1:1 + p]), _fmt_vec(sd[1 + p:-1]), _fmt(sd[-1])]
    return [rec.scenario, rec.model, _fmt(rec.r), rec.criterion, _fmt(rec.rep), _fmt(rec.seed),
            _fmt(bool(rec.converged)), _fmt(rec.iterations),
            *_param_cols(rec.full), *_param_cols(rec.imputed), *sd_cols]


def _param_from(cols) -> ParamVector | None:
    if cols[0] == "":
        return None
    return ParamVector(float(cols[0]), _parse_vec(cols[1]), _parse_vec(cols[2]), float(cols[3]))


def write_records(records, path) -> Path:
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(RECORD_FIELDS)
            for rec in records:
                writer.writerow(_record_row(rec))
    except OSError as exc:
        raise OSError(f"cannot write records to {path}: {exc}") from exc
    return path


def read_records(path) -> list[ReplicationRecord]:
    path = Path(path)
    out = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != RECORD_FIELDS:
            raise ValueError(f"{path}: unexpected records header")
        for row in reader:
            sd = None
            if row[16] != "":
                sd = np.array([float(row[16]), *_parse_vec(row[17]), *_parse_vec(row[18]),
                               float(row[19])])
            out.append(ReplicationRecord(
                scenario=row[0], model=row[1], r=float(row[2]), criterion=row[3],
                rep=int(row[4]), seed=int(row[5]), converged=row[6] == "true",
                iterations=int(row[7]), full=_param_from(row[8:12]),
                imputed=_param_from(row[12:16]), sd=sd))
    return out


def write_summary(table: SummaryTable, path) -> Path:
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(SUMMARY_FIELDS)
            for row in table.rows:
                writer.writerow([row.scenario, row.model, _fmt(row.r), row.criterion, row.param,
                                 _fmt(row.true), _fmt(row.median), _fmt(row.bias), _fmt(row.sd),
                                 _fmt(row.mean_iters), _fmt(row.pct_nonconv)])
    except OSError as exc:
        raise OSError(f"cannot write summary to {path}: {exc}") from exc
    return path


def read_summary(path) -> SummaryTable:
    rows = []
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        if next(reader) != SUMMARY_FIELDS:
            raise ValueError(f"{path}: unexpected summary header")
        for row in reader:
            rows.append(SummaryRow(row[0], row[1], float(row[2]), row[3], row[4],
                                   *(_parse_float(v) for v in row[5:])))
    return SummaryTable(rows)


def emit_csv(obj, path) -> Path:
    """Write records (a list) or a :class:`SummaryTable` to ``path``."""
    if isinstance(obj, SummaryTable):
        return write_summary(obj, path)
    return write_records(obj, path)
