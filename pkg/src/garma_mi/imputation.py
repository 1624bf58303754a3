"""Iterated multiple imputation for GARMA parameter estimation.

Starting from an initial estimate, every missing value is drawn from the
conditional distribution whose ``mu_t`` is rebuilt by running the GARMA
recursion over the partially imputed series.  Each of ``K`` completed series
is re-estimated, the estimates are averaged into a new reference value, and
the cycle repeats until a stopping criterion fires or ``H`` cycles pass.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import EPS, Family, ModelSpec, ObservedSeries, ParamVector, link_eval, validate_params
from ._pykernels import ETA_MAX
from .distributions import LOG_HALF
from .missing import initial_estimate
from .pmle import EstimationError, EstimationResult, estimate_pmle

log = logging.getLogger(__name__)


class Criterion(enum.Enum):
    CVSC = "cvsc"
    VRSC = "vrsc"

    @classmethod
    def parse(cls, value) -> "Criterion":
        return value if isinstance(value, Criterion) else cls(str(value).lower())


class ImputationError(RuntimeError):
    pass


@dataclass(frozen=True)
class ImputationConfig:
    K: int = 25
    H: int = 30
    tau: float = 0.01
    criterion: Criterion = Criterion.VRSC
    L: int = 0
    seed: int = 0
    # CVSC variants for sensitivity analysis; defaults follow the printed rule
    cvsc_window: int | None = None
    cvsc_normalized: bool = False
    restart: bool = False

    def __post_init__(self):
        object.__setattr__(self, "criterion", Criterion.parse(self.criterion))
        if self.K < 2:
            raise ValueError("K must be at least 2")
        if self.H < 3:
            raise ValueError("H must be at least 3")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.L < 0:
            raise ValueError("L must be non-negative")
        if self.cvsc_window is not None and self.cvsc_window < 2:
            raise ValueError("cvsc_window must be at least 2")


@dataclass
class ImputationResult:
    gamma_hat: ParamVector
    iterations: int
    converged: bool
    uncertainty_sd: np.ndarray
    trajectory: list[ParamVector]
    completed: np.ndarray
    inner_failures: int = 0
    restarted: bool = False


# -- stopping criteria ---------------------------------------------------------

@dataclass
class CVSCState:
    last: np.ndarray
    distances: list[float] = field(default_factory=list)
    coefs: list[float] = field(default_factory=list)
    window: int | None = None
    normalized: bool = False


@dataclass
class VRSCState:
    estimates: list[np.ndarray]
    variances: list[np.ndarray] = field(default_factory=list)
    distances: list[float] = field(default_factory=list)


def _vec(gamma) -> np.ndarray:
    if isinstance(gamma, ParamVector):
        return gamma.to_array()
    return np.asarray(gamma, dtype=float)


def coefficient_of_variation(d, normalized: bool = False) -> float:
    """``S / m`` with ``S^2 = sum (d_i - m)^2`` (divided by ``len - 1`` if normalized)."""
    d = np.asarray(d, dtype=float)
    m = d.mean()
    s2 = np.sum((d - m) ** 2)
    if normalized:
        s2 /= len(d) - 1
    return math.sqrt(s2) / m


def cvsc_update(state: CVSCState, gamma_new, tau: float):
    """Append the newest pooled estimate; return ``(state, stop)``.

    Stops once two consecutive coefficients of variation of the accumulated
    distances agree to relative tolerance ``tau``.  Zero mean distance, or a
    zero previous coefficient, counts as convergence.
    """
    x = _vec(gamma_new)
    state.distances.append(float(np.linalg.norm(x - state.last)))
    state.last = x
    if len(state.distances) < 2:
        return state, False
    d = state.distances if state.window is None else state.distances[-state.window:]
    if np.mean(d) == 0.0:
        return state, True
    state.coefs.append(coefficient_of_variation(d, state.normalized))
    if len(state.coefs) < 2:
        return state, False
    prev, cur = state.coefs[-2], state.coefs[-1]
    if prev == 0.0:
        return state, True
    return state, abs(cur / prev - 1.0) < tau


def vrsc_update(state: VRSCState, gamma_new, tau: float):
    """Append the newest pooled estimate; return ``(state, stop)``.

    Tracks component-wise sample variances of all pooled estimates so far
    (the starting value included) and stops when consecutive distances
    between variance vectors differ by less than ``tau``.
    """
    state.estimates.append(_vec(gamma_new))
    if len(state.estimates) < 2:
        return state, False
    state.variances.append(np.var(np.vstack(state.estimates), axis=0, ddof=1))
    if len(state.variances) < 2:
        return state, False
    state.distances.append(float(np.linalg.norm(state.variances[-1] - state.variances[-2])))
    if len(state.distances) < 2:
        return state, False
    return state, abs(state.distances[-1] - state.distances[-2]) < tau


def new_state(config: ImputationConfig, gamma0):
    if config.criterion is Criterion.CVSC:
        return CVSCState(last=_vec(gamma0), window=config.cvsc_window,
                         normalized=config.cvsc_normalized)
    return VRSCState(estimates=[_vec(gamma0)])


def update_state(state, gamma_new, tau):
    if isinstance(state, CVSCState):
        return cvsc_update(state, gamma_new, tau)
    return vrsc_update(state, gamma_new, tau)


# -- imputation ----------------------------------------------------------------

def _draw(family: Family, mu: float, nu: float, rho: float, rng: np.random.Generator) -> float:
    if family is Family.BETA:
        y = rng.beta(nu * mu, nu * (1.0 - mu))
    elif family is Family.KUMARASWAMY:
        u = rng.random()
        b = LOG_HALF / math.log1p(-mu ** nu)
        y = (-math.expm1(math.log1p(-u) / b)) ** (1.0 / nu)
    else:
        u = rng.random()
        # u can be exactly 0.0; the clamp below absorbs the resulting y = 0
        z = (math.log(u) / math.log(rho)) ** (1.0 / nu) if u > 0.0 else math.inf
        y = math.exp(math.log(mu) * z)
    return min(max(y, EPS), 1.0 - EPS)


def _inv_logit(eta: float) -> float:
    if eta >= 0.0:
        mu = 1.0 / (1.0 + math.exp(-eta))
    else:
        z = math.exp(eta)
        mu = z / (1.0 + z)
    return min(max(mu, EPS), 1.0 - EPS)


def impute_pass(series: ObservedSeries, gamma_ref: ParamVector, spec: ModelSpec,
                rng: np.random.Generator) -> np.ndarray:
    """Fill every missing value by sequential draws along the GARMA recursion.

    Missing values among the first ``m`` positions come from the
    intercept-only distribution ``f(. | g^{-1}(alpha), nu)``.
    """
    problems = validate_params(gamma_ref, spec)
    if problems:
        raise ValueError("; ".join(problems))
    y = np.array(series.values, dtype=float)
    mask = series.mask
    n, p, q, m = len(y), spec.p, spec.q, spec.m
    alpha, phi, theta, nu = gamma_ref.alpha, gamma_ref.phi, gamma_ref.theta, gamma_ref.nu
    gy = link_eval(np.where(mask, y, 0.5)).tolist()
    r = [0.0] * n
    for t in range(n):
        eta = alpha
        if t >= m:
            for j in range(p):
                eta += phi[j] * (gy[t - j - 1] - alpha)
            for i in range(q):
                eta += theta[i] * r[t - i - 1]
            eta = min(max(eta, -ETA_MAX), ETA_MAX)
        if not mask[t]:
            v = _draw(spec.family, _inv_logit(eta), nu, spec.rho, rng)
            y[t] = v
            gy[t] = math.log(v / (1.0 - v))
        if t >= m:
            r[t] = gy[t] - eta
    return y


@dataclass
class StepResult:
    pooled: ParamVector
    inner: list[ParamVector]
    failures: int
    first_completed: np.ndarray


def _child(seed, *key):
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + key)
    return np.random.SeedSequence(seed, spawn_key=key)


def multi_impute_step(series: ObservedSeries, gamma_ref: ParamVector, spec: ModelSpec, K: int,
                      seed, *, estimator: Callable | None = None,
                      imputer: Callable | None = None) -> StepResult:
    """Run ``K`` imputation passes, estimate on each and pool by the mean.

    Pass ``k`` uses the random substream ``seed`` extended by ``(k,)``, so
    results do not depend on execution order.  Estimates from passes that
    raise are dropped; fewer than ``K / 2`` survivors is an error.
    """
    if K < 2:
        raise ValueError("K must be at least 2")
    estimator = estimator or (lambda y, s, start: estimate_pmle(y, s, start))
    imputer = imputer or impute_pass
    inner, first = [], None
    failures = 0
    for k in range(K):
        rng = np.random.default_rng(_child(seed, k))
        completed = imputer(series, gamma_ref, spec, rng)
        if k == 0:
            first = completed
        try:
            est = estimator(completed, spec, gamma_ref)
        except (EstimationError, FloatingPointError, ValueError) as exc:
            log.debug("inner estimate %d dropped: %s", k, exc)
            failures += 1
            continue
        if isinstance(est, EstimationResult):
            est = est.gamma_hat
        inner.append(est)
    if len(inner) < K / 2:
        raise ImputationError(f"only {len(inner)} of {K} inner estimates succeeded")
    pooled = np.mean([g.to_array() for g in inner], axis=0)
    return StepResult(ParamVector.from_array(pooled, spec.p, spec.q), inner, failures, first)


def _loop(series, spec, config, gamma0, estimator, h_offset):
    state = new_state(config, gamma0)
    trajectory = []
    gamma, step = gamma0, None
    failures = 0
    for h in range(1, config.H + 1):
        step = multi_impute_step(series, gamma, spec, config.K, _child(config.seed, h_offset + h),
                                 estimator=estimator)
        failures += step.failures
        gamma = step.pooled
        trajectory.append(gamma)
        state, stop = update_state(state, gamma, config.tau)
        log.debug("iteration %d: %s", h, gamma)
        if stop:
            return trajectory, step, True, failures
    return trajectory, step, False, failures


def run_algorithm1(series: ObservedSeries, spec: ModelSpec, config: ImputationConfig,
                   *, estimator: Callable | None = None,
                   gamma0: ParamVector | None = None) -> ImputationResult:
    """Estimate ``gamma`` from a series with missing values.

    Raises :class:`~garma_mi.missing.RunTooShortError` when no starting value
    can be computed at the configured gap bridge ``L``.
    """
    if gamma0 is None:
        gamma0 = initial_estimate(series, spec, config.L)
    k = spec.n_params

    if series.is_complete:
        # imputation is the identity: every pooled iterate is the starting value
        state = new_state(config, gamma0)
        trajectory = [gamma0]
        for h in range(1, config.H + 1):
            trajectory.append(gamma0)
            state, stop = update_state(state, gamma0, config.tau)
            if stop:
                break
        return ImputationResult(gamma0, h, stop, np.zeros(k), trajectory,
                                np.array(series.values))

    trajectory, step, converged, failures = _loop(series, spec, config, gamma0, estimator, 0)
    iterations = len(trajectory)
    restarted = False
    if not converged and config.restart:
        log.info("no convergence after %d iterations; restarting from last estimate", iterations)
        more, step, converged, extra = _loop(series, spec, config, trajectory[-1], estimator,
                                             config.H)
        trajectory += more
        failures += extra
        iterations += len(more)
        restarted = True
    inner = np.array([g.to_array() for g in step.inner])
    return ImputationResult(
        gamma_hat=trajectory[-1],
        iterations=iterations,
        converged=converged,
        uncertainty_sd=inner.std(axis=0, ddof=1),
        trajectory=[gamma0, *trajectory],
        completed=step.first_completed,
        inner_failures=failures,
        restarted=restarted,
    )
