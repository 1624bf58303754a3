"""GARMA systematic component: filtering, simulation and partial likelihood.

The link-scale recursion is

    eta_t = alpha + sum_j phi_j (g(y_{t-j}) - alpha) + sum_i theta_i r_{t-i},
    r_t   = g(y_t) - eta_t,

with the first ``m = max(p, q)`` observations conditioned upon (``eta = alpha``
and ``r = 0`` there).  ``eta_t`` is clipped to ``g([EPS, 1 - EPS])`` so that
``r_t = g(y_t) - g(mu_t)`` holds for the clamped ``mu_t``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import distributions, kernels
from ._pykernels import ETA_MAX
from .core import EPS, ModelSpec, ParamVector, as_complete, clamp, link_eval, link_inv

LOGLIK_SENTINEL = kernels.SENTINEL


@dataclass(frozen=True)
class MuPath:
    mu: np.ndarray
    eta: np.ndarray
    r: np.ndarray
    m: int


@dataclass(frozen=True)
class SimulatedSeries:
    y: np.ndarray
    mu: np.ndarray


def _prepare(series):
    y = clamp(as_complete(series))
    return y, link_eval(y), np.log(y), np.log1p(-y)


def filter_mu(series, gamma: ParamVector, spec: ModelSpec) -> MuPath:
    y = clamp(as_complete(series))
    eta, r = kernels.filter_path(link_eval(y), gamma.alpha, gamma.phi, gamma.theta)
    if not np.all(np.isfinite(eta)):
        raise FloatingPointError("non-finite linear predictor in filter_mu")
    return MuPath(mu=link_inv(eta), eta=eta, r=r, m=spec.m)


def partial_loglik(series, gamma: ParamVector, spec: ModelSpec) -> float:
    """Sum of conditional log-densities for ``t > m``.

    Degenerate parameter values give ``LOGLIK_SENTINEL`` instead of raising.
    """
    _, gy, ly, l1y = _prepare(series)
    return kernels.loglik(spec.family.code, gy, ly, l1y, gamma.alpha, gamma.phi,
                          gamma.theta, gamma.nu, spec.rho)


def simulate(gamma: ParamVector, spec: ModelSpec, n: int, burn_in: int,
             rng: np.random.Generator) -> SimulatedSeries:
    """Simulate ``n`` values after discarding ``burn_in`` initial ones.

    The first ``m`` draws use ``mu = g^{-1}(alpha)`` with ``r = 0``, the same
    convention :func:`filter_mu` applies, so filtering a simulated series
    (with ``burn_in = 0``) reproduces its ``mu`` path exactly.
    """
    if n < 1 or burn_in < 0:
        raise ValueError("need n >= 1 and burn_in >= 0")
    total = n + burn_in
    p, q, m = spec.p, spec.q, spec.m
    phi = np.asarray(gamma.phi)
    theta = np.asarray(gamma.theta)
    alpha, nu = gamma.alpha, gamma.nu
    y = np.empty(total)
    gy = np.empty(total)
    r = np.zeros(total)
    mu = np.empty(total)
    for t in range(total):
        eta = alpha
        if t >= m:
            for j in range(p):
                eta += phi[j] * (gy[t - j - 1] - alpha)
            for i in range(q):
                eta += theta[i] * r[t - i - 1]
            eta = min(max(eta, -ETA_MAX), ETA_MAX)
        mu[t] = link_inv(eta)
        y[t] = distributions.sample(spec.family, mu[t], nu, rng, rho=spec.rho)
        gy[t] = link_eval(y[t])
        if t >= m:
            r[t] = gy[t] - eta
    return SimulatedSeries(y=y[burn_in:], mu=mu[burn_in:])


def interior(y) -> bool:
    """True when every value is inside the clamped band ``[EPS, 1 - EPS]``."""
    y = np.asarray(y)
    return bool(np.all((y >= EPS) & (y <= 1 - EPS)))
