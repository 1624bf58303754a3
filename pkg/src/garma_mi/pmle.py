"""Partial maximum likelihood via Nelder-Mead."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _pykernels, kernels
from .core import ModelSpec, ParamVector, as_complete, clamp, link_eval
from .engine import partial_loglik

FTOL = 1e-8
XTOL = 1e-8


class EstimationError(RuntimeError):
    pass


@dataclass(frozen=True)
class EstimationResult:
    gamma_hat: ParamVector
    loglik: float
    converged: bool
    n_evals: int
    degenerate: bool = False


def simplex_minimize(objective, start, ftol=FTOL, xtol=XTOL, max_evals=None):
    """Minimize ``objective`` with the Nelder-Mead simplex method.

    Parameters
    ----------
    objective : callable
        Maps a 1-d array to a float.  Large finite values may be returned to
        mark infeasible points.
    start : array_like
        Starting point; the initial simplex offsets each coordinate by
        ``0.1 * max(abs(start))`` (or 0.1 when ``start`` is zero).
    ftol, xtol : float
        Stop when the spread of objective values is at most
        ``ftol * (|f_best| + ftol)``, or when the simplex diameter (max-norm)
        is at most ``xtol``.
    max_evals : int, optional
        Evaluation budget; defaults to ``5000 * len(start)``.

    Returns
    -------
    (argmin, value, converged)
    """
    start = np.asarray(start, dtype=float)
    if start.ndim != 1 or not np.all(np.isfinite(start)):
        raise ValueError("start must be a finite 1-d vector")
    if max_evals is None:
        max_evals = 5000 * len(start)

    def f(x):
        return float(objective(np.asarray(x)))

    x, fx, converged, _ = _pykernels.nelder_mead(f, list(start), ftol, xtol, max_evals)
    return np.asarray(x), fx, converged


def to_search(gamma: ParamVector) -> np.ndarray:
    x = gamma.to_array()
    x[-1] = math.log(gamma.nu)
    return x


def from_search(x, spec: ModelSpec) -> ParamVector:
    x = np.asarray(x, dtype=float).copy()
    x[-1] = math.exp(min(x[-1], 700.0))
    return ParamVector.from_array(x, spec.p, spec.q)


def default_start(series, spec: ModelSpec) -> ParamVector:
    y = as_complete(series)
    return ParamVector(link_eval(float(np.mean(y))), np.zeros(spec.p), np.zeros(spec.q), 1.0)


def estimate_pmle(series, spec: ModelSpec, start: ParamVector | None = None, *,
                  ftol: float = FTOL, xtol: float = XTOL, max_evals: int | None = None,
                  backend: str | None = None) -> EstimationResult:
    """Maximize the partial log-likelihood of a complete series.

    The shape parameter is searched as ``log(nu)``; the remaining
    coefficients are unconstrained.
    """
    y = clamp(as_complete(series))
    k = spec.n_params
    if len(y) <= spec.m + k:
        raise EstimationError(f"series of length {len(y)} too short for {k} parameters")
    if start is None:
        start = default_start(y, spec)
    if max_evals is None:
        max_evals = 5000 * k
    degenerate = bool(np.ptp(y) == 0.0)
    gy, ly, l1y = link_eval(y), np.log(y), np.log1p(-y)
    x, fx, converged, nevals = kernels.fit(
        spec.family.code, gy, ly, l1y, spec.p, spec.q, to_search(start), spec.rho,
        ftol, xtol, max_evals, backend=backend)
    gamma = from_search(x, spec)
    return EstimationResult(gamma_hat=gamma, loglik=-fx, converged=converged and not degenerate,
                            n_evals=nevals, degenerate=degenerate)


def check_loglik(series, result: EstimationResult, spec: ModelSpec) -> float:
    """Recompute the log-likelihood reported by an estimation result."""
    return partial_loglik(series, result.gamma_hat, spec)
