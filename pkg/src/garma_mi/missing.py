"""MCAR masks, observed-run structure and the longest-run starting value."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ModelSpec, ObservedSeries, ParamVector
from .pmle import EstimationResult, estimate_pmle


class RunTooShortError(ValueError):
    """The longest (bridged) run cannot support an estimate; raise ``L``."""


@dataclass(frozen=True)
class RunPartition:
    runs: tuple[tuple[int, int], ...]  # half-open (start, stop), 0-based

    @property
    def lengths(self) -> np.ndarray:
        return np.array([b - a for a, b in self.runs], dtype=int)


def make_mcar_mask(n: int, r: float, rng: np.random.Generator) -> np.ndarray:
    """Observation mask with ``round(r * n)`` interior positions missing.

    The first and last positions are never missing.
    """
    if n < 3:
        raise ValueError("need n >= 3")
    if not 0.0 <= r < 1.0:
        raise ValueError("missing proportion must lie in [0, 1)")
    n_missing = int(round(r * n))
    if n_missing > n - 2:
        raise ValueError(f"cannot remove {n_missing} of {n - 2} interior points")
    mask = np.ones(n, dtype=bool)
    mask[rng.choice(np.arange(1, n - 1), size=n_missing, replace=False)] = False
    return mask


def partition_runs(mask) -> RunPartition:
    mask = np.asarray(mask, dtype=bool)
    padded = np.concatenate(([False], mask, [False])).astype(np.int8)
    edges = np.flatnonzero(np.diff(padded))
    return RunPartition(tuple((int(a), int(b)) for a, b in zip(edges[::2], edges[1::2])))


def bridged_runs(mask, L: int) -> list[tuple[int, int]]:
    """Observed stretches after joining runs separated by gaps of at most ``L``."""
    runs = partition_runs(mask).runs
    if not runs:
        return []
    merged = [list(runs[0])]
    for a, b in runs[1:]:
        if a - merged[-1][1] <= L:
            merged[-1][1] = b
        else:
            merged.append([a, b])
    return [(a, b) for a, b in merged]


def longest_run(series: ObservedSeries, L: int = 0):
    """All maximal stretches after bridging gaps of length ``<= L``.

    Returns a list of ``(start, stop, filled)`` with half-open 0-based bounds;
    ``filled`` holds the stretch with bridged gaps linearly interpolated
    between their flanking observed values.
    """
    if L < 0:
        raise ValueError("L must be non-negative")
    stretches = bridged_runs(series.mask, L)
    if not stretches:
        raise RunTooShortError("series has no observed values")
    best = max(b - a for a, b in stretches)
    out = []
    idx = np.arange(len(series))
    for a, b in stretches:
        if b - a != best:
            continue
        vals = series.values[a:b]
        obs = series.mask[a:b]
        filled = np.interp(idx[a:b], idx[a:b][obs], vals[obs])
        out.append((a, b, filled))
    return out


def longest_run_length(mask, L: int = 0) -> int:
    stretches = bridged_runs(mask, L)
    return max((b - a for a, b in stretches), default=0)


def initial_estimate(series: ObservedSeries, spec: ModelSpec, L: int = 0,
                     estimator=estimate_pmle) -> ParamVector:
    """Starting value from the longest observed (or ``L``-bridged) stretch.

    Tied stretches are each estimated and the estimates averaged
    component-wise.
    """
    stretches = longest_run(series, L)
    length = stretches[0][1] - stretches[0][0]
    need = spec.m + spec.n_params
    if length <= need:
        raise RunTooShortError(
            f"longest run has {length} points, need more than {need}; "
            f"increase the gap bridge L (currently {L})")
    estimates = []
    for _, _, filled in stretches:
        res = estimator(filled, spec)
        if isinstance(res, EstimationResult):
            res = res.gamma_hat
        estimates.append(res.to_array())
    return ParamVector.from_array(np.mean(estimates, axis=0), spec.p, spec.q)
