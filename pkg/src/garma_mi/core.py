"""Shared domain types, the logit link and parameter validation."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

#: Clamping constant for series values and conditional quantities.
EPS = 1e-6


class Family(enum.Enum):
    BETA = "barma"
    KUMARASWAMY = "karma"
    UNIT_WEIBULL = "uwarma"

    @classmethod
    def parse(cls, name: "str | Family") -> "Family":
        if isinstance(name, Family):
            return name
        key = name.strip().lower()
        aliases = {
            "beta": cls.BETA, "barma": cls.BETA,
            "kumaraswamy": cls.KUMARASWAMY, "karma": cls.KUMARASWAMY,
            "unitweibull": cls.UNIT_WEIBULL, "unit-weibull": cls.UNIT_WEIBULL,
            "uw": cls.UNIT_WEIBULL, "uwarma": cls.UNIT_WEIBULL,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown model family {name!r}") from None

    @property
    def code(self) -> int:
        # integer tag shared with the compiled kernels
        return _FAMILY_CODES[self]


_FAMILY_CODES = {Family.BETA: 0, Family.KUMARASWAMY: 1, Family.UNIT_WEIBULL: 2}


class Link(enum.Enum):
    LOGIT = "logit"


class DomainError(ValueError):
    """Raised when a value falls outside the support of a link or density."""


@dataclass(frozen=True)
class ModelSpec:
    family: Family = Family.BETA
    p: int = 1
    q: int = 1
    rho: float = 0.5
    link: Link = Link.LOGIT

    def __post_init__(self):
        object.__setattr__(self, "family", Family.parse(self.family))
        if self.p < 0 or self.q < 0:
            raise ValueError("orders p and q must be non-negative")
        if not 0.0 < self.rho < 1.0:
            raise ValueError("rho must lie in (0, 1)")

    @property
    def m(self) -> int:
        """Number of leading observations conditioned upon."""
        return max(self.p, self.q)

    @property
    def n_params(self) -> int:
        return 2 + self.p + self.q


@dataclass(frozen=True)
class ParamVector:
    """Full GARMA(p, q) parameter: intercept, AR and MA coefficients, shape."""

    alpha: float
    phi: tuple[float, ...] = ()
    theta: tuple[float, ...] = ()
    nu: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "phi", tuple(float(v) for v in np.atleast_1d(self.phi)))
        object.__setattr__(self, "theta", tuple(float(v) for v in np.atleast_1d(self.theta)))
        object.__setattr__(self, "nu", float(self.nu))

    def to_array(self) -> np.ndarray:
        return np.array([self.alpha, *self.phi, *self.theta, self.nu])

    @classmethod
    def from_array(cls, values: Sequence[float], p: int, q: int) -> "ParamVector":
        values = np.asarray(values, dtype=float)
        if values.shape != (p + q + 2,):
            raise ValueError(f"expected {p + q + 2} values, got shape {values.shape}")
        return cls(values[0], values[1:1 + p], values[1 + p:1 + p + q], values[-1])

    @property
    def names(self) -> list[str]:
        p, q = len(self.phi), len(self.theta)
        return param_names(p, q)


def param_names(p: int, q: int) -> list[str]:
    phi = ["phi"] if p == 1 else [f"phi{j}" for j in range(1, p + 1)]
    theta = ["theta"] if q == 1 else [f"theta{i}" for i in range(1, q + 1)]
    return ["alpha", *phi, *theta, "nu"]


@dataclass(frozen=True)
class ObservedSeries:
    """A series in (0, 1) with an explicit observation mask.

    ``values`` holds NaN at missing positions, but ``mask`` is authoritative:
    ``mask[t]`` is True when ``y_t`` was observed.
    """

    values: np.ndarray
    mask: np.ndarray = field(default=None)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        mask = ~np.isnan(values) if self.mask is None else np.array(self.mask, dtype=bool)
        if mask.shape != values.shape or values.ndim != 1:
            raise ValueError("values and mask must be 1-d arrays of equal length")
        values[~mask] = np.nan
        obs = values[mask]
        if np.any((obs <= 0.0) | (obs >= 1.0)) or not np.all(np.isfinite(obs)):
            raise DomainError("observed values must lie strictly inside (0, 1)")
        values.setflags(write=False)
        mask.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "mask", mask)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def n_missing(self) -> int:
        return int((~self.mask).sum())

    @property
    def is_complete(self) -> bool:
        return bool(self.mask.all())

    @classmethod
    def from_complete(cls, values, mask=None) -> "ObservedSeries":
        values = np.array(values, dtype=float)
        if mask is not None:
            values = np.where(mask, values, np.nan)
        return cls(values, mask)


def as_complete(values) -> np.ndarray:
    """Validate a complete series and return it as a float array.

    A complete series is a plain 1-d float array with every value in (0, 1).
    """
    y = np.asarray(values, dtype=float)
    if y.ndim != 1:
        raise ValueError("series must be one-dimensional")
    if not np.all(np.isfinite(y)):
        raise DomainError("complete series cannot contain absent values")
    if np.any((y <= 0.0) | (y >= 1.0)):
        raise DomainError("series values must lie strictly inside (0, 1)")
    return y


def clamp(x, eps: float = EPS):
    return np.clip(x, eps, 1.0 - eps)


def link_eval(y, clip: bool = True):
    """Logit link ``log(y / (1 - y))``.

    With ``clip=True`` inputs are first clamped into ``[EPS, 1 - EPS]``;
    otherwise values outside that band raise :class:`DomainError`.
    """
    y = np.asarray(y, dtype=float)
    if clip:
        y = clamp(y)
    elif np.any((y < EPS) | (y > 1.0 - EPS)) or np.any(np.isnan(y)):
        raise DomainError("link argument outside [EPS, 1 - EPS]")
    out = np.log(y) - np.log1p(-y)
    return float(out) if out.ndim == 0 else out


def link_inv(eta):
    """Inverse logit, clamped into ``[EPS, 1 - EPS]``."""
    eta = np.asarray(eta, dtype=float)
    # exp(-|eta|) never overflows
    z = np.exp(-np.abs(eta))
    out = np.where(eta >= 0, 1.0 / (1.0 + z), z / (1.0 + z))
    out = clamp(out)
    return float(out) if out.ndim == 0 else out


def validate_params(gamma: ParamVector, spec: ModelSpec) -> list[str]:
    """Return the list of violated parameter invariants (empty when valid)."""
    problems = []
    if not (math.isfinite(gamma.nu) and gamma.nu > 0):
        problems.append("nu must be positive")
    if len(gamma.phi) != spec.p:
        problems.append("phi length mismatch")
    if len(gamma.theta) != spec.q:
        problems.append("theta length mismatch")
    coefs = (gamma.alpha, *gamma.phi, *gamma.theta)
    if not all(math.isfinite(c) for c in coefs):
        problems.append("coefficients must be finite")
    return problems
