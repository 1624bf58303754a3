"""Conditional distributions of ``Y_t`` given ``mu_t`` and ``nu``.

Beta is parameterized by its mean, Kumaraswamy by its median and
Unit-Weibull by its ``rho``-quantile.  All functions broadcast over numpy
arrays.
"""

from __future__ import annotations

import numpy as np
from scipy import special

from .core import EPS, DomainError, Family, clamp

LOG_HALF = np.log(0.5)


def kumaraswamy_b(mu, nu):
    """Second Kumaraswamy exponent giving median ``mu`` when ``a = nu``."""
    return LOG_HALF / np.log1p(-np.power(mu, nu))


def _check_unit(y):
    y = np.asarray(y, dtype=float)
    if np.any((y <= 0.0) | (y >= 1.0)) or np.any(np.isnan(y)):
        raise DomainError("argument must lie strictly inside (0, 1)")
    return y


def log_density(family, y, mu, nu, rho=0.5):
    """Natural log of the conditional density at ``y``.

    ``y`` and ``mu`` are clamped into ``[EPS, 1 - EPS]``.  A non-finite
    result raises :class:`DomainError`.
    """
    family = Family.parse(family)
    y = clamp(np.asarray(y, dtype=float))
    mu = clamp(np.asarray(mu, dtype=float))
    nu = np.asarray(nu, dtype=float)
    with np.errstate(all="ignore"):
        if family is Family.BETA:
            a, b = nu * mu, nu * (1.0 - mu)
            out = (special.gammaln(nu) - special.gammaln(a) - special.gammaln(b)
                   + (a - 1.0) * np.log(y) + (b - 1.0) * np.log1p(-y))
        elif family is Family.KUMARASWAMY:
            b = kumaraswamy_b(mu, nu)
            out = (np.log(nu) + np.log(b) + (nu - 1.0) * np.log(y)
                   + (b - 1.0) * np.log1p(-np.power(y, nu)))
        else:
            log_mu, log_rho = np.log(mu), np.log(rho)
            z = np.log(y) / log_mu
            out = (np.log(nu) - np.log(y) + np.log(log_rho / log_mu)
                   + (nu - 1.0) * np.log(z) + np.power(z, nu) * log_rho)
    if not np.all(np.isfinite(out)):
        raise DomainError(f"non-finite {family.name} log-density")
    return float(out) if np.ndim(out) == 0 else out


def cdf(family, y, mu, nu, rho=0.5):
    family = Family.parse(family)
    y = _check_unit(y)
    mu = clamp(np.asarray(mu, dtype=float))
    nu = np.asarray(nu, dtype=float)
    if family is Family.BETA:
        out = special.betainc(nu * mu, nu * (1.0 - mu), y)
    elif family is Family.KUMARASWAMY:
        b = kumaraswamy_b(mu, nu)
        # 1 - (1 - y^a)^b, written to keep precision in both tails
        out = -np.expm1(b * np.log1p(-np.power(y, nu)))
    else:
        z = np.log(y) / np.log(mu)
        out = np.power(rho, np.power(z, nu))
    return float(out) if np.ndim(out) == 0 else out


def quantile(family, u, mu, nu, rho=0.5):
    """Inverse CDF for the families with a closed-form inverse."""
    family = Family.parse(family)
    u = np.asarray(u, dtype=float)
    mu = clamp(np.asarray(mu, dtype=float))
    if family is Family.KUMARASWAMY:
        b = kumaraswamy_b(mu, nu)
        # (1 - (1 - u)^(1/b))^(1/a)
        out = np.power(-np.expm1(np.log1p(-u) / b), 1.0 / nu)
    elif family is Family.UNIT_WEIBULL:
        z = np.power(np.log(u) / np.log(rho), 1.0 / nu)
        out = np.exp(np.log(mu) * z)
    else:
        out = special.betaincinv(nu * mu, nu * (1.0 - mu), u)
    return float(out) if np.ndim(out) == 0 else out


def sample(family, mu, nu, rng: np.random.Generator, rho=0.5, size=None):
    """Draw from the conditional distribution, clamped into ``[EPS, 1 - EPS]``.

    Kumaraswamy and Unit-Weibull use inverse transform of one uniform draw
    per variate; Beta uses the generator's own beta sampler.
    """
    family = Family.parse(family)
    mu = clamp(np.asarray(mu, dtype=float))
    if size is None and np.ndim(mu) > 0:
        size = np.shape(mu)
    if family is Family.BETA:
        draws = rng.beta(nu * mu, nu * (1.0 - mu), size=size)
    else:
        draws = quantile(family, rng.random(size=size), mu, nu, rho)
    out = np.clip(draws, EPS, 1.0 - EPS)
    return float(out) if np.ndim(out) == 0 else out
