"""Pure-Python implementations of the hot loops.

Mirrors ``_ckernels.pyx`` statement for statement so both backends walk the
same Nelder-Mead path up to floating-point rounding.  Inputs are the
link-transformed series ``gy`` and the precomputed ``ly = log(y)`` and
``l1y = log(1 - y)`` of an already clamped series.
"""

import math

EPS = 1e-6
# link-scale image of [EPS, 1 - EPS]; the linear predictor is clipped to it
ETA_MAX = math.log((1.0 - EPS) / EPS)
SENTINEL = -1e12
LOG_HALF = math.log(0.5)


def _inv_logit(eta):
    if eta >= 0.0:
        mu = 1.0 / (1.0 + math.exp(-eta))
    else:
        z = math.exp(eta)
        mu = z / (1.0 + z)
    if mu < EPS:
        return EPS
    if mu > 1.0 - EPS:
        return 1.0 - EPS
    return mu


def filter_path(gy, alpha, phi, theta):
    """Link-scale recursion; returns ``(eta, r)`` lists of length ``len(gy)``.

    The first ``m = max(p, q)`` positions are conditioned upon: ``eta = alpha``
    and ``r = 0`` there.  ``eta`` is clipped to ``[-ETA_MAX, ETA_MAX]`` so that
    ``r_t = g(y_t) - g(mu_t)`` uses the clamped ``mu_t``.
    """
    n = len(gy)
    p, q = len(phi), len(theta)
    m = max(p, q)
    eta = [alpha] * n
    r = [0.0] * n
    for t in range(m, n):
        e = alpha
        for j in range(p):
            e += phi[j] * (gy[t - j - 1] - alpha)
        for i in range(q):
            e += theta[i] * r[t - i - 1]
        e = min(max(e, -ETA_MAX), ETA_MAX)
        eta[t] = e
        r[t] = gy[t] - e
    return eta, r


def _term(family, ly, l1y, mu, nu, rho, lg_nu, log_nu, log_rho):
    if family == 0:
        a = nu * mu
        b = nu - a
        return lg_nu - math.lgamma(a) - math.lgamma(b) + (a - 1.0) * ly + (b - 1.0) * l1y
    if family == 1:
        b = LOG_HALF / math.log1p(-math.exp(nu * math.log(mu)))
        return (log_nu + math.log(b) + (nu - 1.0) * ly
                + (b - 1.0) * math.log1p(-math.exp(nu * ly)))
    log_mu = math.log(mu)
    z = ly / log_mu
    return (log_nu - ly + math.log(log_rho / log_mu)
            + (nu - 1.0) * math.log(z) + math.exp(nu * math.log(z)) * log_rho)


def loglik(family, gy, ly, l1y, alpha, phi, theta, nu, rho):
    """Conditional log-likelihood summed over ``t > m``; SENTINEL if degenerate."""
    if not (nu > 0.0) or math.isinf(nu):
        return SENTINEL
    n = len(gy)
    p, q = len(phi), len(theta)
    m = max(p, q)
    r = [0.0] * n
    lg_nu = math.lgamma(nu)
    log_nu = math.log(nu)
    log_rho = math.log(rho)
    total = 0.0
    try:
        for t in range(m, n):
            e = alpha
            for j in range(p):
                e += phi[j] * (gy[t - j - 1] - alpha)
            for i in range(q):
                e += theta[i] * r[t - i - 1]
            e = min(max(e, -ETA_MAX), ETA_MAX)
            r[t] = gy[t] - e
            mu = _inv_logit(e)
            total += _term(family, ly[t], l1y[t], mu, nu, rho, lg_nu, log_nu, log_rho)
    except (ValueError, OverflowError):
        return SENTINEL
    if not math.isfinite(total):
        return SENTINEL
    return total


def _objective(x, family, gy, ly, l1y, p, q, rho):
    try:
        nu = math.exp(x[-1])
    except OverflowError:
        return -SENTINEL
    return -loglik(family, gy, ly, l1y, x[0], x[1:1 + p], x[1 + p:1 + p + q], nu, rho)


def nelder_mead(f, x0, ftol, xtol, max_evals):
    """Nelder-Mead on a Python callable; returns ``(x, fx, converged, nevals)``.

    Coefficients: reflection 1, expansion 2, contraction 1/2, shrink 1/2.
    The initial simplex offsets each coordinate by ``0.1 * max|x0|`` (0.1 when
    ``x0`` is all zeros).
    """
    k = len(x0)
    scale = max(abs(v) for v in x0) if k else 0.0
    step = 0.1 * scale if scale > 0.0 else 0.1
    xs = [list(x0)]
    for i in range(k):
        v = list(x0)
        v[i] += step
        xs.append(v)
    fs = [f(v) for v in xs]
    nevals = k + 1
    converged = False
    while True:
        # stable insertion sort by objective value
        for i in range(1, k + 1):
            fi, xi = fs[i], xs[i]
            j = i - 1
            while j >= 0 and fs[j] > fi:
                fs[j + 1] = fs[j]
                xs[j + 1] = xs[j]
                j -= 1
            fs[j + 1] = fi
            xs[j + 1] = xi
        fspread = fs[k] - fs[0]
        diam = 0.0
        for i in range(1, k + 1):
            for d in range(k):
                diff = abs(xs[i][d] - xs[0][d])
                if diff > diam:
                    diam = diff
        # relative spread as in R optim, or a collapsed simplex
        if fspread <= ftol * (abs(fs[0]) + ftol) or diam <= xtol:
            converged = True
            break
        if nevals >= max_evals:
            break
        c = [0.0] * k
        for i in range(k):
            for d in range(k):
                c[d] += xs[i][d]
        for d in range(k):
            c[d] /= k
        xw = xs[k]
        xr = [c[d] + (c[d] - xw[d]) for d in range(k)]
        fr = f(xr)
        nevals += 1
        if fr < fs[0]:
            xe = [c[d] + 2.0 * (c[d] - xw[d]) for d in range(k)]
            fe = f(xe)
            nevals += 1
            if fe < fr:
                xs[k], fs[k] = xe, fe
            else:
                xs[k], fs[k] = xr, fr
            continue
        if fr < fs[k - 1]:
            xs[k], fs[k] = xr, fr
            continue
        if fr < fs[k]:
            xc = [c[d] + 0.5 * (xr[d] - c[d]) for d in range(k)]
            fc = f(xc)
            nevals += 1
            if fc <= fr:
                xs[k], fs[k] = xc, fc
                continue
        else:
            xc = [c[d] + 0.5 * (xw[d] - c[d]) for d in range(k)]
            fc = f(xc)
            nevals += 1
            if fc < fs[k]:
                xs[k], fs[k] = xc, fc
                continue
        for i in range(1, k + 1):
            xs[i] = [xs[0][d] + 0.5 * (xs[i][d] - xs[0][d]) for d in range(k)]
            fs[i] = f(xs[i])
        nevals += k
    return xs[0], fs[0], converged, nevals


def fit(family, gy, ly, l1y, p, q, x0, rho, ftol, xtol, max_evals):
    """Minimize the negative log-likelihood over ``(alpha, phi, theta, log nu)``."""
    gy, ly, l1y = list(gy), list(ly), list(l1y)

    def f(x):
        return _objective(x, family, gy, ly, l1y, p, q, rho)

    x, fx, converged, nevals = nelder_mead(f, [float(v) for v in x0], ftol, xtol, max_evals)
    return list(x), fx, converged, nevals
