# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: GARMA filtering, conditional log-likelihood and a
Nelder-Mead fit specialized to the partial likelihood.

Must stay statement-for-statement equivalent to ``_pykernels.py``.
"""

import numpy as np
from libc.math cimport exp, log, log1p, lgamma, fabs, isfinite, isinf
from libc.stdlib cimport malloc, free

DEF EPS = 1e-6
cdef double ETA_MAX = log((1.0 - EPS) / EPS)
cdef double SENTINEL = -1e12
cdef double LOG_HALF = log(0.5)


cdef inline double _inv_logit(double eta) nogil:
    cdef double mu, z
    if eta >= 0.0:
        mu = 1.0 / (1.0 + exp(-eta))
    else:
        z = exp(eta)
        mu = z / (1.0 + z)
    if mu < EPS:
        return EPS
    if mu > 1.0 - EPS:
        return 1.0 - EPS
    return mu


cdef inline double _clip(double e) nogil:
    if e < -ETA_MAX:
        return -ETA_MAX
    if e > ETA_MAX:
        return ETA_MAX
    return e


def filter_path(double[::1] gy, double alpha, double[::1] phi, double[::1] theta):
    cdef Py_ssize_t n = gy.shape[0], p = phi.shape[0], q = theta.shape[0]
    cdef Py_ssize_t m = p if p > q else q
    cdef Py_ssize_t t, i, j
    cdef double e
    eta_arr = np.full(n, alpha)
    r_arr = np.zeros(n)
    cdef double[::1] eta = eta_arr
    cdef double[::1] r = r_arr
    for t in range(m, n):
        e = alpha
        for j in range(p):
            e += phi[j] * (gy[t - j - 1] - alpha)
        for i in range(q):
            e += theta[i] * r[t - i - 1]
        e = _clip(e)
        eta[t] = e
        r[t] = gy[t] - e
    return eta_arr, r_arr


cdef double _loglik(int family, const double* gy, const double* ly, const double* l1y,
                    Py_ssize_t n, double alpha, const double* phi, Py_ssize_t p,
                    const double* theta, Py_ssize_t q, double nu, double rho,
                    double* r) nogil:
    cdef Py_ssize_t m = p if p > q else q
    cdef Py_ssize_t t, i, j
    cdef double e, mu, a, b, log_mu, z, term
    cdef double total = 0.0
    if not (nu > 0.0) or isinf(nu):
        return SENTINEL
    cdef double lg_nu = lgamma(nu)
    cdef double log_nu = log(nu)
    cdef double log_rho = log(rho)
    for t in range(m):
        r[t] = 0.0
    for t in range(m, n):
        e = alpha
        for j in range(p):
            e += phi[j] * (gy[t - j - 1] - alpha)
        for i in range(q):
            e += theta[i] * r[t - i - 1]
        e = _clip(e)
        r[t] = gy[t] - e
        mu = _inv_logit(e)
        if family == 0:
            a = nu * mu
            b = nu - a
            term = lg_nu - lgamma(a) - lgamma(b) + (a - 1.0) * ly[t] + (b - 1.0) * l1y[t]
        elif family == 1:
            b = LOG_HALF / log1p(-exp(nu * log(mu)))
            term = (log_nu + log(b) + (nu - 1.0) * ly[t]
                    + (b - 1.0) * log1p(-exp(nu * ly[t])))
        else:
            log_mu = log(mu)
            z = ly[t] / log_mu
            term = (log_nu - ly[t] + log(log_rho / log_mu)
                    + (nu - 1.0) * log(z) + exp(nu * log(z)) * log_rho)
        total += term
        if not isfinite(total):
            return SENTINEL
    return total


def loglik(int family, double[::1] gy, double[::1] ly, double[::1] l1y, double alpha,
           double[::1] phi, double[::1] theta, double nu, double rho):
    cdef Py_ssize_t n = gy.shape[0]
    r_arr = np.zeros(n)
    cdef double[::1] r = r_arr
    cdef double[::1] phi_c = np.ascontiguousarray(phi) if phi.shape[0] else np.zeros(1)
    cdef double[::1] theta_c = np.ascontiguousarray(theta) if theta.shape[0] else np.zeros(1)
    return _loglik(family, &gy[0], &ly[0], &l1y[0], n, alpha, &phi_c[0], phi.shape[0],
                   &theta_c[0], theta.shape[0], nu, rho, &r[0])


cdef struct Problem:
    int family
    const double* gy
    const double* ly
    const double* l1y
    Py_ssize_t n
    Py_ssize_t p
    Py_ssize_t q
    double rho
    double* r


cdef inline double _objective(const double* x, Problem* pr) nogil:
    cdef double nu = exp(x[pr.p + pr.q + 1])
    return -_loglik(pr.family, pr.gy, pr.ly, pr.l1y, pr.n, x[0], x + 1, pr.p,
                    x + 1 + pr.p, pr.q, nu, pr.rho, pr.r)


cdef void _copy(double* dst, const double* src, Py_ssize_t k) nogil:
    cdef Py_ssize_t d
    for d in range(k):
        dst[d] = src[d]


def fit(int family, double[::1] gy, double[::1] ly, double[::1] l1y, int p, int q,
        x0, double rho, double ftol, double xtol, long max_evals):
    """Nelder-Mead minimization of the negative partial log-likelihood.

    Search coordinates are ``(alpha, phi, theta, log nu)``.  Returns
    ``(x, fx, converged, nevals)``.
    """
    cdef Py_ssize_t k = p + q + 2
    cdef Py_ssize_t n = gy.shape[0]
    cdef double[::1] start = np.ascontiguousarray(x0, dtype=np.float64)
    if start.shape[0] != k:
        raise ValueError("start vector has wrong length")
    r_arr = np.zeros(n)
    cdef double[::1] r = r_arr
    cdef Problem pr
    pr.family = family
    pr.gy = &gy[0]
    pr.ly = &ly[0]
    pr.l1y = &l1y[0]
    pr.n = n
    pr.p = p
    pr.q = q
    pr.rho = rho
    pr.r = &r[0]

    # simplex rows are pointers into one block so sorting swaps pointers only
    cdef double* block = <double*> malloc((k + 1 + 4) * k * sizeof(double))
    cdef double** xs = <double**> malloc((k + 1) * sizeof(double*))
    cdef double* fs = <double*> malloc((k + 1) * sizeof(double))
    if block == NULL or xs == NULL or fs == NULL:
        free(block); free(xs); free(fs)
        raise MemoryError()
    cdef double* c = block + (k + 1) * k
    cdef double* xr = c + k
    cdef double* xe = xr + k
    cdef double* xc = xe + k
    cdef double* tmp
    cdef Py_ssize_t i, j, d
    cdef double scale = 0.0, step, fi, fr, fe, fc, fspread, diam, diff
    cdef long nevals
    cdef bint converged = False

    with nogil:
        for i in range(k + 1):
            xs[i] = block + i * k
            _copy(xs[i], &start[0], k)
        for d in range(k):
            if fabs(start[d]) > scale:
                scale = fabs(start[d])
        step = 0.1 * scale if scale > 0.0 else 0.1
        for i in range(k):
            xs[i + 1][i] += step
        for i in range(k + 1):
            fs[i] = _objective(xs[i], &pr)
        nevals = k + 1
        while True:
            for i in range(1, k + 1):
                fi = fs[i]
                tmp = xs[i]
                j = i - 1
                while j >= 0 and fs[j] > fi:
                    fs[j + 1] = fs[j]
                    xs[j + 1] = xs[j]
                    j -= 1
                fs[j + 1] = fi
                xs[j + 1] = tmp
            fspread = fs[k] - fs[0]
            diam = 0.0
            for i in range(1, k + 1):
                for d in range(k):
                    diff = fabs(xs[i][d] - xs[0][d])
                    if diff > diam:
                        diam = diff
            # relative spread as in R optim, or a collapsed simplex
            if fspread <= ftol * (fabs(fs[0]) + ftol) or diam <= xtol:
                converged = True
                break
            if nevals >= max_evals:
                break
            for d in range(k):
                c[d] = 0.0
            for i in range(k):
                for d in range(k):
                    c[d] += xs[i][d]
            for d in range(k):
                c[d] /= k
            for d in range(k):
                xr[d] = c[d] + (c[d] - xs[k][d])
            fr = _objective(xr, &pr)
            nevals += 1
            if fr < fs[0]:
                for d in range(k):
                    xe[d] = c[d] + 2.0 * (c[d] - xs[k][d])
                fe = _objective(xe, &pr)
                nevals += 1
                if fe < fr:
                    _copy(xs[k], xe, k)
                    fs[k] = fe
                else:
                    _copy(xs[k], xr, k)
                    fs[k] = fr
                continue
            if fr < fs[k - 1]:
                _copy(xs[k], xr, k)
                fs[k] = fr
                continue
            if fr < fs[k]:
                for d in range(k):
                    xc[d] = c[d] + 0.5 * (xr[d] - c[d])
                fc = _objective(xc, &pr)
                nevals += 1
                if fc <= fr:
                    _copy(xs[k], xc, k)
                    fs[k] = fc
                    continue
            else:
                for d in range(k):
                    xc[d] = c[d] + 0.5 * (xs[k][d] - c[d])
                fc = _objective(xc, &pr)
                nevals += 1
                if fc < fs[k]:
                    _copy(xs[k], xc, k)
                    fs[k] = fc
                    continue
            for i in range(1, k + 1):
                for d in range(k):
                    xs[i][d] = xs[0][d] + 0.5 * (xs[i][d] - xs[0][d])
                fs[i] = _objective(xs[i], &pr)
            nevals += k

    best = [xs[0][d] for d in range(k)]
    fbest = fs[0]
    free(block); free(xs); free(fs)
    return best, fbest, bool(converged), int(nevals)
