"""Backend selection for the hot loops.

The compiled extension is used when it imports; otherwise, or when the
environment variable ``GARMA_PURE`` is set to a non-empty value other than
``0``, the pure-Python module is used.  ``BACKEND`` names the active one.
"""

import os

import numpy as np

from . import _pykernels

SENTINEL = _pykernels.SENTINEL

_force_pure = os.environ.get("GARMA_PURE", "") not in ("", "0")

try:
    if _force_pure:
        raise ImportError("GARMA_PURE set")
    from . import _ckernels as _impl
    BACKEND = "cython"
except ImportError:
    _impl = _pykernels
    BACKEND = "python"


def get_backend(name=None):
    """Return a kernel module by name (``"cython"`` or ``"python"``)."""
    if name is None:
        return _impl
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels
        return _ckernels
    raise ValueError(f"unknown backend {name!r}")


def _vec(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def filter_path(gy, alpha, phi, theta, backend=None):
    impl = get_backend(backend)
    eta, r = impl.filter_path(_vec(gy), float(alpha), _vec(phi), _vec(theta))
    return np.asarray(eta, dtype=float), np.asarray(r, dtype=float)


def loglik(family, gy, ly, l1y, alpha, phi, theta, nu, rho, backend=None):
    impl = get_backend(backend)
    return float(impl.loglik(int(family), _vec(gy), _vec(ly), _vec(l1y), float(alpha),
                             _vec(phi), _vec(theta), float(nu), float(rho)))


def fit(family, gy, ly, l1y, p, q, x0, rho, ftol, xtol, max_evals, backend=None):
    impl = get_backend(backend)
    x, fx, converged, nevals = impl.fit(int(family), _vec(gy), _vec(ly), _vec(l1y), int(p),
                                        int(q), _vec(x0), float(rho), float(ftol),
                                        float(xtol), int(max_evals))
    return np.asarray(x, dtype=float), float(fx), bool(converged), int(nevals)
