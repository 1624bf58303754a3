"""Compare the compiled and pure-Python kernel backends.

    python benchmarks/bench_kernels.py [--n 500] [--repeat 5]

Times the log-likelihood evaluation and a full PMLE fit on a simulated
scenario-1 beta series, and checks that both backends give the same answer.
"""

import argparse
import time

import numpy as np

from garma_mi import kernels
from garma_mi.core import Family, ModelSpec, ParamVector, link_eval
from garma_mi.engine import simulate
from garma_mi.pmle import estimate_pmle


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=500)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    spec = ModelSpec(Family.BETA)
    gamma = ParamVector(0.5, [-0.4], [-0.6], 20.0)
    y = simulate(gamma, spec, args.n, 100, np.random.default_rng(1)).y
    gy, ly, l1y = link_eval(y), np.log(y), np.log1p(-y)

    try:
        kernels.get_backend("cython")
        backends = ["cython", "python"]
    except ImportError:
        print("compiled extension not built; timing the fallback only")
        backends = ["python"]

    results = {}
    for name in backends:
        ll = best_of(lambda: kernels.loglik(0, gy, ly, l1y, 0.5, [-0.4], [-0.6], 20.0, 0.5,
                                            backend=name), args.repeat)
        fit = best_of(lambda: estimate_pmle(y, spec, backend=name), args.repeat)
        est = estimate_pmle(y, spec, backend=name)
        results[name] = (ll, fit, est)
        print(f"{name:>7}: loglik {ll * 1e6:9.1f} us   fit {fit * 1e3:8.2f} ms   "
              f"({est.n_evals} evaluations)")

    if len(results) == 2:
        c, p = results["cython"], results["python"]
        diff = np.max(np.abs(c[2].gamma_hat.to_array() - p[2].gamma_hat.to_array()))
        print(f"speedup: loglik x{p[0] / c[0]:.0f}, fit x{p[1] / c[1]:.0f}; "
              f"max estimate difference {diff:.2e}")


if __name__ == "__main__":
    main()
