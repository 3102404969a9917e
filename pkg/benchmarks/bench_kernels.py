"""Compare the compiled and pure-Python rollout kernels.

    python benchmarks/bench_kernels.py [--steps N] [--repeats R]

Each backend simulates the same closed loop on the same noise; the script checks that
the trajectories agree and reports steps per second.
"""

import argparse
import time

import numpy as np

from loglqr import LinearPolicy, RngStream, lqr, rollout
from loglqr._core import get_backend
from loglqr.harness.systems import benchmark2x2, random_system

CASES = [
    ("benchmark2x2", benchmark2x2),
    ("random(6,3)", lambda: random_system(6, 3, 0)),
]


def time_backend(sys, K, T, backend, repeats):
    best, traj = np.inf, None
    for _ in range(repeats):
        t0 = time.perf_counter()
        traj = rollout(sys, LinearPolicy(K), T, RngStream(0, 0), record=False, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best, traj


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=200_000)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args(argv)

    try:
        get_backend("cython")
    except ImportError:
        print("compiled kernel not built; only the Python backend is available")
        return 1

    print(f"{'system':<14}{'backend':<9}{'seconds':>10}{'steps/s':>14}{'speedup':>9}")
    for name, make in CASES:
        sys = make()
        _, K = lqr(sys)
        t_py, tr_py = time_backend(sys, K, args.steps, "python", args.repeats)
        t_cy, tr_cy = time_backend(sys, K, args.steps, "cython", args.repeats)
        if not np.allclose(tr_py.costs, tr_cy.costs, rtol=1e-10, atol=1e-12):
            raise SystemExit(f"{name}: backends disagree")
        for backend, t in (("python", t_py), ("cython", t_cy)):
            speedup = t_py / t if backend == "cython" else 1.0
            print(f"{name:<14}{backend:<9}{t:>10.3f}{args.steps / t:>14,.0f}{speedup:>8.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
