"""Timing comparison of the compiled kernel extension vs the interpreted
fallback.

Runs the same workload in two subprocesses (one with DIFFCD_PURE=1) and
prints median wall times side by side.  Run from the repository root:

    python3 benchmarks/compare_backends.py
"""

import json
import os
import subprocess
import sys

WORKLOAD = r"""
import json
import sys
import time

import numpy as np

from diffcd import _core, se3
from diffcd.bench import generate_polyhedral_ellipsoid
from diffcd.first import Gumbel, first_order_from_prox
from diffcd.narrowphase import proximity
from diffcd.shapes import Ellipsoid, Sphere
from diffcd.zeroth import SmoothingConfig, zeroth_order_jacobians


def median_time(fn, n, warmup=5):
    for _ in range(warmup):
        fn()
    times = []
    for _ in range(n):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times) * 1e6)


m1 = generate_polyhedral_ellipsoid(0, 100)
m2 = generate_polyhedral_ellipsoid(1, 100)
e1 = Ellipsoid(np.array([1.2, 0.8, 1.0]))
e2 = Ellipsoid(np.array([0.9, 1.1, 0.7]))
q_sep = se3.Pose(np.array([4.0, 0.3, -0.2]), np.array([0.1, 0.2, 0.3, 0.9]))
q_col = se3.Pose(np.array([0.4, 0.1, 0.0]), np.array([0.1, 0.2, 0.3, 0.9]))
prox = proximity(m1, m2, q_sep)

results = {
    "backend": "compiled" if _core.COMPILED else "pure",
    "gjk mesh pair (separated)": median_time(lambda: proximity(m1, m2, q_sep), 200),
    "gjk+epa mesh pair (colliding)": median_time(lambda: proximity(m1, m2, q_col), 200),
    "gjk ellipsoid pair + polish": median_time(lambda: proximity(e1, e2, q_sep), 200),
    "gumbel first-order jacobian": median_time(
        lambda: first_order_from_prox(m1, m2, q_sep, prox, Gumbel(temperature=1e-4)), 200
    ),
    "zeroth-order jacobian (M=50)": median_time(
        lambda: zeroth_order_jacobians(
            m1, m2, q_sep, SmoothingConfig(samples=50, noise=1e-2, seed=0)
        ),
        50,
    ),
}
json.dump(results, sys.stdout)
"""


def run(pure):
    env = dict(os.environ)
    if pure:
        env["DIFFCD_PURE"] = "1"
    else:
        env.pop("DIFFCD_PURE", None)
    proc = subprocess.run(
        [sys.executable, "-c", WORKLOAD], capture_output=True, text=True, env=env
    )
    if proc.returncode != 0:
        sys.stderr.write(proc.stderr)
        raise SystemExit(1)
    return json.loads(proc.stdout)


def main():
    compiled = run(pure=False)
    pure = run(pure=True)
    names = [k for k in compiled if k != "backend"]
    width = max(len(n) for n in names)
    print(
        "%-*s  %12s  %12s  %8s"
        % (width, "workload", compiled["backend"], pure["backend"], "speedup")
    )
    for n in names:
        print(
            "%-*s  %9.1f us  %9.1f us  %7.1fx"
            % (width, n, compiled[n], pure[n], pure[n] / compiled[n])
        )


if __name__ == "__main__":
    main()
