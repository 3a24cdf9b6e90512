"""Compare the compiled kernels with the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Times the lower convex hull, the stop-loss transform at every node and a full
grid LP solve with each backend, and checks that both give the same answer.
"""

import argparse
import time

import numpy as np

from cfikit._accel import get_kernels
from cfikit.lp import cfi_lp
from cfikit.testing import random_cfi, random_measure


def best_time(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--hull-points", type=int, default=200_000)
    ap.add_argument("--lp-cells", type=int, default=150)
    args = ap.parse_args(argv)
    try:
        comp = get_kernels("compiled")
    except ImportError:
        print("compiled extension not built; run 'pip install -e . --no-build-isolation' first")
        return 1
    py = get_kernels("python")
    rng = np.random.default_rng(0)

    x = np.linspace(0.0, 1.0, args.hull_points)
    y = np.sin(7 * x) + 0.1 * rng.standard_normal(x.size)
    xs = np.linspace(0.0, 1.0, 4001)
    mass = rng.standard_normal(xs.size)
    c = random_cfi(rng, n_cells=args.lp_cells)
    mu = random_measure(c.grid, rng)

    cases = [
        ("lower_hull", lambda k: k.lower_hull(x, y), lambda a, b: np.array_equal(np.asarray(a), np.asarray(b))),
        ("stop_loss_nodes", lambda k: k.stop_loss_nodes(xs, mass),
         lambda a, b: np.allclose(np.asarray(a), np.asarray(b), atol=1e-10)),
        ("cfi_lp", lambda k: cfi_lp(c, mu, kernel_module=k).objective,
         lambda a, b: abs(a - b) <= 1e-9 * (1 + abs(a))),
    ]
    print(f"{'kernel':<18}{'python [s]':>12}{'compiled [s]':>14}{'speedup':>10}  agree")
    for name, run, same in cases:
        tp, op = best_time(lambda: run(py), args.repeat)
        tc, oc = best_time(lambda: run(comp), args.repeat)
        print(f"{name:<18}{tp:>12.4f}{tc:>14.4f}{tp / tc:>10.1f}  {same(op, oc)}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
