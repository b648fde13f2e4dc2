"""Compare the compiled and pure-Python geometry backends.

    python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import math
import time

import numpy as np

from safenav import kernels


def _time(fn, repeat):
    best = math.inf
    for _ in range(3):
        t = time.perf_counter()
        for _ in range(repeat):
            fn()
        best = min(best, time.perf_counter() - t)
    return best / repeat


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=2000)
    ap.add_argument("--obstacles", type=int, default=10)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    obs = np.column_stack([rng.uniform(-15, 15, (args.obstacles, 2)),
                           rng.uniform(0.3, 2.0, (args.obstacles, 2)),
                           rng.uniform(-math.pi, math.pi, args.obstacles)])
    body = (0.5, 0.2, 2.0, 1.0, 0.3)
    cases = {
        "scan (36 beams)": lambda k: k.scan(0.5, 0.2, 0.3, obs, 36, 2 * math.pi, 20.0),
        "any_overlap": lambda k: k.any_overlap(body, obs),
        "nearest_clearance": lambda k: k.nearest_clearance(body, obs),
        "clearance (pair)": lambda k: k.clearance(body, tuple(obs[0])),
    }
    backs = kernels.backends()
    print(f"default backend: {kernels.BACKEND}; {args.obstacles} obstacles")
    print(f"{'kernel':<22}" + "".join(f"{name:>14}" for name in backs) + "     speedup")
    for label, fn in cases.items():
        times = {name: _time(lambda: fn(mod), args.repeat) for name, mod in backs.items()}
        cells = "".join(f"{times[n] * 1e6:>11.2f} us" for n in backs)
        speed = ""
        if "compiled" in times:
            speed = f"{times['python'] / times['compiled']:>10.1f}x"
        print(f"{label:<22}{cells}{speed}")


if __name__ == "__main__":
    main()
