"""Time the compiled and pure-Python kernel sums on the workloads the sweeps use.

    python3 benchmarks/bench_backends.py [--repeat 20]
"""

import argparse
import timeit

import numpy as np

from richkde import available_backends
from richkde._backend import get_gaussian_sums

# (label, n, grid points, bandwidth count, d)
CASES = [
    ("single point, r=1", 8000, 1, 1, 1),
    ("default grid, r=2", 8000, 9, 2, 1),
    ("pair sweep, 10 h", 1000, 9, 10, 1),
    ("eval curve, r=2", 1000, 61, 2, 1),
    ("2-d grid, r=2", 4000, 81, 2, 2),
]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=20)
    args = parser.parse_args()

    backends = available_backends()
    rng = np.random.default_rng(0)
    print(f"{'case':<22}" + "".join(f"{b + ' (ms)':>16}" for b in backends) + f"{'speedup':>10}")
    for label, n, m, r, d in CASES:
        data = rng.normal(size=(n, d))
        points = rng.normal(size=(m, d))
        hs = np.linspace(0.2, 0.5, r)
        times = {}
        for name in backends:
            fn = get_gaussian_sums(name)
            fn(data, points, hs)
            best = min(timeit.repeat(lambda: fn(data, points, hs), number=1, repeat=args.repeat))
            times[name] = best * 1e3
        row = f"{label:<22}" + "".join(f"{times[b]:>16.3f}" for b in backends)
        if "cython" in times:
            row += f"{times['python'] / times['cython']:>9.2f}x"
        print(row)


if __name__ == "__main__":
    main()
