"""Time polarizer tabulation and full grid inference per backend.

    python benchmarks/bench_kernels.py
    python benchmarks/bench_kernels.py --sizes 180 720 --repeat 5
"""

import argparse
import time

import numpy as np

from bellmrf import kernels
from bellmrf.bell import DOUBLE, BellConfig, grid_rates
from bellmrf.mrf import PI, GridSpec


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def bench_tables(sizes, repeat):
    print(f"{'n':>5} {'backend':>9} {'mrf1 table':>12} {'mrf2 table':>12}")
    for n in sizes:
        tune, orth = n // 5, (n // 5 + n // 2) % n
        for name in kernels.available():
            mod = kernels.backend(name)
            t1 = best_of(lambda: mod.mrf1_polarizer_table(n, tune, orth, 1e-3), repeat)
            t2 = best_of(lambda: mod.mrf2_polarizer_table(n, tune, 1e-3, True), repeat)
            print(f"{n:5d} {name:>9} {t1 * 1e3:10.2f}ms {t2 * 1e3:10.2f}ms")


def bench_oracle(n, repeat, naive_max):
    backends = list(kernels.available())
    if n <= naive_max:
        backends.append("naive")
    phis = np.linspace(0.1, PI / 2 - 0.1, 10)
    grid = GridSpec(n, 1e-3)
    print(f"\n10-point double-coincidence oracle at n={n}")
    for name in backends:
        for model in ("mrf1", "mrf2"):
            def run():
                for phi in phis:
                    grid_rates(BellConfig(0.0, phi, model, 1e-3), grid, backend=name)[DOUBLE]
            print(f"  {name:>9} {model}: {best_of(run, repeat):8.3f}s")


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[180, 360, 720])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--oracle-n", type=int, default=720)
    parser.add_argument("--naive-max", type=int, default=36,
                        help="largest n for which the cell-by-cell tabulation is timed")
    args = parser.parse_args(argv)
    print(f"default backend: {kernels.BACKEND}")
    bench_tables(args.sizes, args.repeat)
    bench_oracle(args.naive_max, 1, args.naive_max)
    bench_oracle(args.oracle_n, args.repeat, args.naive_max)


if __name__ == "__main__":
    main()
