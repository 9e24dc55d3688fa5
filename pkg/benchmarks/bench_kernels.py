"""Compare the compiled and numpy kernel backends.

Usage: python3 benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import math
import timeit

import numpy as np

from corramsey.fisher import phase_grid
from corramsey.kernels import backends

CASES = {
    # name: (function, args)
    "fisher_terms n=1e5": ("ramsey_fisher_terms", (0.3, 1.0, 0.4, 0.5, 0.0, 1.0, 100_000, math.expm1(1.0), 1)),
    "phase_average n=1e3 x128": ("ramsey_fisher_phase_average",
                                 (0.3, 1.0, phase_grid(), 0.5, 0.0, 1.0, 1000, math.expm1(1.0), 1)),
    "loglik n=1e5": ("bernoulli_loglik", None),
}


def _loglik_args():
    rng = np.random.default_rng(0)
    t = np.arange(100_000, dtype=float)
    y = (rng.random(t.size) < 0.5).astype(float)
    return (t, y, 0.3, 1.0, 0.4, 0.5, math.exp(-0.5))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    mods = backends()
    if "cython" not in mods:
        print("compiled extension not built; only the numpy backend is available")
    print(f"{'case':28s}" + "".join(f"{name:>14s}" for name in mods) + "     speedup")
    for case, (fn, fargs) in CASES.items():
        fargs = fargs if fargs is not None else _loglik_args()
        best = {}
        for name, mod in mods.items():
            f = getattr(mod, fn)
            f(*fargs)
            best[name] = min(timeit.repeat(lambda: f(*fargs), number=1, repeat=args.repeat))
        line = f"{case:28s}" + "".join(f"{best[n] * 1e3:11.3f} ms" for n in mods)
        if "cython" in best:
            line += f"  {best['python'] / best['cython']:9.2f}x"
        print(line)


if __name__ == "__main__":
    main()
