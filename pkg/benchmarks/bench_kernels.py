"""Compare the compiled and numpy backends of the structured-derivative kernel.

    python benchmarks/bench_kernels.py [--repeat 5]

Times ``structured_derivative`` for Gaussian Toeplitz pairs and for full
(unstructured) embeddings, where the kernel dominates the cost.
"""

import argparse
import timeit

import numpy as np

from lsecond import StructureSpec, build_structure, kernels, solve_lse, structured_derivative
from lsecond.harness import gen_toeplitz_pair


def _case(n, kind):
    gp = gen_toeplitz_pair(n, 1.0, seed=n)
    S = build_structure(StructureSpec(kind, n, n))
    return gp.problem, S, solve_lse(gp.problem)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--sizes", type=int, nargs="+", default=[50, 100, 200])
    args = ap.parse_args(argv)
    backends = kernels.available_backends()
    print(f"backends: {', '.join(backends)} (default {kernels.BACKEND})")
    print(f"{'kind':<10}{'n':>6}" + "".join(f"{b + ' [ms]':>16}" for b in backends) + f"{'speedup':>10}")
    for kind in ("toeplitz", "full"):
        for n in args.sizes:
            problem, S, sol = _case(n, kind)
            times = {}
            for b in backends:
                fn = lambda: structured_derivative(problem, None, S, S, sol, backend=b)  # noqa: E731
                fn()
                times[b] = 1e3 * min(timeit.repeat(fn, number=1, repeat=args.repeat))
            ref = structured_derivative(problem, None, S, S, sol, backend="python")
            for b in backends:
                got = structured_derivative(problem, None, S, S, sol, backend=b)
                assert np.allclose(got, ref, rtol=1e-12, atol=1e-12 * np.abs(ref).max())
            speed = times["python"] / times["cython"] if "cython" in times else float("nan")
            print(f"{kind:<10}{n:>6}" + "".join(f"{times[b]:>16.2f}" for b in backends) + f"{speed:>10.2f}")


if __name__ == "__main__":
    main()
