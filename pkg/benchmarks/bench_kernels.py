"""Compare the numba and pure-numpy kernel backends on the two hot paths:
batched point evaluation (falsifier/coverage sampling) and interval box
evaluation (branch-and-bound prover).

    python benchmarks/bench_kernels.py [--points 200000] [--boxes 200000]
"""

import argparse
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from decomp.expr import add, exp, log, mul, pow_, var
from decomp.kernels import available_backends, get_backend
from decomp.tape import compile_expr

EXPRS = {
    "fenchel-residual": add(mul(2, var("x"), log(var("x"))),
                            mul(2, exp(var("y"))),
                            mul(-1, var("x"), var("y"))),
    "series-summand": mul(
        add(mul(2, var("d")), 1),
        pow_(mul(2, pow_(var("h"), 2),
                 add(1, mul(var("d"), add(var("d"), 1), pow_(var("h"), -2)))), -1)),
    "deep-powers": add(pow_(add(var("x"), 1), 3), pow_(var("x"), -2),
                       mul(var("y"), pow_(log(add(var("x"), 2)), 2))),
}


def bench(fn, *args, repeats=5):
    fn(*args)  # warm up (numba compiles here)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--points", type=int, default=200_000)
    ap.add_argument("--boxes", type=int, default=200_000)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    backends = available_backends()
    print(f"backends: {', '.join(backends)}")
    header = f"{'expression':<18}{'kind':<10}" + "".join(f"{b:>12}" for b in backends)
    print(header + f"{'speedup':>10}")
    for name, e in EXPRS.items():
        order = tuple(sorted({v for v in _vars(e)}))
        tape = compile_expr(e, order)
        pts = rng.uniform(1.0, 50.0, size=(len(order), args.points))
        lo = rng.uniform(1.0, 40.0, size=(len(order), args.boxes))
        hi = lo * rng.uniform(1.0, 1.25, size=lo.shape)
        times_p = {}
        times_b = {}
        for b in backends:
            impl = get_backend(b)
            times_p[b] = bench(impl.eval_points, tape, pts)
            times_b[b] = bench(impl.eval_boxes, tape, lo, hi)
        row = f"{name:<18}{'points':<10}"
        row += "".join(f"{times_p[b] * 1e3:>10.2f}ms" for b in backends)
        if "numba" in times_p:
            row += f"{times_p['numpy'] / times_p['numba']:>9.1f}x"
        print(row)
        row = f"{'':<18}{'boxes':<10}"
        row += "".join(f"{times_b[b] * 1e3:>10.2f}ms" for b in backends)
        if "numba" in times_b:
            row += f"{times_b['numpy'] / times_b['numba']:>9.1f}x"
        print(row)


def _vars(e):
    from decomp.expr import free_vars
    return free_vars(e)


if __name__ == "__main__":
    main()
