"""Compare the compiled evaluation kernel against the pure-Python fallback.

Both interpreters run the same compiled program and must return identical
exact rationals; this script times them on three workload shapes and checks
agreement on every run.  Invoke from the repository root:

    python3 benchmarks/bench_kernels.py [--sizes 16,48,96] [--repeat 3]
"""

import argparse
import os
import time
from fractions import Fraction

from meanlogic import FiniteStructure, Signature, parse
from meanlogic.kernel import compile_formula, compiled_available, run_program
from meanlogic.signature import Modulus, RelationSymbol


def line_structure(n):
    """n points on a rescaled line; every table denominator is n."""
    sig = Signature(
        constants=("c",),
        functions=(),
        relations=(RelationSymbol("R", 1, Fraction(1), Modulus.identity()),),
    )
    metric = tuple(
        tuple(Fraction(abs(i - j), n) for j in range(n)) for i in range(n)
    )
    return FiniteStructure(
        signature=sig,
        universe=tuple("e%d" % i for i in range(n)),
        metric=metric,
        constants={"c": 0},
        functions={},
        relations={"R": tuple(Fraction(i, n) for i in range(n))},
    )


WORKLOADS = [
    ("atoms/batch", "R(x) + 2*d(x,y) + -1*R(y)", "pairs"),
    ("sup-inf", "sup x. inf y. d(x,y) + 1/2*R(x)", "one"),
    ("depth-3", "sup x. inf y. sup z. d(x,z) + -1*d(y,z) + R(y)", "one"),
]


def assignments_for(kind, structure):
    if kind == "pairs":
        n = structure.size
        return [(i, j) for i in range(n) for j in range(n)]
    return [()]


def time_backend(program, rows, structure, pure, repeat):
    old = os.environ.get("MEANLOGIC_PURE")
    if pure:
        os.environ["MEANLOGIC_PURE"] = "1"
    else:
        os.environ.pop("MEANLOGIC_PURE", None)
    try:
        best = None
        out = None
        for _ in range(repeat):
            t0 = time.perf_counter()
            out = run_program(program, rows, structure)
            dt = time.perf_counter() - t0
            best = dt if best is None else min(best, dt)
        return best, out
    finally:
        if old is None:
            os.environ.pop("MEANLOGIC_PURE", None)
        else:
            os.environ["MEANLOGIC_PURE"] = old


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="16,48,96")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    if not compiled_available():
        print("compiled extension not available; timing the fallback only")
    header = "%-12s %5s %8s %12s %12s %8s" % (
        "workload", "n", "rows", "compiled", "python", "speedup"
    )
    print(header)
    print("-" * len(header))
    for n in sizes:
        s = line_structure(n)
        for name, text, kind in WORKLOADS:
            formula = parse(text, s.signature)
            program = compile_formula(formula, s, 1)
            rows = assignments_for(kind, s)
            t_py, out_py = time_backend(program, rows, s, True, args.repeat)
            if compiled_available():
                t_c, out_c = time_backend(program, rows, s, False, args.repeat)
                if out_c != out_py:
                    raise SystemExit("backend disagreement on %s n=%d" % (name, n))
                print(
                    "%-12s %5d %8d %10.4fs %10.4fs %7.1fx"
                    % (name, n, len(rows), t_c, t_py, t_py / max(t_c, 1e-9))
                )
            else:
                print("%-12s %5d %8d %12s %10.4fs %8s" % (name, n, len(rows), "-", t_py, "-"))


if __name__ == "__main__":
    main()
