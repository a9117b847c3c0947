"""Compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 3] [--quick]

Checks both backends return identical results before timing them.
"""
import argparse
import time

import numpy as np

from c2inv import _fallback
from c2inv.graph import circulant, decomplete
from c2inv.poly import kirchhoff
from c2inv.transfer import cached_system

try:
    from c2inv import _ckernels
except ImportError:  # pragma: no cover
    _ckernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t)
    return min(times), result


def cases(quick):
    # point counting: one inner chunk of the Kirchhoff polynomial of a decompleted circulant
    g = decomplete(circulant(8, (1, 3)), 0)
    psi = kirchhoff(g, 3).dense().reshape(2, -1)
    rows = np.ascontiguousarray(np.stack([psi[1], psi[0]])).astype(np.uint8)
    yield "count_chunk C13 n=8 p=3 (3^11 pts)", lambda impl: impl.count_chunk(rows, 3, 1)

    g2 = decomplete(circulant(9, (1, 3)), 0)
    psi2 = kirchhoff(g2, 2).dense().astype(np.uint8)[None, :]
    yield "count_chunk C13 n=9 p=2 (2^14 pts)", lambda impl: impl.count_chunk(psi2, 2, 0)

    S = cached_system("C13", 3)
    steps = 5000 if quick else 59040
    yield f"iterate C13 p=3 N={S.N} x{steps}", lambda impl: impl.iterate(
        S.indptr, S.indices, S.data, S.v0, S.w_idx, S.w_val, 3, steps)[0].tolist()

    T = cached_system("C23", 2)
    yield f"first_return C23 p=2 N={T.N}", lambda impl: impl.first_return(
        T.indptr, T.indices, T.data, T.v0, T.v0, 2, 1000)[0]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--quick", action="store_true")
    args = ap.parse_args(argv)
    if _ckernels is None:
        print("compiled kernels not built; reinstall with Cython available")
        return 1
    print(f"{'case':44s} {'compiled':>10s} {'fallback':>10s} {'speedup':>8s}")
    for name, run in cases(args.quick):
        tc, rc = best_of(lambda: run(_ckernels), args.repeat)
        tf, rf = best_of(lambda: run(_fallback), args.repeat)
        if np.asarray(rc).tolist() != np.asarray(rf).tolist():
            raise SystemExit(f"{name}: backends disagree")
        print(f"{name:44s} {tc:9.4f}s {tf:9.4f}s {tf / tc:7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
