"""Compare the numba and numpy counting kernels on the mock field.

    python3 benchmarks/bench_kernels.py [--repeat 3]
"""

import argparse
import random
import time

import numpy as np

from setupfree import kernels
from setupfree.crypto_core import get_suite, pedersen_commit, shamir_share

Q, G1, G2 = 97, 2, 3


def cases():
    suite = get_suite("mock", Q)
    a, b, shares = shamir_share(11, 1, 4, random.Random(1), Q)
    comm = pedersen_commit(a, b, suite.group)
    return {
        "pedersen f=1 (q^4)": lambda be: kernels.pedersen_completions(
            Q, G1, G2, comm, [2], [shares[1][0]], [shares[1][1]], backend=be),
        "poly deg=3 (q^4)": lambda be: kernels.poly_completions(Q, 3, [1, 2, 3], [5, 9, 4], backend=be),
        "opening pairs": lambda be: kernels.opening_pairs(Q, G1, G2, 17, backend=be),
    }


def timed(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = ["numpy"] + (["numba"] if kernels.HAVE_NUMBA else [])
    print(f"{'kernel':<22}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for name, fn in cases().items():
        if kernels.HAVE_NUMBA:
            fn("numba")  # compile outside the timing
        res = {b: timed(lambda: fn(b), args.repeat) for b in backends}
        outs = [np.asarray(o) for _, o in res.values()]
        assert all(np.array_equal(outs[0], o) for o in outs), name
        row = f"{name:<22}" + "".join(f"{res[b][0]:>11.3f}s" for b in backends)
        if len(backends) == 2:
            row += f"{res['numpy'][0] / max(res['numba'][0], 1e-9):>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
