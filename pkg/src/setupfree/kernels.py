"""Brute-force counting kernels over the small mock field.

These back the secrecy oracles: they enumerate every coefficient vector of
the relevant polynomials and count which ones are consistent with an
adversary's view, grouped by the secret they would imply.  Loops are
compiled with numba when available; set ``SETUPFREE_PURE_NUMPY=1`` to use the
chunked numpy versions instead (same results, slower).
"""

from __future__ import annotations

import os

import numpy as np

PURE_NUMPY = os.environ.get("SETUPFREE_PURE_NUMPY", "").lower() in ("1", "true", "yes")

try:
    if PURE_NUMPY:
        raise ImportError
    from numba import njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via the env flag
    HAVE_NUMBA = False

BACKEND = "numba" if HAVE_NUMBA else "numpy"
CHUNK = 1 << 20


# ---------------------------------------------------------------- numpy versions


def _digits(idx, q, width):
    out = np.empty((width, idx.size), dtype=np.int64)
    rest = idx.copy()
    for k in range(width):
        out[k] = rest % q
        rest //= q
    return out


def _poly_at(coeffs, x, q):
    acc = np.zeros(coeffs.shape[1], dtype=np.int64)
    for k in range(coeffs.shape[0] - 1, -1, -1):
        acc = (acc * x + coeffs[k]) % q
    return acc


def pedersen_completions_np(q, g1, g2, comm, xs, sa, sb):
    m = len(comm)
    total = q ** (2 * m)
    counts = np.zeros(q, dtype=np.int64)
    for start in range(0, total, CHUNK):
        idx = np.arange(start, min(total, start + CHUNK), dtype=np.int64)
        d = _digits(idx, q, 2 * m)
        a, b = d[:m], d[m:]
        ok = np.ones(idx.size, dtype=bool)
        for j in range(m):
            ok &= (g1 * a[j] + g2 * b[j]) % q == comm[j]
        for x, ya, yb in zip(xs, sa, sb):
            ok &= _poly_at(a, x, q) == ya
            ok &= _poly_at(b, x, q) == yb
        counts += np.bincount(a[0][ok], minlength=q)
    return counts


def poly_completions_np(q, deg, xs, ys):
    m = deg + 1
    total = q ** m
    counts = np.zeros(q, dtype=np.int64)
    for start in range(0, total, CHUNK):
        idx = np.arange(start, min(total, start + CHUNK), dtype=np.int64)
        c = _digits(idx, q, m)
        ok = np.ones(idx.size, dtype=bool)
        for x, y in zip(xs, ys):
            ok &= _poly_at(c, x, q) == y
        counts += np.bincount(c[0][ok], minlength=q)
    return counts


def opening_pairs_np(q, g1, g2, target):
    a = np.arange(q, dtype=np.int64)[:, None]
    b = np.arange(q, dtype=np.int64)[None, :]
    return int(np.count_nonzero((g1 * a + g2 * b) % q == target % q))


# ---------------------------------------------------------------- numba versions

if HAVE_NUMBA:

    @njit(cache=True)
    def _eval(coeffs, x, q):
        acc = 0
        for k in range(coeffs.size - 1, -1, -1):
            acc = (acc * x + coeffs[k]) % q
        return acc

    @njit(cache=True)
    def _pedersen_completions_nb(q, g1, g2, comm, xs, sa, sb):
        m = comm.size
        counts = np.zeros(q, dtype=np.int64)
        digits = np.zeros(2 * m, dtype=np.int64)
        a = np.zeros(m, dtype=np.int64)
        b = np.zeros(m, dtype=np.int64)
        total = q ** (2 * m)
        for _ in range(total):
            for j in range(m):
                a[j] = digits[j]
                b[j] = digits[m + j]
            ok = True
            for j in range(m):
                if (g1 * a[j] + g2 * b[j]) % q != comm[j]:
                    ok = False
                    break
            if ok:
                for k in range(xs.size):
                    if _eval(a, xs[k], q) != sa[k] or _eval(b, xs[k], q) != sb[k]:
                        ok = False
                        break
            if ok:
                counts[a[0]] += 1
            # odometer increment
            k = 0
            while k < 2 * m:
                digits[k] += 1
                if digits[k] < q:
                    break
                digits[k] = 0
                k += 1
        return counts

    @njit(cache=True)
    def _poly_completions_nb(q, deg, xs, ys):
        m = deg + 1
        counts = np.zeros(q, dtype=np.int64)
        c = np.zeros(m, dtype=np.int64)
        total = q ** m
        for _ in range(total):
            ok = True
            for k in range(xs.size):
                if _eval(c, xs[k], q) != ys[k]:
                    ok = False
                    break
            if ok:
                counts[c[0]] += 1
            k = 0
            while k < m:
                c[k] += 1
                if c[k] < q:
                    break
                c[k] = 0
                k += 1
        return counts

    @njit(cache=True)
    def _opening_pairs_nb(q, g1, g2, target):
        t = target % q
        n = 0
        for a in range(q):
            for b in range(q):
                if (g1 * a + g2 * b) % q == t:
                    n += 1
        return n


def _arr(xs):
    return np.asarray(list(xs), dtype=np.int64)


def pedersen_completions(q, g1, g2, comm, xs, sa, sb, backend=None):
    """Counts, per candidate A(0), of pairs (A, B) of degree < len(comm)
    matching the additive-group commitment and the given share pairs."""
    args = (int(q), int(g1), int(g2), _arr(comm), _arr(xs), _arr(sa), _arr(sb))
    if (backend or BACKEND) == "numba" and HAVE_NUMBA:
        return _pedersen_completions_nb(*args)
    return pedersen_completions_np(*args)


def poly_completions(q, deg, xs, ys, backend=None):
    """Counts, per candidate F(0), of degree-``deg`` polynomials through the points."""
    args = (int(q), int(deg), _arr(xs), _arr(ys))
    if (backend or BACKEND) == "numba" and HAVE_NUMBA:
        return _poly_completions_nb(*args)
    return poly_completions_np(*args)


def opening_pairs(q, g1, g2, target, backend=None):
    """Number of (a, b) with g1*a + g2*b = target in the additive mock group."""
    if (backend or BACKEND) == "numba" and HAVE_NUMBA:
        return int(_opening_pairs_nb(int(q), int(g1), int(g2), int(target)))
    return opening_pairs_np(int(q), int(g1), int(g2), int(target))
