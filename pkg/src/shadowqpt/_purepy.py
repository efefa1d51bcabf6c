"""Pure-Python/numpy implementations of the hot kernels.

Each function here has a compiled twin in ``_kernels.pyx`` with the same
signature and bit-identical output.
"""

import numpy as np


def _inner(v, w):
    # symplectic inner product, interleaved (x0, z0, x1, z1, ...) layout
    t = 0
    for i in range(0, len(v), 2):
        t += v[i] * w[i + 1] + v[i + 1] * w[i]
    return t & 1


def _transvection(h, v):
    if _inner(h, v):
        return [(a + b) & 1 for a, b in zip(v, h)]
    return v


def _find_transvection(x, y):
    size = len(x)
    zero = [0] * size
    if x == y:
        return zero, zero
    if _inner(x, y):
        return [(a + b) & 1 for a, b in zip(x, y)], zero
    z = [0] * size
    for i in range(0, size, 2):
        if (x[i] or x[i + 1]) and (y[i] or y[i + 1]):
            z[i] = (x[i] + y[i]) & 1
            z[i + 1] = (x[i + 1] + y[i + 1]) & 1
            if not (z[i] or z[i + 1]):
                z[i + 1] = 1
                if x[i] != x[i + 1]:
                    z[i] = 1
            return [(a + b) & 1 for a, b in zip(x, z)], [(a + b) & 1 for a, b in zip(y, z)]
    for i in range(0, size, 2):
        if (x[i] or x[i + 1]) and not (y[i] or y[i + 1]):
            if x[i] == x[i + 1]:
                z[i + 1] = 1
            else:
                z[i + 1] = x[i]
                z[i] = x[i + 1]
            break
    for i in range(0, size, 2):
        if not (x[i] or x[i + 1]) and (y[i] or y[i + 1]):
            if y[i] == y[i + 1]:
                z[i + 1] = 1
            else:
                z[i + 1] = y[i]
                z[i] = y[i + 1]
            break
    return [(a + b) & 1 for a, b in zip(x, z)], [(a + b) & 1 for a, b in zip(y, z)]


def _symplectic_one(draw, k):
    g = [[1, 0], [0, 1]]
    for m in range(1, k + 1):
        nn = 2 * m
        a, c = int(draw[m - 1][0]), int(draw[m - 1][1])
        f1 = [(a >> j) & 1 for j in range(nn)]
        e1 = [1] + [0] * (nn - 1)
        t0, t1 = _find_transvection(e1, f1)
        bits = [(c >> j) & 1 for j in range(nn - 1)]
        eprime = e1[:2] + bits[1:]
        h0 = _transvection(t1, _transvection(t0, eprime))
        if bits[0]:
            f1 = [0] * nn
        if m > 1:
            grown = [[1, 0] + [0] * (nn - 2), [0, 1] + [0] * (nn - 2)]
            grown += [[0, 0] + row for row in g]
            g = grown
        for j in range(nn):
            row = _transvection(t0, g[j])
            row = _transvection(t1, row)
            row = _transvection(h0, row)
            g[j] = _transvection(f1, row)
    return g


def symplectic_batch(draws, k):
    """Random symplectic matrices over GF(2) from per-level integer draws.

    ``draws[b, m-1] = (a, c)`` with ``1 <= a < 4**m`` and ``0 <= c < 2**(2m-1)``
    selects the level-``m`` transvections; uniform draws give a uniform element
    of Sp(2k, 2). Output rows/cols use the interleaved (x0, z0, ...) layout.
    """
    draws = np.asarray(draws, dtype=np.int64)
    out = np.empty((draws.shape[0], 2 * k, 2 * k), dtype=np.uint8)
    for b in range(draws.shape[0]):
        out[b] = _symplectic_one(draws[b].tolist(), k)
    return out


def born_sample_batch(cum, u):
    """Outcome indices by cumulative inversion: first ``j`` with ``cum[s, j] > u[s, r]``."""
    cum = np.asarray(cum, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    nset, m = cum.shape
    out = np.empty(u.shape, dtype=np.int64)
    # counting comparisons is exact for a nondecreasing row; chunk to bound memory
    step = max(1, (1 << 22) // max(1, m * u.shape[1]))
    for lo in range(0, nset, step):
        c = cum[lo : lo + step, None, :]
        out[lo : lo + step] = np.count_nonzero(c <= u[lo : lo + step, :, None], axis=2)
    return np.minimum(out, m - 1)


def product_table_values(codes, table):
    """``out[s] = prod_w table[w, codes[s, w]]``."""
    codes = np.asarray(codes, dtype=np.int64)
    table = np.asarray(table, dtype=np.float64)
    if codes.shape[1] == 0:
        return np.ones(codes.shape[0])
    return np.prod(table[np.arange(codes.shape[1]), codes], axis=1)
