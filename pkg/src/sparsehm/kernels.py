"""Hot inner loops, each in a numba flavour and a pure-numpy flavour.

The public names (``log_power_ratio_rows``, ``ks_normal_rows``, ``grow_tree``,
``tree_path_lengths``) dispatch to numba unless ``SPARSEHM_NUMBA=0``.
Both flavours consume identical inputs and pre-drawn random numbers, so
they return the same trees and (to rounding) the same statistics.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import ndtr

from ._jit import USE_NUMBA, njit

LEAF = -1
UNUSED = -2


# --------------------------------------------------------------------------
# log of power mean / pivot, row-wise, finite nonzero exponent; the pivot is
# max(x) for y > 0 and min(x) for y < 0 so every exp() term is <= 1
# --------------------------------------------------------------------------


def _log_power_ratio_rows_np(log_x: np.ndarray, y: float) -> np.ndarray:
    pivot = log_x.max(axis=-1, keepdims=True) if y > 0 else log_x.min(axis=-1, keepdims=True)
    acc = np.mean(np.exp(y * (log_x - pivot)), axis=-1)
    return np.log(acc) / y


@njit
def _log_power_ratio_rows_nb(log_x, y):
    n_rows, n = log_x.shape
    out = np.empty(n_rows)
    for r in range(n_rows):
        pivot = log_x[r, 0]
        for i in range(1, n):
            v = log_x[r, i]
            if (y > 0 and v > pivot) or (y < 0 and v < pivot):
                pivot = v
        acc = 0.0
        for i in range(n):
            acc += math.exp(y * (log_x[r, i] - pivot))
        out[r] = math.log(acc / n) / y
    return out


# --------------------------------------------------------------------------
# Kolmogorov-Smirnov distance to a fitted normal, row-wise
# --------------------------------------------------------------------------


def _ks_normal_rows_np(samples: np.ndarray) -> np.ndarray:
    x = np.sort(samples, axis=1)
    n = x.shape[1]
    mu = x.mean(axis=1, keepdims=True)
    sd = x.std(axis=1, ddof=1, keepdims=True)
    cdf = ndtr((x - mu) / sd)
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - cdf, axis=1)
    d_minus = np.max(cdf - (i - 1) / n, axis=1)
    return np.maximum(d_plus, d_minus)


@njit
def _ks_normal_rows_nb(samples):
    n_rows, n = samples.shape
    out = np.empty(n_rows)
    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    for r in range(n_rows):
        x = np.sort(samples[r])
        mu = 0.0
        for i in range(n):
            mu += x[i]
        mu /= n
        ss = 0.0
        for i in range(n):
            ss += (x[i] - mu) ** 2
        sd = math.sqrt(ss / (n - 1))
        d = 0.0
        for i in range(n):
            c = 0.5 * math.erfc(-(x[i] - mu) / sd * inv_sqrt2)
            a = (i + 1) / n - c
            b = c - i / n
            if a > d:
                d = a
            if b > d:
                d = b
        out[r] = d
    return out


# --------------------------------------------------------------------------
# isolation tree growth (heap layout: children of k are 2k+1 and 2k+2)
# --------------------------------------------------------------------------


def heap_size(height_limit: int) -> int:
    return 2 ** (height_limit + 1) - 1


def _grow_tree_np(xs, features, u_feat, u_split, height_limit):
    m = heap_size(height_limit)
    feature = np.full(m, UNUSED, dtype=np.int64)
    threshold = np.zeros(m)
    size = np.zeros(m, dtype=np.int64)

    stack = [(0, np.arange(xs.shape[0]), 0)]
    while stack:
        k, idx, depth = stack.pop()
        size[k] = idx.size
        feature[k] = LEAF
        if depth >= height_limit or idx.size <= 1:
            continue
        block = xs[np.ix_(idx, features)]
        lo = block.min(axis=0)
        hi = block.max(axis=0)
        cand = np.flatnonzero(hi > lo)
        if cand.size == 0:
            continue
        pick = min(int(u_feat[k] * cand.size), cand.size - 1)
        c = cand[pick]
        thr = lo[c] + u_split[k] * (hi[c] - lo[c])
        if thr > hi[c]:
            thr = hi[c]
        col = block[:, c]
        go_left = col < thr
        n_left = int(go_left.sum())
        if n_left == 0 or n_left == idx.size:
            continue
        feature[k] = features[c]
        threshold[k] = thr
        stack.append((2 * k + 2, idx[~go_left], depth + 1))
        stack.append((2 * k + 1, idx[go_left], depth + 1))
    return feature, threshold, size


@njit
def _grow_tree_nb(xs, features, u_feat, u_split, height_limit):
    m = 2 ** (height_limit + 1) - 1
    feature = np.full(m, -2, dtype=np.int64)
    threshold = np.zeros(m)
    size = np.zeros(m, dtype=np.int64)
    n = xs.shape[0]
    nf = features.shape[0]
    idx = np.arange(n)
    # explicit stack: node, start, end, depth
    st_k = np.empty(m, dtype=np.int64)
    st_a = np.empty(m, dtype=np.int64)
    st_b = np.empty(m, dtype=np.int64)
    st_d = np.empty(m, dtype=np.int64)
    top = 0
    st_k[0] = 0
    st_a[0] = 0
    st_b[0] = n
    st_d[0] = 0
    top = 1
    lo = np.empty(nf)
    hi = np.empty(nf)
    cand = np.empty(nf, dtype=np.int64)
    while top > 0:
        top -= 1
        k = st_k[top]
        a = st_a[top]
        b = st_b[top]
        depth = st_d[top]
        cnt = b - a
        size[k] = cnt
        feature[k] = -1
        if depth >= height_limit or cnt <= 1:
            continue
        n_cand = 0
        for j in range(nf):
            f = features[j]
            mn = xs[idx[a], f]
            mx = mn
            for t in range(a + 1, b):
                v = xs[idx[t], f]
                if v < mn:
                    mn = v
                if v > mx:
                    mx = v
            lo[j] = mn
            hi[j] = mx
            if mx > mn:
                cand[n_cand] = j
                n_cand += 1
        if n_cand == 0:
            continue
        pick = int(u_feat[k] * n_cand)
        if pick > n_cand - 1:
            pick = n_cand - 1
        c = cand[pick]
        thr = lo[c] + u_split[k] * (hi[c] - lo[c])
        if thr > hi[c]:
            thr = hi[c]
        f = features[c]
        # in-place partition of idx[a:b]
        i = a
        for t in range(a, b):
            if xs[idx[t], f] < thr:
                tmp = idx[i]
                idx[i] = idx[t]
                idx[t] = tmp
                i += 1
        if i == a or i == b:
            continue
        feature[k] = f
        threshold[k] = thr
        st_k[top] = 2 * k + 2
        st_a[top] = i
        st_b[top] = b
        st_d[top] = depth + 1
        top += 1
        st_k[top] = 2 * k + 1
        st_a[top] = a
        st_b[top] = i
        st_d[top] = depth + 1
        top += 1
    return feature, threshold, size


# --------------------------------------------------------------------------
# path length of every point through one tree
# --------------------------------------------------------------------------


def _tree_path_lengths_np(x, feature, threshold, size, c_table):
    k = np.zeros(x.shape[0], dtype=np.int64)
    depth = np.zeros(x.shape[0])
    rows = np.arange(x.shape[0])
    active = feature[k] >= 0
    while active.any():
        ka = k[active]
        f = feature[ka]
        go_left = x[rows[active], f] < threshold[ka]
        k[active] = np.where(go_left, 2 * ka + 1, 2 * ka + 2)
        depth[active] += 1.0
        active = feature[k] >= 0
    return depth + c_table[size[k]]


@njit
def _tree_path_lengths_nb(x, feature, threshold, size, c_table):
    n = x.shape[0]
    out = np.empty(n)
    for r in range(n):
        k = 0
        depth = 0.0
        while feature[k] >= 0:
            if x[r, feature[k]] < threshold[k]:
                k = 2 * k + 1
            else:
                k = 2 * k + 2
            depth += 1.0
        out[r] = depth + c_table[size[k]]
    return out


_NUMPY = {
    "log_power_ratio_rows": _log_power_ratio_rows_np,
    "ks_normal_rows": _ks_normal_rows_np,
    "grow_tree": _grow_tree_np,
    "tree_path_lengths": _tree_path_lengths_np,
}
_NUMBA = {
    "log_power_ratio_rows": _log_power_ratio_rows_nb,
    "ks_normal_rows": _ks_normal_rows_nb,
    "grow_tree": _grow_tree_nb,
    "tree_path_lengths": _tree_path_lengths_nb,
}

BACKEND = "numba" if USE_NUMBA else "numpy"


def get_kernel(name: str, backend: str | None = None):
    """Return kernel ``name`` for ``backend`` ('numba', 'numpy' or None = active)."""
    backend = backend or BACKEND
    table = _NUMBA if backend == "numba" else _NUMPY
    return table[name]


def log_power_ratio_rows(log_x: np.ndarray, y: float) -> np.ndarray:
    """Row-wise ``ln(Gamma(exp(log_x), y) / pivot)`` at finite ``y != 0``.

    ``pivot`` is the row maximum for ``y > 0`` and the row minimum for ``y < 0``.
    """
    log_x = np.ascontiguousarray(log_x, dtype=np.float64)
    return get_kernel("log_power_ratio_rows")(log_x, float(y))


def ks_normal_rows(samples: np.ndarray) -> np.ndarray:
    """Row-wise KS distance between each sample and its fitted normal."""
    samples = np.ascontiguousarray(samples, dtype=np.float64)
    return get_kernel("ks_normal_rows")(samples)


def grow_tree(xs, features, u_feat, u_split, height_limit):
    """Grow one isolation tree from pre-drawn uniforms; returns heap arrays."""
    return get_kernel("grow_tree")(
        np.ascontiguousarray(xs, dtype=np.float64),
        np.ascontiguousarray(features, dtype=np.int64),
        np.ascontiguousarray(u_feat, dtype=np.float64),
        np.ascontiguousarray(u_split, dtype=np.float64),
        int(height_limit),
    )


def tree_path_lengths(x, feature, threshold, size, c_table):
    """Path length h(x) (depth plus leaf-size adjustment) for every row of ``x``."""
    return get_kernel("tree_path_lengths")(
        np.ascontiguousarray(x, dtype=np.float64), feature, threshold, size, c_table
    )
