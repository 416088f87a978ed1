"""Compiled inner loops for the k-median heuristic."""

from __future__ import annotations

import numba
import numpy as np


@numba.njit(cache=True)
def _select(vals, wts, n, target):
    # smallest v with weight(x <= v) >= target; vals/wts are scratch and get permuted
    lo, hi = 0, n
    while True:
        p = vals[lo + (hi - lo) // 2]
        # three-way partition of [lo, hi) into < p, == p, > p
        lt, i, gt = lo, lo, hi
        wl = 0.0
        we = 0.0
        while i < gt:
            v = vals[i]
            if v < p:
                wl += wts[i]
                vals[i], vals[lt] = vals[lt], vals[i]
                wts[i], wts[lt] = wts[lt], wts[i]
                lt += 1
                i += 1
            elif v > p:
                gt -= 1
                vals[i], vals[gt] = vals[gt], vals[i]
                wts[i], wts[gt] = wts[gt], wts[i]
            else:
                we += wts[i]
                i += 1
        if lt > lo and wl >= target:
            hi = lt
        elif wl + we >= target or gt == hi:
            return p
        else:
            target -= wl + we
            lo = gt


@numba.njit(cache=True)
def cluster_medians(XT, w, labels, k):
    """Weighted coordinate-wise median of each cluster; ``XT`` is (D, N)."""
    D, N = XT.shape
    sizes = np.zeros(k, dtype=np.int64)
    for i in range(N):
        sizes[labels[i]] += 1
    out = np.empty((k, D))
    vals = np.empty(N)
    wts = np.empty(N)
    for l in range(k):
        if sizes[l] == 0:
            out[l, :] = np.nan
            continue
        idx = np.empty(sizes[l], dtype=np.int64)
        wl = np.empty(sizes[l])
        c = 0
        total = 0.0
        for i in range(N):
            if labels[i] == l:
                idx[c] = i
                wl[c] = w[i]
                total += w[i]
                c += 1
        for j in range(D):
            for c in range(sizes[l]):
                vals[c] = XT[j, idx[c]]
                wts[c] = wl[c]
            out[l, j] = _select(vals, wts, sizes[l], 0.5 * total)
    return out


@numba.njit(cache=True)
def l1_to_centers(X, C):
    N, D = X.shape
    k = C.shape[0]
    out = np.zeros((N, k))
    for i in range(N):
        for l in range(k):
            s = 0.0
            for j in range(D):
                s += abs(X[i, j] - C[l, j])
            out[i, l] = s
    return out
