"""Weighted k-median clustering under the L1 distance.

The heuristic combines three steps: D-sampling seeding (probability
proportional to weight times distance), Lloyd-style alternation with
coordinate-wise weighted-median centers, and a single-swap local search in
which data points are proposed as replacement centers. Labels are 0-based
here; callers that need the 1..k community convention shift them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import cluster_medians, l1_to_centers

SWAP_RTOL = 1e-9
BRUTEFORCE_LIMIT = 14


class DegenerateInstanceError(ValueError):
    """Fewer distinct points than requested clusters."""


class InstanceTooLargeError(ValueError):
    pass


@dataclass(frozen=True)
class KMedianResult:
    labels: np.ndarray
    centers: np.ndarray
    cost: float
    iterations: int
    swaps: int = 0


def weighted_median(X: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Coordinate-wise weighted median of the rows of ``X``.

    Picks the smallest value whose cumulative weight reaches half the total,
    which minimizes ``sum_i w_i |x_i - v|`` in every coordinate.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    # sort along the contiguous axis
    XT = np.ascontiguousarray(X.T)
    order = np.argsort(XT, axis=1)
    xs = np.take_along_axis(XT, order, axis=1)
    cw = np.cumsum(w[order], axis=1)
    idx = np.argmax(cw >= 0.5 * cw[:, -1:], axis=1)
    return xs[np.arange(XT.shape[0]), idx]


def count_distinct(X: np.ndarray, limit: int) -> int:
    """Number of distinct rows of ``X``, capped at ``limit``."""
    remaining = np.ones(X.shape[0], dtype=bool)
    found = 0
    while found < limit and remaining.any():
        rep = X[np.argmax(remaining)]
        remaining &= np.any(X != rep, axis=1)
        found += 1
    return found


def l1_distances(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    """``(N, k)`` matrix of L1 distances between rows of X and rows of C."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    C = np.ascontiguousarray(np.atleast_2d(C), dtype=np.float64)
    return l1_to_centers(X, C)


def kmedian_cost(points, weights, labels, centers) -> float:
    X = np.atleast_2d(np.asarray(points, dtype=np.float64))
    w = np.asarray(weights, dtype=np.float64)
    labels = np.asarray(labels)
    C = np.atleast_2d(np.asarray(centers, dtype=np.float64))
    if X.shape[0] != w.size or labels.size != w.size:
        raise ValueError("points, weights and labels must have equal length")
    if X.shape[1] != C.shape[1]:
        raise ValueError("points and centers differ in dimension")
    if labels.size and (labels.min() < 0 or labels.max() >= C.shape[0]):
        raise ValueError(f"labels must lie in [0, {C.shape[0]})")
    return float(np.sum(w * np.abs(X - C[labels]).sum(axis=1)))


def _seed_centers(X, w, k, rng):
    n = X.shape[0]
    first = rng.choice(n, p=w / w.sum()) if w.sum() > 0 else rng.integers(n)
    chosen = [first]
    dmin = l1_distances(X, X[first])[:, 0]
    for _ in range(1, k):
        score = w * dmin
        if score.sum() <= 0:
            # every remaining positive-weight point coincides with a center
            score = (dmin > 0).astype(float)
        nxt = rng.choice(n, p=score / score.sum())
        chosen.append(nxt)
        dmin = np.minimum(dmin, l1_distances(X, X[nxt])[:, 0])
    return X[chosen].copy()


def _fill_empty(X, w, D, labels, k):
    """Give each empty cluster the point contributing most to the cost."""
    counts = np.bincount(labels, minlength=k)
    for l in np.flatnonzero(counts == 0):
        contrib = w * D[np.arange(len(labels)), labels]
        # a donor cluster must keep at least one point
        counts = np.bincount(labels, minlength=k)
        contrib[counts[labels] <= 1] = -1.0
        i = int(np.argmax(contrib))
        labels[i] = l
    return labels


def _alternate(X, w, centers, max_iter, XT=None):
    k = centers.shape[0]
    if XT is None:
        XT = np.ascontiguousarray(X.T)
    D = l1_distances(X, centers)
    labels = np.argmin(D, axis=1)
    it = 0
    for it in range(1, max_iter + 1):
        labels = _fill_empty(X, w, D, labels, k)
        centers = cluster_medians(XT, w, labels, k)
        D = l1_distances(X, centers)
        new = np.argmin(D, axis=1)
        if np.array_equal(new, labels):
            break
        labels = new
    cost = float(np.sum(w * D[np.arange(len(labels)), labels]))
    return labels, centers, D, cost, it


def _best_swap(X, w, D, cand, cost):
    """Best (candidate, slot) medoid swap; returns None when none improves."""
    k = D.shape[1]
    if k == 1:
        others = np.full((1, D.shape[0]), np.inf)
    else:
        others = np.stack([np.delete(D, l, axis=1).min(axis=1) for l in range(k)])
    best = None
    best_cost = cost * (1.0 - SWAP_RTOL)
    for c in cand:
        dc = np.abs(X - X[c]).sum(axis=1)
        trial = (np.minimum(others, dc) * w).sum(axis=1)
        l = int(np.argmin(trial))
        if trial[l] < best_cost:
            best_cost, best = trial[l], (int(c), l)
    return best


def weighted_kmedian(points, weights, k: int, max_swaps: int = 20, seed: int = 0,
                     max_iter: int = 100, n_candidates: int = 32,
                     n_init: int = 5) -> KMedianResult:
    """Approximate weighted k-median clustering of the rows of ``points``.

    Parameters
    ----------
    points : (N, D) array
    weights : (N,) nonnegative array
    k : number of clusters
    max_swaps : cap on accepted single-medoid swaps per restart
    seed : RNG seed; the result is a deterministic function of it
    n_candidates : swap proposals per round; all points are tried when
        ``N <= n_candidates``
    n_init : independent restarts, the cheapest is returned
    """
    X = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if X.shape[0] == 1 and np.ndim(points) == 1:
        X = X.T
    w = np.asarray(weights, dtype=np.float64)
    N = X.shape[0]
    if N == 0:
        raise ValueError("no points to cluster")
    if w.shape != (N,):
        raise ValueError("weights must have one entry per point")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    if k > N:
        raise ValueError(f"k={k} exceeds number of points {N}")
    if count_distinct(X, k) < k:
        raise DegenerateInstanceError(f"fewer than k={k} distinct points")

    rng = np.random.default_rng(seed)
    XT = np.ascontiguousarray(X.T)
    best = None
    for _ in range(n_init):
        centers = _seed_centers(X, w, k, rng)
        labels, centers, D, cost, iters = _alternate(X, w, centers, max_iter, XT)
        swaps = 0
        while swaps < max_swaps and cost > 0:
            if N <= n_candidates:
                cand = np.arange(N)
            else:
                score = w * D[np.arange(N), labels]
                p = score / score.sum()
                cand = np.unique(rng.choice(N, size=n_candidates, p=p))
            move = _best_swap(X, w, D, cand, cost)
            if move is None:
                break
            c, l = move
            trial = centers.copy()
            trial[l] = X[c]
            new_labels, new_centers, new_D, new_cost, extra = _alternate(X, w, trial, max_iter, XT)
            if new_cost >= cost * (1.0 - SWAP_RTOL):
                break
            labels, centers, D, cost = new_labels, new_centers, new_D, new_cost
            iters += extra
            swaps += 1
        if best is None or cost < best.cost:
            best = KMedianResult(labels, centers, cost, iters, swaps)
    return best


def exact_kmedian_bruteforce(points, weights, k: int) -> KMedianResult:
    """Globally optimal weighted k-median by subset dynamic programming.

    Every point set is split into exactly ``k`` nonempty groups, each served
    by its coordinate-wise weighted median. Exponential; ``N <= 14`` only.
    """
    X = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if X.shape[0] == 1 and np.ndim(points) == 1:
        X = X.T
    w = np.asarray(weights, dtype=np.float64)
    N = X.shape[0]
    if N > BRUTEFORCE_LIMIT:
        raise InstanceTooLargeError(f"{N} points exceeds brute-force limit {BRUTEFORCE_LIMIT}")
    if not 1 <= k <= N:
        raise ValueError(f"need 1 <= k <= {N}")

    full = (1 << N) - 1
    cost = np.zeros(full + 1)
    for mask in range(1, full + 1):
        idx = [i for i in range(N) if mask >> i & 1]
        v = weighted_median(X[idx], w[idx])
        cost[mask] = float(np.sum(w[idx] * np.abs(X[idx] - v).sum(axis=1)))

    # best[j][mask]: cheapest split of `mask` into j groups
    best = {1: cost.copy()}
    choice = {}
    for j in range(2, k + 1):
        cur = np.full(full + 1, np.inf)
        arg = np.zeros(full + 1, dtype=np.int64)
        prev = best[j - 1]
        for mask in range(1, full + 1):
            low = mask & -mask
            rest = mask ^ low
            sub = rest
            # the group holding the lowest bit is `low | sub`
            while True:
                g = low | sub
                r = mask ^ g
                if r:
                    val = cost[g] + prev[r]
                    if val < cur[mask]:
                        cur[mask], arg[mask] = val, g
                if sub == 0:
                    break
                sub = (sub - 1) & rest
        best[j], choice[j] = cur, arg

    labels = np.zeros(N, dtype=np.int64)
    mask = full
    for j in range(k, 1, -1):
        g = int(choice[j][mask])
        for i in range(N):
            if g >> i & 1:
                labels[i] = j - 1
        mask ^= g
    centers = np.stack([weighted_median(X[labels == l], w[labels == l]) for l in range(k)])
    return KMedianResult(labels, centers, float(best[k][full]), 0, 0)
