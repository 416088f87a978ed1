"""Local refinement by normalized edge counting.

Each round relabels every node to the community it connects to most
frequently, relative to community size. Rounds are synchronous: all scores
in a round are computed from the previous round's labels.

Label convention throughout the package: communities are ``1..k`` and ``0``
marks a node that initialization left unassigned.
"""

from __future__ import annotations

import numpy as np

from .graph_io import AdjacencyMatrix


class EmptyClustersError(ValueError):
    """No node carries any label in 1..k."""


def community_scores(A: AdjacencyMatrix, labels: np.ndarray, k: int,
                     ops: dict | None = None) -> np.ndarray:
    """``(n, k)`` matrix of mean adjacency from each node into each community.

    Empty communities score ``-inf``; unassigned nodes count for nothing.
    If ``ops`` is given, ``ops["entries"]`` is incremented by the number of
    stored adjacency entries read.
    """
    labels = np.asarray(labels)
    if labels.shape != (A.n,):
        raise ValueError(f"labels must have length {A.n}")
    if labels.size and (labels.min() < 0 or labels.max() > k):
        raise ValueError(f"labels must lie in 0..{k}")
    onehot = np.zeros((A.n, k + 1))
    onehot[np.arange(A.n), labels] = 1.0
    onehot = onehot[:, 1:]
    sizes = onehot.sum(axis=0)
    if not sizes.any():
        raise EmptyClustersError("all communities are empty")
    counts = A.matmul(onehot)
    if ops is not None:
        ops["entries"] = ops.get("entries", 0) + (A.data.nnz if A.is_sparse else A.n * A.n)
    with np.errstate(divide="ignore", invalid="ignore"):
        scores = counts / sizes
    scores[:, sizes == 0] = -np.inf
    return scores


def refine_once(A: AdjacencyMatrix, labels, k: int, ops: dict | None = None) -> np.ndarray:
    """One synchronous round; ties go to the smallest community index."""
    scores = community_scores(A, labels, k, ops=ops)
    return np.argmax(scores, axis=1) + 1


def refine(A: AdjacencyMatrix, labels, k: int, rounds: int = 10,
           ops: dict | None = None) -> np.ndarray:
    if rounds < 0:
        raise ValueError("rounds must be nonnegative")
    labels = np.asarray(labels, dtype=np.int64).copy()
    for _ in range(rounds):
        new = refine_once(A, labels, k, ops=ops)
        if np.array_equal(new, labels):
            break
        labels = new
    return labels
