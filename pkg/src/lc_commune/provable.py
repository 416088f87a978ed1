"""Leave-one-out clustering with per-node refinement and label alignment.

For every node ``i`` the spectral initialization runs on the graph with ``i``
removed; node ``i`` is then assigned to the community it connects to most
frequently under that run's labels. The ``n`` runs label communities under
their own permutations, so a final pass aligns each of them with the run that
left out node 0 by maximal overlap.

This variant costs ``n`` initializations and exists mainly as a reference;
:func:`lc_commune.pipeline.speclore` is the practical pipeline.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .genmodel import derive_seed
from .graph_io import AdjacencyMatrix, NodeIndexError
from .pipeline import InitConfig, KMedianConfig, initialize

# the n runs dominate the cost, so they use the iterative solver and a single
# k-median start without swaps
LOO_CONFIG = InitConfig(solver="lanczos", kmedian=KMedianConfig(max_swaps=0, n_init=1))


@dataclass(frozen=True)
class Minor:
    matrix: AdjacencyMatrix
    index_map: np.ndarray  # row a of the minor is row index_map[a] of the original


def minor_matrix(A: AdjacencyMatrix, i: int) -> Minor:
    if not 0 <= i < A.n:
        raise NodeIndexError(f"node {i} outside [0, {A.n})")
    return Minor(A.minor(i), np.delete(np.arange(A.n), i))


@dataclass(frozen=True)
class LeaveOneOutRecord:
    node: int
    labels_minus_i: np.ndarray
    refined_self: int
    seconds: float = 0.0


def node_seed(seed: int, i: int) -> int:
    """Independent k-median seed for the run that leaves out node ``i``."""
    return derive_seed(seed, 3, i)


def best_community(row: np.ndarray, labels: np.ndarray, k: int) -> int:
    """Community in 1..k with the highest mean of ``row`` over its members.

    Empty communities never win unless all are empty; ties go to the
    smallest index.
    """
    sums = np.bincount(labels, weights=row, minlength=k + 1)[1:]
    sizes = np.bincount(labels, minlength=k + 1)[1:]
    with np.errstate(divide="ignore", invalid="ignore"):
        scores = np.where(sizes > 0, sums / np.maximum(sizes, 1), -np.inf)
    return int(np.argmax(scores)) + 1


def _row(A: AdjacencyMatrix, i: int) -> np.ndarray:
    if A.is_sparse:
        return np.asarray(A.data[i].toarray(), dtype=np.float64).ravel()
    return np.asarray(A.data[i], dtype=np.float64)


def leave_one_out(A: AdjacencyMatrix, k: int, i: int, seed: int = 0,
                  config: InitConfig = LOO_CONFIG) -> LeaveOneOutRecord:
    if A.n < k + 1:
        raise ValueError(f"need n >= k + 1, got n={A.n}, k={k}")
    t0 = time.perf_counter()
    sub = minor_matrix(A, i)
    part = initialize(sub.matrix, k, seed=node_seed(seed, i), config=config)
    labels = np.insert(part, i, 0)
    refined = best_community(_row(A, i), labels, k)
    return LeaveOneOutRecord(i, labels, refined, time.perf_counter() - t0)


def align_records(records: Sequence[LeaveOneOutRecord], k: int) -> np.ndarray:
    """Map each run's self-label into the label frame of the first run.

    ``records[i]`` must be the run that left out node ``i``. Overlaps are
    counted on the runs' initial labels; ties go to the smallest label.
    """
    ref = records[0].labels_minus_i
    out = np.empty(len(records), dtype=np.int64)
    out[0] = records[0].refined_self
    for i in range(1, len(records)):
        rec = records[i]
        if rec.node != i:
            raise ValueError(f"records[{i}] describes node {rec.node}")
        mine = rec.labels_minus_i == rec.refined_self
        overlap = np.bincount(ref[mine], minlength=k + 1)[1:]
        out[i] = int(np.argmax(overlap)) + 1
    return out


@dataclass(frozen=True)
class ProvableResult:
    labels: np.ndarray
    records: list
    seconds: float

    @property
    def node_seconds(self) -> np.ndarray:
        return np.array([r.seconds for r in self.records])


def provable_run(A: AdjacencyMatrix, k: int, seed: int = 0, config: InitConfig = LOO_CONFIG,
                 map_fn: Callable = map) -> ProvableResult:
    """Full leave-one-out procedure; ``map_fn`` may be a pool's ``map``."""
    if A.n < k + 1:
        raise ValueError(f"need n >= k + 1, got n={A.n}, k={k}")
    t0 = time.perf_counter()
    # each run slices a minor; CSR slicing is cheaper than dense for sparse graphs
    records = list(map_fn(_Task(A.to_sparse(), k, seed, config), range(A.n)))
    labels = align_records(records, k)
    return ProvableResult(labels, records, time.perf_counter() - t0)


def provable_cluster(A: AdjacencyMatrix, k: int, seed: int = 0,
                     config: InitConfig = LOO_CONFIG) -> np.ndarray:
    return provable_run(A, k, seed=seed, config=config).labels


@dataclass(frozen=True)
class _Task:
    # picklable closure for process pools
    A: AdjacencyMatrix
    k: int
    seed: int
    config: InitConfig

    def __call__(self, i: int) -> LeaveOneOutRecord:
        return leave_one_out(self.A, self.k, i, seed=self.seed, config=self.config)
