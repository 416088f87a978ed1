"""Spectral initialization followed by local refinement."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .graph_io import AdjacencyMatrix
from .kmedian import count_distinct, weighted_kmedian
from .refine import refine
from .spectral import embed


@dataclass(frozen=True)
class KMedianConfig:
    max_swaps: int = 20
    n_candidates: int = 32
    n_init: int = 1
    max_iter: int = 100


@dataclass(frozen=True)
class InitConfig:
    solver: str = "auto"
    kmedian: KMedianConfig = field(default_factory=KMedianConfig)


def initialize(A: AdjacencyMatrix, k: int, seed: int = 0,
               config: InitConfig = InitConfig()) -> np.ndarray:
    """Labels in 0..k from rank-k spectral embedding plus weighted k-median.

    Nodes whose rank-k row vanishes get label 0.
    """
    emb = embed(A, k, solver=config.solver)
    labels = np.zeros(A.n, dtype=np.int64)
    if emb.active.size == 0:
        return labels
    kc = count_distinct(emb.normalized_rows, k)
    km = config.kmedian
    res = weighted_kmedian(emb.normalized_rows, emb.row_weights[emb.active], kc,
                           max_swaps=km.max_swaps, seed=seed, max_iter=km.max_iter,
                           n_candidates=km.n_candidates, n_init=km.n_init)
    labels[emb.active] = res.labels + 1
    return labels


@dataclass(frozen=True)
class SpecLoReResult:
    labels: np.ndarray
    initial: np.ndarray
    init_seconds: float
    refine_seconds: float


def speclore(A: AdjacencyMatrix, k: int, rounds: int = 10, seed: int = 0,
             config: InitConfig = InitConfig()) -> SpecLoReResult:
    t0 = time.perf_counter()
    init = initialize(A, k, seed=seed, config=config)
    t1 = time.perf_counter()
    labels = refine(A, init, k, rounds=rounds)
    t2 = time.perf_counter()
    return SpecLoReResult(labels, init, t1 - t0, t2 - t1)
