"""Best rank-k approximation of an adjacency matrix and L1 row normalization.

For a symmetric matrix the Frobenius-optimal rank-k approximation keeps the
k eigenpairs of largest absolute eigenvalue. Small graphs go through a full
LAPACK eigendecomposition; large ones through ARPACK's implicitly restarted
Lanczos iteration.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .graph_io import AdjacencyMatrix

DENSE_SOLVER_LIMIT = 2048
ZERO_ROW_RTOL = 1e-12


class EigenSolverError(RuntimeError):
    """Iterative eigensolver failed to converge."""

    def __init__(self, message: str, n_converged: int = 0, maxiter: int = 0, ncv: int = 0):
        super().__init__(message)
        self.n_converged = n_converged
        self.maxiter = maxiter
        self.ncv = ncv


@dataclass(frozen=True)
class RankKFactor:
    """P_hat = vectors @ diag(values) @ vectors.T"""

    vectors: np.ndarray
    values: np.ndarray
    solver: str

    @property
    def k(self) -> int:
        return self.values.size

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ self.vectors.T


@dataclass(frozen=True)
class SpectralEmbedding:
    factor: RankKFactor
    row_weights: np.ndarray
    normalized_rows: np.ndarray  # rows for `active` nodes only
    active: np.ndarray
    j0: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    @property
    def n(self) -> int:
        return self.row_weights.size


def _as_float_operator(A):
    if isinstance(A, AdjacencyMatrix):
        A = A.data
    if sp.issparse(A):
        return A.astype(np.float64)
    return np.asarray(A, dtype=np.float64)


def best_rank_k(A, k: int, solver: str = "auto", maxiter: int | None = None) -> RankKFactor:
    """Top-k eigenpairs of symmetric ``A`` ranked by ``|eigenvalue|``.

    ``solver`` is ``"auto"``, ``"dense"`` or ``"lanczos"``; ``"auto"`` picks
    the dense path for ``n <= 2048``.
    """
    M = _as_float_operator(A)
    n = M.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    if solver == "auto":
        solver = "dense" if n <= DENSE_SOLVER_LIMIT else "lanczos"
    # ARPACK needs k < n - 1
    if solver == "lanczos" and k >= n - 1:
        solver = "dense"

    if solver == "dense":
        dense = M.toarray() if sp.issparse(M) else M
        w, V = np.linalg.eigh(dense)
        order = np.argsort(-np.abs(w), kind="stable")[:k]
    elif solver == "lanczos":
        op = M if sp.issparse(M) else sp.csr_matrix(M)
        # fixed start vector keeps the iteration reproducible
        v0 = np.random.default_rng(0x5EC).standard_normal(n)
        ncv = min(n, max(2 * k + 1, 20))
        maxiter = maxiter or 10 * n
        try:
            w, V = eigsh(op, k=k, which="LM", v0=v0, ncv=ncv, maxiter=maxiter)
        except ArpackNoConvergence as exc:
            raise EigenSolverError(
                f"Lanczos did not converge: {len(exc.eigenvalues)} of {k} eigenpairs "
                f"after maxiter={maxiter} (ncv={ncv})",
                n_converged=len(exc.eigenvalues), maxiter=maxiter, ncv=ncv,
            ) from exc
        order = np.argsort(-np.abs(w), kind="stable")
    else:
        raise ValueError(f"unknown solver {solver!r}")
    return RankKFactor(np.ascontiguousarray(V[:, order]), w[order].copy(), solver)


def normalize_rows(factor: RankKFactor, rtol: float = ZERO_ROW_RTOL) -> SpectralEmbedding:
    """Reconstruct the rows of P_hat and scale each to unit L1 norm.

    Rows whose L1 norm is at most ``rtol * max_row_norm`` are treated as
    exactly zero and collected in ``j0``.
    """
    P = factor.reconstruct()
    weights = np.abs(P).sum(axis=1)
    top = weights.max() if weights.size else 0.0
    zero = weights <= rtol * top if top > 0 else np.ones(weights.shape, dtype=bool)
    weights = np.where(zero, 0.0, weights)
    active = np.flatnonzero(~zero)
    rows = P[active] / weights[active, None]
    return SpectralEmbedding(factor, weights, rows, active, np.flatnonzero(zero))


def embed(A, k: int, solver: str = "auto") -> SpectralEmbedding:
    return normalize_rows(best_rank_k(A, k, solver=solver))


def write_diagnostics(emb: SpectralEmbedding, path) -> None:
    """Eigenvalues and row weights as a long-format CSV."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["kind", "index", "value"])
        for i, v in enumerate(emb.factor.values):
            w.writerow(["eigenvalue", i, repr(float(v))])
        for i, v in enumerate(emb.row_weights):
            w.writerow(["row_weight", i, repr(float(v))])
