"""Adjacency matrices, edge-list files and degree statistics.

An :class:`AdjacencyMatrix` is a thin immutable wrapper around either a dense
``int8`` array or a CSR matrix. Graphs below ``DENSE_LIMIT`` nodes are kept
dense, larger ones sparse.
"""

from __future__ import annotations

import io
import logging
import os
import re
from dataclasses import dataclass
from typing import IO, Iterable

import numpy as np
import scipy.sparse as sp

log = logging.getLogger(__name__)

DENSE_LIMIT = 4096
_HEADER = re.compile(r"#\s*n\s*=\s*(\d+)")


class EdgeListError(ValueError):
    """Malformed edge-list input."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NodeIndexError(IndexError):
    """Node id outside the admissible range."""


@dataclass(frozen=True, eq=False)
class AdjacencyMatrix:
    """Symmetric 0/1 adjacency matrix with an empty diagonal.

    Use :meth:`from_edges` or :meth:`from_dense` rather than the constructor;
    they enforce the invariants.
    """

    n: int
    data: np.ndarray | sp.csr_matrix

    @classmethod
    def from_edges(cls, n: int, rows: Iterable[int], cols: Iterable[int],
                   dense: bool | None = None) -> "AdjacencyMatrix":
        rows = np.asarray(list(rows) if not isinstance(rows, np.ndarray) else rows, dtype=np.int64)
        cols = np.asarray(list(cols) if not isinstance(cols, np.ndarray) else cols, dtype=np.int64)
        keep = rows != cols
        rows, cols = rows[keep], cols[keep]
        if rows.size and (min(rows.min(), cols.min()) < 0 or max(rows.max(), cols.max()) >= n):
            raise NodeIndexError(f"node id outside [0, {n})")
        if dense is None:
            dense = n < DENSE_LIMIT
        if dense:
            arr = np.zeros((n, n), dtype=np.int8)
            arr[rows, cols] = 1
            arr[cols, rows] = 1
            arr.setflags(write=False)
            return cls(n, arr)
        r = np.concatenate([rows, cols])
        c = np.concatenate([cols, rows])
        mat = sp.csr_matrix((np.ones(r.size, dtype=np.int8), (r, c)), shape=(n, n))
        mat.sum_duplicates()
        mat.data[:] = 1
        mat.eliminate_zeros()
        return cls(n, mat)

    @classmethod
    def from_dense(cls, arr, check: bool = True) -> "AdjacencyMatrix":
        arr = np.asarray(arr)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"adjacency must be square, got shape {arr.shape}")
        if check:
            if not np.isin(arr, (0, 1)).all():
                raise ValueError("adjacency entries must be 0 or 1")
            if not np.array_equal(arr, arr.T):
                raise ValueError("adjacency must be symmetric")
            if np.any(np.diag(arr)):
                raise ValueError("adjacency must have a zero diagonal")
        n = arr.shape[0]
        if n >= DENSE_LIMIT:
            i, j = np.nonzero(np.triu(arr, 1))
            return cls.from_edges(n, i, j, dense=False)
        out = np.array(arr, dtype=np.int8)
        out.setflags(write=False)
        return cls(n, out)

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.data)

    def dense(self) -> np.ndarray:
        if self.is_sparse:
            return self.data.toarray()
        return self.data

    def csr(self) -> sp.csr_matrix:
        if self.is_sparse:
            return self.data
        return sp.csr_matrix(self.data)

    def to_sparse(self) -> "AdjacencyMatrix":
        if self.is_sparse:
            return self
        return AdjacencyMatrix(self.n, sp.csr_matrix(self.data))

    def degrees(self) -> np.ndarray:
        return np.asarray(self.data.sum(axis=1), dtype=np.int64).ravel()

    @property
    def n_edges(self) -> int:
        return int(self.degrees().sum() // 2)

    def edges(self) -> np.ndarray:
        """Upper-triangular edge list as an ``(m, 2)`` array, sorted."""
        if self.is_sparse:
            coo = sp.triu(self.data, 1).tocoo()
            out = np.column_stack([coo.row, coo.col]).astype(np.int64)
            order = np.lexsort((out[:, 1], out[:, 0]))
            return out[order]
        i, j = np.nonzero(np.triu(self.data, 1))
        return np.column_stack([i, j]).astype(np.int64)

    def matmul(self, other: np.ndarray) -> np.ndarray:
        return np.asarray(self.data @ other)

    def minor(self, i: int) -> "AdjacencyMatrix":
        """Drop row and column ``i``."""
        if not 0 <= i < self.n:
            raise NodeIndexError(f"node {i} outside [0, {self.n})")
        keep = np.delete(np.arange(self.n), i)
        if self.is_sparse:
            return AdjacencyMatrix(self.n - 1, self.data[keep][:, keep].tocsr())
        sub = self.data[np.ix_(keep, keep)]
        sub.setflags(write=False)
        return AdjacencyMatrix(self.n - 1, sub)

    def __eq__(self, other) -> bool:
        if not isinstance(other, AdjacencyMatrix):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.edges(), other.edges())

    __hash__ = None


@dataclass(frozen=True)
class LoadResult:
    matrix: AdjacencyMatrix
    self_loops: int
    duplicates: int


def load_edge_list(source: str | bytes | IO, n_hint: int | None = None,
                   one_indexed: bool = False) -> LoadResult:
    """Parse a whitespace-separated edge list.

    ``source`` is a path, raw bytes, or a binary/text stream. Blank lines and
    ``#`` comments are skipped; a ``# n=<count>`` comment sets the node count
    when ``n_hint`` is not given.
    Duplicate edges (in either orientation) collapse to one; self-loops are
    dropped and counted.
    """
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            raw = fh.read()
    elif isinstance(source, bytes):
        raw = source
    else:
        raw = source.read()
    text = raw.decode("utf-8") if isinstance(raw, bytes) else raw

    offset = 1 if one_indexed else 0
    rows, cols = [], []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if line.startswith("#"):
            m = _HEADER.match(line)
            if m and n_hint is None:
                n_hint = int(m.group(1))
            continue
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise EdgeListError(f"expected two node ids, got {len(parts)} fields", lineno)
        try:
            a, b = int(parts[0]) - offset, int(parts[1]) - offset
        except ValueError:
            raise EdgeListError(f"non-integer node id in {line!r}", lineno) from None
        if a < 0 or b < 0 or (n_hint is not None and (a >= n_hint or b >= n_hint)):
            hi = n_hint if n_hint is not None else "inf"
            raise NodeIndexError(f"line {lineno}: node id outside [{offset}, {hi})")
        rows.append(a)
        cols.append(b)

    rows_a = np.asarray(rows, dtype=np.int64)
    cols_a = np.asarray(cols, dtype=np.int64)
    n = n_hint if n_hint is not None else (int(max(rows_a.max(), cols_a.max())) + 1 if rows else 0)
    loops = int(np.sum(rows_a == cols_a))
    if loops:
        log.warning("dropped %d self-loop(s)", loops)
    off = rows_a != cols_a
    pairs = {(min(a, b), max(a, b)) for a, b in zip(rows_a[off].tolist(), cols_a[off].tolist())}
    mat = AdjacencyMatrix.from_edges(n, rows_a, cols_a)
    return LoadResult(mat, loops, int(off.sum()) - len(pairs))


def read_edge_list(path, n_hint=None, one_indexed=False) -> AdjacencyMatrix:
    with open(path, "rb") as fh:
        return load_edge_list(fh, n_hint=n_hint, one_indexed=one_indexed).matrix


def parse_edge_list(text: str, n_hint=None, one_indexed=False) -> LoadResult:
    """Convenience wrapper for in-memory edge-list text."""
    return load_edge_list(io.BytesIO(text.encode("utf-8")), n_hint=n_hint, one_indexed=one_indexed)


def dump_edge_list(A: AdjacencyMatrix, one_indexed: bool = False, sep: str = "\t") -> str:
    off = 1 if one_indexed else 0
    return "".join(f"{i + off}{sep}{j + off}\n" for i, j in A.edges().tolist())


def write_edge_list(A: AdjacencyMatrix, path, one_indexed: bool = False) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# n={A.n}\n")
        fh.write(dump_edge_list(A, one_indexed=one_indexed))


def read_labels(path) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        vals = [int(tok) for tok in fh.read().split()]
    return np.asarray(vals, dtype=np.int64)


def write_labels(labels, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("".join(f"{int(x)}\n" for x in labels))


@dataclass(frozen=True)
class DegreeStats:
    avg_degree: float
    median_degree: float
    min_degree: int
    max_degree: int


def degree_stats(A: AdjacencyMatrix) -> DegreeStats:
    deg = A.degrees()
    if deg.size == 0:
        return DegreeStats(0.0, 0.0, 0, 0)
    return DegreeStats(float(deg.mean()), float(np.median(deg)), int(deg.min()), int(deg.max()))
