"""Exact kNN over embeddings and kernel-weighted uncertainty propagation.

A sample's score is its own entropy plus the kernel-weighted mean entropy
of its nearest neighbors, so isolated outliers score lower than samples in
genuinely ambiguous regions.

Neighbor search is exact brute force over blocked pairwise squared
Euclidean distances, accumulated in float64 regardless of storage dtype so
that tie handling is stable; approximate indexing is out of scope.  Blocks
are fixed by the pool size and each runs single-threaded BLAS, so results
are identical for any worker count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParamsInvalid
from .parallel import run_blocks

# ~512 MB of float64 scratch per distance block; larger blocks amortize the
# BLAS packing of the full embedding matrix across fewer GEMM calls
_BLOCK_ELEMS = 2 ** 26


@dataclass
class KnnGraph:
    """neighbors/sq_distances are (n, K), rows ascending by distance then index."""

    neighbors: np.ndarray
    sq_distances: np.ndarray

    @property
    def n(self) -> int:
        return self.neighbors.shape[0]

    @property
    def k(self) -> int:
        return self.neighbors.shape[1]


@dataclass
class UncertaintyVectors:
    raw: np.ndarray
    propagated: np.ndarray


def knn_graph(embeddings: np.ndarray, k: int, block: int | None = None,
              workers: int | None = 1) -> KnnGraph:
    """Exact k nearest neighbors per sample, self excluded.

    k clamps to n - 1.  Rows are sorted ascending by squared distance with
    exact ties broken toward the smaller sample index.
    """
    x = np.ascontiguousarray(embeddings, dtype=np.float64)
    n = x.shape[0]
    if n < 2:
        raise ParamsInvalid("knn_graph needs at least 2 samples")
    if k < 1:
        raise ParamsInvalid(f"k must be >= 1, got {k}")
    k = min(k, n - 1)
    if block is None:
        block = max(16, min(n, _BLOCK_ELEMS // n))

    sqn = np.einsum("ij,ij->i", x, x)
    neighbors = np.empty((n, k), dtype=np.int64)
    sq_distances = np.empty((n, k), dtype=np.float64)

    def process(start: int, stop: int) -> None:
        d2 = sqn[start:stop, None] + sqn[None, :] - 2.0 * (x[start:stop] @ x.T)
        np.maximum(d2, 0.0, out=d2)
        d2[np.arange(stop - start), np.arange(start, stop)] = np.inf

        if k < n - 1:
            part = np.argpartition(d2, k - 1, axis=1)[:, :k]
            kth = np.take_along_axis(d2, part, axis=1).max(axis=1)
        else:
            kth = np.where(np.isinf(d2), -np.inf, d2).max(axis=1)
        mask = d2 <= kth[:, None]
        for r in range(stop - start):
            cand = np.nonzero(mask[r])[0]
            vals = d2[r, cand]
            order = np.lexsort((cand, vals))[:k]
            neighbors[start + r] = cand[order]
            sq_distances[start + r] = vals[order]

    run_blocks(process, n, block, workers)
    return KnnGraph(neighbors=neighbors, sq_distances=sq_distances)


def rbf_kernel(sq_distance, rho: float):
    """exp(-rho * squared distance); underflows quietly to 0."""
    if not rho > 0:
        raise ParamsInvalid(f"rho must be > 0, got {rho}")
    sq = np.asarray(sq_distance, dtype=np.float64)
    if (sq < 0).any():
        raise ParamsInvalid("squared distances must be nonnegative")
    out = np.exp(-rho * sq)
    return float(out) if np.isscalar(sq_distance) else out


def propagate(raw_u: np.ndarray, graph: KnnGraph, rho: float) -> UncertaintyVectors:
    """Add the kernel-weighted mean neighbor uncertainty to each raw score.

    The divisor is the neighbor count, not the kernel-weight sum, so the
    result always lies in [raw, raw + max(raw)].
    """
    u = np.asarray(raw_u, dtype=np.float64)
    if u.shape != (graph.n,):
        raise ParamsInvalid(f"raw uncertainty has shape {u.shape}, graph has n={graph.n}")
    weights = rbf_kernel(graph.sq_distances, rho)
    contrib = np.einsum("ij,ij->i", weights, u[graph.neighbors]) / graph.k
    return UncertaintyVectors(raw=u, propagated=u + contrib)
