"""Budget-sized K-Means partition and greedy per-cluster initialization.

One cluster per requested annotation; the initial query set takes, from
each cluster, the sample with the best propagated-uncertainty score minus
a weighted squared distance to the cluster centroid.

Determinism contract: k-means++ is driven by a single seeded generator,
Lloyd assignment breaks ties toward the smaller cluster id, argmax ties
break toward the smaller sample index, and empty clusters are repaired by
moving the point currently farthest from its own centroid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetExceedsPool, LabeledPoolInvalid, ParamsInvalid
from .parallel import run_blocks
from .propagation import UncertaintyVectors

KMEANS_TOL = 1e-4
KMEANS_MAX_ITER = 100
_ASSIGN_BLOCK_ELEMS = 2 ** 22


@dataclass
class Partition:
    assignment: np.ndarray           # (n,) cluster ids
    centroids: np.ndarray            # (b, d) float64 member means
    cluster_members: list[np.ndarray]  # ascending sample indices per cluster

    @property
    def b(self) -> int:
        return self.centroids.shape[0]


@dataclass
class SelectionState:
    """One selected sample per cluster plus bookkeeping for the rewrite loop.

    objective_trace[0] is the initialization objective; one entry follows per
    executed rewrite round.  change_counts records how many clusters changed
    their selection in each round.
    """

    selected: list[int]
    labeled_pool: list[int] | None = None
    objective_trace: list[float] = field(default_factory=list)
    iterations_run: int = 0
    change_counts: list[int] = field(default_factory=list)


def _sq_dists_to(points: np.ndarray, sqn: np.ndarray, center: np.ndarray) -> np.ndarray:
    d2 = sqn + float(center @ center) - 2.0 * (points @ center)
    np.maximum(d2, 0.0, out=d2)
    return d2


def kmeans(embeddings: np.ndarray, b: int, seed: int,
           tol: float = KMEANS_TOL, max_iter: int = KMEANS_MAX_ITER,
           workers: int | None = 1) -> Partition:
    """Seeded k-means++ initialization followed by Lloyd iterations.

    Stops when the largest centroid displacement, relative to the RMS radius
    of the data, drops below tol, or after max_iter rounds.  Every cluster in
    the returned partition is nonempty and centroids equal member means.
    """
    x = np.ascontiguousarray(embeddings, dtype=np.float64)
    n = x.shape[0]
    if b < 1:
        raise ParamsInvalid(f"cluster count must be >= 1, got {b}")
    if b > n:
        raise BudgetExceedsPool(f"budget {b} exceeds pool size {n}")

    rng = np.random.default_rng(seed)
    sqn = np.einsum("ij,ij->i", x, x)

    # k-means++: first center uniform, then proportional to squared distance
    centers = np.empty((b, x.shape[1]), dtype=np.float64)
    first = int(rng.integers(n))
    centers[0] = x[first]
    chosen = {first}
    d2 = _sq_dists_to(x, sqn, centers[0])
    for t in range(1, b):
        total = float(d2.sum())
        if total > 0.0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            # all remaining mass at distance 0 (duplicate-heavy data)
            idx = min(i for i in range(n) if i not in chosen)
        centers[t] = x[idx]
        chosen.add(idx)
        np.minimum(d2, _sq_dists_to(x, sqn, centers[t]), out=d2)

    scale = float(np.sqrt(np.mean(np.sum((x - x.mean(axis=0)) ** 2, axis=1))))
    scale = max(scale, 1e-30)

    block = max(256, min(n, _ASSIGN_BLOCK_ELEMS // b))
    assignment = np.empty(n, dtype=np.int64)
    own_dist = np.empty(n, dtype=np.float64)
    for _ in range(max_iter):
        cnorm = np.einsum("ij,ij->i", centers, centers)

        def assign(start: int, stop: int) -> None:
            # blocked (rows, b) distances, argmin ties -> smaller id
            dist = sqn[start:stop, None] + cnorm[None, :] - 2.0 * (x[start:stop] @ centers.T)
            np.maximum(dist, 0.0, out=dist)
            assignment[start:stop] = dist.argmin(axis=1)
            own_dist[start:stop] = np.take_along_axis(
                dist, assignment[start:stop, None], axis=1).ravel()

        run_blocks(assign, n, block, workers)

        counts = np.bincount(assignment, minlength=b)
        for empty in np.nonzero(counts == 0)[0]:
            eligible = counts[assignment] >= 2
            if not eligible.any():
                raise ParamsInvalid("cannot repair empty cluster: all clusters are singletons")
            cand = np.where(eligible, own_dist, -np.inf)
            j = int(cand.argmax())
            counts[assignment[j]] -= 1
            assignment[j] = empty
            counts[empty] += 1

        new_centers = np.empty_like(centers)
        for i in range(b):
            new_centers[i] = x[assignment == i].mean(axis=0)
        shift = float(np.sqrt(np.sum((new_centers - centers) ** 2, axis=1)).max())
        centers = new_centers
        if shift / scale < tol:
            break

    members = [np.nonzero(assignment == i)[0] for i in range(b)]
    return Partition(assignment=assignment, centroids=centers, cluster_members=members)


def cluster_candidates(part: Partition, cluster: int,
                       excluded: frozenset[int]) -> np.ndarray:
    """Members of a cluster minus excluded indices; error if none remain."""
    members = part.cluster_members[cluster]
    if excluded:
        members = members[~np.isin(members, np.fromiter(excluded, dtype=np.int64))]
    if members.size == 0:
        raise LabeledPoolInvalid(
            f"cluster {cluster} has no selectable members (all in the labeled pool)")
    return members


def init_selection(part: Partition, unc: UncertaintyVectors, embeddings: np.ndarray,
                   beta: float, labeled_pool=None) -> SelectionState:
    """Greedy per-cluster argmax of propagated uncertainty minus beta * centroid distance."""
    x = np.asarray(embeddings, dtype=np.float64)
    u = unc.propagated
    excluded = frozenset(int(i) for i in labeled_pool) if labeled_pool is not None else frozenset()
    selected: list[int] = []
    objective = 0.0
    for i in range(part.b):
        cand = cluster_candidates(part, i, excluded)
        d2 = np.sum((x[cand] - part.centroids[i]) ** 2, axis=1)
        scores = u[cand] - beta * d2
        best = int(scores.argmax())
        selected.append(int(cand[best]))
        objective += float(scores[best])
    pool = [int(i) for i in labeled_pool] if labeled_pool is not None else None
    return SelectionState(selected=selected, labeled_pool=pool,
                          objective_trace=[objective])
