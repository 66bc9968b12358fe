"""Iterative re-selection: neighbor graph over the chosen set, margin penalty, sweep.

After initialization, each cluster's choice is re-solved against the
selections of nearby clusters: any candidate whose squared distance to a
neighboring selection falls below the margin picks up a weighted penalty.
Sweeps repeat until the selection stops changing or the round cap is hit.

The sweep is sequential over ascending cluster ids (Gauss-Seidel): the
penalty always sees the most recently updated selections.  A simultaneous
(Jacobi) mode is available for comparison, where every cluster is scored
against the round-start selections.  The neighbor of a cluster is excluded
from being itself: a self-neighbor would add a constant penalty to the
current holder and nothing else, which inverts the intent of the term.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .params import HyperParams
from .partition import Partition, SelectionState, cluster_candidates, init_selection
from .propagation import UncertaintyVectors


@dataclass
class CrossKnn:
    """For each cluster, the nearest members of the reference pool (sample indices).

    The reference pool is the selected set, plus the labeled pool in
    multi-round mode; a cluster's own selection is excluded.
    """

    per_cluster_neighbors: list[list[int]]


def cross_knn(state: SelectionState, embeddings: np.ndarray, k_prime: int,
              multi_round: bool = False) -> CrossKnn:
    """K' nearest reference points per current selection, ties toward smaller index."""
    x = np.asarray(embeddings, dtype=np.float64)
    refs = list(state.selected)
    if multi_round and state.labeled_pool:
        refs += list(state.labeled_pool)
    refs_arr = np.asarray(refs, dtype=np.int64)
    out: list[list[int]] = []
    for q in state.selected:
        others = refs_arr[refs_arr != q]
        if others.size == 0:
            out.append([])
            continue
        d2 = np.sum((x[others] - x[q]) ** 2, axis=1)
        order = np.lexsort((others, d2))[:min(k_prime, others.size)]
        out.append([int(i) for i in others[order]])
    return CrossKnn(per_cluster_neighbors=out)


def _resolve_refs(neighbors: list[int], build_map: dict[int, int],
                  current: list[int]) -> list[int]:
    # neighbors that were selections at build time follow their cluster's
    # current choice; labeled-pool members stay fixed
    return [current[build_map[nb]] if nb in build_map else nb for nb in neighbors]


def _cluster_scores(cand: np.ndarray, cluster: int, part: Partition,
                    u_prop: np.ndarray, x: np.ndarray, refs: list[int],
                    params: HyperParams) -> np.ndarray:
    d2_centroid = np.sum((x[cand] - part.centroids[cluster]) ** 2, axis=1)
    scores = u_prop[cand] - params.beta * d2_centroid
    if refs and params.gamma > 0:
        diff = x[cand][:, None, :] - x[np.asarray(refs, dtype=np.int64)][None, :, :]
        d2_refs = np.sum(diff * diff, axis=2)
        scores = scores - params.gamma * np.maximum(params.margin - d2_refs, 0.0).sum(axis=1)
    return scores


def rewrite_step(state: SelectionState, part: Partition, unc: UncertaintyVectors,
                 embeddings: np.ndarray, cknn: CrossKnn, params: HyperParams,
                 jacobi: bool = False) -> SelectionState:
    """One penalized re-selection sweep; cknn must be built against state."""
    x = np.asarray(embeddings, dtype=np.float64)
    build_map = {q: i for i, q in enumerate(state.selected)}
    excluded = frozenset(state.labeled_pool or [])
    current = list(state.selected)
    frozen = list(state.selected)  # round-start view for jacobi mode
    for i in range(part.b):
        view = frozen if jacobi else current
        refs = _resolve_refs(cknn.per_cluster_neighbors[i], build_map, view)
        cand = cluster_candidates(part, i, excluded)
        taken = {view[j] for j in range(part.b) if j != i}
        if taken:
            cand = cand[~np.isin(cand, np.fromiter(taken, dtype=np.int64))]
        scores = _cluster_scores(cand, i, part, unc.propagated, x, refs, params)
        current[i] = int(cand[int(scores.argmax())])
    return SelectionState(
        selected=current,
        labeled_pool=list(state.labeled_pool) if state.labeled_pool is not None else None,
        objective_trace=list(state.objective_trace),
        iterations_run=state.iterations_run,
        change_counts=list(state.change_counts),
    )


def _round_objective(state: SelectionState, part: Partition, unc: UncertaintyVectors,
                     x: np.ndarray, cknn: CrossKnn, build_map: dict[int, int],
                     params: HyperParams) -> float:
    total = 0.0
    for i, q in enumerate(state.selected):
        refs = _resolve_refs(cknn.per_cluster_neighbors[i], build_map, state.selected)
        score = _cluster_scores(np.asarray([q]), i, part, unc.propagated, x, refs, params)
        total += float(score[0])
    return total


def run_ptr(embeddings: np.ndarray, part: Partition, unc: UncertaintyVectors,
            params: HyperParams, labeled_pool=None, jacobi: bool = False) -> SelectionState:
    """Initialization plus up to `iterations` rewrite rounds with early fixed-point exit."""
    x = np.asarray(embeddings, dtype=np.float64)
    state = init_selection(part, unc, x, params.beta, labeled_pool=labeled_pool)
    multi = labeled_pool is not None and len(labeled_pool) > 0
    for _ in range(params.iterations):
        cknn = cross_knn(state, x, params.cknn_size, multi_round=multi)
        build_map = {q: i for i, q in enumerate(state.selected)}
        new_state = rewrite_step(state, part, unc, x, cknn, params, jacobi=jacobi)
        changed = sum(1 for a, b in zip(new_state.selected, state.selected) if a != b)
        new_state.iterations_run = state.iterations_run + 1
        new_state.change_counts.append(changed)
        new_state.objective_trace.append(
            _round_objective(new_state, part, unc, x, cknn, build_map, params))
        state = new_state
        if changed == 0:
            break
    return state
