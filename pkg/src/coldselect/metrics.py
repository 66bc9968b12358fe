"""Selection-quality diagnostics: class balance, divergence, diversity, density."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from threadpoolctl import threadpool_limits

from .errors import LabelsInvalid, ParamsInvalid, ZeroVector
from .parallel import run_blocks

REFERENCE_FREQ_TOL = 1e-5


@dataclass
class SelectionReport:
    """Diagnostics for one selected set; inf sentinels mark degenerate cases."""

    imb: float
    ldd: float
    diversity: float
    representativeness: list[float]
    representativeness_mean: float
    embedding_space: str = "raw"
    reference_source: str = "pool-gold-frequencies"


def imbalance(selected_labels, c: int) -> float:
    """Max over min class count among the selected labels; inf if a class is absent."""
    labels = np.asarray(selected_labels, dtype=np.int64)
    if labels.size == 0:
        raise ParamsInvalid("imbalance needs at least one selected label")
    if labels.min() < 0 or labels.max() >= c:
        raise LabelsInvalid(f"labels must lie in [0, {c})")
    counts = np.bincount(labels, minlength=c)
    if counts.min() == 0:
        return float("inf")
    return float(counts.max()) / float(counts.min())


def label_divergence(selected_labels, reference_freqs) -> float:
    """KL divergence of selected class frequencies from a reference distribution.

    Zero-frequency selected classes contribute nothing; selected mass on a
    zero-reference class yields inf.  Natural log.
    """
    p = np.asarray(reference_freqs, dtype=np.float64)
    if abs(p.sum() - 1.0) > REFERENCE_FREQ_TOL:
        raise ParamsInvalid(f"reference frequencies sum to {p.sum():.8f}, expected 1")
    if (p < 0).any():
        raise ParamsInvalid("reference frequencies must be nonnegative")
    labels = np.asarray(selected_labels, dtype=np.int64)
    if labels.size == 0:
        raise ParamsInvalid("label_divergence needs at least one selected label")
    if labels.min() < 0 or labels.max() >= p.size:
        raise LabelsInvalid(f"labels must lie in [0, {p.size})")
    q = np.bincount(labels, minlength=p.size) / labels.size
    pos = q > 0
    if (p[pos] == 0).any():
        return float("inf")
    return float(np.sum(q[pos] * np.log(q[pos] / p[pos])))


def diversity(selected, embeddings: np.ndarray, block: int = 8192) -> float:
    """Inverse of the mean distance from each pool point to its nearest selection.

    Euclidean (non-squared) distance; inf sentinel when the selection covers
    every pool point exactly.
    """
    sel = np.asarray(selected, dtype=np.int64)
    if sel.size == 0:
        raise ParamsInvalid("diversity needs a nonempty selection")
    emb = np.asarray(embeddings, dtype=np.float64)
    chosen = emb[sel]
    chosen_sq = np.einsum("ij,ij->i", chosen, chosen)
    mins = np.empty(emb.shape[0], dtype=np.float64)

    def process(start: int, stop: int) -> None:
        rows = emb[start:stop]
        sq = np.einsum("ij,ij->i", rows, rows)
        d2 = sq[:, None] + chosen_sq[None, :] - 2.0 * (rows @ chosen.T)
        np.maximum(d2, 0.0, out=d2)
        # expansion is only used to pick the nearest selection; the distance
        # itself is recomputed by direct difference (cancellation-safe)
        nearest = d2.argmin(axis=1)
        diff = rows - chosen[nearest]
        mins[start:stop] = np.sqrt(np.einsum("ij,ij->i", diff, diff))

    run_blocks(process, emb.shape[0], block, workers=1)
    mean_min = float(np.mean(mins))
    if mean_min == 0.0:
        return float("inf")
    return 1.0 / mean_min


def representativeness(selected, embeddings: np.ndarray, k: int = 10) -> np.ndarray:
    """Mean cosine similarity of each selected point to its k most similar pool points.

    The point itself is excluded by index; ties in similarity break toward the
    smaller pool index.
    """
    emb = np.asarray(embeddings, dtype=np.float64)
    n = emb.shape[0]
    if n <= k:
        raise ParamsInvalid(f"pool size {n} must exceed k={k}")
    sel = np.asarray(selected, dtype=np.int64)
    norms = np.linalg.norm(emb, axis=1)
    if (norms == 0).any():
        raise ZeroVector(f"embedding row {int(np.nonzero(norms == 0)[0][0])} has zero norm")
    unit = emb / norms[:, None]
    idx = np.arange(n)
    out = np.empty(sel.size, dtype=np.float64)
    with threadpool_limits(limits=1):
        cos_all = unit @ unit[sel].T
    for pos, s in enumerate(sel):
        cos = cos_all[:, pos]
        # lexsort: descending similarity, then ascending index
        order = np.lexsort((idx, -cos))
        order = order[order != s][:k]
        out[pos] = np.sum(cos[order]) / k
    return out
