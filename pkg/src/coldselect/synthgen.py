"""Seeded Gaussian-mixture generator used by tests and acceptance runs.

Class probabilities are a softmax of negative distances to the blob
centers, so confidence decays smoothly away from each class region the way
model pseudo-labels do; a label_noise fraction of rows is replaced with
uniform draws from the probability simplex.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataio import DatasetMatrices
from .errors import ParamsInvalid


@dataclass(frozen=True)
class SynthSpec:
    n: int
    d: int
    c: int
    cluster_separation: float
    label_noise: float
    seed: int

    def __post_init__(self):
        if self.n < 1 or self.d < 1 or self.c < 2:
            raise ParamsInvalid(f"need n >= 1, d >= 1, c >= 2, got n={self.n} d={self.d} c={self.c}")
        if not self.cluster_separation > 0:
            raise ParamsInvalid(f"cluster_separation must be > 0, got {self.cluster_separation}")
        if not 0.0 <= self.label_noise <= 1.0:
            raise ParamsInvalid(f"label_noise must lie in [0, 1], got {self.label_noise}")


def generate(spec: SynthSpec) -> DatasetMatrices:
    """Deterministic mixture of c unit-variance blobs with planted labels."""
    rng = np.random.default_rng(spec.seed)

    directions = rng.standard_normal((spec.c, spec.d))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    centers = spec.cluster_separation * directions

    gold = rng.integers(0, spec.c, size=spec.n).astype(np.int32)
    embeddings = centers[gold] + rng.standard_normal((spec.n, spec.d))

    # per-center distance columns; the (n, c, d) broadcast would not scale
    dists = np.empty((spec.n, spec.c), dtype=np.float64)
    for k in range(spec.c):
        diff = embeddings - centers[k]
        dists[:, k] = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    logits = -dists
    logits -= logits.max(axis=1, keepdims=True)
    probs = np.exp(logits)
    probs /= probs.sum(axis=1, keepdims=True)

    noisy = rng.random(spec.n) < spec.label_noise
    if noisy.any():
        probs[noisy] = rng.dirichlet(np.ones(spec.c), size=int(noisy.sum()))

    embeddings32 = embeddings.astype(np.float32)
    probs32 = probs.astype(np.float32)
    for arr in (embeddings32, probs32, gold):
        arr.flags.writeable = False
    return DatasetMatrices(
        n=spec.n, d=spec.d, c=spec.c,
        embeddings=embeddings32, class_probs=probs32,
        raw_label_probs=None, gold_labels=gold,
    )
