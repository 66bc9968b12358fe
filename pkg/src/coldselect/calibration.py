"""Pseudo-label calibration: support set, contextualized prior, entropy.

The class-probability matrix is treated as biased: some classes are
systematically over-predicted.  A per-class prior is estimated from the
samples the model is most confident about, each row is divided by that
prior and renormalized, and per-sample entropy of the corrected rows is
the raw uncertainty score.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataio import DatasetMatrices
from .errors import DegenerateRow, ParamsInvalid
from .params import HyperParams

__all__ = [
    "HyperParams",
    "SupportSet",
    "PriorVector",
    "CalibratedLabels",
    "build_support_set",
    "contextual_prior",
    "calibrate",
    "entropy",
]

PRIOR_FLOOR = 1e-12


@dataclass
class SupportSet:
    """Per-class indices of the most confidently predicted samples.

    per_class[i] holds the top-min(k, n) rows of column i, highest
    probability first, ties broken toward the smaller index.  union is the
    deduplicated concatenation in first-seen order.
    """

    per_class: list[list[int]]
    union: list[int]


@dataclass
class PriorVector:
    """Estimated per-class prediction frequency; entries floored at 1e-12."""

    prior: np.ndarray
    source: str  # "raw_label_probs" or "class_probs"


@dataclass
class CalibratedLabels:
    """Prior-corrected pseudo labels; float64 rows summing to 1."""

    probs: np.ndarray


def build_support_set(data: DatasetMatrices, k_support: int) -> SupportSet:
    """Select the k_support highest-probability samples for each class."""
    if k_support < 1:
        raise ParamsInvalid(f"k_support must be >= 1, got {k_support}")
    probs = data.class_probs
    k = min(k_support, data.n)
    per_class: list[list[int]] = []
    for i in range(data.c):
        col = probs[:, i].astype(np.float64)
        # stable argsort of -col keeps smaller indices first among ties
        order = np.argsort(-col, kind="stable")[:k]
        per_class.append([int(j) for j in order])
    seen: set[int] = set()
    union: list[int] = []
    for members in per_class:
        for j in members:
            if j not in seen:
                seen.add(j)
                union.append(j)
    return SupportSet(per_class=per_class, union=union)


def contextual_prior(data: DatasetMatrices, support: SupportSet) -> PriorVector:
    """Average the support set's label probabilities into a per-class prior.

    Uses the raw (vocabulary-level) label-word probabilities when the dataset
    provides them, otherwise falls back to the normalized class probabilities;
    the source is recorded so downstream output can flag the fallback.
    """
    if not support.union:
        raise ParamsInvalid("support set union is empty")
    rows = np.asarray(support.union, dtype=np.int64)
    if data.raw_label_probs is not None:
        source = "raw_label_probs"
        mat = data.raw_label_probs
    else:
        source = "class_probs"
        mat = data.class_probs
    prior = mat[rows].astype(np.float64).mean(axis=0)
    prior = np.maximum(prior, PRIOR_FLOOR)
    return PriorVector(prior=prior, source=source)


def calibrate(data: DatasetMatrices, prior: PriorVector) -> CalibratedLabels:
    """Divide each row by the prior and renormalize."""
    if (prior.prior <= 0).any():
        raise ParamsInvalid("prior entries must be positive")
    ratios = data.class_probs.astype(np.float64) / prior.prior[None, :]
    denom = ratios.sum(axis=1)
    dead = np.nonzero(denom == 0.0)[0]
    if dead.size:
        raise DegenerateRow(int(dead[0]))
    return CalibratedLabels(probs=ratios / denom[:, None])


def entropy(labels: CalibratedLabels) -> np.ndarray:
    """Shannon entropy (natural log) of each calibrated row.

    Zero entries contribute nothing; output is clipped to [0, ln c] because
    float summation of a uniform row can overshoot the bound by one ulp.
    """
    p = labels.probs
    terms = np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0)
    u = -terms.sum(axis=1)
    return np.minimum(u, np.log(p.shape[1]))
