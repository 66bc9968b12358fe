import numpy as np
import pytest

from coldselect.dataio import DatasetMatrices


def make_data(class_probs, embeddings=None, raw_label_probs=None, gold_labels=None):
    """DatasetMatrices straight from arrays, bypassing the file loader."""
    probs = np.asarray(class_probs, dtype=np.float32)
    n, c = probs.shape
    if embeddings is None:
        embeddings = np.zeros((n, 2), dtype=np.float32)
    emb = np.asarray(embeddings, dtype=np.float32)
    raw = None if raw_label_probs is None else np.asarray(raw_label_probs, dtype=np.float32)
    gold = None if gold_labels is None else np.asarray(gold_labels, dtype=np.int32)
    return DatasetMatrices(n=n, d=emb.shape[1], c=c, embeddings=emb,
                           class_probs=probs, raw_label_probs=raw, gold_labels=gold)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
