import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coldselect.errors import LabelsInvalid, ParamsInvalid, ZeroVector
from coldselect.metrics import diversity, imbalance, label_divergence, representativeness


class TestImbalance:
    def test_balanced(self):
        labels = [0] * 64 + [1] * 64
        assert imbalance(labels, 2) == 1.0

    def test_three_to_one(self):
        labels = [0] * 96 + [1] * 32
        assert imbalance(labels, 3 - 1) == 3.0

    def test_missing_class_is_infinite(self):
        labels = [0] * 5 + [1] * 5
        assert imbalance(labels, 3) == float("inf")

    def test_out_of_range_rejected(self):
        with pytest.raises(LabelsInvalid):
            imbalance([0, 3], 2)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.integers(0, 4), min_size=1, max_size=60))
    def test_at_least_one_when_finite_and_relabel_invariant(self, labels):
        v = imbalance(labels, 5)
        assert v >= 1.0 or v == float("inf")
        perm = [4, 2, 0, 1, 3]
        assert imbalance([perm[x] for x in labels], 5) == v


class TestLabelDivergence:
    def test_matching_distribution_is_zero(self):
        labels = [0, 0, 1, 1]
        assert label_divergence(labels, [0.5, 0.5]) == 0.0

    def test_one_hot_against_uniform_is_ln2(self):
        assert label_divergence([0, 0], [0.5, 0.5]) == pytest.approx(math.log(2), abs=1e-12)

    def test_support_violation_is_infinite(self):
        assert label_divergence([0, 1], [1.0, 0.0]) == float("inf")

    def test_reference_must_sum_to_one(self):
        with pytest.raises(ParamsInvalid):
            label_divergence([0], [0.4, 0.4])

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.integers(0, 3), min_size=1, max_size=50))
    def test_nonnegative(self, labels):
        ref = np.asarray([0.1, 0.2, 0.3, 0.4])
        assert label_divergence(labels, ref) >= 0.0

    def test_matches_hand_formula(self, rng):
        labels = rng.integers(0, 3, size=40)
        ref = np.asarray([0.2, 0.5, 0.3])
        q = np.bincount(labels, minlength=3) / 40
        expect = sum(qi * math.log(qi / pi) for qi, pi in zip(q, ref) if qi > 0)
        assert label_divergence(labels, ref) == pytest.approx(expect, abs=1e-12)


class TestDiversity:
    def test_full_coverage_is_infinite(self, rng):
        emb = rng.standard_normal((8, 2))
        assert diversity(list(range(8)), emb) == float("inf")

    def test_two_point_line(self):
        emb = np.asarray([[0.0], [2.0]])
        assert diversity([0], emb) == pytest.approx(1.0, abs=1e-12)

    def test_translation_invariance(self, rng):
        emb = rng.standard_normal((30, 4))
        sel = [1, 7, 19]
        shifted = emb + np.asarray([5.0, -3.0, 0.25, 100.0])
        assert diversity(sel, emb) == pytest.approx(diversity(sel, shifted), rel=1e-9)

    def test_moving_selection_onto_far_point_increases_diversity(self):
        # pool: cluster at 0, far point at 10; selection at 0 vs at the far point
        emb = np.asarray([[0.0], [0.1], [10.0], [0.05]])
        near = diversity([0], emb)
        covering = diversity([0, 2], emb)
        assert covering > near

    def test_matches_hand_formula(self, rng):
        emb = rng.standard_normal((12, 3))
        sel = [2, 9]
        mins = [min(np.linalg.norm(emb[i] - emb[j]) for j in sel) for i in range(12)]
        expect = 1.0 / np.mean(mins)
        assert diversity(sel, emb) == pytest.approx(expect, rel=1e-12)

    def test_empty_selection_rejected(self, rng):
        with pytest.raises(ParamsInvalid):
            diversity([], rng.standard_normal((5, 2)))


class TestRepresentativeness:
    def test_identical_embeddings_score_one(self):
        emb = np.tile(np.asarray([1.0, 2.0, 3.0]), (12, 1))
        out = representativeness([0, 5], emb, k=10)
        np.testing.assert_allclose(out, 1.0, atol=1e-12)

    def test_orthogonal_point_scores_zero(self):
        emb = np.zeros((12, 2))
        emb[0] = [1.0, 0.0]
        emb[1:] = [0.0, 1.0]
        out = representativeness([0], emb, k=10)
        assert out[0] == pytest.approx(0.0, abs=1e-12)

    def test_matches_cosine_sort_oracle(self, rng):
        emb = rng.standard_normal((12, 4))
        sel = [3, 8]
        out = representativeness(sel, emb, k=10)
        for pos, s in enumerate(sel):
            cos = sorted(
                (float(np.dot(emb[s], emb[j]) /
                       (np.linalg.norm(emb[s]) * np.linalg.norm(emb[j]))), -j)
                for j in range(12) if j != s)
            top = [c for c, _ in cos[::-1][:10]]
            assert out[pos] == pytest.approx(sum(top) / 10, rel=1e-12)

    def test_zero_vector_rejected(self):
        emb = np.zeros((12, 2))
        emb[1:] = 1.0
        with pytest.raises(ZeroVector):
            representativeness([1], emb, k=10)

    def test_pool_must_exceed_k(self, rng):
        with pytest.raises(ParamsInvalid):
            representativeness([0], rng.standard_normal((10, 2)), k=10)

    def test_values_bounded_by_unit_interval(self, rng):
        emb = rng.standard_normal((40, 5))
        out = representativeness(list(range(10)), emb, k=10)
        assert (out >= -1.0 - 1e-12).all()
        assert (out <= 1.0 + 1e-12).all()
