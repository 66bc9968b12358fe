import numpy as np
import pytest

from coldselect.errors import BudgetExceedsPool, LabeledPoolInvalid
from coldselect.partition import init_selection, kmeans
from coldselect.propagation import UncertaintyVectors

import oracle


def wcss(emb, part):
    x = emb.astype(np.float64)
    return float(sum(
        np.sum((x[members] - part.centroids[i]) ** 2)
        for i, members in enumerate(part.cluster_members)))


def unc_from(values):
    v = np.asarray(values, dtype=np.float64)
    return UncertaintyVectors(raw=v, propagated=v)


class TestKmeans:
    def test_separable_clouds_split_exactly(self, rng):
        a = rng.standard_normal((30, 2)) + [0, 0]
        b = rng.standard_normal((30, 2)) + [50, 50]
        emb = np.vstack([a, b])
        part = kmeans(emb, 2, seed=4)
        first_half = set(part.assignment[:30])
        second_half = set(part.assignment[30:])
        assert len(first_half) == 1 and len(second_half) == 1
        assert first_half != second_half

    def test_budget_equals_pool_gives_singletons(self, rng):
        emb = rng.standard_normal((7, 3))
        part = kmeans(emb, 7, seed=0)
        assert all(len(m) == 1 for m in part.cluster_members)
        for i, members in enumerate(part.cluster_members):
            np.testing.assert_allclose(part.centroids[i], emb[members[0]], atol=0)

    def test_same_seed_bit_identical(self, rng):
        emb = rng.standard_normal((80, 4))
        a = kmeans(emb, 5, seed=99)
        b = kmeans(emb, 5, seed=99)
        assert a.assignment.tobytes() == b.assignment.tobytes()
        assert a.centroids.tobytes() == b.centroids.tobytes()

    def test_worker_count_does_not_change_bytes(self, rng):
        emb = rng.standard_normal((300, 8))
        a = kmeans(emb, 6, seed=1, workers=1)
        b = kmeans(emb, 6, seed=1, workers=4)
        assert a.assignment.tobytes() == b.assignment.tobytes()
        assert a.centroids.tobytes() == b.centroids.tobytes()

    def test_budget_exceeds_pool(self, rng):
        with pytest.raises(BudgetExceedsPool):
            kmeans(rng.standard_normal((4, 2)), 5, seed=0)

    def test_clusters_nonempty_and_cover_pool(self, rng):
        emb = rng.standard_normal((100, 3))
        part = kmeans(emb, 12, seed=3)
        sizes = [len(m) for m in part.cluster_members]
        assert all(s >= 1 for s in sizes)
        assert sum(sizes) == 100

    def test_centroids_equal_member_means(self, rng):
        emb = rng.standard_normal((60, 5))
        part = kmeans(emb, 6, seed=8)
        for i, members in enumerate(part.cluster_members):
            np.testing.assert_allclose(
                part.centroids[i], emb[members].astype(np.float64).mean(axis=0), atol=1e-6)

    def test_duplicate_heavy_pool_repairs_empty_clusters(self):
        emb = np.asarray([[0.0], [0.0], [0.0], [0.0], [10.0]])
        part = kmeans(emb, 3, seed=0)
        assert all(len(m) >= 1 for m in part.cluster_members)
        assert sum(len(m) for m in part.cluster_members) == 5

    def test_objective_nonincreasing_over_iterations(self, rng):
        emb = rng.standard_normal((120, 4)) * 3
        values = [wcss(emb, kmeans(emb, 6, seed=13, max_iter=t)) for t in range(1, 8)]
        for prev, cur in zip(values, values[1:]):
            assert cur <= prev + 1e-9


class TestInitSelection:
    def test_beta_zero_takes_uncertainty_argmax(self, rng):
        emb = rng.standard_normal((40, 3))
        part = kmeans(emb, 4, seed=2)
        u = rng.random(40)
        state = init_selection(part, unc_from(u), emb, beta=0.0)
        for i, members in enumerate(part.cluster_members):
            assert state.selected[i] == members[np.argmax(u[members])]

    def test_huge_beta_takes_centroid_nearest(self, rng):
        emb = rng.standard_normal((40, 3))
        part = kmeans(emb, 4, seed=2)
        u = rng.random(40)
        state = init_selection(part, unc_from(u), emb, beta=1e9)
        for i, members in enumerate(part.cluster_members):
            d2 = np.sum((emb[members].astype(np.float64) - part.centroids[i]) ** 2, axis=1)
            assert state.selected[i] == members[np.argmin(d2)]

    def test_matches_exhaustive_scan(self, rng):
        emb = rng.standard_normal((25, 2))
        part = kmeans(emb, 5, seed=7)
        u = rng.random(25)
        state = init_selection(part, unc_from(u), emb, beta=0.8)
        cents = oracle.centroids_of(emb, part.assignment, 5)
        expect = oracle.init_of(emb, part.assignment, 5, cents, u, 0.8)
        assert state.selected == expect

    def test_one_selection_per_cluster_all_distinct(self, rng):
        emb = rng.standard_normal((60, 3))
        part = kmeans(emb, 10, seed=5)
        state = init_selection(part, unc_from(rng.random(60)), emb, beta=1.0)
        assert len(state.selected) == 10
        assert len(set(state.selected)) == 10
        for i, q in enumerate(state.selected):
            assert part.assignment[q] == i

    def test_constant_uncertainty_shift_does_not_change_choice(self, rng):
        emb = rng.standard_normal((30, 2))
        part = kmeans(emb, 3, seed=1)
        u = rng.random(30)
        a = init_selection(part, unc_from(u), emb, beta=0.5)
        b = init_selection(part, unc_from(u + 7.25), emb, beta=0.5)
        assert a.selected == b.selected

    def test_labeled_pool_members_are_skipped(self, rng):
        emb = rng.standard_normal((30, 2))
        part = kmeans(emb, 3, seed=1)
        u = rng.random(30)
        free = init_selection(part, unc_from(u), emb, beta=0.0)
        pool = list(free.selected)
        state = init_selection(part, unc_from(u), emb, beta=0.0, labeled_pool=pool)
        assert not set(state.selected) & set(pool)

    def test_fully_labeled_cluster_rejected(self, rng):
        emb = rng.standard_normal((12, 2))
        part = kmeans(emb, 3, seed=0)
        pool = [int(j) for j in part.cluster_members[1]]
        with pytest.raises(LabeledPoolInvalid):
            init_selection(part, unc_from(rng.random(12)), emb, beta=0.0,
                           labeled_pool=pool)
