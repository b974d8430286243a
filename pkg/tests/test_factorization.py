"""Nonnegative stacking and multiplicative-update factorization."""

import numpy as np
import pytest

from rulebox import (
    ContributionMatrix,
    RankTooLarge,
    embed_explanations,
    nmf,
    stack_nonnegative,
)


def signed_matrix(rows=6, cols=8, seed=0):
    rng = np.random.default_rng(seed)
    values = rng.normal(size=(rows, cols))
    labels = rng.random(cols) > 0.5
    return ContributionMatrix(values=values, target_category=1, labels=labels)


class TestStacking:
    def test_reconstruction_is_exact(self):
        matrix = signed_matrix()
        stacked = stack_nonnegative(matrix)
        # exact equality, not allclose: the split never rounds
        np.testing.assert_array_equal(stacked.original(), matrix.values)

    def test_nonnegative_and_complementary(self):
        matrix = signed_matrix()
        stacked = stack_nonnegative(matrix)
        assert (stacked.values >= 0).all()
        # an entry lives in at most one half
        product = stacked.positive_part() * stacked.negative_part()
        np.testing.assert_array_equal(product, np.zeros_like(product))

    def test_shape_doubles_rows(self):
        matrix = signed_matrix(rows=5, cols=3)
        stacked = stack_nonnegative(matrix)
        assert stacked.values.shape == (10, 3)
        assert stacked.num_features == 5

    def test_labels_carried_over(self):
        matrix = signed_matrix()
        stacked = stack_nonnegative(matrix)
        np.testing.assert_array_equal(stacked.labels, matrix.labels)
        assert stacked.target_category == matrix.target_category


class TestNMF:
    def test_objective_monotone_nonincreasing(self):
        rng = np.random.default_rng(3)
        V = rng.random((12, 20))
        result = nmf(V, 4, seed=0)
        history = np.array(result.objective_history)
        assert np.all(np.diff(history) <= 1e-10)
        assert result.objective == history[-1]

    def test_monotone_across_seeds_and_ranks(self):
        rng = np.random.default_rng(4)
        V = rng.random((9, 7))
        for seed in range(3):
            for rank in (1, 3, 7):
                history = np.array(nmf(V, rank, seed=seed).objective_history)
                assert np.all(np.diff(history) <= 1e-10)

    def test_rank_one_exact_recovery(self):
        # V is exactly rank 1, so the relative residual must vanish
        rng = np.random.default_rng(5)
        w = rng.random(10) + 0.1
        h = rng.random(15) + 0.1
        V = np.outer(w, h)
        result = nmf(V, 1, max_iters=2000, tol=1e-14, seed=0)
        assert result.objective / np.linalg.norm(V) < 1e-6

    def test_factors_nonnegative(self):
        rng = np.random.default_rng(6)
        V = rng.random((8, 8))
        result = nmf(V, 3, seed=1)
        assert (result.W >= 0).all()
        assert (result.H >= 0).all()
        assert result.rank == 3

    def test_rank_too_large(self):
        V = np.ones((4, 6))
        with pytest.raises(RankTooLarge):
            nmf(V, 5)

    def test_rank_lower_bound(self):
        with pytest.raises(ValueError):
            nmf(np.ones((4, 4)), 0)

    def test_rejects_negative_entries(self):
        with pytest.raises(ValueError):
            nmf(np.array([[1.0, -0.5]]), 1)

    def test_zero_matrix_short_circuits(self):
        result = nmf(np.zeros((5, 4)), 2)
        assert result.objective == 0.0
        np.testing.assert_array_equal(result.W, np.zeros((5, 2)))
        np.testing.assert_array_equal(result.H, np.zeros((2, 4)))
        assert result.converged

    def test_deterministic(self):
        rng = np.random.default_rng(7)
        V = rng.random((10, 10))
        a = nmf(V, 4, seed=5)
        b = nmf(V, 4, seed=5)
        np.testing.assert_array_equal(a.W, b.W)
        np.testing.assert_array_equal(a.H, b.H)

    def test_duplicate_columns_get_identical_embeddings(self):
        # two instances with the same contribution column must land on the
        # same point of the constraint space
        rng = np.random.default_rng(8)
        V = rng.random((6, 5))
        V[:, 3] = V[:, 1]
        result = nmf(V, 3, seed=0)
        np.testing.assert_allclose(result.H[:, 3], result.H[:, 1],
                                   rtol=1e-12, atol=1e-12)

    def test_higher_rank_fits_no_worse(self):
        rng = np.random.default_rng(9)
        V = rng.random((10, 12))
        objectives = [nmf(V, rank, max_iters=2000, tol=1e-12, seed=0).objective
                      for rank in (1, 2, 4)]
        assert objectives[0] >= objectives[1] >= objectives[2] * 0.99


class TestEmbedExplanations:
    def test_pipeline_glue(self):
        matrix = signed_matrix(rows=5, cols=9)
        stacked, factorization = embed_explanations(matrix, rank=3, seed=0)
        assert stacked.values.shape == (10, 9)
        assert factorization.W.shape == (10, 3)
        assert factorization.H.shape == (3, 9)
        # the product approximates the stacked matrix no worse than the
        # starting point recorded in the history
        assert factorization.objective <= factorization.objective_history[0]
