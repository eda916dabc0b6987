"""
Tests for Sinkhorn projection and cardinality-constrained K-means
"""
import numpy as np
import pytest

from prior_lab.core.exceptions import (
    ConstraintInfeasibleError,
    DimensionMismatchError,
    InvalidDistributionError,
    SinkhornConvergenceError,
)
from prior_lab.services.clustering import Centroids, Partition, lloyd
from prior_lab.services.transport import (
    SoftAssignment,
    balanced_cardinalities,
    constrained_brute_force,
    constrained_kmeans_objective,
    round_to_cardinalities,
    sinkhorn_project,
    swav_assignment,
    swav_loss,
)


class TestSinkhorn:
    @pytest.mark.parametrize("K,N", [(2, 3), (4, 4), (3, 10)])
    def test_uniform_matrix_unchanged(self, K, N):
        P = np.full((K, N), 1.0 / K)
        np.testing.assert_array_equal(sinkhorn_project(P).P, P)

    def test_feasible_matrix_unchanged(self):
        P = np.array([[0.9, 0.1], [0.1, 0.9]])
        np.testing.assert_array_equal(sinkhorn_project(P).P, P)

    def test_random_projection_satisfies_constraints(self, rng):
        Q = sinkhorn_project(rng.random((2, 4)) + 0.01)
        np.testing.assert_allclose(Q.row_sums(), [2.0, 2.0], atol=1e-8)
        np.testing.assert_allclose(Q.P.sum(axis=0), np.ones(4), atol=1e-8)

    def test_random_matrices_feasible_positive_idempotent(self, rng):
        for _ in range(100):
            K = int(rng.integers(1, 9))
            N = int(rng.integers(1, 65))
            Q = sinkhorn_project(rng.random((K, N)) + 0.01)
            assert Q.violation() < 1e-8
            assert np.all(Q.P > 0)
            assert np.max(np.abs(sinkhorn_project(Q.P).P - Q.P)) < 1e-8

    def test_row_target_when_k_does_not_divide_n(self, rng):
        Q = sinkhorn_project(rng.random((3, 7)) + 0.1)
        np.testing.assert_allclose(Q.row_sums(), np.full(3, 7 / 3), atol=1e-8)

    def test_log_domain_for_tiny_entries(self):
        P = np.array([[1.0, 1e-40, 0.3], [1e-40, 1.0, 0.6]])
        Q = sinkhorn_project(P)
        assert Q.violation() < 1e-8
        np.testing.assert_allclose(Q.row_sums(), [1.5, 1.5], atol=1e-8)

    def test_rejects_zero_entries(self):
        with pytest.raises(InvalidDistributionError):
            sinkhorn_project(np.array([[1.0, 0.0], [0.5, 0.5]]))

    def test_reports_non_convergence(self, rng):
        with pytest.raises(SinkhornConvergenceError) as exc:
            sinkhorn_project(rng.random((3, 5)) + 0.01, max_iter=1, tol=1e-15)
        assert exc.value.iterations == 1
        assert exc.value.residual > 1e-15


class TestSoftAssignment:
    def test_columns_must_sum_to_one(self):
        with pytest.raises(InvalidDistributionError):
            SoftAssignment(np.array([[0.5, 0.5], [0.4, 0.5]]))

    def test_shape(self):
        soft = SoftAssignment(np.full((2, 3), 0.5))
        assert (soft.K, soft.N) == (2, 3)


class TestConstrainedObjective:
    def test_balanced_partition(self, four_points):
        X, partition = four_points
        assert constrained_kmeans_objective(X, partition, [2, 2]) == pytest.approx(4.0)

    def test_violation_names_cluster(self, four_points):
        X, partition = four_points
        with pytest.raises(ConstraintInfeasibleError) as exc:
            constrained_kmeans_objective(X, partition, [3, 1])
        assert exc.value.cluster == 0
        assert (exc.value.expected, exc.value.actual) == (3, 2)

    def test_single_cluster(self, four_points):
        X, _ = four_points
        # centroid (5, 1): four squared distances of 26
        assert constrained_kmeans_objective(X, Partition([0, 0, 0, 0], 1), [4]) == pytest.approx(104.0)

    def test_cardinalities_must_sum_to_n(self, four_points):
        X, partition = four_points
        with pytest.raises(DimensionMismatchError):
            constrained_kmeans_objective(X, partition, [2, 1])

    def test_balanced_cardinalities(self):
        np.testing.assert_array_equal(balanced_cardinalities(7, 3), [3, 2, 2])
        np.testing.assert_array_equal(balanced_cardinalities(6, 2), [3, 3])

    def test_constrained_brute_force(self, four_points):
        X, _ = four_points
        partition, value = constrained_brute_force(X, [2, 2])
        assert value == pytest.approx(4.0)
        np.testing.assert_array_equal(partition.cluster_sizes(), [2, 2])


class TestSwav:
    def test_loss_is_entropy_when_anchor_matches(self, rng):
        Q = sinkhorn_project(rng.random((3, 6)) + 0.05)
        expected = float(np.mean(-np.sum(Q.P * np.log(Q.P), axis=0)))
        assert swav_loss(Q, Q.P) == pytest.approx(expected, abs=1e-12)

    def test_uniform_columns(self):
        uniform = SoftAssignment(np.full((2, 2), 0.5))
        assert swav_loss(uniform, np.full((2, 2), 0.5)) == pytest.approx(np.log(2))

    def test_near_one_hot_agreement(self):
        eps = 1e-12
        target = np.array([[1 - eps, eps], [eps, 1 - eps]])
        assert swav_loss(SoftAssignment(target), target) < 1e-9

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            swav_loss(SoftAssignment(np.full((2, 2), 0.5)), np.full((2, 3), 0.5))

    def test_round_to_cardinalities(self):
        P = np.array([[0.9, 0.8, 0.7, 0.1], [0.1, 0.2, 0.3, 0.9]])
        partition = round_to_cardinalities(P, [2, 2])
        np.testing.assert_array_equal(partition.assignment, [0, 0, 1, 1])

    def test_assignment_is_balanced_and_bounded_by_optimum(self, rng):
        for _ in range(20):
            X = rng.standard_normal((8, 2))
            sizes = balanced_cardinalities(8, 2)
            _, optimum = constrained_brute_force(X, sizes)
            rounded, soft = swav_assignment(X, lloyd(X, 2, seed=1).centroids, sigma=1.0)
            np.testing.assert_array_equal(rounded.cluster_sizes(), sizes)
            assert soft.violation() < 1e-8
            assert constrained_kmeans_objective(X, rounded, sizes) >= optimum - 1e-9

    def test_small_sigma_stays_finite(self):
        X = np.array([[-5.0], [-4.0], [4.0], [5.0]])
        rounded, soft = swav_assignment(X, Centroids(np.array([[-4.5], [4.5]])), sigma=1e-3)
        assert np.all(np.isfinite(soft.P))
        assert rounded.assignment[0] == rounded.assignment[1] != rounded.assignment[2]
