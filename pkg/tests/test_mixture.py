"""
Tests for the GMM posterior and objectives, and the zero-temperature MSN limit
"""
import numpy as np
import pytest
from scipy.special import logsumexp, softmax
from scipy.stats import multivariate_normal

from prior_lab.core.exceptions import (
    AssignmentTieError,
    DimensionMismatchError,
    InvalidDistributionError,
    NormalizationError,
)
from prior_lab.services.distributions import ProbVector
from prior_lab.services.losses import pmsn_terms
from prior_lab.services.mixture import (
    GmmModel,
    gmm_log_posteriors,
    gmm_objective,
    gmm_posterior,
    hard_assignments,
    msn_zero_temp_limit,
    scaled_msn_loss,
    simplified_objective,
    temperature_posteriors,
)

SIGMAS = (1.0, 0.3, 0.1, 0.03, 0.01, 0.003, 0.001)
UNIFORM_LIMIT = 0.75 * np.log(1.5) + 0.25 * np.log(0.5)


def bayes_posterior(model: GmmModel, x: np.ndarray) -> np.ndarray:
    log_joint = np.array(
        [
            multivariate_normal.logpdf(x, mean=model.W[:, k], cov=model.sigma * np.eye(model.d))
            + np.log(model.prior[k])
            for k in range(model.K)
        ]
    )
    return np.exp(log_joint - logsumexp(log_joint))


def unit_columns(M):
    return M / np.linalg.norm(M, axis=0, keepdims=True)


class TestPosterior:
    def test_symmetric_point(self):
        model = GmmModel(np.array([[1.0, -1.0]]), ProbVector.uniform(2))
        np.testing.assert_allclose(gmm_posterior(model, [0.0]).probs, [0.5, 0.5], atol=1e-15)

    def test_separation_limit(self):
        model = GmmModel(np.array([[0.0, 100.0]]), ProbVector.uniform(2))
        assert gmm_posterior(model, [0.0])[0] == pytest.approx(1.0, abs=1e-12)

    def test_one_dimensional_bayes_value(self):
        model = GmmModel(np.array([[0.0, 2.0]]), ProbVector.uniform(2), sigma=1.0)
        weights = np.exp(-0.5 * (1.5 - np.array([0.0, 2.0])) ** 2)
        np.testing.assert_allclose(gmm_posterior(model, [1.5]).probs, weights / weights.sum(), atol=1e-12)

    def test_matches_bayes_rule(self, rng):
        worst = 0.0
        for _ in range(500):
            d, K = int(rng.integers(1, 6)), int(rng.integers(1, 7))
            model = GmmModel(
                W=2.0 * rng.standard_normal((d, K)),
                prior=ProbVector.from_unnormalized(rng.dirichlet(np.ones(K)) + 1e-3),
                sigma=float(rng.uniform(0.2, 3.0)),
            )
            x = 2.0 * rng.standard_normal(d)
            worst = max(worst, float(np.max(np.abs(gmm_posterior(model, x).probs - bayes_posterior(model, x)))))
        assert worst < 1e-10

    def test_zero_prior_entry_gets_zero_posterior(self):
        model = GmmModel(np.array([[0.0, 1.0]]), ProbVector([1.0, 0.0]))
        np.testing.assert_array_equal(gmm_posterior(model, [1.0]).probs, [1.0, 0.0])

    def test_prior_length_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            GmmModel(np.zeros((2, 3)), ProbVector.uniform(2))

    def test_non_finite_point(self):
        model = GmmModel(np.array([[0.0, 1.0]]), ProbVector.uniform(2))
        with pytest.raises(DimensionMismatchError):
            gmm_posterior(model, [np.nan])

    def test_temperature_posteriors_are_uniform_prior_gmm(self, rng):
        X, W = rng.standard_normal((5, 3)), rng.standard_normal((3, 4))
        model = GmmModel(W, ProbVector.uniform(4), sigma=0.5)
        np.testing.assert_allclose(temperature_posteriors(X, W, 0.5), np.exp(gmm_log_posteriors(model, X)))


class TestObjectives:
    def test_log_det_vanishes_at_unit_sigma(self, rng):
        X, W = rng.standard_normal((4, 2)), rng.standard_normal((2, 3))
        prior = ProbVector.uniform(3)
        base = gmm_objective(GmmModel(W, prior, 1.0), X)
        # same distances and posteriors at sigma = 1: only the explicit terms
        post = np.exp(gmm_log_posteriors(GmmModel(W, prior, 1.0), X))
        distances = ((X[:, :, None] - W[None, :, :]) ** 2).sum(axis=1)
        kl = np.sum(post * np.log(post / prior.probs))
        assert base == pytest.approx(0.5 * np.sum(post * distances) + kl, abs=1e-12)

    def test_collapsed_points_with_one_hot_prior(self):
        X = np.zeros((3, 1))
        model = GmmModel(np.array([[0.0, 50.0]]), ProbVector([1.0, 0.0]))
        assert gmm_objective(model, X) == pytest.approx(0.0, abs=1e-12)

    def test_two_point_instance_by_hand(self):
        X = np.array([[0.0], [1.0]])
        W = np.array([[0.0, 2.0]])
        prior = ProbVector([0.75, 0.25])
        sigma = 2.0
        model = GmmModel(W, prior, sigma)

        expected = 0.0
        for x in X[:, 0]:
            sq = (x - W[0]) ** 2
            weights = prior.probs * np.exp(-sq / (2 * sigma))
            p = weights / weights.sum()
            expected += np.sum(p * sq) / (2 * sigma) + np.sum(p * np.log(p / prior.probs))
        expected += 2 * 2 * 1 * np.log(sigma)
        assert gmm_objective(model, X) == pytest.approx(expected, abs=1e-12)

    def test_simplified_differs_by_w_independent_constant(self, rng):
        X = rng.standard_normal((6, 3))
        X /= np.linalg.norm(X, axis=1, keepdims=True)
        gaps = []
        for _ in range(10):
            model = GmmModel(unit_columns(rng.standard_normal((3, 4))), ProbVector.uniform(4))
            gaps.append(gmm_objective(model, X) - simplified_objective(model, X))
        assert np.ptp(gaps) < 1e-9

    def test_simplified_single_point_at_centroid(self):
        model = GmmModel(np.array([[1.0], [0.0]]), ProbVector.uniform(1))
        assert simplified_objective(model, np.array([[1.0, 0.0]])) == pytest.approx(0.0, abs=1e-15)

    def test_simplified_antipodal(self):
        model = GmmModel(np.array([[1.0, -1.0], [0.0, 0.0]]), ProbVector.uniform(2))
        x = np.array([[0.0, 1.0]])
        # both squared distances are 2
        expected = 0.5 * 0.5 * (2.0 + 2.0) - np.log(2)
        assert simplified_objective(model, x) == pytest.approx(expected, abs=1e-12)

    def test_simplified_requires_unit_norms(self):
        model = GmmModel(np.array([[2.0, -1.0], [0.0, 0.0]]), ProbVector.uniform(2))
        with pytest.raises(NormalizationError):
            simplified_objective(model, np.array([[0.0, 1.0]]))

    def test_simplified_requires_uniform_prior(self):
        model = GmmModel(np.array([[1.0, -1.0], [0.0, 0.0]]), ProbVector([0.6, 0.4]))
        with pytest.raises(InvalidDistributionError):
            simplified_objective(model, np.array([[0.0, 1.0]]))


class TestZeroTemperature:
    def test_balanced_fixture_is_zero(self):
        X = np.array([[-1.0], [1.0]])
        W = np.array([[-1.0, 1.0]])
        limit = msn_zero_temp_limit(X, X, W, ProbVector.uniform(2), lam=1.0)
        assert limit.value == pytest.approx(0.0, abs=1e-15)

    def test_uniform_prior_limit(self, zero_temp_fixture):
        X, W = zero_temp_fixture
        limit = msn_zero_temp_limit(X, X, W, ProbVector.uniform(2), lam=1.0)
        assert limit.value == pytest.approx(0.130812, abs=1e-6)
        assert limit.value == pytest.approx(UNIFORM_LIMIT, abs=1e-12)
        assert limit.kmeans_term == 0.0

    def test_lambda_scales_prior_term(self, zero_temp_fixture):
        X, W = zero_temp_fixture
        limit = msn_zero_temp_limit(X, X, W, ProbVector.uniform(2), lam=3.0)
        assert limit.value == pytest.approx(3.0 * UNIFORM_LIMIT, abs=1e-12)

    def test_matching_prior_is_zero(self, zero_temp_fixture):
        X, W = zero_temp_fixture
        limit = msn_zero_temp_limit(X, X, W, ProbVector([0.75, 0.25]), lam=1.0)
        assert limit.value == pytest.approx(0.0, abs=1e-15)

    def test_scaled_loss_converges_monotonically(self, zero_temp_fixture):
        X, W = zero_temp_fixture
        uniform = ProbVector.uniform(2)
        limit = msn_zero_temp_limit(X, X, W, uniform, lam=1.0).sigma_limit
        deviations = [abs(scaled_msn_loss(X, X, W, uniform, 1.0, s) - limit) for s in SIGMAS]
        assert all(b <= a + 1e-15 for a, b in zip(deviations, deviations[1:]))
        assert deviations[-1] < 1e-3

    def test_margin_term_with_perturbed_anchors(self):
        W = np.array([[-10.0, 10.0]])
        positives = np.array([[-10.0], [-9.0], [9.5], [10.0]])
        anchors = positives + np.array([[0.5], [-0.5], [0.25], [-0.25]])
        limit = msn_zero_temp_limit(anchors, positives, W, ProbVector.uniform(2), lam=1.0)
        # anchors keep their positive's nearest centroid: no margin, balanced masses
        assert limit.margin_term == 0.0
        assert limit.sigma_limit == pytest.approx(0.0, abs=1e-15)
        expected_kmeans = 0.5 ** 2 + 0.5 ** 2 + 0.25 ** 2 + 0.25 ** 2
        assert limit.kmeans_term == pytest.approx(expected_kmeans)
        deviation = abs(scaled_msn_loss(anchors, positives, W, ProbVector.uniform(2), 1.0, 1e-3) - limit.sigma_limit)
        assert deviation < 1e-3

    def test_limits_agree_when_anchors_sit_on_centroids(self, zero_temp_fixture):
        X, W = zero_temp_fixture
        limit = msn_zero_temp_limit(X, X, W, ProbVector.uniform(2), lam=2.0)
        assert limit.kmeans_term == 0.0
        assert limit.value == pytest.approx(limit.sigma_limit, abs=1e-15)

    def test_scaled_loss_matches_losses_module(self, rng):
        # centroids of equal norm: distance and dot-product posteriors coincide
        angles = rng.uniform(0.0, 2.0 * np.pi, size=3)
        W = 2.0 * np.stack([np.cos(angles), np.sin(angles)])
        X = rng.standard_normal((12, 2))
        positives = X + 0.05 * rng.standard_normal(X.shape)
        prior = ProbVector([0.5, 0.3, 0.2])
        sigma, lam = 0.7, 1.5

        targets = np.eye(3)[hard_assignments(positives, W)]
        anchors = softmax(X @ W / sigma, axis=1)
        terms = pmsn_terms(anchors, targets, prior)
        expected = sigma * terms.cross_entropy + lam * terms.prior_kl
        assert scaled_msn_loss(X, positives, W, prior, lam, sigma) == pytest.approx(expected, rel=1e-10)

    def test_tie_rejected(self):
        W = np.array([[-1.0, 1.0]])
        with pytest.raises(AssignmentTieError) as exc:
            hard_assignments(np.array([[0.5], [0.0]]), W)
        assert exc.value.sample == 1
        with pytest.raises(AssignmentTieError):
            msn_zero_temp_limit(np.zeros((1, 1)), np.zeros((1, 1)), W, ProbVector.uniform(2), 1.0)
