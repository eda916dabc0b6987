"""
Isotropic Gaussian mixtures with an arbitrary cluster prior, and the
zero-temperature limit of the MSN loss.
"""
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import log_softmax, rel_entr, softmax, xlogy

from prior_lab.core.exceptions import (
    AssignmentTieError,
    DimensionMismatchError,
    InvalidDistributionError,
    NormalizationError,
)
from prior_lab.services.clustering import as_data_matrix
from prior_lab.services.distributions import ProbVector, kl_divergence
from prior_lab.services.losses import pmsn_terms_from_logits

NORM_TOL = 1e-9


@dataclass(frozen=True)
class GmmModel:
    """K isotropic Gaussians N(mu_k, sigma I); W holds the means as columns"""
    W: np.ndarray
    prior: ProbVector
    sigma: float = 1.0

    def __post_init__(self):
        W = np.array(self.W, dtype=float)
        if W.ndim != 2 or W.size == 0 or not np.all(np.isfinite(W)):
            raise DimensionMismatchError(f"W must be a finite (d, K) matrix, got shape {W.shape}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        prior = self.prior if isinstance(self.prior, ProbVector) else ProbVector(self.prior)
        if prior.K != W.shape[1]:
            raise DimensionMismatchError(f"prior has {prior.K} entries for {W.shape[1]} centroids")
        W.setflags(write=False)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "prior", prior)

    @property
    def d(self) -> int:
        return self.W.shape[0]

    @property
    def K(self) -> int:
        return self.W.shape[1]


def _points(model: GmmModel, X) -> np.ndarray:
    X = as_data_matrix(X)
    if X.shape[1] != model.d:
        raise DimensionMismatchError(f"points are {X.shape[1]}-D, centroids {model.d}-D")
    return X


def gmm_log_posteriors(model: GmmModel, X) -> np.ndarray:
    """
    (N, K) log posteriors.

    Logits are (W^T x - ||x||^2 / 2 - diag(W^T W) / 2) / sigma + log(prior),
    which is Bayes' rule for N(mu_k, sigma I) at every sigma.
    """
    X = _points(model, X)
    W = model.W
    quadratic = X @ W - 0.5 * np.sum(X ** 2, axis=1, keepdims=True) - 0.5 * np.sum(W ** 2, axis=0)
    with np.errstate(divide="ignore"):
        log_prior = np.log(model.prior.probs)
    return log_softmax(quadratic / model.sigma + log_prior, axis=1)


def gmm_posteriors(model: GmmModel, X) -> np.ndarray:
    return np.exp(gmm_log_posteriors(model, X))


def gmm_posterior(model: GmmModel, x) -> ProbVector:
    """Posterior over clusters for a single point"""
    x = np.asarray(x, dtype=float).reshape(1, -1)
    return ProbVector.from_unnormalized(gmm_posteriors(model, x)[0])


def gmm_objective(model: GmmModel, X) -> float:
    """
    sum_x sum_k (p_k(x) / 2) ||x - mu_k||^2 / sigma
        + N * sum_k log det(sigma I)
        + sum_x KL(p(x) || prior)
    """
    X = _points(model, X)
    post = gmm_posteriors(model, X)
    N = X.shape[0]

    distances = cdist(X, model.W.T, "sqeuclidean")
    distance_term = float(np.sum(post * distances) / (2.0 * model.sigma))
    log_det_term = N * model.K * model.d * float(np.log(model.sigma))
    kl_term = float(np.sum(rel_entr(post, model.prior.probs[None, :])))
    return distance_term + log_det_term + kl_term


def simplified_objective(model: GmmModel, X) -> float:
    """
    Unit-sphere, uniform-prior, sigma = 1 objective:
    sum_x sum_k (p_k(x) / 2) ||x - mu_k||^2 - sum_x H(p(x)), p(x) = softmax(W^T x)
    """
    X = _points(model, X)
    if not model.prior.allclose(ProbVector.uniform(model.K)):
        raise InvalidDistributionError("simplified objective assumes a uniform prior")
    if model.sigma != 1.0:
        raise ValueError(f"simplified objective assumes sigma = 1, got {model.sigma}")
    for what, norms in (("data rows", np.linalg.norm(X, axis=1)), ("centroid columns", np.linalg.norm(model.W, axis=0))):
        worst = float(np.max(np.abs(norms - 1.0)))
        if worst > NORM_TOL:
            raise NormalizationError(f"{what} must be unit-norm (off by {worst:.3e})")

    post = softmax(X @ model.W, axis=1)
    distances = cdist(X, model.W.T, "sqeuclidean")
    entropies = -np.sum(xlogy(post, post), axis=1)
    return float(np.sum(post * distances) / 2.0 - np.sum(entropies))


def temperature_posteriors(X, W, sigma: float) -> np.ndarray:
    """softmax(-||x - mu_k||^2 / 2 sigma): the uniform-prior mixture posterior"""
    model = GmmModel(W, ProbVector.uniform(np.asarray(W).shape[1]), sigma)
    return gmm_posteriors(model, X)


def hard_assignments(X, W) -> np.ndarray:
    """argmin_k ||x - mu_k||; equidistant points raise AssignmentTieError"""
    X = as_data_matrix(X)
    W = np.asarray(W, dtype=float)
    distances = cdist(X, W.T, "sqeuclidean")
    nearest = distances.min(axis=1, keepdims=True)
    ties = np.flatnonzero(np.sum(distances == nearest, axis=1) > 1)
    if ties.size:
        n = int(ties[0])
        raise AssignmentTieError(n, tuple(int(k) for k in np.flatnonzero(distances[n] == nearest[n])))
    return distances.argmin(axis=1)


@dataclass(frozen=True)
class ZeroTempLimit:
    kmeans_term: float  # sum_n ||x_n - mu_k(n)||^2, k(n) picked by the positive view
    margin_term: float  # mean over n of (||x_n - mu_k(n)||^2 - min_c ||x_n - mu_c||^2) / 2
    prior_term: float  # KL(N_k / N || prior)
    anchor_prior_term: float  # KL of the limiting anchor cluster masses to the prior
    lam: float

    @property
    def value(self) -> float:
        """K-means cost plus the weighted cluster-mass penalty"""
        return self.kmeans_term + self.lam * self.prior_term

    @property
    def sigma_limit(self) -> float:
        """
        Limit of scaled_msn_loss as sigma -> 0.

        Not on the scale of `value`: the K-means part here is a mean half
        margin, which vanishes whenever each anchor shares its positive's
        nearest centroid. The two agree only when, in addition, every
        anchor sits on its centroid (kmeans_term == 0).
        """
        return self.margin_term + self.lam * self.anchor_prior_term


def _check_pair(X_anchor, X_positive, W):
    X_anchor = as_data_matrix(X_anchor)
    X_positive = as_data_matrix(X_positive)
    W = np.asarray(W, dtype=float)
    if X_anchor.shape != X_positive.shape:
        raise DimensionMismatchError(f"anchor {X_anchor.shape} and positive {X_positive.shape} views differ")
    if W.ndim != 2 or W.shape[0] != X_anchor.shape[1]:
        raise DimensionMismatchError(f"W must be ({X_anchor.shape[1]}, K), got {W.shape}")
    return X_anchor, X_positive, W


def msn_zero_temp_limit(
    X_anchor,
    X_positive,
    W,
    prior: Union[ProbVector, np.ndarray],
    lam: float,
) -> ZeroTempLimit:
    """
    Zero-temperature form of the MSN loss.

    Clusters X_k are defined by the positive view's nearest centroid; the
    cluster masses N_k / N are compared with the prior.
    """
    X_anchor, X_positive, W = _check_pair(X_anchor, X_positive, W)
    prior = prior if isinstance(prior, ProbVector) else ProbVector(prior)
    if prior.K != W.shape[1]:
        raise DimensionMismatchError(f"prior has {prior.K} entries for {W.shape[1]} centroids")

    assign = hard_assignments(X_positive, W)
    N = assign.size
    masses = np.bincount(assign, minlength=W.shape[1]) / N

    anchor_sq = cdist(X_anchor, W.T, "sqeuclidean")
    own = anchor_sq[np.arange(N), assign]
    nearest = anchor_sq == anchor_sq.min(axis=1, keepdims=True)
    anchor_masses = np.mean(nearest / nearest.sum(axis=1, keepdims=True), axis=0)
    return ZeroTempLimit(
        kmeans_term=float(np.sum(own)),
        margin_term=float(np.mean(0.5 * (own - anchor_sq.min(axis=1)))),
        prior_term=kl_divergence(masses, prior),
        anchor_prior_term=kl_divergence(ProbVector.from_unnormalized(anchor_masses), prior),
        lam=lam,
    )


def scaled_msn_loss(
    X_anchor,
    X_positive,
    W,
    prior: Union[ProbVector, np.ndarray],
    lam: float,
    sigma: float,
) -> float:
    """
    sigma * mean H(p_n+, p_n) + lambda * KL(p_bar || prior): the PMSN terms
    of the losses module with anchor logits -||x - mu_k||^2 / 2 sigma and
    targets at their zero-temperature limit (one-hot on the positive view's
    nearest centroid).

    For centroids of equal norm the distance logits differ from x . mu_k / sigma
    by a per-row constant, so these anchor posteriors are the dot-product
    posteriors the losses module uses on normalized embeddings.
    """
    X_anchor, X_positive, W = _check_pair(X_anchor, X_positive, W)
    prior = prior if isinstance(prior, ProbVector) else ProbVector(prior)
    if prior.K != W.shape[1]:
        raise DimensionMismatchError(f"prior has {prior.K} entries for {W.shape[1]} centroids")

    targets = np.eye(W.shape[1])[hard_assignments(X_positive, W)]
    logits = -cdist(X_anchor, W.T, "sqeuclidean") / (2.0 * sigma)
    terms = pmsn_terms_from_logits(logits, targets, prior)
    return sigma * terms.cross_entropy + lam * terms.prior_kl
