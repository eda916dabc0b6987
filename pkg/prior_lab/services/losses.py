"""
Self-supervised losses: simplified VICReg, MSN and PMSN.

MSN regularizes the mean anchor posterior p_bar with -lambda * H(p_bar); PMSN
replaces it with +lambda * KL(p_bar || prior). With a uniform prior the two
differ by exactly lambda * ln K.

Gradients are analytic and flow through the anchor branch only. Target
posteriors are sharpened and treated as constants.
"""
from dataclasses import dataclass
from typing import Iterable, List, Tuple, Union

import numpy as np
from scipy.special import log_softmax, softmax, xlogy

from prior_lab.config import settings
from prior_lab.core.exceptions import (
    DimensionMismatchError,
    InvalidDistributionError,
    InvalidSimilarityError,
    NormalizationError,
    SupportMismatchError,
)
from prior_lab.schemas.losses import LossConfig, PriorAlignment
from prior_lab.schemas.training import LossKind
from prior_lab.services.clustering import as_data_matrix
from prior_lab.services.distributions import (
    ProbVector,
    build_prior,
    entropy,
    kl_divergence,
)

NORM_TOL = 1e-9


@dataclass(frozen=True)
class SimilarityMatrix:
    """Symmetric 0/1 positive-pair matrix with a zero diagonal"""
    G: np.ndarray

    def __post_init__(self):
        G = np.array(self.G, dtype=float)
        if G.ndim != 2 or G.shape[0] != G.shape[1] or G.shape[0] == 0:
            raise InvalidSimilarityError(f"similarity matrix must be square, got shape {G.shape}")
        if not np.all((G == 0) | (G == 1)):
            raise InvalidSimilarityError("similarity entries must be 0 or 1")
        if np.any(np.diag(G) != 0):
            raise InvalidSimilarityError("similarity matrix must have a zero diagonal")
        if not np.array_equal(G, G.T):
            raise InvalidSimilarityError("similarity matrix must be symmetric")
        G.setflags(write=False)
        object.__setattr__(self, "G", G)

    @classmethod
    def from_pairs(cls, N: int, pairs: Iterable[Tuple[int, int]]) -> "SimilarityMatrix":
        """Mark each (i, j) pair, and its mirror, as positives"""
        G = np.zeros((N, N))
        for i, j in pairs:
            if i == j:
                raise InvalidSimilarityError(f"sample {i} cannot be its own positive")
            G[i, j] = G[j, i] = 1.0
        return cls(G)

    @property
    def N(self) -> int:
        return self.G.shape[0]

    def positives_per_sample(self) -> np.ndarray:
        return self.G.sum(axis=1).astype(np.int64)


def _as_posterior_rows(rows, name: str) -> np.ndarray:
    if isinstance(rows, (list, tuple)) and rows and isinstance(rows[0], ProbVector):
        rows = np.stack([p.probs for p in rows])
    arr = np.array(rows, dtype=float)
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise DimensionMismatchError(f"{name} must be an (N, K) array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise InvalidDistributionError(f"{name} entries must be finite and >= 0")
    worst = float(np.max(np.abs(arr.sum(axis=1) - 1.0)))
    if worst > settings.PROB_TOL:
        raise InvalidDistributionError(f"{name} rows must sum to 1 (off by {worst:.3e})")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PosteriorBatch:
    """Anchor posteriors p_n and target posteriors p_n+ as (N, K) arrays"""
    anchors: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        anchors = _as_posterior_rows(self.anchors, "anchors")
        targets = _as_posterior_rows(self.targets, "targets")
        if anchors.shape != targets.shape:
            raise DimensionMismatchError(
                f"anchors {anchors.shape} and targets {targets.shape} differ"
            )
        object.__setattr__(self, "anchors", anchors)
        object.__setattr__(self, "targets", targets)

    @property
    def N(self) -> int:
        return self.anchors.shape[0]

    @property
    def K(self) -> int:
        return self.anchors.shape[1]

    def mean_anchor(self) -> ProbVector:
        """p_bar, the mean of the anchor posteriors"""
        return ProbVector.from_unnormalized(self.anchors.mean(axis=0))


@dataclass(frozen=True)
class LossTerms:
    cross_entropy: float  # mean H(p_n+, p_n)
    prior_kl: float  # KL(p_bar || prior), after alignment


@dataclass
class LossGradients:
    anchor: np.ndarray  # dLoss / dZ_anchor, (N, d)
    prototypes: np.ndarray  # dLoss / dW, (d, K)
    loss: float


@dataclass(frozen=True)
class CovarianceDecomposition:
    covariance: np.ndarray
    between: np.ndarray  # (1/N) Z^T G Z
    within: np.ndarray  # (1/N) Z^T (I - G) Z
    residual: float
    pairwise_lhs: float  # sum_ij G_ij ||z_i - z_j||^2
    pairwise_rhs: float  # 2 Tr(Z^T (I - G) Z)

    @property
    def pairwise_residual(self) -> float:
        return abs(self.pairwise_lhs - self.pairwise_rhs)

    @property
    def max_residual(self) -> float:
        return max(self.residual, self.pairwise_residual)


def _similarity(G) -> SimilarityMatrix:
    return G if isinstance(G, SimilarityMatrix) else SimilarityMatrix(G)


def vicreg_simplified(Z, G, alpha: float, gamma: float) -> float:
    """
    alpha * ||Cov(Z) - I||_F^2 + (gamma / N) * sum_ij G_ij ||z_i - z_j||^2

    Cov(Z) is the (1/N)-normalized covariance of the rows.
    """
    Z = as_data_matrix(Z)
    G = _similarity(G)
    N, d = Z.shape
    if N < 2:
        raise DimensionMismatchError(f"VICReg needs at least 2 embeddings, got {N}")
    if G.N != N:
        raise DimensionMismatchError(f"similarity matrix is {G.N}x{G.N} for {N} embeddings")
    if alpha <= 0 or gamma <= 0:
        raise ValueError("alpha and gamma must be > 0")

    centered = Z - Z.mean(axis=0)
    cov = centered.T @ centered / N
    sq = np.sum(Z ** 2, axis=1)
    dist = np.maximum(sq[:, None] + sq[None, :] - 2.0 * Z @ Z.T, 0.0)
    invariance = float(np.sum(G.G * dist))
    return float(alpha * np.sum((cov - np.eye(d)) ** 2) + gamma * invariance / N)


def covariance_decomposition_check(Z, G) -> CovarianceDecomposition:
    """
    Split Cov(Z) into (1/N) Z^T G Z + (1/N) Z^T (I - G) Z and check
    sum_ij G_ij ||z_i - z_j||^2 = 2 Tr(Z^T (I - G) Z).

    Requires column-centered Z and exactly one positive per sample.
    """
    Z = as_data_matrix(Z)
    G = _similarity(G)
    N = Z.shape[0]
    if G.N != N:
        raise DimensionMismatchError(f"similarity matrix is {G.N}x{G.N} for {N} embeddings")
    drift = float(np.max(np.abs(Z.mean(axis=0))))
    if drift > NORM_TOL:
        raise NormalizationError(f"Z must be column-centered (column mean up to {drift:.3e})")
    rows = G.positives_per_sample()
    if np.any(rows != 1):
        bad = int(np.flatnonzero(rows != 1)[0])
        raise InvalidSimilarityError(f"sample {bad} has {rows[bad]} positives, expected exactly 1")

    complement = np.eye(N) - G.G
    covariance = Z.T @ Z / N
    between = Z.T @ G.G @ Z / N
    within = Z.T @ complement @ Z / N
    residual = float(np.linalg.norm(covariance - (between + within), "fro"))

    sq = np.sum(Z ** 2, axis=1)
    dist = sq[:, None] + sq[None, :] - 2.0 * Z @ Z.T
    return CovarianceDecomposition(
        covariance=covariance,
        between=between,
        within=within,
        residual=residual,
        pairwise_lhs=float(np.sum(G.G * dist)),
        pairwise_rhs=float(2.0 * np.trace(Z.T @ complement @ Z)),
    )


def _mean_cross_entropy(targets: np.ndarray, anchors: np.ndarray) -> float:
    bad = np.argwhere((targets > 0) & (anchors == 0))
    if bad.size:
        n, k = (int(v) for v in bad[0])
        raise SupportMismatchError(k, float(targets[n, k]))
    return float(-np.sum(xlogy(targets, anchors)) / targets.shape[0])


def align_prior(p_bar: np.ndarray, prior: np.ndarray, alignment: PriorAlignment) -> np.ndarray:
    """
    Prior entry compared with each p_bar entry.

    SORTED_DESCENDING gives the largest prior mass to the most used cluster;
    ties in p_bar keep index order.
    """
    if PriorAlignment(alignment) == PriorAlignment.FIXED_INDEX:
        return prior
    order = np.argsort(-p_bar, kind="stable")
    aligned = np.empty_like(prior)
    aligned[order] = np.sort(prior)[::-1]
    return aligned


def pmsn_terms(
    anchors,
    targets,
    prior: Union[ProbVector, np.ndarray],
    alignment: PriorAlignment = PriorAlignment.FIXED_INDEX,
) -> LossTerms:
    """Mean cross-entropy and prior KL of a batch of (N, K) posteriors"""
    batch = anchors if isinstance(anchors, PosteriorBatch) else PosteriorBatch(anchors, targets)
    prior_probs = prior.probs if isinstance(prior, ProbVector) else ProbVector(prior).probs
    if prior_probs.size != batch.K:
        raise DimensionMismatchError(f"prior has {prior_probs.size} entries, posteriors have K = {batch.K}")

    p_bar = batch.mean_anchor().probs
    return LossTerms(
        cross_entropy=_mean_cross_entropy(batch.targets, batch.anchors),
        prior_kl=kl_divergence(p_bar, align_prior(p_bar, prior_probs, alignment)),
    )


def pmsn_terms_from_logits(
    logits,
    targets,
    prior: Union[ProbVector, np.ndarray],
    alignment: PriorAlignment = PriorAlignment.FIXED_INDEX,
) -> LossTerms:
    """
    pmsn_terms for anchors given as logits. The cross-entropy is taken on
    log-softmax, so it stays finite when anchor posteriors underflow.
    """
    logits = np.asarray(logits, dtype=float)
    targets = _as_posterior_rows(targets, "targets")
    if logits.shape != targets.shape:
        raise DimensionMismatchError(f"logits {logits.shape} and targets {targets.shape} differ")
    prior_probs = prior.probs if isinstance(prior, ProbVector) else ProbVector(prior).probs
    if prior_probs.size != logits.shape[1]:
        raise DimensionMismatchError(f"prior has {prior_probs.size} entries, logits have K = {logits.shape[1]}")

    log_P = log_softmax(logits, axis=1)
    p_bar = np.exp(log_P).mean(axis=0)
    return LossTerms(
        cross_entropy=float(-np.sum(targets * log_P) / logits.shape[0]),
        prior_kl=kl_divergence(ProbVector.from_unnormalized(p_bar), align_prior(p_bar, prior_probs, alignment)),
    )


def msn_loss(batch: PosteriorBatch, lam: float) -> float:
    """(1/N) sum_n H(p_n+, p_n) - lambda * H(p_bar)"""
    return _mean_cross_entropy(batch.targets, batch.anchors) - lam * entropy(batch.mean_anchor())


def pmsn_loss(
    batch: PosteriorBatch,
    lam: float,
    prior: Union[ProbVector, np.ndarray],
    alignment: PriorAlignment = PriorAlignment.FIXED_INDEX,
) -> float:
    """(1/N) sum_n H(p_n+, p_n) + lambda * KL(p_bar || prior)"""
    terms = pmsn_terms(batch, None, prior, alignment)
    return terms.cross_entropy + lam * terms.prior_kl


def _check_unit_rows(M: np.ndarray, what: str) -> None:
    norms = np.linalg.norm(M, axis=1)
    worst = float(np.max(np.abs(norms - 1.0)))
    if worst > NORM_TOL:
        raise NormalizationError(f"{what} must be unit-norm (off by {worst:.3e})")


def posterior_matrix(Z, W, sigma: float) -> np.ndarray:
    """Row-wise softmax(Z W / sigma) for unit-norm rows of Z and columns of W"""
    Z = as_data_matrix(Z)
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != Z.shape[1]:
        raise DimensionMismatchError(f"W must be ({Z.shape[1]}, K), got {W.shape}")
    if sigma <= 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    _check_unit_rows(Z, "embedding rows")
    _check_unit_rows(W.T, "prototype columns")
    return softmax(Z @ W / sigma, axis=1)


def posterior_from_embeddings(Z, W, sigma: float) -> List[ProbVector]:
    return [ProbVector(row) for row in posterior_matrix(Z, W, sigma)]


def _sharpen_rows(P: np.ndarray, T: float) -> np.ndarray:
    with np.errstate(divide="ignore"):
        log_p = np.log(P)
    return softmax(log_p / T, axis=-1)


def sharpen(p: Union[ProbVector, np.ndarray], T: float) -> ProbVector:
    """p^(1/T) renormalized; computed on logs so tiny entries do not underflow"""
    if not 0 < T <= 1:
        raise ValueError(f"sharpening exponent must lie in (0, 1], got {T}")
    probs = p.probs if isinstance(p, ProbVector) else ProbVector(p).probs
    if T == 1:
        return ProbVector(probs)
    return ProbVector.from_unnormalized(_sharpen_rows(probs, T))


def _normalize(M: np.ndarray, axis: int) -> Tuple[np.ndarray, np.ndarray]:
    norms = np.linalg.norm(M, axis=axis, keepdims=True)
    if np.any(norms == 0):
        raise NormalizationError("cannot normalize a zero vector")
    return M / norms, norms


def target_posteriors(Z_target, W, config: LossConfig) -> np.ndarray:
    """Sharpened target-branch posteriors; constants for differentiation"""
    Z_hat, _ = _normalize(as_data_matrix(Z_target), axis=1)
    W_hat, _ = _normalize(np.asarray(W, dtype=float), axis=0)
    return _sharpen_rows(softmax(Z_hat @ W_hat / config.sigma, axis=1), config.sharpen_T)


def _forward(Z_anchor, W, targets, config: LossConfig, kind: LossKind):
    Z = as_data_matrix(Z_anchor)
    W = np.asarray(W, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if W.ndim != 2 or W.shape[0] != Z.shape[1]:
        raise DimensionMismatchError(f"W must be ({Z.shape[1]}, K), got {W.shape}")
    if targets.shape != (Z.shape[0], W.shape[1]):
        raise DimensionMismatchError(f"targets must be {(Z.shape[0], W.shape[1])}, got {targets.shape}")

    Z_hat, z_norm = _normalize(Z, axis=1)
    W_hat, w_norm = _normalize(W, axis=0)
    logits = Z_hat @ W_hat / config.sigma
    log_P = log_softmax(logits, axis=1)
    P = np.exp(log_P)
    N, K = P.shape
    p_bar = P.mean(axis=0)

    cross_entropy = float(-np.sum(targets * log_P) / N)
    with np.errstate(divide="ignore"):
        log_p_bar = np.where(p_bar > 0, np.log(p_bar), 0.0)

    if LossKind(kind) == LossKind.MSN:
        regularizer = -entropy(ProbVector.from_unnormalized(p_bar))
        g = log_p_bar
    else:
        prior = build_prior(config.prior, K).probs
        q = align_prior(p_bar, prior, config.prior_alignment)
        regularizer = kl_divergence(ProbVector.from_unnormalized(p_bar), q)
        g = log_p_bar - np.log(q)

    loss = cross_entropy + config.lam * regularizer
    cache = (Z_hat, z_norm, W_hat, w_norm, P, targets, g)
    return loss, cache


def pmsn_objective(
    Z_anchor,
    W,
    targets,
    config: LossConfig,
    kind: LossKind = LossKind.PMSN,
) -> float:
    """
    Loss on raw (unnormalized) anchor embeddings and prototypes, with the
    target posteriors held fixed. This is the function the gradients
    differentiate.
    """
    loss, _ = _forward(Z_anchor, W, targets, config, kind)
    return loss


def loss_gradients(
    Z_anchor,
    W,
    targets,
    config: LossConfig,
    kind: LossKind = LossKind.PMSN,
) -> LossGradients:
    """Analytic gradients of pmsn_objective w.r.t. the raw anchors and prototypes"""
    loss, (Z_hat, z_norm, W_hat, w_norm, P, T, g) = _forward(Z_anchor, W, targets, config, kind)
    N = P.shape[0]

    # d loss / d logits
    dS = (P - T) / N
    dS += config.lam * P * (g[None, :] - (P @ g)[:, None]) / N

    dZ_hat = dS @ W_hat.T / config.sigma
    dW_hat = Z_hat.T @ dS / config.sigma

    dZ = (dZ_hat - Z_hat * np.sum(Z_hat * dZ_hat, axis=1, keepdims=True)) / z_norm
    dW = (dW_hat - W_hat * np.sum(W_hat * dW_hat, axis=0, keepdims=True)) / w_norm
    return LossGradients(anchor=dZ, prototypes=dW, loss=loss)


def pmsn_gradients(Z_anchor, Z_target, W, config: LossConfig) -> LossGradients:
    """
    Gradients of the PMSN loss w.r.t. the anchor embeddings and prototypes.

    The target branch is a constant. Under SORTED_DESCENDING the sorting
    permutation is frozen at the current point.
    """
    targets = target_posteriors(Z_target, W, config)
    return loss_gradients(Z_anchor, W, targets, config, LossKind.PMSN)


def msn_gradients(Z_anchor, Z_target, W, config: LossConfig) -> LossGradients:
    """Gradients of the entropy-regularized MSN loss"""
    targets = target_posteriors(Z_target, W, config)
    return loss_gradients(Z_anchor, W, targets, config, LossKind.MSN)
