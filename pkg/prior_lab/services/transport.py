"""
Sinkhorn-Knopp projection onto the balanced-assignment constraint set and the
cardinality-constrained K-means objective.

Soft assignments are K x N: rows are clusters, columns are samples. A feasible
matrix has column sums 1 and row sums N/K.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import logsumexp, xlogy

from prior_lab.config import settings
from prior_lab.core.exceptions import (
    ConstraintInfeasibleError,
    DimensionMismatchError,
    InvalidDistributionError,
    SinkhornConvergenceError,
    SupportMismatchError,
)
from prior_lab.services.clustering import (
    ObjectiveMode,
    Partition,
    as_data_matrix,
    brute_force_optimum,
    explicit_objective,
)

logger = logging.getLogger(__name__)

COLUMN_TOL = 1e-9


@dataclass(frozen=True)
class SoftAssignment:
    """K x N matrix whose columns are per-sample cluster posteriors"""
    P: np.ndarray

    def __post_init__(self):
        P = np.array(self.P, dtype=float)
        if P.ndim != 2 or P.size == 0:
            raise DimensionMismatchError(f"soft assignment must be a non-empty K x N matrix, got {P.shape}")
        if not np.all(np.isfinite(P)) or np.any(P < 0):
            raise InvalidDistributionError("soft assignment entries must be finite and >= 0")
        worst = float(np.max(np.abs(P.sum(axis=0) - 1.0)))
        if worst > COLUMN_TOL:
            raise InvalidDistributionError(f"soft assignment columns must sum to 1 (off by {worst:.3e})")
        P.setflags(write=False)
        object.__setattr__(self, "P", P)

    @property
    def K(self) -> int:
        return self.P.shape[0]

    @property
    def N(self) -> int:
        return self.P.shape[1]

    def row_sums(self) -> np.ndarray:
        return self.P.sum(axis=1)

    def violation(self) -> float:
        """Max deviation from the balanced constraints"""
        return _violation(self.P)


def _violation(P: np.ndarray) -> float:
    K, N = P.shape
    rows = np.max(np.abs(P.sum(axis=1) - N / K))
    cols = np.max(np.abs(P.sum(axis=0) - 1.0))
    return float(max(rows, cols))


def _sinkhorn_log(log_P: np.ndarray, max_iter: int, tol: float) -> np.ndarray:
    """Row/column scaling carried out on log-probabilities"""
    K, N = log_P.shape
    log_row_target = np.log(N / K)
    log_P = log_P.copy()
    residual = np.inf

    for iteration in range(1, max_iter + 1):
        log_P -= logsumexp(log_P, axis=1, keepdims=True) - log_row_target
        log_P -= logsumexp(log_P, axis=0, keepdims=True)
        residual = _violation(np.exp(log_P))
        if residual < tol:
            logger.debug(f"[Sinkhorn] log-domain converged after {iteration} iterations")
            return np.exp(log_P)

    raise SinkhornConvergenceError(max_iter, residual, tol)


def sinkhorn_project(
    P,
    max_iter: Optional[int] = None,
    tol: Optional[float] = None,
) -> SoftAssignment:
    """
    Alternating row/column scaling until row sums are N/K and column sums 1.

    Args:
        P: strictly positive K x N matrix
        max_iter: iteration cap (defaults to SINKHORN_MAX_ITER)
        tol: max constraint violation accepted (defaults to SINKHORN_TOL)

    Returns:
        SoftAssignment satisfying both constraints within tol. A matrix that is
        already feasible is returned unchanged.
    """
    max_iter = settings.SINKHORN_MAX_ITER if max_iter is None else max_iter
    tol = settings.SINKHORN_TOL if tol is None else tol
    if max_iter < 1 or tol <= 0:
        raise ValueError("max_iter must be >= 1 and tol > 0")

    P = np.array(P, dtype=float)
    if P.ndim != 2 or P.size == 0:
        raise DimensionMismatchError(f"expected a non-empty K x N matrix, got shape {P.shape}")
    if not np.all(np.isfinite(P)) or np.any(P <= 0):
        raise InvalidDistributionError("Sinkhorn projection needs strictly positive finite entries")

    if _violation(P) < tol:
        return SoftAssignment(P)

    if P.min() < settings.LOG_DOMAIN_THRESHOLD:
        logger.debug("[Sinkhorn] tiny entries, switching to log domain")
        return SoftAssignment(_sinkhorn_log(np.log(P), max_iter, tol))

    K, N = P.shape
    residual = np.inf
    for iteration in range(1, max_iter + 1):
        P *= (N / K) / P.sum(axis=1, keepdims=True)
        P /= P.sum(axis=0, keepdims=True)
        residual = _violation(P)
        if residual < tol:
            logger.debug(f"[Sinkhorn] converged after {iteration} iterations (residual {residual:.2e})")
            return SoftAssignment(P)

    raise SinkhornConvergenceError(max_iter, residual, tol)


def _check_cardinalities(cardinalities, K: int, N: int) -> np.ndarray:
    sizes = np.asarray(cardinalities)
    if sizes.shape != (K,):
        raise DimensionMismatchError(f"need {K} cardinalities, got shape {sizes.shape}")
    if np.any(sizes != np.round(sizes)) or np.any(sizes < 1):
        raise DimensionMismatchError("cardinalities must be positive integers")
    sizes = sizes.astype(np.int64)
    if int(sizes.sum()) != N:
        raise DimensionMismatchError(f"cardinalities sum to {int(sizes.sum())}, N = {N}")
    return sizes


def constrained_kmeans_objective(X, partition: Partition, cardinalities) -> float:
    """Explicit K-means objective, defined only when |X_k| = N_k for every k"""
    X = as_data_matrix(X)
    sizes = _check_cardinalities(cardinalities, partition.K, X.shape[0])

    actual = partition.cluster_sizes()
    mismatched = np.flatnonzero(actual != sizes)
    if mismatched.size:
        k = int(mismatched[0])
        raise ConstraintInfeasibleError(k, int(sizes[k]), int(actual[k]))
    return explicit_objective(X, partition)


def swav_loss(P_anchor: SoftAssignment, P_target_raw) -> float:
    """
    (1/N) sum_n H(q_n, p_n), with Q the Sinkhorn projection of the raw targets
    and p_n the anchor columns.
    """
    if not isinstance(P_anchor, SoftAssignment):
        P_anchor = SoftAssignment(P_anchor)
    target = np.asarray(P_target_raw, dtype=float)
    if target.shape != P_anchor.P.shape:
        raise DimensionMismatchError(
            f"anchor is {P_anchor.P.shape} but target is {target.shape}"
        )
    Q = sinkhorn_project(target).P

    bad = np.argwhere((Q > 0) & (P_anchor.P == 0))
    if bad.size:
        k, n = (int(v) for v in bad[0])
        raise SupportMismatchError(k, float(Q[k, n]))
    return float(-np.sum(xlogy(Q, P_anchor.P)) / P_anchor.N)


def balanced_cardinalities(N: int, K: int) -> np.ndarray:
    """N/K per cluster; any remainder goes one each to the lowest indices"""
    if K < 1 or N < K:
        raise DimensionMismatchError(f"cannot balance {N} points over {K} clusters")
    sizes = np.full(K, N // K, dtype=np.int64)
    sizes[: N % K] += 1
    return sizes


def constrained_brute_force(X, cardinalities, cap: Optional[int] = None) -> Tuple[Partition, float]:
    """Exact minimum of the explicit objective over cardinality-feasible partitions"""
    X = as_data_matrix(X)
    sizes = np.asarray(cardinalities)
    sizes = _check_cardinalities(sizes, sizes.size, X.shape[0])
    return brute_force_optimum(X, sizes.size, ObjectiveMode.EXPLICIT, cap=cap, cardinalities=sizes)


def round_to_cardinalities(P, cardinalities) -> Partition:
    """
    Greedy rounding of a K x N soft assignment to a hard partition with the
    given cluster sizes: entries are visited in descending order and a sample
    joins a cluster while both are still open.
    """
    P = P.P if isinstance(P, SoftAssignment) else np.asarray(P, dtype=float)
    K, N = P.shape
    sizes = _check_cardinalities(cardinalities, K, N)

    order = np.argsort(-P, axis=None, kind="stable")
    assignment = np.full(N, -1, dtype=np.int64)
    remaining = sizes.copy()
    placed = 0
    for flat in order:
        k, n = divmod(int(flat), N)
        if assignment[n] >= 0 or remaining[k] == 0:
            continue
        assignment[n] = k
        remaining[k] -= 1
        placed += 1
        if placed == N:
            break
    return Partition(assignment, K)


def swav_assignment(X, centroids, sigma: float) -> Tuple[Partition, SoftAssignment]:
    """
    Balanced assignment of points to centroids.

    Posteriors softmax(-||x - mu_k||^2 / 2 sigma) are projected with Sinkhorn
    (in the log domain, since small sigma makes them near one-hot) and rounded
    to balanced cluster sizes.
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    X = as_data_matrix(X)
    mu = as_data_matrix(getattr(centroids, "mu", centroids))
    if mu.shape[1] != X.shape[1]:
        raise DimensionMismatchError(f"centroids live in {mu.shape[1]}-D, data in {X.shape[1]}-D")

    logits = -cdist(mu, X, "sqeuclidean") / (2.0 * sigma)
    log_P = logits - logsumexp(logits, axis=0, keepdims=True)
    soft = SoftAssignment(
        _sinkhorn_log(log_P, settings.SINKHORN_MAX_ITER, settings.SINKHORN_TOL)
    )
    partition = round_to_cardinalities(soft, balanced_cardinalities(X.shape[0], mu.shape[0]))
    return partition, soft
