"""
Explicit (centroid) and implicit (pairwise) K-means objectives, Lloyd's
algorithm and an exhaustive partition oracle.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple, Union

import numpy as np
from scipy.spatial.distance import cdist

from prior_lab.config import settings
from prior_lab.core.exceptions import (
    DimensionMismatchError,
    EnumerationCapExceededError,
)

logger = logging.getLogger(__name__)

_CHUNK = 1 << 14


class ObjectiveMode(str, Enum):
    """Which K-means objective to minimize"""
    EXPLICIT = "explicit"
    IMPLICIT = "implicit"


def as_data_matrix(X) -> np.ndarray:
    """Coerce to a finite (N, d) float matrix; a 1-D input is N points in 1-D"""
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise DimensionMismatchError(f"expected a non-empty (N, d) matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DimensionMismatchError("data matrix contains non-finite entries")
    return arr


@dataclass(frozen=True)
class Partition:
    """Hard assignment of N points to K clusters (clusters may be empty)"""
    assignment: np.ndarray
    K: int

    def __post_init__(self):
        assignment = np.asarray(self.assignment)
        if assignment.ndim != 1:
            raise DimensionMismatchError("assignment must be a 1-D vector")
        if assignment.size and not np.issubdtype(assignment.dtype, np.integer):
            if not np.all(assignment == np.round(assignment)):
                raise DimensionMismatchError("assignment entries must be integers")
        assignment = assignment.astype(np.int64)
        if self.K < 1:
            raise DimensionMismatchError(f"K must be >= 1, got {self.K}")
        if assignment.size and (assignment.min() < 0 or assignment.max() >= self.K):
            raise DimensionMismatchError(f"cluster indices must lie in [0, {self.K})")
        assignment.setflags(write=False)
        object.__setattr__(self, "assignment", assignment)

    @property
    def N(self) -> int:
        return int(self.assignment.size)

    @classmethod
    def from_membership(cls, P: np.ndarray) -> "Partition":
        """Build from a one-hot (N, K) membership matrix"""
        P = np.asarray(P)
        if P.ndim != 2 or not np.all(P.sum(axis=1) == 1) or not np.all((P == 0) | (P == 1)):
            raise DimensionMismatchError("membership matrix rows must be one-hot")
        return cls(P.argmax(axis=1), P.shape[1])

    def membership_matrix(self) -> np.ndarray:
        """P in {0,1}^(N x K) with P 1_K = 1_N"""
        P = np.zeros((self.N, self.K), dtype=np.int64)
        P[np.arange(self.N), self.assignment] = 1
        return P

    def cluster_sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.K)

    def relabel(self, permutation) -> "Partition":
        """Rename cluster k to permutation[k]"""
        permutation = np.asarray(permutation, dtype=np.int64)
        return Partition(permutation[self.assignment], self.K)


@dataclass(frozen=True)
class Centroids:
    """K x d centroid matrix"""
    mu: np.ndarray

    def __post_init__(self):
        mu = as_data_matrix(self.mu)
        object.__setattr__(self, "mu", mu)

    @property
    def K(self) -> int:
        return self.mu.shape[0]


@dataclass
class LloydResult:
    centroids: Centroids
    partition: Partition
    objective: float
    history: List[float] = field(default_factory=list)
    iterations: int = 0


def _check_partition(X: np.ndarray, partition: Partition) -> None:
    if partition.N != X.shape[0]:
        raise DimensionMismatchError(
            f"partition covers {partition.N} points but X has {X.shape[0]} rows"
        )


def explicit_objective(X, partition: Partition) -> float:
    """
    Sum over clusters of squared distances to the cluster mean.

    Empty clusters contribute nothing.
    """
    X = as_data_matrix(X)
    _check_partition(X, partition)

    P = partition.membership_matrix().astype(float)
    counts = P.sum(axis=0)
    sums = P.T @ X
    centroids = np.divide(
        sums, counts[:, None], out=np.zeros_like(sums), where=counts[:, None] > 0
    )
    residual = X - centroids[partition.assignment]
    return float(np.sum(residual ** 2))


def implicit_objective(X, partition: Partition) -> float:
    """
    Sum over clusters of (1 / 2|X_k|) * sum over ordered pairs ||x - x'||^2.

    The diagonal x = x' terms are zero and included.
    """
    X = as_data_matrix(X)
    _check_partition(X, partition)

    total = 0.0
    for k in range(partition.K):
        members = X[partition.assignment == k]
        n_k = members.shape[0]
        if n_k == 0:
            continue
        total += cdist(members, members, "sqeuclidean").sum() / (2.0 * n_k)
    return float(total)


def kmeans_plus_plus(X: np.ndarray, K: int, rng: np.random.Generator) -> np.ndarray:
    """D^2-weighted seeding; returns a (K, d) array of initial centroids"""
    N = X.shape[0]
    chosen = [int(rng.integers(N))]
    closest = cdist(X, X[chosen], "sqeuclidean").min(axis=1)
    for _ in range(1, K):
        total = closest.sum()
        if total > 0:
            idx = int(rng.choice(N, p=closest / total))
        else:
            remaining = np.setdiff1d(np.arange(N), chosen)
            idx = int(rng.choice(remaining))
        chosen.append(idx)
        closest = np.minimum(closest, cdist(X, X[idx:idx + 1], "sqeuclidean")[:, 0])
    return X[chosen].copy()


def _lloyd_single(
    X: np.ndarray,
    centroids: np.ndarray,
    max_iter: int,
    tol: float,
) -> LloydResult:
    N, K = X.shape[0], centroids.shape[0]
    centroids = centroids.astype(float).copy()
    history: List[float] = []
    previous = np.inf
    assign = np.zeros(N, dtype=np.int64)
    iterations = 0

    for iterations in range(1, max_iter + 1):
        D = cdist(X, centroids, "sqeuclidean")
        assign = D.argmin(axis=1)  # ties go to the lowest index

        counts = np.bincount(assign, minlength=K)
        for k in np.flatnonzero(counts == 0):
            own = D[np.arange(N), assign]
            movable = counts[assign] > 1
            far = int(np.argmax(np.where(movable, own, -np.inf)))
            logger.warning(
                f"[Lloyd] cluster {k} emptied at iteration {iterations}; "
                f"reseeding at point {far}"
            )
            counts[assign[far]] -= 1
            counts[k] = 1
            assign[far] = k
            centroids[k] = X[far]
            D[:, k] = cdist(X, X[far:far + 1], "sqeuclidean")[:, 0]

        sums = np.zeros_like(centroids)
        np.add.at(sums, assign, X)
        centroids = sums / counts[:, None]

        objective = float(np.sum((X - centroids[assign]) ** 2))
        history.append(objective)
        logger.debug(f"[Lloyd] iteration {iterations}: objective {objective:.6g}")
        if previous - objective < tol:
            break
        previous = objective

    return LloydResult(
        centroids=Centroids(centroids),
        partition=Partition(assign, K),
        objective=history[-1],
        history=history,
        iterations=iterations,
    )


def lloyd(
    X,
    K: int,
    init: Union[None, int, str, Centroids, np.ndarray] = None,
    max_iter: int = 300,
    tol: float = 1e-12,
    n_init: int = 1,
    seed: int = 0,
) -> LloydResult:
    """
    Lloyd's algorithm for the explicit K-means objective.

    Args:
        X: (N, d) data
        K: number of clusters, 1 <= K <= N
        init: None / "kmeans++" (seeded by `seed`), an int seed for k-means++,
            "first" (the first K points), or explicit centroids
        max_iter: iteration cap per restart
        tol: stop once the objective decreases by less than this
        n_init: restarts for random seeding; the lowest objective is kept
        seed: base seed for k-means++

    Returns:
        LloydResult with centroids, partition, final objective and history
    """
    X = as_data_matrix(X)
    N = X.shape[0]
    if K < 1 or K > N:
        raise DimensionMismatchError(f"K must satisfy 1 <= K <= N = {N}, got {K}")
    if max_iter < 1 or tol <= 0:
        raise ValueError("max_iter must be >= 1 and tol > 0")

    if isinstance(init, (Centroids, np.ndarray, list)):
        mu = init.mu if isinstance(init, Centroids) else as_data_matrix(init)
        if mu.shape != (K, X.shape[1]):
            raise DimensionMismatchError(f"initial centroids must be ({K}, {X.shape[1]})")
        return _lloyd_single(X, mu, max_iter, tol)

    if init == "first":
        return _lloyd_single(X, X[:K], max_iter, tol)

    if isinstance(init, (int, np.integer)) and not isinstance(init, bool):
        seed = int(init)
    elif init not in (None, "kmeans++"):
        raise ValueError(f"unknown init {init!r}")

    best: Optional[LloydResult] = None
    for restart, child in enumerate(np.random.SeedSequence(seed).spawn(max(1, n_init))):
        rng = np.random.default_rng(child)
        result = _lloyd_single(X, kmeans_plus_plus(X, K, rng), max_iter, tol)
        logger.debug(f"[Lloyd] restart {restart}: objective {result.objective:.6g}")
        if best is None or result.objective < best.objective:
            best = result
    return best


def _decode(codes: np.ndarray, N: int, K: int) -> np.ndarray:
    """Assignment codes -> (M, N) cluster indices (point i is base-K digit i)"""
    powers = K ** np.arange(N, dtype=np.int64)
    return (codes[:, None] // powers[None, :]) % K


def _chunk_minimum(
    start: int,
    stop: int,
    X: np.ndarray,
    D: np.ndarray,
    K: int,
    mode: ObjectiveMode,
    cardinalities: Optional[np.ndarray] = None,
) -> Tuple[float, int]:
    N = X.shape[0]
    digits = _decode(np.arange(start, stop, dtype=np.int64), N, K)
    P = (digits[:, :, None] == np.arange(K)[None, None, :]).astype(float)
    counts = P.sum(axis=1)
    safe = np.where(counts > 0, counts, 1.0)

    if mode == ObjectiveMode.EXPLICIT:
        sums = np.einsum("mnk,nd->mkd", P, X)
        values = np.sum(X ** 2) - np.sum(np.sum(sums ** 2, axis=2) / safe, axis=1)
    else:
        pair_sums = np.einsum("mik,ij,mjk->mk", P, D, P, optimize=True)
        values = np.sum(pair_sums / (2.0 * safe), axis=1)

    if cardinalities is not None:
        values = np.where(np.all(counts == cardinalities[None, :], axis=1), values, np.inf)

    best = int(np.argmin(values))
    return float(values[best]), start + best


def brute_force_optimum(
    X,
    K: int,
    mode: ObjectiveMode = ObjectiveMode.EXPLICIT,
    cap: Optional[int] = None,
    cardinalities=None,
) -> Tuple[Partition, float]:
    """
    Exact global minimum over all K^N assignments (empty clusters allowed).

    With `cardinalities`, only assignments whose cluster sizes equal them
    exactly are considered.

    Work is split into fixed chunks of assignment codes and evaluated on up to
    PRIOR_LAB_THREADS threads; the reduction runs in chunk order and keeps the
    first minimum, so the result does not depend on the thread count.
    """
    X = as_data_matrix(X)
    cap = settings.ENUMERATION_CAP if cap is None else cap
    mode = ObjectiveMode(mode)
    N = X.shape[0]
    if K < 1:
        raise DimensionMismatchError(f"K must be >= 1, got {K}")

    total = K ** N
    if total > cap:
        raise EnumerationCapExceededError(total, cap)

    if cardinalities is not None:
        cardinalities = np.asarray(cardinalities, dtype=float)
        if cardinalities.shape != (K,) or cardinalities.sum() != N:
            raise DimensionMismatchError(f"cardinalities must be {K} counts summing to N = {N}")

    centered = X - X.mean(axis=0)
    D = cdist(centered, centered, "sqeuclidean")
    starts = list(range(0, total, _CHUNK))

    def evaluate(start: int) -> Tuple[float, int]:
        return _chunk_minimum(
            start, min(start + _CHUNK, total), centered, D, K, mode, cardinalities
        )

    with ThreadPoolExecutor(max_workers=settings.THREADS) as pool:
        results = list(pool.map(evaluate, starts))

    best_value, best_code = results[0]
    for value, code in results[1:]:
        if value < best_value:
            best_value, best_code = value, code

    if not np.isfinite(best_value):
        raise DimensionMismatchError("no assignment satisfies the requested cardinalities")

    partition = Partition(_decode(np.array([best_code]), N, K)[0], K)
    objective_fn = explicit_objective if mode == ObjectiveMode.EXPLICIT else implicit_objective
    objective = objective_fn(X, partition)
    logger.debug(f"[BruteForce] {mode.value} optimum {objective:.6g} over {total} assignments")
    return partition, objective
