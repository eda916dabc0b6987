"""
Feature priors and information-theoretic quantities.

All logarithms are natural; every quantity is in nats. Probability vectors
are validated on construction (non-negative, sum to one within PROB_TOL) and
never silently renormalized.
"""
from typing import Optional, Sequence, Union

import numpy as np
from scipy.special import rel_entr, xlogy

from prior_lab.config import settings
from prior_lab.core.exceptions import (
    DimensionMismatchError,
    InvalidDistributionError,
    SupportMismatchError,
)
from prior_lab.schemas.priors import PriorKind, PriorSpec

ArrayLike = Union[Sequence[float], np.ndarray]


class ProbVector:
    """Immutable discrete distribution over K clusters"""

    __slots__ = ("_probs",)

    def __init__(self, probs: ArrayLike, tol: Optional[float] = None):
        tol = settings.PROB_TOL if tol is None else tol
        arr = np.array(probs, dtype=float)

        if arr.ndim != 1 or arr.size < 1:
            raise InvalidDistributionError(
                f"ProbVector needs a non-empty 1-D vector, got shape {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise InvalidDistributionError("ProbVector entries must be finite")
        if np.any(arr < 0):
            raise InvalidDistributionError(
                f"ProbVector entries must be >= 0 (min {arr.min()!r})"
            )
        total = float(arr.sum())
        if abs(total - 1.0) > tol:
            raise InvalidDistributionError(
                f"ProbVector must sum to 1 within {tol:g}, sums to {total!r}"
            )

        arr.setflags(write=False)
        self._probs = arr

    @classmethod
    def from_unnormalized(cls, weights: ArrayLike) -> "ProbVector":
        """Normalize non-negative weights with a positive total"""
        w = np.asarray(weights, dtype=float)
        total = w.sum()
        if not np.isfinite(total) or total <= 0 or np.any(w < 0):
            raise InvalidDistributionError("weights must be non-negative with a positive sum")
        return cls(w / total)

    @classmethod
    def uniform(cls, K: int) -> "ProbVector":
        if K < 1:
            raise InvalidDistributionError(f"K must be >= 1, got {K}")
        return cls(np.full(K, 1.0 / K))

    @classmethod
    def one_hot(cls, index: int, K: int) -> "ProbVector":
        arr = np.zeros(K)
        arr[index] = 1.0
        return cls(arr)

    @property
    def probs(self) -> np.ndarray:
        """Read-only view of the probabilities"""
        return self._probs

    @property
    def K(self) -> int:
        return self._probs.size

    def __len__(self) -> int:
        return self._probs.size

    def __getitem__(self, item):
        return self._probs[item]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._probs
        return self._probs.astype(dtype)

    def allclose(self, other: "ProbVector", atol: float = 1e-12) -> bool:
        return self.K == other.K and bool(np.allclose(self._probs, other.probs, rtol=0, atol=atol))

    def __repr__(self) -> str:
        return f"<ProbVector(K={self.K}, probs={np.array2string(self._probs, precision=6)})>"


def _as_probs(p: Union[ProbVector, ArrayLike]) -> np.ndarray:
    if isinstance(p, ProbVector):
        return p.probs
    return ProbVector(p).probs


def _check_same_k(p: np.ndarray, q: np.ndarray) -> None:
    if p.size != q.size:
        raise DimensionMismatchError(f"distributions over {p.size} and {q.size} clusters")


def _check_support(p: np.ndarray, q: np.ndarray) -> None:
    violations = np.flatnonzero((p > 0) & (q == 0))
    if violations.size:
        k = int(violations[0])
        raise SupportMismatchError(k, float(p[k]))


def build_prior(spec: PriorSpec, K: int) -> ProbVector:
    """
    Materialize a prior specification over K clusters.

    Args:
        spec: uniform, power-law (exponent tau) or empirical (class counts)
        K: number of clusters

    Returns:
        ProbVector with [p]_k proportional to (1/k)^tau for power-law
        (k = 1..K) and to D_k for empirical counts
    """
    if K < 1:
        raise InvalidDistributionError(f"K must be >= 1, got {K}")

    if spec.kind == PriorKind.UNIFORM:
        return ProbVector.uniform(K)

    if spec.kind == PriorKind.POWER_LAW:
        ranks = np.arange(1, K + 1, dtype=float)
        weights = ranks ** (-float(spec.tau))
        return ProbVector(weights / weights.sum())

    counts = np.asarray(spec.counts, dtype=float)
    if counts.size != K:
        raise DimensionMismatchError(
            f"empirical prior has {counts.size} counts but K = {K}"
        )
    return ProbVector(counts / counts.sum())


def entropy(p: Union[ProbVector, ArrayLike]) -> float:
    """H(p) = -sum p_k ln p_k, with 0 ln 0 = 0"""
    probs = _as_probs(p)
    return float(-np.sum(xlogy(probs, probs)))


def cross_entropy(p: Union[ProbVector, ArrayLike], q: Union[ProbVector, ArrayLike]) -> float:
    """H(p, q) = -sum p_k ln q_k; raises when p has mass where q has none"""
    p_arr, q_arr = _as_probs(p), _as_probs(q)
    _check_same_k(p_arr, q_arr)
    _check_support(p_arr, q_arr)
    return float(-np.sum(xlogy(p_arr, q_arr)))


def kl_divergence(p: Union[ProbVector, ArrayLike], q: Union[ProbVector, ArrayLike]) -> float:
    """KL(p || q) = sum p_k ln(p_k / q_k); requires q_k > 0 wherever p_k > 0"""
    p_arr, q_arr = _as_probs(p), _as_probs(q)
    _check_same_k(p_arr, q_arr)
    _check_support(p_arr, q_arr)
    return float(np.sum(rel_entr(p_arr, q_arr)))


def mean_of(rows: np.ndarray) -> ProbVector:
    """Mean of an (N, K) stack of distributions, e.g. the batch mean posterior"""
    rows = np.asarray(rows, dtype=float)
    if rows.ndim != 2 or rows.shape[0] < 1:
        raise DimensionMismatchError(f"expected an (N, K) array, got shape {rows.shape}")
    return ProbVector(rows.mean(axis=0))
