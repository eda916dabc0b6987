"""
Domain exceptions

Every error raised on purpose by prior_lab derives from PriorLabError, so the
CLI can tell a usage/domain problem (exit code 2) from a failed verification
(exit code 1) and from a genuine bug (logged with an error id).
"""
from typing import Optional


class PriorLabError(Exception):
    """Base class for all prior_lab errors"""


class InvalidDistributionError(PriorLabError, ValueError):
    """A probability vector or prior specification violates its invariants"""


class SupportMismatchError(PriorLabError, ValueError):
    """p puts mass where q has none, so the cross-entropy / KL is infinite"""

    def __init__(self, index: int, p_value: float):
        self.index = index
        self.p_value = p_value
        super().__init__(
            f"Infinite loss: p[{index}] = {p_value!r} > 0 but q[{index}] = 0"
        )


class DimensionMismatchError(PriorLabError, ValueError):
    """Array shapes that must agree do not"""


class NormalizationError(PriorLabError, ValueError):
    """Rows/columns that must be unit-norm are not"""


class EnumerationCapExceededError(PriorLabError, ValueError):
    """Brute-force search would enumerate more assignments than allowed"""

    def __init__(self, n_assignments: int, cap: int):
        self.n_assignments = n_assignments
        self.cap = cap
        super().__init__(
            f"Enumeration of {n_assignments} assignments exceeds cap {cap}"
        )


class SinkhornConvergenceError(PriorLabError, RuntimeError):
    """Sinkhorn-Knopp scaling did not reach tolerance"""

    def __init__(self, iterations: int, residual: float, tol: float):
        self.iterations = iterations
        self.residual = residual
        self.tol = tol
        super().__init__(
            f"Sinkhorn projection did not converge in {iterations} iterations "
            f"(residual {residual:.3e} > tol {tol:.1e})"
        )


class ConstraintInfeasibleError(PriorLabError, ValueError):
    """A partition violates the prescribed cluster cardinalities"""

    def __init__(self, cluster: int, expected: int, actual: int):
        self.cluster = cluster
        self.expected = expected
        self.actual = actual
        super().__init__(
            f"Cluster {cluster} has {actual} members, constraint requires {expected}"
        )


class AssignmentTieError(PriorLabError, ValueError):
    """A hard argmin assignment is ambiguous"""

    def __init__(self, sample: int, clusters: tuple):
        self.sample = sample
        self.clusters = clusters
        super().__init__(
            f"Sample {sample} is equidistant to centroids {list(clusters)}"
        )


class ClassTooSmallError(PriorLabError, ValueError):
    """A selected class cannot fill its per-batch quota without replacement"""

    def __init__(self, class_id: int, available: int, quota: int):
        self.class_id = class_id
        self.available = available
        self.quota = quota
        super().__init__(
            f"Class {class_id} has {available} samples, batch quota is {quota}"
        )


class UnsupportedStrategyError(PriorLabError, ValueError):
    """No closed form exists for the requested sampling strategy"""


class SeparationInfeasibleError(PriorLabError, ValueError):
    """Class means could not be placed at the requested separation"""


class TrainingDivergedError(PriorLabError, RuntimeError):
    """The training loss became non-finite"""

    def __init__(self, step: int, loss: float):
        self.step = step
        self.loss = loss
        super().__init__(f"Training diverged at step {step} (loss = {loss!r})")


class VerificationFailedError(PriorLabError):
    """One or more verification suites failed"""

    def __init__(self, failed_suites: list, message: Optional[str] = None):
        self.failed_suites = failed_suites
        super().__init__(message or f"Verification failed: {', '.join(failed_suites)}")


class InvalidSimilarityError(PriorLabError, ValueError):
    """A positive-pair similarity matrix violates its invariants"""
