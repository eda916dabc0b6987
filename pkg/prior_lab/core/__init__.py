"""Core utilities"""
from prior_lab.core.exceptions import (
    PriorLabError,
    InvalidDistributionError,
    SupportMismatchError,
    DimensionMismatchError,
    EnumerationCapExceededError,
    SinkhornConvergenceError,
    ConstraintInfeasibleError,
    NormalizationError,
    AssignmentTieError,
    ClassTooSmallError,
    UnsupportedStrategyError,
    SeparationInfeasibleError,
    TrainingDivergedError,
    VerificationFailedError,
    InvalidSimilarityError,
)

__all__ = [
    "PriorLabError",
    "InvalidDistributionError",
    "SupportMismatchError",
    "DimensionMismatchError",
    "EnumerationCapExceededError",
    "SinkhornConvergenceError",
    "ConstraintInfeasibleError",
    "NormalizationError",
    "AssignmentTieError",
    "ClassTooSmallError",
    "UnsupportedStrategyError",
    "SeparationInfeasibleError",
    "TrainingDivergedError",
    "VerificationFailedError",
    "InvalidSimilarityError",
]
