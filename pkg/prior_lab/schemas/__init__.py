"""Pydantic schemas"""
from prior_lab.schemas.priors import PriorKind, PriorSpec
from prior_lab.schemas.losses import PriorAlignment, LossConfig
from prior_lab.schemas.sampling import SamplingStrategy, LabeledIndex, SamplerConfig
from prior_lab.schemas.synthdata import FactorSpec, AugmentationSpec
from prior_lab.schemas.training import (
    EncoderKind,
    LossKind,
    TrainerConfig,
    TrainMetrics,
    TrainReport,
    PairedRun,
    ExperimentReport,
)
from prior_lab.schemas.manifest import RunManifest
from prior_lab.schemas.verify import VerifyConfig, SuiteResult, VerificationReport

__all__ = [
    # Priors
    "PriorKind",
    "PriorSpec",
    # Losses
    "PriorAlignment",
    "LossConfig",
    # Sampling
    "SamplingStrategy",
    "LabeledIndex",
    "SamplerConfig",
    # Synthetic data
    "FactorSpec",
    "AugmentationSpec",
    # Training
    "EncoderKind",
    "LossKind",
    "TrainerConfig",
    "TrainMetrics",
    "TrainReport",
    "PairedRun",
    "ExperimentReport",
    # CLI
    "RunManifest",
    "VerifyConfig",
    "SuiteResult",
    "VerificationReport",
]
