"""Trainer configuration and report schemas"""
from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, computed_field

from prior_lab.schemas.losses import LossConfig, PriorAlignment
from prior_lab.schemas.priors import PriorSpec
from prior_lab.schemas.synthdata import AugmentationSpec


class EncoderKind(str, Enum):
    """Encoder architecture"""
    LINEAR = "linear"
    MLP = "mlp"  # one tanh hidden layer


class LossKind(str, Enum):
    """Regularizer form"""
    PMSN = "pmsn"  # + lambda * KL(p_bar || prior)
    MSN = "msn"  # - lambda * H(p_bar)


class TrainerConfig(BaseModel):
    """Toy Siamese trainer hyperparameters"""
    model_config = ConfigDict(frozen=True)

    encoder: EncoderKind = EncoderKind.MLP
    hidden_dim: int = Field(64, ge=1)
    embed_dim: int = Field(16, ge=1)
    num_prototypes: int = Field(10, ge=1)
    learning_rate: float = Field(0.05, gt=0)
    momentum: float = Field(0.9, ge=0, lt=1)
    steps: int = Field(300, ge=0)
    batch_size: int = Field(128, ge=1)
    ema_momentum: Optional[float] = Field(0.99, ge=0, le=1)  # None = shared encoder
    objective: LossKind = LossKind.PMSN
    loss: LossConfig = Field(default_factory=LossConfig)
    augmentation: AugmentationSpec = Field(default_factory=AugmentationSpec)
    eval_k: int = Field(5, ge=1)
    seed: int = 0

    @classmethod
    def toy(cls, **overrides) -> "TrainerConfig":
        """Defaults of the two-factor prior comparison"""
        values = {
            "steps": 1000,
            "loss": LossConfig(lam=5.0, prior_alignment=PriorAlignment.SORTED_DESCENDING),
        }
        return cls(**{**values, **overrides})


class TrainMetrics(BaseModel):
    """Evaluation of a trained (or initial) state"""
    nn_purity_primary: float
    nn_purity_secondary: Optional[float] = None
    kl_pbar_to_prior: float
    cluster_usage: List[float]


class TrainReport(BaseModel):
    """Result of a training run"""
    losses: List[float]
    metrics: TrainMetrics
    objective: LossKind = LossKind.PMSN


class PairedRun(BaseModel):
    """One seed of a two-prior comparison"""
    seed: int
    metrics_a: TrainMetrics
    metrics_b: TrainMetrics

    @computed_field
    @property
    def secondary_gain(self) -> float:
        return self.metrics_b.nn_purity_secondary - self.metrics_a.nn_purity_secondary

    @computed_field
    @property
    def primary_gain(self) -> float:
        return self.metrics_b.nn_purity_primary - self.metrics_a.nn_purity_primary


class ExperimentReport(BaseModel):
    """Paired runs of prior A against prior B on the two-factor dataset"""
    prior_a: PriorSpec
    prior_b: PriorSpec
    runs: List[PairedRun]
    median_secondary_gain: float
    median_primary_gain: float
    secondary_wins: int
