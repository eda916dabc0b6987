"""Mini-batch sampler schemas"""
from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class SamplingStrategy(str, Enum):
    """Mini-batch construction strategy"""
    UNIFORM_RANDOM = "uniform_random"
    CLASS_BALANCED = "class_balanced"  # many classes, few samples each
    CLASS_IMBALANCED = "class_imbalanced"  # few classes, many samples each
    INVERSE_SQRT_FREQ = "inverse_sqrt_freq"

    @property
    def is_stratified(self) -> bool:
        return self in (SamplingStrategy.CLASS_BALANCED, SamplingStrategy.CLASS_IMBALANCED)


class LabeledIndex(BaseModel):
    """A sample id with its class"""
    model_config = ConfigDict(frozen=True)

    index: int = Field(..., ge=0)
    class_id: int = Field(..., ge=0)


class SamplerConfig(BaseModel):
    """Sampler parameters"""
    model_config = ConfigDict(frozen=True)

    strategy: SamplingStrategy = SamplingStrategy.UNIFORM_RANDOM
    classes_per_batch: Optional[int] = Field(None, ge=1)
    batch_size: int = Field(..., ge=1)
    seed: int = 0

    @model_validator(mode="after")
    def check_quota(self) -> "SamplerConfig":
        if self.strategy.is_stratified:
            if self.classes_per_batch is None:
                raise ValueError(f"{self.strategy.value} requires classes_per_batch")
            if self.batch_size % self.classes_per_batch != 0:
                raise ValueError(
                    f"batch_size {self.batch_size} is not divisible by "
                    f"classes_per_batch {self.classes_per_batch}"
                )
        return self

    @property
    def per_class_quota(self) -> Optional[int]:
        if not self.strategy.is_stratified:
            return None
        return self.batch_size // self.classes_per_batch
