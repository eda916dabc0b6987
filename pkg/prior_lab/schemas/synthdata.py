"""Synthetic data schemas"""
from pydantic import BaseModel, ConfigDict, Field, model_validator

from prior_lab.schemas.priors import PriorSpec


class FactorSpec(BaseModel):
    """One generative factor: its values, their distribution and geometry"""
    model_config = ConfigDict(frozen=True)

    num_values: int = Field(10, ge=1)
    distribution: PriorSpec = Field(default_factory=PriorSpec.uniform)
    embedding_dim: int = Field(16, ge=1)
    separation: float = Field(1.0, gt=0)
    noise_sigma: float = Field(0.3, gt=0)

    @model_validator(mode="after")
    def check_axes(self) -> "FactorSpec":
        # value v is placed on coordinate axis v of the factor's subspace
        if self.num_values > self.embedding_dim:
            raise ValueError(
                f"num_values {self.num_values} exceeds embedding_dim {self.embedding_dim}"
            )
        return self


class AugmentationSpec(BaseModel):
    """View generation parameters"""
    model_config = ConfigDict(frozen=True)

    noise_sigma: float = Field(0.1, ge=0)
    mask_fraction: float = Field(0.15, ge=0, lt=1)
