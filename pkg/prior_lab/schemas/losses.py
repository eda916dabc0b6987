"""Loss configuration schemas"""
from enum import Enum

from pydantic import BaseModel, ConfigDict, Field

from prior_lab.schemas.priors import PriorSpec


class PriorAlignment(str, Enum):
    """How the mean posterior is lined up against the prior"""
    FIXED_INDEX = "fixed_index"  # prototype k is compared with prior entry k
    SORTED_DESCENDING = "sorted_descending"  # both sorted descending first


class LossConfig(BaseModel):
    """Hyperparameters shared by the MSN / PMSN / VICReg losses"""
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    lam: float = Field(1.0, ge=0, alias="lambda")  # regularization weight
    alpha: float = Field(1.0, gt=0)  # VICReg covariance weight
    gamma: float = Field(25.0, gt=0)  # VICReg invariance weight
    sigma: float = Field(0.1, gt=0)  # softmax temperature
    sharpen_T: float = Field(0.25, gt=0, le=1)  # target sharpening exponent
    prior: PriorSpec = Field(default_factory=PriorSpec.uniform)
    prior_alignment: PriorAlignment = PriorAlignment.FIXED_INDEX

    def to_json(self) -> str:
        return self.model_dump_json(by_alias=True, exclude_none=True)
