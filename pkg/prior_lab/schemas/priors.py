"""Prior specification schemas"""
from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class PriorKind(str, Enum):
    """Feature prior family"""
    UNIFORM = "uniform"
    POWER_LAW = "power_law"  # [p]_k proportional to (1/k)^tau
    EMPIRICAL = "empirical"  # [p]_k = D_k / sum(D)


class PriorSpec(BaseModel):
    """
    Serializable description of a prior over K clusters.

    JSON forms: {"kind":"uniform"}, {"kind":"power_law","tau":0.25},
    {"kind":"empirical","counts":[...]}
    """
    model_config = ConfigDict(frozen=True)

    kind: PriorKind = PriorKind.UNIFORM
    tau: Optional[float] = Field(None, ge=0)
    counts: Optional[List[int]] = None

    @model_validator(mode="after")
    def check_parameters(self) -> "PriorSpec":
        if self.kind == PriorKind.POWER_LAW and self.tau is None:
            raise ValueError("power_law prior requires tau")
        if self.kind == PriorKind.EMPIRICAL:
            if not self.counts:
                raise ValueError("empirical prior requires non-empty counts")
            if any(c < 1 for c in self.counts):
                raise ValueError("empirical counts must all be >= 1")
        return self

    @classmethod
    def uniform(cls) -> "PriorSpec":
        return cls(kind=PriorKind.UNIFORM)

    @classmethod
    def power_law(cls, tau: float) -> "PriorSpec":
        return cls(kind=PriorKind.POWER_LAW, tau=tau)

    @classmethod
    def empirical(cls, counts: List[int]) -> "PriorSpec":
        return cls(kind=PriorKind.EMPIRICAL, counts=list(counts))

    def to_json(self) -> str:
        return self.model_dump_json(exclude_none=True)

    @classmethod
    def from_json(cls, text: str) -> "PriorSpec":
        return cls.model_validate_json(text)

    @property
    def label(self) -> str:
        """Short human-readable name, e.g. 'power_law(0.5)'"""
        if self.kind == PriorKind.POWER_LAW:
            return f"power_law({self.tau:g})"
        return self.kind.value
