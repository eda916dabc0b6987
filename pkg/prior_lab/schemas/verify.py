"""Verification report schemas"""
from typing import Any, Dict, List

from pydantic import BaseModel, ConfigDict, Field


class VerifyConfig(BaseModel):
    """Scale of the proposition suites"""
    model_config = ConfigDict(frozen=True)

    max_n: int = Field(8, ge=2, le=12)
    max_k: int = Field(3, ge=2, le=4)
    trials: int = Field(100, ge=1)
    seed: int = 0


class SuiteResult(BaseModel):
    """Outcome of one verification suite"""
    name: str
    passed: bool
    trials: int
    max_residual: float
    tolerance: float
    details: Dict[str, Any] = Field(default_factory=dict)


class VerificationReport(BaseModel):
    """Outcome of all suites"""
    passed: bool
    suites: List[SuiteResult]

    @property
    def failed(self) -> List[str]:
        return [s.name for s in self.suites if not s.passed]
