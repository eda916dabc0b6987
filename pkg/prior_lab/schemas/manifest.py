"""Run manifest schema"""
from datetime import datetime
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field, field_serializer

from prior_lab.utils.serialization import to_utc_isoformat


class RunManifest(BaseModel):
    """Everything needed to reproduce one CLI invocation"""
    command: str
    config: Dict[str, Any]
    seed: int
    tool_version: str
    started_at: datetime
    finished_at: Optional[datetime] = None
    outputs: List[str] = Field(default_factory=list)

    @field_serializer('started_at', 'finished_at')
    def serialize_datetime(self, value: Optional[datetime]) -> Optional[str]:
        return to_utc_isoformat(value)
