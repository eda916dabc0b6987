"""
Result emission helpers.

Timestamps are always UTC with an explicit 'Z' suffix. Floats are written with
Python's shortest round-trip repr, so every double read back from a JSON report
is bit-identical to the value that was computed.
"""
import json
import math
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel


def utc_now() -> datetime:
    """Current UTC time with tzinfo set."""
    return datetime.now(timezone.utc)


def to_utc_isoformat(dt: Optional[datetime]) -> Optional[str]:
    """
    Convert datetime to ISO 8601 string with 'Z' suffix indicating UTC.

    Naive datetimes are assumed to already be in UTC.

    Example: "2024-11-29T10:30:45.123Z"
    """
    if dt is None:
        return None

    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    else:
        dt = dt.astimezone(timezone.utc)

    return dt.strftime('%Y-%m-%dT%H:%M:%S.') + f'{dt.microsecond // 1000:03d}Z'


def to_jsonable(value: Any) -> Any:
    """
    Recursively convert numpy / pydantic / enum values into plain JSON types.

    Non-finite floats become the strings "inf", "-inf" and "nan" so the output
    stays strict JSON.
    """
    if isinstance(value, BaseModel):
        return to_jsonable(value.model_dump(mode="python"))
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, Mapping):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isfinite(value):
            return value
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    if isinstance(value, datetime):
        return to_utc_isoformat(value)
    if isinstance(value, Path):
        return str(value)
    return value


def dumps_json(payload: Any, indent: Optional[int] = 2) -> str:
    """Serialize payload to a JSON string (keys kept in insertion order)."""
    return json.dumps(to_jsonable(payload), indent=indent, allow_nan=False)


def write_json(path: Union[str, Path], payload: Any) -> Path:
    """Write payload as JSON, creating parent directories."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_json(payload) + "\n", encoding="utf-8")
    return path


def write_csv(
    path: Union[str, Path],
    columns: Mapping[str, Sequence[Any]],
) -> Path:
    """Write a tidy CSV from column name -> values."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame({name: np.asarray(values) for name, values in columns.items()})
    frame.to_csv(path, index=False, float_format="%.17g")
    return path
