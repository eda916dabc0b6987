"""Utility modules"""
from prior_lab.utils.serialization import (
    utc_now,
    to_utc_isoformat,
    to_jsonable,
    dumps_json,
    write_json,
    write_csv,
)
from prior_lab.utils.gradcheck import central_difference_gradient, relative_error

__all__ = [
    "utc_now",
    "to_utc_isoformat",
    "to_jsonable",
    "dumps_json",
    "write_json",
    "write_csv",
    "central_difference_gradient",
    "relative_error",
]
