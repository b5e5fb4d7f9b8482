# src/helpers/formatting.py
import dataclasses
import enum
import hashlib
import json
import math
from typing import Any

import numpy as np

FLOAT_FORMAT = '%.17g'


def to_builtin(value: Any) -> Any:
    """
    Recursively converts numpy arrays/scalars, dataclasses and enums into
    plain Python containers that json and yaml can serialize.
    Non-finite floats become None.
    """
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {f.name: to_builtin(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, dict):
        return {str(k): to_builtin(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_builtin(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_builtin(v) for v in value.tolist()]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def dumps_json(data: Any) -> str:
    # repr-based float serialization is the shortest string that round-trips
    return json.dumps(to_builtin(data), indent=2, allow_nan=False)


def spec_hash(data: Any) -> str:
    canonical = json.dumps(to_builtin(data), sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()[:16]


def significance_stars(p_value: float) -> str:
    if p_value is None or not np.isfinite(p_value):
        return ''
    if p_value < 0.01:
        return '***'
    if p_value < 0.05:
        return '**'
    if p_value < 0.1:
        return '*'
    return ''
