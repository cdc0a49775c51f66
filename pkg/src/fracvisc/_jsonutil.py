"""Strict JSON: numpy scalars unwrapped, non-finite floats written as strings."""
from __future__ import annotations

import json
import math

import numpy as np


def clean(o):
    if isinstance(o, dict):
        return {str(k): clean(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [clean(v) for v in o]
    if isinstance(o, np.ndarray):
        return clean(o.tolist())
    if isinstance(o, np.generic):
        o = o.item()
    if isinstance(o, float) and not math.isfinite(o):
        return str(o)
    return o


def dumps(o, **kw) -> str:
    return json.dumps(clean(o), allow_nan=False, **kw)


def dump(o, fh, **kw):
    json.dump(clean(o), fh, allow_nan=False, **kw)
