import math
from typing import Any, Dict, List, Literal, Optional

import numpy as np
from pydantic import BaseModel

try:
    import ujson as json
except ImportError:
    import json

from anholo.utils.globals import REPORT_FLOAT_PRECISION


def format_float(value: float) -> Any:
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return float(f"{value:.{REPORT_FLOAT_PRECISION}e}")


def sanitize(value: Any) -> Any:
    """
    JSON-ready copy of a report value: floats rounded, non-finite floats as
    strings, complex numbers as [re, im], arrays as nested lists
    """
    if isinstance(value, BaseModel):
        return sanitize(value.dict())
    if isinstance(value, dict):
        return {str(k): sanitize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [sanitize(v) for v in value]
    if isinstance(value, np.ndarray):
        return sanitize(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [format_float(value.real), format_float(value.imag)]
    return value


class InvariantCheck(BaseModel):
    """
    One pass/fail invariant with its residual and where it was measured
    (an evaluation point or a grid id)
    """

    name: str
    passed: bool
    residual: Any
    tolerance: float
    where: Any

    @staticmethod
    def of(name: str, residual: float, tolerance: float, where: Any):
        residual = float(residual)
        return InvariantCheck(
            name=name,
            passed=bool(residual <= tolerance),
            residual=residual,
            tolerance=tolerance,
            where=where,
        )


class TaskResult(BaseModel):

    task: str
    status: Literal["ok", "failed"]
    result: Optional[Any] = None
    error: Optional[str] = None


class Report(BaseModel):
    """
    Config echo, ordered task results and invariant summaries, stamped with
    the version, seed and tolerance scale
    """

    meta: Dict[str, Any]
    config: Dict[str, Any]
    results: List[TaskResult] = []
    invariants: List[InvariantCheck] = []

    @property
    def failed(self) -> bool:
        return any(r.status == "failed" for r in self.results)

    def to_json(self, pretty: bool = False) -> str:
        options = {"indent": 2} if pretty else {}
        return json.dumps(sanitize(self), sort_keys=True, **options)
