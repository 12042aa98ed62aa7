# utils/io_utils.py
"""File inputs (params / quotes JSON, returns CSV) and result output."""
import json
import math
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from exceptions import InsufficientDataError, ValidationError
from models import NsvhParams, SmileQuote

Result = Union[pd.DataFrame, Dict[str, Any]]


# --- READS ---
def read_json(path: str) -> Dict[str, Any]:
    file_path = Path(path)
    if not file_path.is_file():
        raise ValidationError(f"file '{path}' not found", field="path")
    try:
        with file_path.open() as fh:
            data = json.load(fh)
    except json.JSONDecodeError as e:
        raise ValidationError(f"file '{path}' is not valid JSON: {e}", field="path")
    if not isinstance(data, dict):
        raise ValidationError(f"file '{path}' must hold a JSON object", field="path")
    return data


def load_params(path: str) -> NsvhParams:
    return NsvhParams.from_dict(read_json(path))


def load_quotes(path: str) -> Tuple[Optional[float], Optional[float], List[SmileQuote]]:
    """Reads {forward, expiry, quotes: [{offset, kind, value, side?}]}."""
    data = read_json(path)
    raw = data.get("quotes")
    if not isinstance(raw, list):
        raise ValidationError("quotes file needs a 'quotes' list", field="quotes")
    try:
        quotes = [SmileQuote(strike_offset=float(q["offset"]), kind=q["kind"], value=float(q["value"]),
                             option_side=q.get("side")) for q in raw]
    except (KeyError, TypeError) as e:
        raise ValidationError(f"malformed quote: {e}", field="quotes")

    forward = data.get("forward")
    expiry = data.get("expiry")
    return (float(forward) if forward is not None else None,
            float(expiry) if expiry is not None else None, quotes)


def load_returns(path: str, levels: bool = False) -> np.ndarray:
    """
    One number per line, optional header. With `levels` the column holds
    index levels and the result is percent returns 100 (P_i/P_{i-1} - 1).
    """
    if not Path(path).is_file():
        raise ValidationError(f"file '{path}' not found", field="path")
    try:
        df = pd.read_csv(path, header=None, usecols=[0], skip_blank_lines=True)
    except pd.errors.EmptyDataError:
        raise InsufficientDataError(f"file '{path}' is empty", n=0)
    values = pd.to_numeric(df.iloc[:, 0], errors="coerce")
    # a non-numeric first row is the header
    if len(values) and pd.isna(values.iloc[0]):
        values = values.iloc[1:]
    if values.isna().any():
        raise ValidationError(f"file '{path}' has non-numeric rows", field="path")

    data = values.to_numpy(dtype=float)
    if levels:
        if len(data) < 2:
            raise InsufficientDataError("at least 2 levels are needed", n=len(data))
        if np.any(data <= 0):
            raise ValidationError("index levels must be positive", field="level")
        data = 100.0 * (data[1:] / data[:-1] - 1.0)
    return data


def parse_float_list(text: str, name: str) -> List[float]:
    """Comma-separated floats from the command line."""
    items = [s for s in (text or "").split(",") if s.strip()]
    if not items:
        raise ValidationError(f"--{name} needs at least one value", field=name)
    try:
        values = [float(s) for s in items]
    except ValueError:
        raise ValidationError(f"--{name} must be comma-separated numbers", field=name)
    if not all(math.isfinite(v) for v in values):
        raise ValidationError(f"--{name} values must be finite", field=name)
    return values


# --- WRITES ---
def _clean(value: Any) -> Any:
    """JSON-safe copy: numpy scalars to Python, NaN to null."""
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def to_text(result: Result, fmt: str) -> str:
    """JSON floats use the shortest repr that round-trips; CSV uses 17 significant digits."""
    if fmt == "csv":
        frame = result if isinstance(result, pd.DataFrame) else pd.json_normalize(_clean(result))
        return frame.to_csv(index=False, float_format="%.17g")
    if isinstance(result, pd.DataFrame):
        payload = {"rows": [_clean(row) for row in result.to_dict(orient="records")]}
    else:
        payload = _clean(result)
    return json.dumps(payload, indent=2) + "\n"


def write_output(result: Result, fmt: str, path: Optional[str] = None):
    text = to_text(result, fmt)
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)
