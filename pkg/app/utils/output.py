"""CSV and JSON writers for command results."""
import json
import math
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Sequence

import numpy as np


def format_number(value: float) -> str:
    """Decimal with 17 significant digits, exact on re-read for doubles"""
    value = float(value)
    if math.isnan(value):
        return "nan"
    return f"{value:.17g}"


def to_jsonable(value: Any) -> Any:
    """Convert numpy and complex values; NaN becomes null"""
    if isinstance(value, dict):
        return {str(key): to_jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (complex, np.complexfloating)):
        return [to_jsonable(value.real), to_jsonable(value.imag)]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return None if math.isnan(value) else value
    return value


def _dumps(payload: Any) -> str:
    return json.dumps(to_jsonable(payload), sort_keys=True, allow_nan=False)


@contextmanager
def open_output(path: Optional[str]):
    """Text stream for path, or stdout when path is None"""
    if path is None:
        yield sys.stdout
        return
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("w", encoding="utf-8", newline="\n") as stream:
        yield stream


def write_csv(
    path: Optional[str],
    metadata: Dict[str, Any],
    header: Sequence[str],
    rows: Iterable[Sequence[float]],
) -> None:
    with open_output(path) as stream:
        for key in sorted(metadata):
            stream.write(f"# {key}: {_dumps(metadata[key])}\n")
        stream.write(",".join(header) + "\n")
        for row in rows:
            stream.write(",".join(format_number(v) for v in row) + "\n")


def write_json(path: Optional[str], metadata: Dict[str, Any], result: Dict[str, Any]) -> None:
    with open_output(path) as stream:
        payload = {"metadata": metadata, "result": result}
        stream.write(json.dumps(to_jsonable(payload), sort_keys=True, indent=2, allow_nan=False))
        stream.write("\n")


def write_jsonl(
    path: Optional[str],
    metadata: Dict[str, Any],
    records: Iterable[Dict[str, Any]],
    summary: Dict[str, Any],
) -> None:
    with open_output(path) as stream:
        stream.write(_dumps({"metadata": metadata}) + "\n")
        for record in records:
            stream.write(_dumps(record) + "\n")
        stream.write(_dumps({"summary": summary}) + "\n")
