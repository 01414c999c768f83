"""Helper utility functions for einstein-lab."""

import json
import logging
import math
from pathlib import Path
from typing import Any, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

SCHEMA = "einstein-lab/1"


def setup_logging(
    level: str = "INFO",
    log_file: Optional[str] = None,
    log_format: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
) -> logging.Logger:
    """Set up logging configuration.

    Args:
        level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_file: Optional log file path
        log_format: Log message format

    Returns:
        Configured package logger
    """
    logger = logging.getLogger("einstein_lab")
    logger.setLevel(getattr(logging, level.upper()))

    # Re-running the CLI in one process must not stack handlers
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()

    formatter = logging.Formatter(log_format)

    console_handler = logging.StreamHandler()
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    if log_file:
        file_handler = logging.FileHandler(log_file)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    return logger


def to_jsonable(obj: Any) -> Any:
    """Convert numpy scalars/arrays, complex numbers and tuples to JSON types.

    Non-finite floats become ``None`` so the output stays strict JSON.
    """
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [to_jsonable(float(obj.real)), to_jsonable(float(obj.imag))]
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else None
    return obj


def dump_json(payload: dict) -> str:
    """Serialize a report deterministically (sorted keys, fixed indent).

    Args:
        payload: Report dictionary; ``schema`` is added when missing

    Returns:
        JSON text terminated by a newline
    """
    body = {"schema": SCHEMA, **payload}
    return json.dumps(to_jsonable(body), sort_keys=True, indent=2, allow_nan=False) + "\n"


def error_line(exc: BaseException, code: Optional[str] = None) -> str:
    """Single-line machine-readable error record for stderr."""
    record = {
        "schema": SCHEMA,
        "error": code or getattr(exc, "code", "error"),
        "type": type(exc).__name__,
        "message": " ".join(str(exc).split()),
    }
    return json.dumps(record, sort_keys=True)


def frame_to_csv(frame: pd.DataFrame) -> str:
    """Render a table as CSV with a stable float format."""
    return frame.to_csv(index=False, float_format="%.12g", lineterminator="\n")


def write_output(text: str, out: Optional[str] = None) -> None:
    """Write text to a file, or to stdout when no path is given.

    Args:
        text: Rendered output
        out: Optional output path; parent directories are created
    """
    if out:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    else:
        print(text, end="")


def parse_float_list(text: str) -> List[float]:
    """Parse a comma-separated list of floats such as ``"0.1,0.01"``."""
    parts = [s.strip() for s in text.split(",") if s.strip()]
    if not parts:
        raise ValueError(f"expected a comma-separated list of numbers, got {text!r}")
    return [float(p) for p in parts]


def parse_point(text: str) -> Tuple[float, float]:
    """Parse ``"x,y"`` into a pair of floats."""
    values = parse_float_list(text)
    if len(values) != 2:
        raise ValueError(f"expected two comma-separated numbers, got {text!r}")
    return values[0], values[1]


def loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Least-squares slope of log|y| against log|x|."""
    lx = np.log(np.abs(np.asarray(xs, dtype=float)))
    ly = np.log(np.abs(np.asarray(ys, dtype=float)))
    return float(np.polyfit(lx, ly, 1)[0])


def intercept_fit(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Intercept at x=0 of the least-squares line through (x, y)."""
    return float(np.polyfit(np.asarray(xs, dtype=float), np.asarray(ys, dtype=float), 1)[1])
