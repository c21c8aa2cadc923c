"""JSON and CSV artifacts.

Every JSON artifact carries ``schema_version`` and a ``generated_at``
timestamp, which is the only field ignored when two artifacts are compared.
Floats are written in their shortest round-trip form; NaN and infinities
become ``null``.
"""
import json
import logging
from dataclasses import fields, is_dataclass
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Dict, Mapping

import numpy as np
import pandas as pd  # type: ignore

from .constants import SCHEMA_VERSION
from .exceptions import ConfigError, SchemaError
from .files import read_text, write_text
from .geometry import ManifoldSpec, Point
from .version import __version__

logger = logging.getLogger(__name__)

TIMESTAMP_FIELD = "generated_at"


def to_jsonable(obj: Any) -> Any:
    """Convert reports, numpy values and enums into plain JSON types.

    Examples:
        >>> to_jsonable({"margin": np.float64(0.5), "values": np.array([1.0, np.nan])})
        {'margin': 0.5, 'values': [1.0, None]}
    """
    if hasattr(obj, "to_dict") and callable(obj.to_dict) and not isinstance(obj, pd.DataFrame):
        return to_jsonable(obj.to_dict())
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, Mapping):
        return {str(key): to_jsonable(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(value) for value in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if np.isfinite(value) else None
    if isinstance(obj, Point):
        return to_jsonable(obj.coords)
    if isinstance(obj, ManifoldSpec):
        return {"kind": obj.kind.value, "dim": obj.dim, "name": obj.name}
    if is_dataclass(obj):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in fields(obj)}
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"Cannot serialize {type(obj).__name__}.")


def envelope(kind: str, payload: Mapping[str, Any], config: Any = None) -> Dict[str, Any]:
    """Wrap a payload with schema version, kind, generator version and timestamp."""
    document = {"schema_version": SCHEMA_VERSION, "kind": kind, "diffpos_version": __version__,
                TIMESTAMP_FIELD: datetime.now(timezone.utc).isoformat(),
                "payload": to_jsonable(payload)}
    if config is not None:
        document["config"] = to_jsonable(config)
    return document


def dumps(document: Mapping[str, Any]) -> str:
    return json.dumps(document, sort_keys=True, indent=2, ensure_ascii=False,
                      allow_nan=False) + "\n"


def dump_report(path: str, kind: str, payload: Mapping[str, Any], config: Any = None) -> str:
    """Write a JSON artifact and return its path."""
    write_text(path, dumps(envelope(kind, payload, config)))
    logger.info("Wrote %s report to %s", kind, path)
    return path


def load_report(path: str) -> Dict[str, Any]:
    """Read a JSON artifact.

    Raises:
        ConfigError: if the file is not valid JSON.
        SchemaError: if its ``schema_version`` differs from the current one.
    """
    try:
        document = json.loads(read_text(path))
    except json.JSONDecodeError as error:
        raise ConfigError(f"{path!r} is not a JSON report: {error}") from error
    version = document.get("schema_version") if isinstance(document, dict) else None
    if version != SCHEMA_VERSION:
        raise SchemaError(f"{path!r} has schema_version {version!r}, expected {SCHEMA_VERSION!r}.")
    return document


def reports_equal(first: Mapping[str, Any], second: Mapping[str, Any]) -> bool:
    """Compare two artifacts, ignoring the timestamp."""
    strip = {k: v for k, v in first.items() if k != TIMESTAMP_FIELD}
    other = {k: v for k, v in second.items() if k != TIMESTAMP_FIELD}
    return dumps(strip) == dumps(other)


def write_csv(path: str, frame: pd.DataFrame) -> str:
    """Write a CSV grid with a header row."""
    write_text(path, frame.to_csv(index=False))
    logger.info("Wrote %d rows to %s", len(frame), path)
    return path
