import json
import math
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import aiofiles
import numpy as np


def check_dir(path):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"{path.absolute()} does not exist")
    return path


def create_dir(path):
    path = Path(path)
    # do nothing if directory already exists
    path.mkdir(parents=True, exist_ok=True)
    return path


def sanitize(v):
    """
    Convert values to something json.dumps accepts and reads back identically:
    numpy scalars/arrays become python numbers/lists, enums their value,
    non-finite floats the strings "inf", "-inf" and "nan".
    """
    if isinstance(v, Enum):
        return v.value
    if isinstance(v, (bool, type(None), str)):
        return v
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return format_float(float(v)) if not math.isfinite(v) else float(v)
    if isinstance(v, np.ndarray):
        return [sanitize(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [sanitize(x) for x in v]
    if isinstance(v, dict):
        return {str(k): sanitize(val) for k, val in v.items()}
    # For custom objects, include class name in representation
    return f"{v.__class__.__name__}({str(v)})"


def format_float(value: float) -> str:
    """Shortest round-tripping text of a float; non-finite values as inf/-inf/nan."""
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return repr(float(value))


def parse_float(value: Any) -> float:
    """Inverse of format_float, also accepting plain numbers."""
    if isinstance(value, str):
        return float(value.strip())
    return float(value)


def sanitize_str(string):
    return string.replace("/", "_").replace(" ", "_").replace("=", "-")


def parse_override(assignment: str) -> Tuple[str, Any]:
    """
    Split a `key=value` command line override; the value is read as JSON
    when possible (numbers, booleans, lists) and kept as a string otherwise.
    """
    if "=" not in assignment:
        raise ValueError(f"override '{assignment}' must look like key=value")
    key, raw = assignment.split("=", 1)
    key = key.strip()
    if not key:
        raise ValueError(f"override '{assignment}' has an empty key")
    try:
        value = json.loads(raw)
    except ValueError:
        value = raw
    return key, value


def set_nested(content: Dict[str, Any], dotted_key: str, value: Any) -> Dict[str, Any]:
    """Set `a.b.c` inside nested dictionaries, creating missing levels."""
    keys = dotted_key.split(".")
    node = content
    for key in keys[:-1]:
        child = node.get(key)
        if not isinstance(child, dict):
            child = {}
            node[key] = child
        node = child
    node[keys[-1]] = value
    return content


def load_json(path) -> Dict[str, Any]:
    path = check_dir(path)
    with open(path) as f:
        return json.load(f)


def dump_json(content: Any) -> str:
    """Deterministic json text: insertion order kept, trailing newline."""
    return json.dumps(sanitize(content), indent=2) + "\n"


def write_to_file(path: Path, content: str, mode: Optional[str] = "w"):
    with open(path, mode) as f:
        f.write(content)


async def write_to_file_async(path: Path, content: str, mode: str = "w"):
    async with aiofiles.open(path, mode=mode) as f:
        await f.write(content)
