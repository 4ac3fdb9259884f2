"""Plain-text serialization helpers shared by the file writers."""

from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np

from .errors import ConfigError

TOOL_NAME = "larkms"
TOOL_VERSION = "0.1.0"


def sha256_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def file_header(seed=None, inputs: dict[str, str] | None = None, extra: str = "") -> str:
    """One comment line with tool version, seed and input digests."""
    parts = [f"# {TOOL_NAME}={TOOL_VERSION}"]
    if seed is not None:
        parts.append(f"seed={seed}")
    for name, digest in (inputs or {}).items():
        parts.append(f"{name}=sha256:{digest}")
    if extra:
        parts.append(extra)
    return " ".join(parts)


def format_value(value) -> str:
    """Round-trippable text for config values (repr for floats)."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def parse_keyvalue(path) -> dict[str, str]:
    """Parse a ``key = value`` text file; '#' starts a comment."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    out: dict[str, str] = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out
