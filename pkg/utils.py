"""Utility helpers for the SensorGuard toolkit.

Pure helper functions for validation, rounding, hashing and table headers.
"""

from __future__ import annotations

import hashlib
import json
import math
from fractions import Fraction
from typing import Any

TOOL_NAME = "sensorguard"
VERSION = "0.3.0"

VALID_PLACEMENTS = {"grid", "uniform_random", "witness"}
VALID_POLICIES = {"low", "medium", "high", "intrusion_aware"}
VALID_MODES = {"aggressive", "defensive"}
VALID_BEHAVIORS = {
    "black_hole",
    "sink_hole",
    "selective_forwarding",
    "gray_hole",
    "false_claimant",
    "false_responder",
}
MAX_TOLERANCE = 3


class ConfigError(ValueError):
    """Raised for any invalid scenario configuration."""


def validate_positive(value: float, name: str = "value") -> float:
    """Ensure *value* is a positive number."""
    if value <= 0:
        raise ValueError(f"{name} must be positive, got {value}")
    return value


def validate_non_negative(value: float, name: str = "value") -> float:
    """Ensure *value* is >= 0."""
    if value < 0:
        raise ValueError(f"{name} must be non-negative, got {value}")
    return value


def validate_in(value: Any, allowed: set, name: str = "value") -> Any:
    """Ensure *value* is in *allowed*."""
    if value not in allowed:
        raise ValueError(f"{name} must be one of {sorted(allowed)}, got {value!r}")
    return value


def validate_probability(value: float, name: str = "value") -> float:
    """Ensure *value* lies in [0, 1]."""
    if not (0 <= value <= 1):
        raise ValueError(f"{name} must be in [0, 1], got {value}")
    return value


def validate_range(value: int, low: int, high: int, name: str = "value") -> int:
    """Ensure low <= *value* <= high."""
    if not (low <= value <= high):
        raise ValueError(f"{name} must be in [{low}, {high}], got {value}")
    return value


def nearest_int(value: Fraction | int | float) -> int:
    """Nearest integer, ties rounded half away from zero."""
    x = Fraction(value)
    if x >= 0:
        return math.floor(x + Fraction(1, 2))
    return -math.floor(-x + Fraction(1, 2))


def canonical_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"), default=str)


def stable_hash(data: Any, length: int = 12) -> str:
    """Short SHA-256 digest of the canonical JSON form of *data*."""
    return hashlib.sha256(canonical_json(data).encode("utf-8")).hexdigest()[:length]


def table_header(seed: int | None, config_hash: str | None, **extra: Any) -> str:
    """First (comment) line of every emitted table."""
    parts = [f"tool={TOOL_NAME}", f"version={VERSION}", f"seed={seed if seed is not None else '-'}"]
    parts.append(f"config_hash={config_hash or '-'}")
    parts.extend(f"{k}={v}" for k, v in extra.items())
    return "# " + " ".join(parts)


def fmt_node(node: int) -> str:
    """Format a node id as 'n<id>' for log messages."""
    return f"n{node}"


def parse_int_list(text: str) -> list[int]:
    """Parse '1,2,3' or '1-5' (inclusive) into a list of ints."""
    text = text.strip()
    if "-" in text and "," not in text and not text.startswith("-"):
        low, high = text.split("-", 1)
        return list(range(int(low), int(high) + 1))
    return [int(part) for part in text.split(",") if part.strip()]
