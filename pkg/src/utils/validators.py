"""Validators for command-line input."""

import re

from src.core.exceptions import UsageError


def is_valid_run_name(name: str) -> bool:
    """
    Validate a name used for output files.

    Args:
        name: Candidate file stem

    Returns:
        True if valid, False otherwise
    """
    # Letters, digits, hyphens and underscores; no path separators
    pattern = r"^[a-zA-Z0-9_-]+$"
    return bool(re.match(pattern, name))


def parse_int_list(text: str, name: str = "value") -> tuple[int, ...]:
    """
    Parse a comma-separated list of positive integers such as ``1,2,4``.

    Raises:
        UsageError: If the list is empty or holds anything but positive integers
    """
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts or not all(re.fullmatch(r"[0-9]+", p) for p in parts):
        raise UsageError(f"{name} must be a comma-separated list of positive integers, got {text!r}")
    values = tuple(int(p) for p in parts)
    if min(values) <= 0:
        raise UsageError(f"{name} entries must be positive, got {text!r}")
    return values


def parse_float_list(text: str, name: str = "value") -> tuple[float, ...]:
    try:
        values = tuple(float(p) for p in text.split(",") if p.strip())
    except ValueError as e:
        raise UsageError(f"{name} must be a comma-separated list of numbers, got {text!r}") from e
    if not values:
        raise UsageError(f"{name} must not be empty")
    return values


def validate_class_id(class_id: int, n_classes: int) -> int:
    """Class ids are 1..n_classes; 0 is the null condition."""
    if not 0 <= class_id <= n_classes:
        raise UsageError(f"class id {class_id} out of range [0, {n_classes}]")
    return class_id
