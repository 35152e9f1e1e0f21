import math
from typing import Iterable, Optional, Union

import numpy as np

# relative slack when deciding whether a real ratio is an integer
GRID_RTOL = 1e-9


def validate_finite(name: str, value, allow_negative=False, allow_zero=True) -> float:
    try:
        value = float(value)
    except (TypeError, ValueError) as e:
        raise ValueError(f"'{name}' must be a real number, got '{value}'.") from e
    if not math.isfinite(value):
        raise ValueError(f"'{name}' must be finite, got {value}.")
    if not allow_negative and value < 0:
        raise ValueError(f"'{name}' must be non-negative, got {value}.")
    if not allow_zero and value == 0:
        raise ValueError(f"'{name}' must be non-zero, got {value}.")
    return value


def validate_positive(name: str, value) -> float:
    return validate_finite(name, value, allow_zero=False)


def validate_grid(name: str, values: Iterable, strictly_positive=False) -> np.ndarray:
    grid = np.asarray(list(values) if not isinstance(values, np.ndarray) else values, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError(f"Grid '{name}' must be a non-empty list of numbers.")
    if not np.all(np.isfinite(grid)):
        raise ValueError(f"Grid '{name}' contains non-finite entries.")
    if np.any(grid < 0) or (strictly_positive and np.any(grid <= 0)):
        bound = "positive" if strictly_positive else "non-negative"
        raise ValueError(f"Grid '{name}' entries must be {bound}.")
    if np.any(np.diff(grid) <= 0):
        raise ValueError(f"Grid '{name}' must be strictly increasing.")
    return grid


def steps_in(span: float, step: float) -> int:
    """Number of steps of size `step` in `span`, which must divide exactly."""
    if not step > 0:
        raise ValueError(f"Step must be positive, got {step}.")
    ratio = span / step
    count = round(ratio)
    if abs(ratio - count) > GRID_RTOL * max(1.0, abs(ratio)):
        raise ValueError(f"Step {step} does not divide {span} into a whole number of intervals.")
    return int(count)


def grid_index(t: float, t_start: float, step: float) -> Optional[int]:
    """Index of `t` on the grid t_start + k*step, or None when off-grid."""
    ratio = (t - t_start) / step
    k = round(ratio)
    if abs(ratio - k) <= GRID_RTOL * max(1.0, abs(ratio)):
        return int(k)
    return None


def parse_grid(text: str) -> np.ndarray:
    """Parse 'start:stop:count' (inclusive linspace) or a comma separated list."""
    text = text.strip()
    if not text:
        raise ValueError("Grid is empty.")
    if ':' in text:
        parts = [p.strip() for p in text.split(':')]
        if len(parts) != 3:
            raise ValueError(f"Grid '{text}' must look like start:stop:count.")
        try:
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError as e:
            raise ValueError(f"Grid '{text}' must look like start:stop:count.") from e
        if count < 1:
            raise ValueError(f"Grid '{text}' needs at least one point.")
        return np.linspace(start, stop, count)
    return parse_floats(text)


def parse_floats(text: Union[str, Iterable]) -> np.ndarray:
    if isinstance(text, str):
        items = [item.strip() for item in text.split(",") if item.strip()]
    else:
        items = list(text)
    try:
        return np.array([float(item) for item in items], dtype=float)
    except ValueError as e:
        raise ValueError(f"Could not read a list of numbers from '{text}'.") from e


def parse_bool(name: str, text: str) -> bool:
    lowered = str(text).strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"'{name}' must be true or false, got '{text}'.")
