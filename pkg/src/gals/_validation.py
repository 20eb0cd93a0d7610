"""Small argument checks shared by the public entry points."""

from __future__ import annotations

import numbers

import numpy as np


def check_dimension(p) -> int:
    if not isinstance(p, numbers.Integral) or p not in (1, 2, 3):
        raise ValueError(f"dimension must be 1, 2 or 3, got {p!r}")
    return int(p)


def check_positive(value, name: str) -> float:
    value = float(value)
    if not np.isfinite(value) or value <= 0.0:
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")
    return value


def check_points(x, p: int) -> np.ndarray:
    """Return ``x`` as a float array of shape (N, p); a single point becomes (1, p)."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 and p == 1:
        x = x.reshape(1, 1)
    elif x.ndim == 1:
        if p == 1 and x.shape[0] != 1:
            x = x[:, None]
        else:
            x = x[None, :]
    if x.ndim != 2 or x.shape[1] != p:
        raise ValueError(f"expected points of dimension {p}, got array of shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("points must be finite")
    return x


def check_choice(value, choices, name: str):
    if value not in choices:
        raise ValueError(f"{name} must be one of {sorted(map(str, choices))}, got {value!r}")
    return value
