"""Least-squares convergence order fits."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy.stats import t as student_t


class InsufficientDataError(ValueError):
    pass


class OrderFit(NamedTuple):
    slope: float
    intercept: float
    residual: float


def fit_order(h, err, min_levels: int = 3) -> OrderFit:
    """Fit ``log(err) = slope * log(h) + intercept``.

    ``residual`` is the 95% half-width of the slope estimate (zero when only
    two points are given, or when the fit is exact).
    """
    h = np.asarray(h, dtype=float)
    err = np.asarray(err, dtype=float)
    if h.shape != err.shape or h.ndim != 1:
        raise ValueError("h and err must be 1D arrays of equal length")
    if h.size < min_levels:
        raise InsufficientDataError(f"need at least {min_levels} levels, got {h.size}")
    if np.any(h <= 0) or np.any(err <= 0):
        raise ValueError("h and errors must be positive for a log-log fit")
    x, y = np.log(h), np.log(err)
    slope, intercept = np.polyfit(x, y, 1)
    n = x.size
    residual = 0.0
    if n > 2:
        resid = y - (slope * x + intercept)
        s2 = float(resid @ resid) / (n - 2)
        sxx = float(((x - x.mean()) ** 2).sum())
        residual = float(student_t.ppf(0.975, n - 2) * np.sqrt(s2 / sxx))
    return OrderFit(float(slope), float(intercept), residual)
