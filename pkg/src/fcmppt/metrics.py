"""Estimator and tracker quality metrics."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import DomainError


def mse(pred, truth):
    """Mean squared error (1/n) * sum (pred - truth)^2."""
    pred = np.asarray(pred, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if pred.shape != truth.shape or pred.size == 0:
        raise DomainError("mse needs two non-empty vectors of equal length")
    return float(np.mean((pred - truth) ** 2))


def correlation(pred, truth):
    """Pearson correlation coefficient."""
    pred = np.asarray(pred, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if pred.shape != truth.shape or pred.size < 2:
        raise DomainError("correlation needs two vectors of equal length >= 2")
    dp = pred - pred.mean()
    dt = truth - truth.mean()
    denom = np.sqrt(np.dot(dp, dp) * np.dot(dt, dt))
    if denom == 0:
        raise DomainError("correlation undefined: a vector has zero variance")
    return float(np.clip(np.dot(dp, dt) / denom, -1.0, 1.0))


def accuracy_pct(p_tracked, p_actual):
    """Tracked power as a percentage of the true maximum power."""
    if not p_actual > 0:
        raise DomainError(f"p_actual must be positive, got {p_actual}")
    return 100.0 * p_tracked / p_actual


class Settling(NamedTuple):
    seconds: float
    settled: bool
    final: float


def settling_time(t, y, t_step=None, band_pct=2.0) -> Settling:
    """Time after ``t_step`` until ``y`` stays inside +-band_pct of its final value.

    The final value is the mean of the last 10% of the window.  If the last
    sample is outside the band the window length is returned with
    ``settled=False``.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t_step is None:
        t_step = t[0]
    keep = t >= t_step
    t, y = t[keep], y[keep]
    if t.size == 0:
        raise DomainError("settling_time window is empty")
    tail = max(1, int(round(0.1 * t.size)))
    final = float(np.mean(y[-tail:]))
    outside = np.abs(y - final) > abs(final) * band_pct / 100.0
    if not outside.any():
        return Settling(0.0, True, final)
    last_out = int(np.flatnonzero(outside)[-1])
    if last_out == t.size - 1:
        return Settling(float(t[-1] - t_step), False, final)
    return Settling(float(t[last_out + 1] - t_step), True, final)
