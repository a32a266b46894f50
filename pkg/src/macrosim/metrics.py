"""Network-level congestion metrics.

Two summary quantities per simulation: the mean cell speed, and a queue
length that counts cells by how congested they are. The queue contribution
of one cell is a logistic weight in its speed, close to 1 when nearly
stopped and close to 0 when moving freely.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class QueueFnParams:
    """Logistic weight parameters: 0.5 at threshold_mps, sharper for larger steepness."""

    steepness: float = 3.0
    threshold_mps: float = 5.0


@dataclass(frozen=True)
class CongestionMetrics:
    avg_speed: float     # m/s, time-averaged mean cell speed
    queue_length: float  # time-averaged sum of logistic congestion weights
    samples: int         # number of time samples aggregated


def congestion_weight(params: QueueFnParams, v):
    """Logistic congestion weight of a speed; scalar or array.

    Computed in an overflow-safe split form so large speed deviations in
    either direction stay exact 0/1 instead of overflowing exp.
    """
    x = params.steepness * (np.asarray(v, dtype=float) - params.threshold_mps)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = np.exp(-x[pos]) / (1.0 + np.exp(-x[pos]))
    out[~pos] = 1.0 / (1.0 + np.exp(x[~pos]))
    if np.ndim(v) == 0:
        return float(out)
    return out


def step_metrics(net, state, params: QueueFnParams = QueueFnParams(), density_weighted: bool = False):
    """(mean speed, queue length) of one state snapshot.

    The mean is an unweighted average over all cells of all edges; passing
    density_weighted=True weighs each cell's speed by its density instead.
    """
    v = state.v
    if density_weighted:
        total = float(np.sum(state.rho))
        avg = float(np.sum(state.rho * v) / total) if total > 0 else 0.0
    else:
        avg = float(np.mean(v))
    queue = float(np.sum(congestion_weight(params, v)))
    return avg, queue


def aggregate(speed_series, queue_series) -> CongestionMetrics:
    """Time-average per-step metric samples into one summary."""
    speeds = np.asarray(speed_series, dtype=float)
    queues = np.asarray(queue_series, dtype=float)
    if speeds.shape != queues.shape or speeds.ndim != 1:
        raise ValueError("speed and queue series must be 1-d and equally long")
    if speeds.size == 0:
        raise ValueError("cannot aggregate empty metric series")
    return CongestionMetrics(
        avg_speed=float(np.mean(speeds)),
        queue_length=float(np.mean(queues)),
        samples=int(speeds.size),
    )
