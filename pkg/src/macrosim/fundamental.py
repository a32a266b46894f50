"""Fundamental diagram of traffic flow: evaluation, inversion, calibration.

The speed-density relationship used throughout the simulator is

    V(rho) = v_max * exp(-(1/a) * (rho / rho_cr) ** a)

with a free-flow speed ``v_max``, a critical density ``rho_cr`` and a decay
exponent ``a``. The default constants were calibrated against stationary
counter data aggregated over 5-minute intervals.
"""
from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass

import numpy as np

DEFAULT_V_MAX = 13.68  # m/s
DEFAULT_RHO_CR = 0.05  # cars/m per lane
DEFAULT_A = 1.24


@dataclass(frozen=True)
class FdParams:
    """Parameters of the speed-density curve.

    v_max : free-flow speed in m/s, the speed of an empty road.
    rho_cr: critical density in cars/m per lane where the curve bends down.
    a     : dimensionless decay exponent; larger values drop speed more
            abruptly past the critical density.
    """

    v_max: float = DEFAULT_V_MAX
    rho_cr: float = DEFAULT_RHO_CR
    a: float = DEFAULT_A

    def __post_init__(self):
        for name in ("v_max", "rho_cr", "a"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ValueError(f"FdParams.{name} must be finite and > 0, got {value!r}")


@dataclass(frozen=True)
class CounterSample:
    """One aggregated reading from a stationary traffic counter."""

    interval_s: float  # aggregation window length in seconds
    count: float       # vehicles seen during the window
    avg_speed: float   # mean speed during the window, m/s


@dataclass(frozen=True)
class FdFit:
    """Result of a fundamental-diagram calibration."""

    params: FdParams
    sse: float
    converged: bool
    iterations: int

    def to_dict(self) -> dict:
        return {
            "v_max": self.params.v_max,
            "rho_cr": self.params.rho_cr,
            "a": self.params.a,
            "sse": self.sse,
            "converged": self.converged,
        }


def ideal_speed(params: FdParams, rho):
    """Equilibrium speed at density ``rho`` (cars/m per lane).

    Accepts a scalar or an array; negative densities are rejected. The value
    at zero density is exactly ``v_max``.
    """
    arr = np.asarray(rho, dtype=float)
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise ValueError("density must be finite and non-negative")
    v = params.v_max * np.exp(-(1.0 / params.a) * (arr / params.rho_cr) ** params.a)
    if np.ndim(rho) == 0:
        return float(v)
    return v


def invert_speed(params: FdParams, v):
    """Density at which the equilibrium speed equals ``v``.

    Analytic inverse of :func:`ideal_speed`. Speeds above ``v_max`` are
    clamped to ``v_max`` (density 0) with a warning; non-positive speeds are
    an error because the curve never reaches them.
    """
    arr = np.asarray(v, dtype=float)
    if np.any(arr <= 0) or not np.all(np.isfinite(arr)):
        raise ValueError("speed must be finite and > 0")
    over = arr > params.v_max
    if np.any(over):
        n = int(np.count_nonzero(over))
        warnings.warn(
            f"{n} speed value(s) above v_max={params.v_max}; clamped to v_max (density 0)",
            stacklevel=2,
        )
        arr = np.minimum(arr, params.v_max)
    ratio = np.clip(arr / params.v_max, None, 1.0)
    rho = params.rho_cr * (-params.a * np.log(ratio)) ** (1.0 / params.a)
    if np.ndim(v) == 0:
        return float(rho)
    return rho


def density_from_counter(sample: CounterSample) -> float:
    """Density implied by a counter reading: count / (interval * speed).

    Vehicles passing at speed v during T seconds cover v*T meters, so the
    count divided by that distance is a density in cars/m.
    """
    if sample.interval_s <= 0:
        raise ValueError("interval_s must be > 0")
    if sample.avg_speed <= 0:
        raise ValueError("avg_speed must be > 0")
    if sample.count < 0:
        raise ValueError("count must be >= 0")
    return sample.count / (sample.interval_s * sample.avg_speed)


def _nelder_mead(func, x0, max_iter, rel_tol):
    """Minimal Nelder-Mead simplex descent.

    Returns (best_x, best_f, converged, iterations). The starting point is a
    simplex vertex, so the final best value never exceeds func(x0).
    Convergence fires when the simplex value spread falls below
    rel_tol * max(|best|, 1e-12); the absolute floor keeps the criterion
    meaningful when the objective approaches zero.
    """
    alpha, gamma, beta, sigma = 1.0, 2.0, 0.5, 0.5
    n = len(x0)
    simplex = [np.array(x0, dtype=float)]
    for i in range(n):
        vertex = np.array(x0, dtype=float)
        vertex[i] += 0.25
        simplex.append(vertex)
    values = [func(v) for v in simplex]

    iterations = 0
    converged = False
    for iterations in range(1, max_iter + 1):
        order = np.argsort(values)
        simplex = [simplex[i] for i in order]
        values = [values[i] for i in order]
        spread = values[-1] - values[0]
        if spread <= rel_tol * max(abs(values[0]), 1e-12):
            converged = True
            break

        centroid = np.mean(simplex[:-1], axis=0)
        reflected = centroid + alpha * (centroid - simplex[-1])
        f_reflected = func(reflected)
        if values[0] <= f_reflected < values[-2]:
            simplex[-1], values[-1] = reflected, f_reflected
            continue
        if f_reflected < values[0]:
            expanded = centroid + gamma * (reflected - centroid)
            f_expanded = func(expanded)
            if f_expanded < f_reflected:
                simplex[-1], values[-1] = expanded, f_expanded
            else:
                simplex[-1], values[-1] = reflected, f_reflected
            continue
        if f_reflected < values[-1]:
            contracted = centroid + beta * (reflected - centroid)
            f_contracted = func(contracted)
            if f_contracted <= f_reflected:
                simplex[-1], values[-1] = contracted, f_contracted
                continue
        else:
            contracted = centroid + beta * (simplex[-1] - centroid)
            f_contracted = func(contracted)
            if f_contracted < values[-1]:
                simplex[-1], values[-1] = contracted, f_contracted
                continue
        for i in range(1, n + 1):
            simplex[i] = simplex[0] + sigma * (simplex[i] - simplex[0])
            values[i] = func(simplex[i])

    best = int(np.argmin(values))
    return simplex[best], values[best], converged, iterations


def fit_fd(
    samples,
    init: FdParams | None = None,
    fixed_v_max: float | None = None,
    max_iter: int = 2000,
    rel_tol: float = 1e-10,
) -> FdFit:
    """Calibrate the speed-density curve against (density, speed) samples.

    ``samples`` is a sequence of (rho, v) pairs. Minimizes the sum of squared
    speed residuals with a simplex descent in log-parameter space, which
    keeps every candidate strictly positive by construction. When
    ``fixed_v_max`` is given only ``rho_cr`` and ``a`` are free.

    Returns an :class:`FdFit`; if the iteration cap is hit first, the best
    parameters so far are returned with ``converged=False``. The final SSE
    never exceeds the SSE of ``init``.
    """
    pairs = [(float(r), float(v)) for r, v in samples]
    if len(pairs) < 3:
        raise ValueError("need at least 3 samples to fit 3 parameters")
    rho = np.array([p[0] for p in pairs])
    spd = np.array([p[1] for p in pairs])
    if not (np.all(np.isfinite(rho)) and np.all(np.isfinite(spd))):
        raise ValueError("samples contain non-finite values")
    if np.any(rho < 0):
        raise ValueError("sample densities must be non-negative")
    if np.unique(rho).size < 3:
        raise ValueError("need at least 3 distinct densities")

    if init is None:
        init = FdParams()
    if fixed_v_max is not None and fixed_v_max <= 0:
        raise ValueError("fixed_v_max must be > 0")

    def sse_of(v_max, rho_cr, a):
        with np.errstate(over="ignore", invalid="ignore"):
            pred = v_max * np.exp(-(1.0 / a) * (rho / rho_cr) ** a)
            err = float(np.sum((spd - pred) ** 2))
        return err if math.isfinite(err) else float("inf")

    if fixed_v_max is None:
        x0 = np.log([init.v_max, init.rho_cr, init.a])

        def objective(x):
            return sse_of(math.exp(x[0]), math.exp(x[1]), math.exp(x[2]))

        x, sse, converged, iterations = _nelder_mead(objective, x0, max_iter, rel_tol)
        params = FdParams(math.exp(x[0]), math.exp(x[1]), math.exp(x[2]))
    else:
        x0 = np.log([init.rho_cr, init.a])

        def objective(x):
            return sse_of(fixed_v_max, math.exp(x[0]), math.exp(x[1]))

        x, sse, converged, iterations = _nelder_mead(objective, x0, max_iter, rel_tol)
        params = FdParams(fixed_v_max, math.exp(x[0]), math.exp(x[1]))

    return FdFit(params=params, sse=sse, converged=converged, iterations=iterations)


def read_counters(path) -> list[CounterSample]:
    """Read counter samples from a CSV with header interval_s,count,avg_speed_mps."""
    samples = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        expected = ["interval_s", "count", "avg_speed_mps"]
        if header is None or [h.strip() for h in header] != expected:
            raise ValueError(f"counter CSV must have header {','.join(expected)}")
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 3:
                raise ValueError(f"line {line_no}: expected 3 columns, got {len(row)}")
            try:
                samples.append(
                    CounterSample(
                        interval_s=float(row[0]), count=float(row[1]), avg_speed=float(row[2])
                    )
                )
            except ValueError as exc:
                raise ValueError(f"line {line_no}: {exc}") from None
    return samples


def samples_from_counters(counters) -> list[tuple[float, float]]:
    """Convert counter readings to (density, speed) pairs for fitting."""
    return [(density_from_counter(c), c.avg_speed) for c in counters if c.avg_speed > 0]


def save_fit(fit: FdFit, path) -> None:
    with open(path, "w") as fh:
        json.dump(fit.to_dict(), fh, indent=2)
        fh.write("\n")


def load_fd_params(path) -> FdParams:
    """Load fitted parameters from a calibration document."""
    with open(path) as fh:
        doc = json.load(fh)
    return FdParams(v_max=float(doc["v_max"]), rho_cr=float(doc["rho_cr"]), a=float(doc["a"]))
