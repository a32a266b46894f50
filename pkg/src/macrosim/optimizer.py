"""Signal-timing optimization by differential evolution over [0, 1]^d.

The search runs on the continuous configuration encoding; candidate timings
are decoded back onto the integer lattice before anything is simulated. A
known good configuration (typically the best row of the training dataset)
can be planted as population member 0, which guarantees the result is never
worse than that seed under the same evaluator.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import signals
from .metrics import QueueFnParams
from .solver import SimParams, SimState, run
from .surrogate import predict

TARGET_COLUMNS = {"speed": 0, "queue": 1}
DIRECTIONS = {"speed": "maximize", "queue": "minimize"}


@dataclass(frozen=True)
class DeConfig:
    """Differential evolution settings (rand/1/bin, synchronous selection)."""

    pop_size: int | None = None   # default: 15 * dim, capped at 150
    mutation: float = 0.7
    crossover: float = 0.9
    max_generations: int = 300
    tol: float = 1e-8             # relative population value spread for convergence
    seed: int = 0

    def resolved_pop_size(self, dim: int) -> int:
        if self.pop_size is not None:
            if self.pop_size < 4:
                raise ValueError("pop_size must be >= 4 for rand/1/bin")
            return self.pop_size
        return min(150, 15 * dim)


@dataclass(frozen=True)
class Objective:
    """What to optimize: an evaluator over encoded vectors and a direction."""

    name: str
    direction: str  # "maximize" or "minimize"
    evaluate: Callable[[np.ndarray], float]

    def __post_init__(self):
        if self.direction not in ("maximize", "minimize"):
            raise ValueError("direction must be 'maximize' or 'minimize'")

    def internal(self, x: np.ndarray) -> float:
        value = float(self.evaluate(x))
        return -value if self.direction == "maximize" else value

    def external(self, internal_value: float) -> float:
        return -internal_value if self.direction == "maximize" else internal_value


@dataclass
class DeResult:
    best: np.ndarray
    best_value: float        # in the objective's own orientation
    history: list[float]     # best-so-far per generation, same orientation
    evaluations: int
    generations: int
    converged: bool


def differential_evolution(objective: Objective, dim: int, de: DeConfig, seed_point=None) -> DeResult:
    """Minimize (or maximize) over the unit box with rand/1/bin.

    One generation builds a trial for every member from three distinct other
    members (donor + scaled difference), crosses it binomially with the
    member (one forced coordinate), clips to the box, and keeps whichever of
    member and trial scores better. Selection is synchronous: all trials are
    judged against the pre-generation population, so evaluations within a
    generation are order-independent. The best-so-far history is monotone by
    construction. Stops early when the population's value spread falls below
    ``tol`` relative to the best value.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    rng = np.random.default_rng(de.seed)
    np_size = de.resolved_pop_size(dim)

    pop = rng.uniform(0.0, 1.0, (np_size, dim))
    if seed_point is not None:
        seed_point = np.asarray(seed_point, dtype=float)
        if seed_point.shape != (dim,):
            raise ValueError(f"seed_point must have shape ({dim},)")
        pop[0] = np.clip(seed_point, 0.0, 1.0)

    values = np.array([objective.internal(x) for x in pop])
    evaluations = np_size
    best_idx = int(np.argmin(values))
    best = pop[best_idx].copy()
    best_value = float(values[best_idx])
    history = [objective.external(best_value)]

    converged = False
    generations = 0
    for generations in range(1, de.max_generations + 1):
        trials = np.empty_like(pop)
        for i in range(np_size):
            candidates = [j for j in range(np_size) if j != i]
            a, b, c = rng.choice(candidates, size=3, replace=False)
            mutant = pop[a] + de.mutation * (pop[b] - pop[c])
            cross = rng.random(dim) < de.crossover
            cross[rng.integers(dim)] = True
            trials[i] = np.clip(np.where(cross, mutant, pop[i]), 0.0, 1.0)

        trial_values = np.array([objective.internal(x) for x in trials])
        evaluations += np_size
        better = trial_values <= values
        pop[better] = trials[better]
        values[better] = trial_values[better]

        gen_best = int(np.argmin(values))
        if values[gen_best] < best_value:
            best_value = float(values[gen_best])
            best = pop[gen_best].copy()
        history.append(objective.external(best_value))

        spread = float(values.max() - values.min())
        if spread <= de.tol * max(abs(best_value), 1e-12):
            converged = True
            break

    return DeResult(
        best=best,
        best_value=objective.external(best_value),
        history=history,
        evaluations=evaluations,
        generations=generations,
        converged=converged,
    )


def surrogate_objective(model, target: str) -> Objective:
    """Objective that reads one target's prediction from a surrogate model."""
    if target not in TARGET_COLUMNS:
        raise ValueError(f"target must be one of {sorted(TARGET_COLUMNS)}")
    wanted = {"speed": "avg_speed", "queue": "queue_length"}[target]
    names = list(model.targets)
    if wanted not in names:
        raise ValueError(f"model predicts {names}, not {wanted}; retrain with that target")
    column = names.index(wanted)

    def evaluate(x: np.ndarray) -> float:
        return float(np.atleast_1d(predict(model, x))[column])

    return Objective(name=target, direction=DIRECTIONS[target], evaluate=evaluate)


def simulation_objective(
    net,
    state0: SimState,
    params: SimParams,
    target: str,
    horizon: float = 340.0,
    warmup: float = 100.0,
    queue_params: QueueFnParams = QueueFnParams(),
) -> Objective:
    """Objective that decodes a vector to integer timings and simulates them."""
    if target not in TARGET_COLUMNS:
        raise ValueError(f"target must be one of {sorted(TARGET_COLUMNS)}")

    def evaluate(x: np.ndarray) -> float:
        config = signals.decode(np.asarray(x, dtype=float), net)
        result = run(net, state0, config, params, horizon=horizon, warmup=warmup, queue_params=queue_params)
        return result.metrics.avg_speed if target == "speed" else result.metrics.queue_length

    return Objective(name=target, direction=DIRECTIONS[target], evaluate=evaluate)


def best_training_row(rows, target: str):
    """Best successful dataset row under a target's direction, or None."""
    ok = [r for r in rows if r.ok]
    if not ok:
        return None
    if target == "speed":
        return max(ok, key=lambda r: r.avg_speed)
    return min(ok, key=lambda r: r.queue_length)


@dataclass
class OptimizationResult:
    config: dict
    predicted: float          # evaluator value of the returned configuration
    objective: str
    direction: str
    de: DeResult
    seed_config: dict | None


def optimize_config(net, objective: Objective, de: DeConfig, training_rows=None) -> OptimizationResult:
    """Run DE over a network's encoded configurations and snap to the lattice.

    When training rows are given, the best row for the objective seeds the
    population. The continuous optimum is decoded to integer timings and
    re-evaluated; if a seed was planted and still scores better than the
    snapped optimum, the seed is returned, so the result is never worse than
    the seed under the same evaluator.
    """
    ids = net.signalized_ids()
    if not ids:
        raise ValueError("network has no signalized intersections to optimize")
    dim = 3 * len(ids)

    seed_config = None
    seed_point = None
    if training_rows:
        row = best_training_row(training_rows, objective.name)
        if row is not None:
            seed_config = row.config
            seed_point = signals.encode(seed_config, net)

    de_result = differential_evolution(objective, dim, de, seed_point=seed_point)

    snapped = signals.decode(de_result.best, net)
    candidates = [snapped]
    if seed_config is not None:
        candidates.append(seed_config)
    scored = [(objective.internal(signals.encode(c, net)), c) for c in candidates]
    scored.sort(key=lambda item: item[0])
    best_internal, best_config = scored[0]

    return OptimizationResult(
        config=best_config,
        predicted=objective.external(best_internal),
        objective=objective.name,
        direction=objective.direction,
        de=de_result,
        seed_config=seed_config,
    )


def validate_config(
    net,
    state0: SimState,
    params: SimParams,
    config: dict,
    horizon: float = 340.0,
    warmup: float = 100.0,
    queue_params: QueueFnParams = QueueFnParams(),
):
    """Full re-simulation of a configuration under the standard protocol."""
    result = run(net, state0, config, params, horizon=horizon, warmup=warmup, queue_params=queue_params)
    return result.metrics
