"""Salp Swarm Algorithm for bound-constrained maximization.

A single leader salp chases the best-known position (the food source) with
a step size that decays over iterations; every follower moves to the
midpoint between itself and the salp ahead of it, updated in chain order so
the leader's move propagates down the line within one iteration.

Conventions that pin down determinism:

* random stream: ``numpy.random.Generator(numpy.random.PCG64(seed))``;
* initialization draws the full (num_salps, D) uniform block in one call,
  then overwrites the first rows with any injected seed positions;
* each leader update draws the length-D vector ``b`` first, then ``c``;
* the food source updates once per iteration, after the whole population
  has been re-evaluated (synchronous), and only on strict improvement.

Out-of-bounds positions are hard-clamped to the violated bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import Bounds, InvalidConfig, SsaConfig


class ObjectiveFailure(RuntimeError):
    """The objective returned a non-finite value."""

    def __init__(self, position: np.ndarray):
        super().__init__(f"objective returned a non-finite value at {position!r}")
        self.position = np.array(position)


@dataclass(frozen=True)
class Salp:
    position: np.ndarray
    fitness: float


@dataclass(frozen=True)
class Population:
    """Snapshot of the swarm: index 0 is the leader, the rest followers."""

    salps: tuple[Salp, ...]
    food_source: np.ndarray
    food_fitness: float


@dataclass(frozen=True)
class OptimizationResult:
    best_position: np.ndarray
    best_fitness: float
    history: tuple[tuple[int, float], ...]  # (iteration, food_fitness), iteration 0 = init
    evaluations: int


def exploration_coefficient(t: int, total_iterations: int) -> float:
    """Decay coefficient a = 2*exp(-(t/T)^2).

    Strictly decreasing in t; equals 2 at t=0 and 2/e at t=T.
    """
    if total_iterations < 1:
        raise InvalidConfig("total_iterations must be >= 1")
    if not 0 <= t <= total_iterations:
        raise InvalidConfig(f"iteration index {t} outside [0, {total_iterations}]")
    return 2.0 * math.exp(-((t / total_iterations) ** 2))


def update_leader(food: np.ndarray, bounds: Bounds, a: float, rng) -> np.ndarray:
    """One leader move: per dimension j, with b, c ~ U[0,1],

        food_j + a*((ub_j - lb_j)*b + lb_j)   if c >= 0.5
        food_j - a*((ub_j - lb_j)*b + lb_j)   otherwise

    then clamped into bounds. ``rng`` needs a ``random(n)`` method; the b
    vector is drawn before the c vector.
    """
    food = np.asarray(food, dtype=np.float64)
    if food.shape != bounds.lower.shape:
        raise InvalidConfig("food position dimensionality does not match bounds")
    d = food.shape[0]
    b = rng.random(d)
    c = rng.random(d)
    step = a * ((bounds.upper - bounds.lower) * b + bounds.lower)
    position = np.where(c >= 0.5, food + step, food - step)
    return bounds.clamp(position)


def update_follower(
    current: np.ndarray, ahead: np.ndarray, bounds: Bounds | None = None
) -> np.ndarray:
    """Midpoint of a follower and the salp ahead of it.

    The box is convex, so the midpoint of two in-bounds points is already
    in bounds; the clamp only guards callers passing out-of-bounds input.
    """
    current = np.asarray(current, dtype=np.float64)
    ahead = np.asarray(ahead, dtype=np.float64)
    if current.shape != ahead.shape:
        raise InvalidConfig(
            f"follower dimension mismatch: {current.shape} vs {ahead.shape}"
        )
    position = (current + ahead) / 2.0
    if bounds is not None:
        position = bounds.clamp(position)
    return position


def optimize(
    objective: Callable[[np.ndarray], float],
    config: SsaConfig,
    seed_positions: Sequence[np.ndarray] | None = None,
    iteration_hook: Callable[[int, Population], None] | None = None,
) -> OptimizationResult:
    """Maximize ``objective`` over the configured box.

    ``seed_positions`` replace the first rows of the random initial
    population (clamped into bounds) without disturbing the random stream.
    ``iteration_hook(t, population)`` is called after evaluation at t=0 and
    after every iteration; it exists for instrumentation and asserts in
    tests and must not mutate the population.

    Total objective evaluations: num_salps * (max_iterations + 1).
    """
    bounds = config.bounds
    ns, d, t_max = config.num_salps, config.dimensions, config.max_iterations
    rng = np.random.Generator(np.random.PCG64(config.seed))

    positions = bounds.lower + (bounds.upper - bounds.lower) * rng.random((ns, d))
    if seed_positions is not None:
        seeds = [np.asarray(p, dtype=np.float64) for p in seed_positions]
        if len(seeds) > ns:
            raise InvalidConfig(f"{len(seeds)} seed positions exceed population size {ns}")
        for i, p in enumerate(seeds):
            if p.shape != (d,):
                raise InvalidConfig(f"seed position {i} has shape {p.shape}, expected ({d},)")
            positions[i] = bounds.clamp(p)

    def evaluate(row: np.ndarray) -> float:
        value = float(objective(row))
        if not math.isfinite(value):
            raise ObjectiveFailure(row)
        return value

    fitness = np.array([evaluate(positions[i]) for i in range(ns)])
    best = int(np.argmax(fitness))
    food = positions[best].copy()
    food_fitness = float(fitness[best])
    history = [(0, food_fitness)]

    def snapshot() -> Population:
        salps = tuple(Salp(positions[i].copy(), float(fitness[i])) for i in range(ns))
        return Population(salps, food.copy(), food_fitness)

    if iteration_hook is not None:
        iteration_hook(0, snapshot())

    for t in range(1, t_max + 1):
        a = exploration_coefficient(t, t_max)
        positions[0] = update_leader(food, bounds, a, rng)
        for i in range(1, ns):
            # the predecessor row is already updated: chain propagation
            positions[i] = bounds.clamp((positions[i] + positions[i - 1]) / 2.0)
        fitness = np.array([evaluate(positions[i]) for i in range(ns)])
        best = int(np.argmax(fitness))
        if float(fitness[best]) > food_fitness:
            food = positions[best].copy()
            food_fitness = float(fitness[best])
        history.append((t, food_fitness))
        if iteration_hook is not None:
            iteration_hook(t, snapshot())

    return OptimizationResult(
        best_position=food,
        best_fitness=food_fitness,
        history=tuple(history),
        evaluations=ns * (t_max + 1),
    )
