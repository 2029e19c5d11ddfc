"""Weighted-ensemble objective: aggregate N probability matrices under a
weight vector, take per-row argmax labels, score accuracy.

Accuracy is evaluated on the same label set used as fitness; callers who
want honest generalization numbers should hold out a split themselves (the
CLI exposes that).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import ssa
from .core import (
    InvalidConfig,
    LabelVector,
    PredictionMatrix,
    SsaConfig,
    WeightVector,
    as_label_array,
    make_weights,
)

# enumeration guard for the brute-force oracle
MAX_GRID_POINTS = 10**7
_GRID_CHUNK = 4096


class TooManyGridPoints(InvalidConfig):
    pass


@dataclass(frozen=True)
class EnsembleProblem:
    """N aligned prediction matrices plus the true labels they are scored on."""

    predictions: tuple[PredictionMatrix, ...]
    truth: LabelVector
    model_names: tuple[str, ...]
    stacked: np.ndarray = field(init=False, repr=False)  # (N, S, K) cache

    def __post_init__(self):
        preds = tuple(self.predictions)
        if len(preds) < 2:
            raise InvalidConfig("an ensemble needs at least 2 base models")
        s, k = preds[0].data.shape
        for i, p in enumerate(preds):
            if p.data.shape != (s, k):
                raise InvalidConfig(
                    f"prediction matrix {i} has shape {p.data.shape}, expected {(s, k)}"
                )
        truth = as_label_array(self.truth)
        if truth.shape[0] != s:
            raise InvalidConfig(f"{truth.shape[0]} labels for {s} samples")
        if truth.max() >= k:
            raise InvalidConfig(f"label {int(truth.max())} out of range for K={k}")
        names = tuple(self.model_names)
        if len(names) != len(preds):
            raise InvalidConfig(f"{len(names)} model names for {len(preds)} models")
        object.__setattr__(self, "predictions", preds)
        object.__setattr__(self, "model_names", names)
        stacked = np.stack([p.data for p in preds])
        stacked.flags.writeable = False
        object.__setattr__(self, "stacked", stacked)

    @property
    def n_models(self) -> int:
        return len(self.predictions)

    @property
    def n_samples(self) -> int:
        return self.predictions[0].n_samples

    @property
    def n_classes(self) -> int:
        return self.predictions[0].n_classes


def weighted_aggregate(problem: EnsembleProblem, w) -> np.ndarray:
    """W_pred = sum_i w_i * p_i, elementwise over the S x K matrices.

    Rows are deliberately not renormalized; argmax is scale-invariant.
    """
    w = np.asarray(w, dtype=np.float64).ravel()
    if w.shape[0] != problem.n_models:
        raise InvalidConfig(f"{w.shape[0]} weights for {problem.n_models} models")
    return np.tensordot(w, problem.stacked, axes=1)


def aggregate_labels(w_pred: np.ndarray) -> np.ndarray:
    """Per-row argmax; ties break toward the lowest class index."""
    w_pred = np.asarray(w_pred, dtype=np.float64)
    if w_pred.ndim != 2 or w_pred.shape[0] < 1:
        raise InvalidConfig(f"expected an S x K matrix, got shape {w_pred.shape}")
    return np.argmax(w_pred, axis=1)


def accuracy_objective(problem: EnsembleProblem) -> Callable[[np.ndarray], float]:
    """Objective w -> share of samples the weighted ensemble labels right."""
    truth = as_label_array(problem.truth)
    stacked = problem.stacked

    def objective(w: np.ndarray) -> float:
        labels = np.argmax(np.tensordot(np.asarray(w, dtype=np.float64), stacked, axes=1), axis=1)
        return float(np.mean(labels == truth))

    return objective


def grid_search_oracle(problem: EnsembleProblem, step: float) -> tuple[WeightVector, float]:
    """Exhaustive lattice search over {0, step, 2*step, ..., 1}^N.

    Returns the best weight vector and its accuracy; ties keep the first
    point in lexicographic order. Intended as a test oracle for the swarm
    search, so it stays a plain enumeration.
    """
    if not (0.0 < step <= 0.5):
        raise InvalidConfig(f"step must lie in (0, 0.5], got {step}")
    n = problem.n_models
    per_dim = int(np.floor(1.0 / step + 1e-9)) + 1
    if per_dim**n > MAX_GRID_POINTS:
        raise TooManyGridPoints(f"{per_dim}^{n} lattice points exceed {MAX_GRID_POINTS}")
    values = np.minimum(np.arange(per_dim, dtype=np.float64) * step, 1.0)

    truth = as_label_array(problem.truth)
    stacked = problem.stacked
    best_w: np.ndarray | None = None
    best_acc = -1.0

    points = itertools.product(values, repeat=n)
    while True:
        chunk = np.array(list(itertools.islice(points, _GRID_CHUNK)))
        if chunk.size == 0:
            break
        labels = np.argmax(np.einsum("cn,nsk->csk", chunk, stacked), axis=2)
        accs = np.mean(labels == truth, axis=1)
        idx = int(np.argmax(accs))  # first max within the chunk = lexicographic first
        if float(accs[idx]) > best_acc:
            best_acc = float(accs[idx])
            best_w = chunk[idx].copy()
    assert best_w is not None
    return make_weights(best_w), best_acc


def one_hot_seeds(n: int) -> list[np.ndarray]:
    """The N single-model selectors plus the equal-weights vector.

    Injected into the initial population so the optimized ensemble can
    never score below its best base model.
    """
    seeds = [np.eye(n)[i] for i in range(n)]
    seeds.append(np.full(n, 1.0 / n))
    return seeds


def optimize_ensemble(
    problem: EnsembleProblem,
    config: SsaConfig,
    inject_one_hot: bool = True,
) -> tuple[WeightVector, float, ssa.OptimizationResult]:
    """Run the swarm search on the ensemble-accuracy objective."""
    if config.dimensions != problem.n_models:
        raise InvalidConfig(
            f"config.dimensions={config.dimensions} but the problem has "
            f"{problem.n_models} models"
        )
    seeds = one_hot_seeds(problem.n_models) if inject_one_hot else None
    if seeds is not None and len(seeds) > config.num_salps:
        seeds = seeds[: config.num_salps]
    result = ssa.optimize(accuracy_objective(problem), config, seed_positions=seeds)
    weights = make_weights(
        config.bounds.clamp(result.best_position),
        lower=float(config.bounds.lower.min()),
        upper=float(config.bounds.upper.max()),
    )
    return weights, result.best_fitness, result
