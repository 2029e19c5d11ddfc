from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from salp_ensemble.core import make_labels, validate_prediction_matrix
from salp_ensemble.ensemble import EnsembleProblem

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def fig6d_dir() -> Path:
    return FIXTURES / "fig6d"


@pytest.fixture(scope="session")
def synth60_dir() -> Path:
    return FIXTURES / "synth60"


@pytest.fixture(scope="session")
def images_dir() -> Path:
    return FIXTURES / "images"


def random_problem(rng, s: int, k: int = 5, n: int = 3, names=None) -> EnsembleProblem:
    """A random ensemble problem with vote-style probability rows."""
    truth = rng.integers(0, k, s)
    matrices = []
    for _ in range(n):
        votes = np.where(rng.random(s) < 0.7, truth, rng.integers(0, k, s))
        confidence = rng.uniform(0.5, 0.95, s)
        rows = np.full((s, k), 0.0)
        rows[:] = ((1.0 - confidence) / (k - 1))[:, None]
        rows[np.arange(s), votes] = confidence
        matrices.append(validate_prediction_matrix(rows))
    names = names or tuple(f"model_{i}" for i in range(n))
    return EnsembleProblem(tuple(matrices), make_labels(truth), tuple(names))
