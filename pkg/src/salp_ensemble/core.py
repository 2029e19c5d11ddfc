"""Domain types shared across the package.

Everything here is a plain immutable value object plus validation; no I/O
and no algorithms. The five-grade class naming is fixed in one place so
every report header uses the same name <-> index mapping.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Canonical retinopathy grade names, index order 0..4. K is configurable
# elsewhere; for K != 5 generic names are generated.
DR_CLASS_NAMES = ("Normal", "Mild", "Moderate", "Severe", "Proliferative")

# Softmax rows serialized at 6 decimal digits accumulate at most ~K*5e-7
# error; 1e-4 admits them while rejecting genuinely unnormalized scores.
ROW_SUM_TOLERANCE = 1e-4


def class_names(k: int) -> tuple[str, ...]:
    """Display names for a k-class problem (canonical DR names when k=5)."""
    if k == len(DR_CLASS_NAMES):
        return DR_CLASS_NAMES
    return tuple(f"class_{i}" for i in range(k))


class ValidationError(ValueError):
    """Base class for domain validation failures."""


class InvalidConfig(ValidationError):
    """A parameter or argument violates its documented contract."""


class NonFinite(ValidationError):
    def __init__(self, row: int, col: int):
        super().__init__(f"non-finite score at row {row}, column {col}")
        self.row = row
        self.col = col


class NegativeScore(ValidationError):
    def __init__(self, row: int, col: int):
        super().__init__(f"negative score at row {row}, column {col}")
        self.row = row
        self.col = col


class RowSumOutOfTolerance(ValidationError):
    def __init__(self, row: int, row_sum: float):
        super().__init__(
            f"row {row} sums to {row_sum!r}, outside 1 +/- {ROW_SUM_TOLERANCE}"
        )
        self.row = row
        self.row_sum = row_sum


def _frozen_array(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class PredictionMatrix:
    """Per-model class-probability scores: rows = samples, cols = classes.

    Construct through :func:`validate_prediction_matrix`; direct construction
    skips validation and is reserved for already-validated data.
    """

    data: np.ndarray  # (S, K) float64, read-only

    @property
    def n_samples(self) -> int:
        return self.data.shape[0]

    @property
    def n_classes(self) -> int:
        return self.data.shape[1]


def validate_prediction_matrix(data) -> PredictionMatrix:
    """Validate raw S x K scores and wrap them.

    Checks, in order: shape (S >= 1, K >= 2), finiteness, nonnegativity,
    and row sums within ROW_SUM_TOLERANCE of 1. Violations raise; nothing
    is silently renormalized.
    """
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2:
        raise InvalidConfig(f"expected a 2-D matrix, got shape {arr.shape}")
    s, k = arr.shape
    if s < 1 or k < 2:
        raise InvalidConfig(f"need S >= 1 and K >= 2, got S={s}, K={k}")
    bad = ~np.isfinite(arr)
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise NonFinite(int(r), int(c))
    neg = arr < 0.0
    if neg.any():
        r, c = np.argwhere(neg)[0]
        raise NegativeScore(int(r), int(c))
    sums = arr.sum(axis=1)
    off = np.abs(sums - 1.0) > ROW_SUM_TOLERANCE
    if off.any():
        r = int(np.argmax(off))
        raise RowSumOutOfTolerance(r, float(sums[r]))
    return PredictionMatrix(_frozen_array(arr))


@dataclass(frozen=True)
class LabelVector:
    """Length-S sequence of class indices."""

    labels: np.ndarray  # (S,) int64, read-only

    def __len__(self) -> int:
        return int(self.labels.shape[0])


def make_labels(labels, k: int | None = None) -> LabelVector:
    arr = np.asarray(labels, dtype=np.int64)
    if arr.ndim != 1 or arr.shape[0] < 1:
        raise InvalidConfig(f"labels must be a nonempty 1-D sequence, got shape {arr.shape}")
    if arr.min() < 0:
        raise InvalidConfig("negative class index")
    if k is not None and arr.max() >= k:
        raise InvalidConfig(f"class index {int(arr.max())} out of range for K={k}")
    return LabelVector(_frozen_array(arr))


def as_label_array(labels) -> np.ndarray:
    """Accept a LabelVector or any int sequence and return an int64 array."""
    if isinstance(labels, LabelVector):
        return labels.labels
    return np.asarray(labels, dtype=np.int64)


@dataclass(frozen=True)
class WeightVector:
    """One nonnegative weight per base model; the SSA search variable.

    No normalization constraint: scaling all weights by a positive factor
    never changes ensemble labels.
    """

    w: np.ndarray  # (N,) float64, read-only

    def __len__(self) -> int:
        return int(self.w.shape[0])

    def normalized(self) -> np.ndarray:
        total = float(self.w.sum())
        if total <= 0.0:
            return np.full_like(self.w, 1.0 / len(self))
        return self.w / total


def make_weights(w, lower: float = 0.0, upper: float = 1.0) -> WeightVector:
    arr = np.asarray(w, dtype=np.float64)
    if arr.ndim != 1 or arr.shape[0] < 1:
        raise InvalidConfig(f"weights must be a nonempty 1-D sequence, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidConfig("non-finite weight")
    if arr.min() < lower or arr.max() > upper:
        raise InvalidConfig(f"weights must lie in [{lower}, {upper}]")
    return WeightVector(_frozen_array(arr))


@dataclass(frozen=True)
class Bounds:
    """Per-dimension box bounds, lower_j < upper_j everywhere."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=np.float64).ravel()
        hi = np.asarray(self.upper, dtype=np.float64).ravel()
        if lo.shape != hi.shape:
            raise InvalidConfig("bounds lower/upper length mismatch")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise InvalidConfig("non-finite bound")
        if not np.all(lo < hi):
            raise InvalidConfig("every lower bound must be strictly below its upper bound")
        object.__setattr__(self, "lower", _frozen_array(lo))
        object.__setattr__(self, "upper", _frozen_array(hi))

    @classmethod
    def unit(cls, dimensions: int) -> "Bounds":
        return cls(np.zeros(dimensions), np.ones(dimensions))

    @property
    def dimensions(self) -> int:
        return int(self.lower.shape[0])

    def clamp(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)

    def contains(self, x: np.ndarray) -> bool:
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))


@dataclass(frozen=True)
class SsaConfig:
    """Search parameters; defaults follow the published tuning table
    (100 salps, 100 iterations, 3 weights, bounds [0, 1])."""

    num_salps: int = 100
    max_iterations: int = 100
    dimensions: int = 3
    bounds: Bounds | None = None
    seed: int = 0

    def __post_init__(self):
        if self.num_salps < 2:
            raise InvalidConfig("num_salps must be >= 2 (one leader plus >= 1 follower)")
        if self.max_iterations < 1:
            raise InvalidConfig("max_iterations must be >= 1")
        if self.dimensions < 1:
            raise InvalidConfig("dimensions must be >= 1")
        if self.bounds is None:
            object.__setattr__(self, "bounds", Bounds.unit(self.dimensions))
        elif self.bounds.dimensions != self.dimensions:
            raise InvalidConfig(
                f"bounds have {self.bounds.dimensions} dimensions, config says {self.dimensions}"
            )
        if not (0 <= int(self.seed) < 2**64):
            raise InvalidConfig("seed must fit in an unsigned 64-bit integer")


@dataclass(frozen=True)
class ConfusionMatrix:
    """K x K counts; rows = true class, columns = predicted class."""

    counts: np.ndarray  # (K, K) int64, read-only

    def __post_init__(self):
        arr = np.asarray(self.counts, dtype=np.int64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise InvalidConfig(f"confusion matrix must be square, got shape {arr.shape}")
        if arr.min() < 0:
            raise InvalidConfig("confusion matrix counts must be nonnegative")
        object.__setattr__(self, "counts", _frozen_array(arr))

    @property
    def n_classes(self) -> int:
        return int(self.counts.shape[0])

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def trace(self) -> int:
        return int(np.trace(self.counts))


@dataclass(frozen=True)
class CurveSeries:
    """An ROC or PR curve: ordered (x, y) points plus an AUC/AP summary."""

    points: np.ndarray  # (n, 2) float64, x nondecreasing, read-only
    summary: float

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 1:
            raise InvalidConfig(f"curve points must have shape (n, 2), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise InvalidConfig("non-finite curve point")
        if np.any(np.diff(pts[:, 0]) < 0):
            raise InvalidConfig("curve x values must be nondecreasing")
        if pts.min() < 0.0 or pts.max() > 1.0:
            raise InvalidConfig("curve points must lie in the unit square")
        if not (0.0 <= self.summary <= 1.0):
            raise InvalidConfig("curve summary must lie in [0, 1]")
        object.__setattr__(self, "points", _frozen_array(pts))
        object.__setattr__(self, "summary", float(self.summary))
