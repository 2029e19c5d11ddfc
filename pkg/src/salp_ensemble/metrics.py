"""Evaluation metrics: confusion matrix, per-class and macro P/R/F1,
micro-averaged ROC/AUC and PR/AP curves, and McNemar's paired test.

All functions are pure; the curve builders pool the one-vs-rest instances
across classes (micro averaging), which stays well-defined under class
imbalance and yields a single curve per model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    ConfusionMatrix,
    CurveSeries,
    InvalidConfig,
    class_names,
    as_label_array,
)


class LabelOutOfRange(InvalidConfig):
    pass


@dataclass(frozen=True)
class ClassMetrics:
    name: str
    precision: float
    recall: float
    f1: float
    support: int
    # rates whose denominator was zero and were reported as 0.0
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class ClassReport:
    per_class: tuple[ClassMetrics, ...]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    accuracy: float

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.per_class)


@dataclass(frozen=True)
class McNemarResult:
    discordant_b: int  # model A correct, model B wrong
    discordant_c: int  # model A wrong, model B correct
    statistic: float
    p_value: float
    method: str  # "chi2_corrected" or "exact_binomial"


def confusion_matrix(truth, predicted, k: int) -> ConfusionMatrix:
    """counts[t][p] = number of samples with true class t predicted as p."""
    t = as_label_array(truth)
    p = as_label_array(predicted)
    if t.shape != p.shape:
        raise InvalidConfig(f"length mismatch: {t.shape[0]} truths, {p.shape[0]} predictions")
    for name, arr in (("truth", t), ("prediction", p)):
        if arr.size and (arr.min() < 0 or arr.max() >= k):
            raise LabelOutOfRange(f"{name} label outside [0, {k})")
    counts = np.zeros((k, k), dtype=np.int64)
    np.add.at(counts, (t, p), 1)
    return ConfusionMatrix(counts)


def class_report(cm: ConfusionMatrix, names: tuple[str, ...] | None = None) -> ClassReport:
    """One-vs-rest precision/recall/F1 per class plus macro means.

    A zero denominator reports 0.0 for that rate and flags it, keeping the
    report serializable and comparisons total.
    """
    counts = cm.counts
    k = cm.n_classes
    if names is None:
        names = class_names(k)
    elif len(names) != k:
        raise InvalidConfig(f"{len(names)} class names for K={k}")
    total = cm.total
    if total == 0:
        raise InvalidConfig("empty confusion matrix")

    diag = np.diag(counts)
    col_sums = counts.sum(axis=0)  # TP + FP per class
    row_sums = counts.sum(axis=1)  # TP + FN per class (= support)

    per_class = []
    for i in range(k):
        flags = []
        tp = int(diag[i])
        if col_sums[i] > 0:
            precision = tp / int(col_sums[i])
        else:
            precision = 0.0
            flags.append("precision_zero_denominator")
        if row_sums[i] > 0:
            recall = tp / int(row_sums[i])
        else:
            recall = 0.0
            flags.append("recall_zero_denominator")
        if precision + recall > 0:
            f1 = 2.0 * precision * recall / (precision + recall)
        else:
            f1 = 0.0
            flags.append("f1_zero_denominator")
        per_class.append(
            ClassMetrics(names[i], precision, recall, f1, int(row_sums[i]), tuple(flags))
        )

    return ClassReport(
        per_class=tuple(per_class),
        macro_precision=float(np.mean([c.precision for c in per_class])),
        macro_recall=float(np.mean([c.recall for c in per_class])),
        macro_f1=float(np.mean([c.f1 for c in per_class])),
        accuracy=cm.trace / total,
    )


def _micro_flatten(truth, scores) -> tuple[np.ndarray, np.ndarray]:
    """Pool the S*K one-vs-rest binary instances: indicator vs score."""
    t = as_label_array(truth)
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != t.shape[0]:
        raise InvalidConfig(f"scores shape {s.shape} does not match {t.shape[0]} labels")
    if not np.all(np.isfinite(s)):
        raise InvalidConfig("non-finite score")
    k = s.shape[1]
    if t.min() < 0 or t.max() >= k:
        raise LabelOutOfRange(f"label outside [0, {k})")
    y = (t[:, None] == np.arange(k)[None, :]).ravel().astype(np.int64)
    return y, s.ravel()


def _threshold_counts(y: np.ndarray, scores: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cumulative TP/FP after each distinct-score threshold step.

    Equal scores are processed as a single step, so ties never split a
    threshold.
    """
    order = np.argsort(-scores, kind="stable")
    y = y[order]
    scores = scores[order]
    boundary = np.nonzero(np.diff(scores))[0]
    last = np.concatenate([boundary, [y.size - 1]])
    tps = np.cumsum(y)[last]
    fps = (last + 1) - tps
    return tps, fps


def roc_curve_micro(truth, scores) -> CurveSeries:
    """Micro-averaged ROC curve with trapezoidal AUC.

    Points are (FPR, TPR) at every distinct score threshold, anchored at
    (0, 0); sweeping all thresholds ends at (1, 1).
    """
    y, s = _micro_flatten(truth, scores)
    pos = int(y.sum())
    neg = y.size - pos
    if pos == 0 or neg == 0:
        raise InvalidConfig("micro ROC needs at least one positive and one negative")
    tps, fps = _threshold_counts(y, s)
    tpr = np.concatenate([[0.0], tps / pos])
    fpr = np.concatenate([[0.0], fps / neg])
    auc = float(np.trapezoid(tpr, fpr))
    return CurveSeries(points=np.column_stack([fpr, tpr]), summary=auc)


def pr_curve_micro(truth, scores) -> CurveSeries:
    """Micro-averaged precision-recall curve.

    Average precision is the step-wise sum  AP = sum_n (R_n - R_{n-1}) * P_n
    over distinct thresholds, with R_0 = 0 and no interpolation.
    """
    y, s = _micro_flatten(truth, scores)
    pos = int(y.sum())
    if pos == 0:
        raise InvalidConfig("micro PR needs at least one positive")
    tps, fps = _threshold_counts(y, s)
    recall = tps / pos
    precision = tps / (tps + fps)
    ap = float(np.sum(np.diff(np.concatenate([[0.0], recall])) * precision))
    return CurveSeries(points=np.column_stack([recall, precision]), summary=ap)


def _chi2_sf_df1(x: float) -> float:
    # survival of chi-square with one degree of freedom: the regularized
    # upper incomplete gamma Q(1/2, x/2), which reduces to erfc(sqrt(x/2))
    return math.erfc(math.sqrt(x / 2.0))


def _exact_binomial_two_sided(b: int, c: int) -> float:
    n = b + c
    k = min(b, c)
    tail = sum(math.comb(n, i) for i in range(k + 1)) / 2.0**n
    return min(1.0, 2.0 * tail)


def mcnemar(truth, pred_a, pred_b) -> McNemarResult:
    """Paired test on the discordant counts of two classifiers.

    b = A correct and B wrong, c = A wrong and B correct. For b + c >= 25
    the continuity-corrected chi-square approximation is used, below that
    the exact two-sided binomial test on (min(b, c), b + c, theta = 1/2).
    b + c = 0 means the models are indistinguishable (p = 1).
    """
    t = as_label_array(truth)
    a = as_label_array(pred_a)
    bb = as_label_array(pred_b)
    if not (t.shape == a.shape == bb.shape):
        raise InvalidConfig("mcnemar inputs must have equal lengths")
    a_ok = a == t
    b_ok = bb == t
    b = int(np.sum(a_ok & ~b_ok))
    c = int(np.sum(~a_ok & b_ok))
    if b + c == 0:
        return McNemarResult(b, c, 0.0, 1.0, "exact_binomial")
    if b + c >= 25:
        statistic = (abs(b - c) - 1) ** 2 / (b + c)
        return McNemarResult(b, c, float(statistic), _chi2_sf_df1(statistic), "chi2_corrected")
    return McNemarResult(
        b, c, float(min(b, c)), _exact_binomial_two_sided(b, c), "exact_binomial"
    )
