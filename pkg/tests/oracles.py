"""Independent brute-force oracles used to freeze expected values.

Everything here is deliberately written as plain loops over definitions,
sharing no code with the package implementations it checks.
"""

from __future__ import annotations

import numpy as np
from scipy.special import chdtrc
from scipy.stats import binomtest


def auc_pairwise(y: np.ndarray, scores: np.ndarray) -> float:
    """AUC as (#concordant + 0.5 * #ties) / (#positive-negative pairs)."""
    pos = scores[y == 1]
    neg = scores[y == 0]
    concordant = 0.0
    for p in pos:
        for n in neg:
            if p > n:
                concordant += 1.0
            elif p == n:
                concordant += 0.5
    return concordant / (len(pos) * len(neg))


def ap_threshold_sweep(y: np.ndarray, scores: np.ndarray) -> float:
    """Average precision as the step sum over every distinct threshold."""
    thresholds = sorted(set(scores.tolist()), reverse=True)
    total_pos = int(np.sum(y == 1))
    ap = 0.0
    prev_recall = 0.0
    for threshold in thresholds:
        predicted = scores >= threshold
        tp = int(np.sum((y == 1) & predicted))
        fp = int(np.sum((y == 0) & predicted))
        recall = tp / total_pos
        precision = tp / (tp + fp)
        ap += (recall - prev_recall) * precision
        prev_recall = recall
    return ap


def micro_flatten(truth: np.ndarray, scores: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    s, k = scores.shape
    y = np.zeros(s * k, dtype=np.int64)
    flat = np.zeros(s * k)
    pos = 0
    for i in range(s):
        for j in range(k):
            y[pos] = 1 if truth[i] == j else 0
            flat[pos] = scores[i, j]
            pos += 1
    return y, flat


def prf_by_counting(truth: np.ndarray, predicted: np.ndarray, k: int):
    """Per-class precision/recall/F1 plus accuracy, by direct counting."""
    rows = []
    for c in range(k):
        tp = sum(1 for t, p in zip(truth, predicted) if t == c and p == c)
        fp = sum(1 for t, p in zip(truth, predicted) if t != c and p == c)
        fn = sum(1 for t, p in zip(truth, predicted) if t == c and p != c)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        rows.append((precision, recall, f1))
    accuracy = sum(1 for t, p in zip(truth, predicted) if t == p) / len(truth)
    return rows, accuracy


def chi2_sf_df1(x: float) -> float:
    """High-precision chi-square (df=1) survival function."""
    return float(chdtrc(1, x))


def binomial_two_sided(k: int, n: int) -> float:
    """Exact two-sided binomial test at theta = 1/2."""
    return float(binomtest(k, n, 0.5, alternative="two-sided").pvalue)


def grid_best_direct(stacked: np.ndarray, truth: np.ndarray, values) -> tuple[tuple, float]:
    """Plain-loop exhaustive lattice search (first-found ties win)."""
    import itertools

    best_w, best_acc = None, -1.0
    for w in itertools.product(values, repeat=stacked.shape[0]):
        agg = sum(wi * stacked[i] for i, wi in enumerate(w))
        labels = np.argmax(agg, axis=1)
        acc = float(np.mean(labels == truth))
        if acc > best_acc:
            best_acc, best_w = acc, w
    return best_w, best_acc
