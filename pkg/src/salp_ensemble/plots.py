"""Matplotlib figure rendering.

Figures are written as SVG: text output diffs cleanly and, with a pinned
hashsalt and no date metadata, regenerating from identical inputs produces
byte-identical files.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .core import CurveSeries

_SVG_METADATA = {"Date": None}
_RC = {
    "svg.hashsalt": "salp-ensemble",
    "figure.figsize": (5.0, 4.0),
    "axes.grid": True,
    "grid.alpha": 0.3,
}


def save_roc_svg(curve: CurveSeries, path, label: str = "ensemble") -> None:
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.plot(curve.points[:, 0], curve.points[:, 1], label=f"{label} (AUC = {curve.summary:.4f})")
        ax.plot([0, 1], [0, 1], linestyle="--", color="grey", linewidth=0.8)
        ax.set_xlabel("False positive rate")
        ax.set_ylabel("True positive rate")
        ax.set_title("ROC curve (micro-averaged)")
        ax.set_xlim(0, 1)
        ax.set_ylim(0, 1.02)
        ax.legend(loc="lower right")
        fig.savefig(path, format="svg", metadata=_SVG_METADATA)
        plt.close(fig)


def save_pr_svg(curve: CurveSeries, path, label: str = "ensemble") -> None:
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.plot(curve.points[:, 0], curve.points[:, 1], label=f"{label} (AP = {curve.summary:.4f})")
        ax.set_xlabel("Recall")
        ax.set_ylabel("Precision")
        ax.set_title("Precision-Recall curve (micro-averaged)")
        ax.set_xlim(0, 1)
        ax.set_ylim(0, 1.02)
        ax.legend(loc="lower left")
        fig.savefig(path, format="svg", metadata=_SVG_METADATA)
        plt.close(fig)


def save_convergence_svg(history, path) -> None:
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        iterations = [t for t, _ in history]
        fitness = [f for _, f in history]
        ax.step(iterations, fitness, where="post")
        ax.set_xlabel("Iteration")
        ax.set_ylabel("Best ensemble accuracy")
        ax.set_title("Swarm search convergence")
        fig.savefig(path, format="svg", metadata=_SVG_METADATA)
        plt.close(fig)
