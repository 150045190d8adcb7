"""
SVG figures for the report, PCA and Lasso commands.

Figures are built with matplotlib's object API (no pyplot state) and saved
with a fixed hash salt and no date stamp, so reruns give identical files.
"""

from pathlib import Path

import matplotlib
import numpy as np
import pandas as pd
from matplotlib.figure import Figure

from .pca import PcaResult

SVG_RC = {"svg.hashsalt": "hitting-reliability", "svg.fonttype": "none"}

# zoomed points are nudged by up to this share of each axis span
JITTER_FRACTION = 0.01
JITTER_SEED = 0


def _save(fig: Figure, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with matplotlib.rc_context(SVG_RC):
        fig.savefig(path, format="svg", metadata={"Date": None})
    return path


def _normality_colors(flags: pd.Series) -> list[str]:
    # red: approximately normal, black: not (or unknown)
    return ["red" if not pd.isna(v) and bool(v) else "black" for v in flags]


def jitter(values: np.ndarray, span: float, rng: np.random.Generator) -> np.ndarray:
    """Uniform offsets of at most JITTER_FRACTION * span."""
    values = np.asarray(values, dtype=float)
    return values + rng.uniform(-JITTER_FRACTION, JITTER_FRACTION, size=values.shape) * span


def signal_scatter(
    table: pd.DataFrame,
    path: Path,
    min_p1: float,
    min_neg_entropy: float,
    zoom: bool = False,
) -> Path:
    """
    p1_hat against neg_entropy, one labelled point per metric.

    The dotted rectangle marks the high-signal region. With zoom=True the
    axes are limited to that rectangle and the points inside it are
    jittered from a fixed seed.
    """
    fig = Figure(figsize=(7, 6))
    ax = fig.add_subplot()

    shown = table
    x = table["neg_entropy"].to_numpy(dtype=float)
    y = table["p1_hat"].to_numpy(dtype=float)
    if zoom:
        inside = ((table["p1_hat"] >= min_p1) & (table["neg_entropy"] >= min_neg_entropy)).to_numpy()
        shown = table[inside]
        rng = np.random.default_rng(JITTER_SEED)
        x = jitter(x[inside], -min_neg_entropy, rng)
        y = jitter(y[inside], 1.0 - min_p1, rng)
        ax.set_xlim(min_neg_entropy, 0.0)
        ax.set_ylim(min_p1, 1.0)
    else:
        ax.set_xlim(np.log(0.5), 0.0)
        ax.set_ylim(0.0, 1.0)
        ax.plot(
            [min_neg_entropy, 0.0, 0.0, min_neg_entropy, min_neg_entropy],
            [min_p1, min_p1, 1.0, 1.0, min_p1],
            linestyle=":",
            color="grey",
        )

    ax.scatter(x, y, c=_normality_colors(shown["approx_normal"]), s=18)
    for metric, px, py in zip(shown["metric"], x, y):
        ax.annotate(str(metric), (px, py), fontsize=7, xytext=(3, 3), textcoords="offset points")

    ax.set_xlabel("negative entropy (-H)")
    ax.set_ylabel("p1 (posterior mean)")
    ax.set_title("High-signal metrics" if zoom else "Signal across metrics")
    return _save(fig, path)


def lasso_scatter(table: pd.DataFrame, path: Path) -> Path:
    """Lasso% against p1_hat (left) and against neg_entropy (right)."""
    fig = Figure(figsize=(11, 5))
    left, right = fig.subplots(1, 2)
    colors = _normality_colors(table["approx_normal"]) if "approx_normal" in table else "black"

    left.scatter(table["p1_hat"], table["lasso_pct"], c=colors, s=18)
    left.set_xlabel("p1 (posterior mean)")
    left.set_ylabel("Lasso %")

    right.scatter(table["neg_entropy"], table["lasso_pct"], c=colors, s=18)
    right.set_xlabel("negative entropy (-H)")
    right.set_ylabel("Lasso %")

    for ax, x in ((left, "p1_hat"), (right, "neg_entropy")):
        for _, row in table.iterrows():
            ax.annotate(str(row["metric"]), (row[x], row["lasso_pct"]), fontsize=7,
                        xytext=(3, 3), textcoords="offset points")
    return _save(fig, path)


def spectrum_plot(results: dict[str, PcaResult], path: Path) -> Path:
    """
    One panel per metric set: observed variance (black), permutation band
    (grey) and bootstrap interval (red) per component.
    """
    fig = Figure(figsize=(5 * max(len(results), 1), 4.5))
    axes = np.atleast_1d(fig.subplots(1, max(len(results), 1)))
    for ax, (name, result) in zip(axes, results.items()):
        k = np.arange(1, len(result.eigenvalues) + 1)
        ax.plot(k, result.eigenvalues, color="black", marker="o", markersize=3, label="observed")
        if result.null_band is not None:
            ax.plot(k, result.null_band, color="grey", label="permutation band")
        if result.bootstrap_low is not None and result.bootstrap_high is not None:
            ax.plot(k, result.bootstrap_low, color="red", linestyle="--", label="bootstrap")
            ax.plot(k, result.bootstrap_high, color="red", linestyle="--")
        ax.set_title(f"{name} ({len(result.metrics)} metrics)")
        ax.set_xlabel("component")
        ax.set_ylabel("variance")
        ax.legend(fontsize=7)
    return _save(fig, path)
