"""Figure builders: grouped divergence bars and scatter-grid panels.

Both draw strictly from files the evaluation harness already wrote.
No metric is ever recomputed here; a bar's height is the mean of the
numbers in the CSV and nothing else.
"""

import warnings
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .io import read_dump, read_results

KINDS = ("bars", "scatter-grid")
METRICS = ("kl", "fisher")
METRIC_LABEL = {"kl": "KL divergence", "fisher": "Fisher metric"}

# fixed bar order within a mode-count group
MODEL_ORDER = ("empirical", "gmm", "evl")
MODEL_LABEL = {
    "empirical": "Empirical",
    "gmm": "Gaussian mixture",
    "evl": "Extreme value net",
}

# scatter panels get thinned to this many points
MAX_SCATTER_POINTS = 20_000


@dataclass(frozen=True)
class FigureSpec:
    """One figure request: input files, what to draw, where to put it.

    ``inputs`` holds a single results CSV for kind "bars" and one sample
    dump per panel for kind "scatter-grid". The metric only matters for
    bars; it selects which CSV column the heights come from.
    """

    inputs: tuple
    kind: str
    out: str
    metric: str = "kl"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.metric not in METRICS:
            raise ValueError(f"metric must be one of {METRICS}, got {self.metric!r}")
        if not self.inputs:
            raise ValueError("at least one input file is required")
        if self.kind == "bars" and len(self.inputs) != 1:
            raise ValueError("bars takes exactly one results CSV")


def render(spec: FigureSpec) -> Path:
    if spec.kind == "bars":
        return plot_bars(spec.inputs[0], spec.metric, spec.out)
    return plot_scatter_grid(spec.inputs, spec.out)


def bar_cells(rows, metric: str) -> dict:
    """Aggregate result rows into the plotted quantities.

    Returns {(dim, modes, model): (mean, std, n_seeds)} with the mean and
    population std taken over whatever seeds the CSV holds for that cell.
    """
    groups: dict = {}
    for r in rows:
        groups.setdefault((r["dim"], r["modes"], r["model"]), []).append(r[metric])
    return {
        key: (float(np.mean(v)), float(np.std(v)), len(v))
        for key, v in groups.items()
    }


def _mode_sweep_rows(rows, path) -> list:
    """The bar chart covers the mode-count sweep, so drop everything else."""
    rows = [r for r in rows if r["dataset"] == "gaussians"]
    if not rows:
        raise ValueError(f"{path}: no mode-sweep rows to plot")
    sizes = Counter(r["train_size"] for r in rows)
    if len(sizes) > 1:
        # a side-study at another training size would skew its cell's mean
        keep = max(sizes.items(), key=lambda kv: (kv[1], kv[0]))[0]
        warnings.warn(
            f"mixed train sizes {sorted(sizes)}; plotting train_size={keep}")
        rows = [r for r in rows if r["train_size"] == keep]
    return rows


def bars_figure(csv_path, metric: str):
    """Build the grouped-bar figure for one metric, one panel per dimension."""
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}, got {metric!r}")
    rows = _mode_sweep_rows(read_results(csv_path), csv_path)
    dims = sorted({r["dim"] for r in rows})
    mode_counts = sorted({r["modes"] for r in rows})
    cells = bar_cells(rows, metric)

    fig, axes = plt.subplots(
        1, len(dims), figsize=(3.6 * len(dims), 3.2), squeeze=False)
    width = 0.8 / len(MODEL_ORDER)
    for ax, dim in zip(axes[0], dims):
        for j, model in enumerate(MODEL_ORDER):
            xs, heights, spreads = [], [], []
            for i, modes in enumerate(mode_counts):
                cell = cells.get((dim, modes, model))
                if cell is None:
                    warnings.warn(
                        f"no rows for dim={dim} modes={modes} model={model}; "
                        "bar omitted")
                    continue
                xs.append(i + (j - (len(MODEL_ORDER) - 1) / 2) * width)
                heights.append(cell[0])
                spreads.append(cell[1])
            ax.bar(xs, heights, width=width, yerr=spreads, capsize=2,
                   label=MODEL_LABEL[model])
        ax.set_yscale("log")
        ax.set_xticks(range(len(mode_counts)))
        ax.set_xticklabels(str(m) for m in mode_counts)
        ax.set_xlabel("modes")
        ax.set_title(f"{dim}-d")
    axes[0][0].set_ylabel(METRIC_LABEL[metric])
    axes[0][-1].legend(fontsize=8)
    fig.tight_layout()
    return fig


def plot_bars(csv_path, metric: str, out_path) -> Path:
    fig = bars_figure(csv_path, metric)
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return Path(out_path)


def _thin(points: np.ndarray) -> np.ndarray:
    if len(points) <= MAX_SCATTER_POINTS:
        return points
    idx = np.linspace(0, len(points) - 1, MAX_SCATTER_POINTS).astype(int)
    return points[idx]


def scatter_figure(sample_paths, labels=None):
    """Build the panel grid: each 3-d dump projected onto coordinates 1 and 3.

    Those are the two varying axes of the roll; panels are lettered a), b),
    ... in input order, titled by ``labels`` (file stems by default).
    """
    paths = [str(p) for p in sample_paths]
    if not paths:
        raise ValueError("no sample files given")
    if labels is None:
        labels = [Path(p).stem for p in paths]
    if len(labels) != len(paths):
        raise ValueError(f"{len(paths)} files but {len(labels)} labels")
    clouds = []
    for p in paths:
        pts = read_dump(p)
        if pts.shape[1] != 3:
            raise ValueError(f"{p}: expected 3-d samples, got {pts.shape[1]}-d")
        clouds.append(_thin(pts))

    n = len(clouds)
    ncols = 2 if n > 1 else 1
    nrows = (n + ncols - 1) // ncols
    fig, axes = plt.subplots(
        nrows, ncols, figsize=(4.0 * ncols, 3.6 * nrows), squeeze=False,
        sharex=True, sharey=True)
    flat = axes.ravel()
    for i, (pts, label) in enumerate(zip(clouds, labels)):
        ax = flat[i]
        ax.scatter(pts[:, 0], pts[:, 2], s=2.0, alpha=0.4, linewidths=0)
        ax.set_title(f"{chr(ord('a') + i)}) {label}", fontsize=10)
        ax.set_xlabel("coordinate 1")
        ax.set_ylabel("coordinate 3")
    for ax in flat[n:]:
        ax.set_visible(False)
    fig.tight_layout()
    return fig


def plot_scatter_grid(sample_paths, out_path, labels=None) -> Path:
    fig = scatter_figure(sample_paths, labels)
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return Path(out_path)
