"""Offline figure scripts for evaluation results and sample dumps."""

from .figures import FigureSpec, plot_bars, plot_scatter_grid, render
from .io import RESULT_COLUMNS, read_dump, read_results

__all__ = [
    "FigureSpec",
    "RESULT_COLUMNS",
    "plot_bars",
    "plot_scatter_grid",
    "read_dump",
    "read_results",
    "render",
]
