"""Readers for the evaluation harness's output files.

Two formats come in: the results CSV (fixed column set, one scored cell
per row) and sample dumps (whitespace-separated coordinates, one point
per line, optional '#' header lines). Everything here parses; nothing
writes back.
"""

import csv

import numpy as np

# the harness's results schema, verbatim; anything else is rejected
RESULT_COLUMNS = [
    "model", "dataset", "dim", "modes", "seed", "train_size",
    "kl", "fisher", "binning", "config_hash", "seconds",
]


def read_results(path) -> list:
    """Load a results CSV into typed row dicts.

    The header must match RESULT_COLUMNS exactly; a file with zero data
    rows is also an error since there is nothing to plot.
    """
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != RESULT_COLUMNS:
            raise ValueError(
                f"{path}: header {reader.fieldnames} does not match the "
                f"results schema {RESULT_COLUMNS}"
            )
        rows = []
        for rec in reader:
            rows.append({
                "model": rec["model"], "dataset": rec["dataset"],
                "dim": int(rec["dim"]), "modes": int(rec["modes"]),
                "seed": int(rec["seed"]), "train_size": int(rec["train_size"]),
                "kl": float(rec["kl"]), "fisher": float(rec["fisher"]),
                "binning": rec["binning"], "config_hash": rec["config_hash"],
                "seconds": float(rec["seconds"]),
            })
    if not rows:
        raise ValueError(f"{path}: no result rows")
    return rows


def read_dump(path) -> np.ndarray:
    """Read a sample dump (or dataset file) into an (n, dim) array.

    Blank lines and '#' comment lines are skipped, so both plain dumps
    and dataset files with their two-line header parse.
    """
    rows = []
    width = None
    with open(path) as f:
        for i, line in enumerate(f):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            try:
                vals = [float(t) for t in text.split()]
            except ValueError:
                raise ValueError(f"{path}: line {i + 1}: non-numeric value") from None
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise ValueError(f"{path}: line {i + 1}: expected {width} columns")
            rows.append(vals)
    if not rows:
        raise ValueError(f"{path}: no samples")
    return np.array(rows)
