"""Produce results/acceptance.csv, the evaluation grid the acceptance tests read.

Covers the full gaussian grid (4 dims x 4 mode counts x 5 seeds x 3 models),
the small-train-set study (5e3 points, 4d, 4 modes), and the swiss roll cells.
Rows are appended as they finish, so an interrupted run can be resumed: cells
already present in the CSV are skipped.

Expect a few hours of wall time on one core; almost all of it is the 90
network trainings and their rejection-sampling passes.
"""

import argparse
import sys
import time
from pathlib import Path

from evlgen.harness import (
    RunConfig,
    append_csv_row,
    build_suite_cells,
    read_csv_rows,
    run_cell,
    _sidecar_config,
)


def acceptance_cells() -> list[RunConfig]:
    cells = build_suite_cells()
    cells += build_suite_cells(families=("gaussians",), dims=(4,), modes=(4,), train_size=5_000)
    return cells


def cell_key(c: RunConfig) -> tuple:
    return (c.model, c.family, c.dim, c.modes, c.seed, c.train_size)


def row_key(r: dict) -> tuple:
    return (r["model"], r["dataset"], int(r["dim"]), int(r["modes"]), int(r["seed"]),
            int(r["train_size"]))


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/acceptance.csv")
    args = ap.parse_args(argv)

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)

    done = set()
    if out.exists():
        done = {row_key(r) for r in read_csv_rows(out)}

    cells = [c for c in acceptance_cells() if cell_key(c) not in done]
    total = len(cells)
    print(f"{len(done)} cells already in {out}, {total} to run", flush=True)

    t0 = time.time()
    failures = 0
    for i, cfg in enumerate(cells, 1):
        row = run_cell(cfg)
        append_csv_row(out, row)
        _sidecar_config(out, cfg)
        if row["kl"] != row["kl"]:  # NaN marks a failed cell
            failures += 1
        elapsed = time.time() - t0
        eta = elapsed / i * (total - i)
        print(f"[{i}/{total}] {cfg.model} {cfg.family} d={cfg.dim} m={cfg.modes} "
              f"s={cfg.seed} n={cfg.train_size} kl={row['kl']:.5g} "
              f"({row['seconds']:.0f}s, eta {eta/60:.0f}m)", flush=True)

    print(f"done: {total} cells in {(time.time() - t0)/60:.1f} min, {failures} failures")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
