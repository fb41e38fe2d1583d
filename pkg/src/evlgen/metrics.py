"""Histogramming and histogram-space divergences.

Model quality is scored by binning a large generated sample and the test
set on one shared grid, then comparing the two discrete distributions with
a regularized KL divergence and with the angle between their square-root
vectors (a bounded metric that stays finite when supports disagree).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .numcore import Matrix

GAUSS_RANGE = 9.0
DEFAULT_BINS = {1: 128, 2: 64, 3: 32, 4: 16}
KL_REG = 1e-32


@dataclass(frozen=True)
class GridSpec:
    """Uniform binning grid: per-dimension (lo, hi) ranges and bin counts."""

    lo: tuple
    hi: tuple
    bins: tuple

    def __post_init__(self):
        if not (len(self.lo) == len(self.hi) == len(self.bins)):
            raise ValueError("lo, hi, bins must have one entry per dimension")
        for lo, hi, b in zip(self.lo, self.hi, self.bins):
            if not lo < hi:
                raise ValueError(f"empty range [{lo}, {hi})")
            if b < 1:
                raise ValueError("each dimension needs at least one bin")

    @property
    def dim(self) -> int:
        return len(self.bins)

    @property
    def total_bins(self) -> int:
        return int(np.prod(self.bins))

    def edges(self, axis: int) -> np.ndarray:
        return np.linspace(self.lo[axis], self.hi[axis], self.bins[axis] + 1)

    @classmethod
    def regular(cls, dim: int, half_range: float = GAUSS_RANGE,
                bins_per_dim: int = None) -> "GridSpec":
        """Symmetric fixed grid for the Gaussian suites.

        Bin counts shrink with dimension so the total stays at or below
        65536 and a 4e5-point sample keeps several points per occupied bin.
        """
        if bins_per_dim is None:
            if dim not in DEFAULT_BINS:
                raise ValueError(f"no default bin count for dim {dim}")
            bins_per_dim = DEFAULT_BINS[dim]
        return cls(
            tuple([-half_range] * dim),
            tuple([half_range] * dim),
            tuple([bins_per_dim] * dim),
        )

    @classmethod
    def from_samples(cls, samples: Matrix, bins_per_dim: int = 32,
                     expand: float = 0.01) -> "GridSpec":
        """Grid hugging a reference sample: per-dim min/max grown by `expand`.

        Half the expansion goes to each side, so the extreme samples land
        strictly inside the half-open outer bins.
        """
        samples = np.asarray(samples, dtype=np.float64)
        if samples.ndim != 2 or samples.shape[0] == 0:
            raise ValueError("need a nonempty n x d sample to size the grid")
        lo = samples.min(axis=0)
        hi = samples.max(axis=0)
        pad = 0.5 * expand * (hi - lo)
        pad = np.where(pad > 0.0, pad, 1e-9)
        return cls(
            tuple((lo - pad).tolist()),
            tuple((hi + pad).tolist()),
            tuple([bins_per_dim] * samples.shape[1]),
        )


@dataclass
class HistogramGrid:
    """Normalized bin masses over a GridSpec, with drop accounting."""

    spec: GridSpec
    mass: np.ndarray  # flat, length spec.total_bins, sums to 1
    total_in_range: int
    total_dropped: int

    def __post_init__(self):
        if self.mass.shape != (self.spec.total_bins,):
            raise ValueError("mass length must equal the total bin count")
        if np.any(self.mass < 0.0):
            raise ValueError("negative bin mass")
        if abs(float(self.mass.sum()) - 1.0) > 1e-10:
            raise ValueError("bin masses must sum to 1")


def histogram(samples: Matrix, spec: GridSpec, warn_threshold: float = 0.01) -> HistogramGrid:
    """Bin samples on the grid; out-of-range rows are dropped and counted.

    Bins are half-open [edge_k, edge_{k+1}): a sample exactly on an
    interior edge goes to the higher bin.  Mass is normalized over the
    in-range samples only.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 2 or samples.shape[1] != spec.dim:
        raise ValueError(f"samples must be n x {spec.dim} for this grid")
    n = samples.shape[0]
    idx = np.empty((n, spec.dim), dtype=np.int64)
    in_range = np.ones(n, dtype=bool)
    for j in range(spec.dim):
        k = np.searchsorted(spec.edges(j), samples[:, j], side="right") - 1
        in_range &= (k >= 0) & (k < spec.bins[j])
        idx[:, j] = np.clip(k, 0, spec.bins[j] - 1)
    kept = int(in_range.sum())
    dropped = n - kept
    if kept == 0:
        raise ValueError("no samples fall inside the grid")
    if n > 0 and dropped / n > warn_threshold:
        warnings.warn(
            f"{dropped} of {n} samples ({100 * dropped / n:.1f}%) fall outside "
            f"the histogram range", stacklevel=2)
    flat = np.ravel_multi_index(idx[in_range].T, spec.bins)
    counts = np.bincount(flat, minlength=spec.total_bins)
    return HistogramGrid(spec, counts / kept, kept, dropped)


def _check_same_grid(p: HistogramGrid, q: HistogramGrid):
    if p.spec != q.spec:
        raise ValueError("histograms use different grids; divergences undefined")


def kl_divergence(p: HistogramGrid, q: HistogramGrid, reg: float = KL_REG) -> float:
    """Regularized KL(p || q) in nats.

    A virtual mass `reg` is mixed into every bin and the result
    renormalized, so empty q-bins cost -log(reg)-ish rather than infinity
    and the Gibbs inequality holds exactly.
    """
    _check_same_grid(p, q)
    b = p.spec.total_bins
    pt = (p.mass + reg) / (1.0 + b * reg)
    qt = (q.mass + reg) / (1.0 + b * reg)
    return float(np.sum(pt * (np.log(pt) - np.log(qt))))


def fisher_metric(p: HistogramGrid, q: HistogramGrid, form: str = "angle") -> float:
    """Distance between sqrt-histograms on the unit sphere, in [0, pi].

    The default "angle" form is 2*arccos(sum_i sqrt(p_i q_i)), which is 0
    for identical histograms and pi for disjoint supports.  The
    "paper_literal" form instead returns 2*arccos(1 - sum_i sqrt(p_i q_i));
    it is kept for comparison but is not a metric (identical histograms
    score pi).
    """
    _check_same_grid(p, q)
    bc = float(np.sqrt(p.mass * q.mass).sum())
    bc = min(max(bc, 0.0), 1.0)
    if form == "angle":
        return 2.0 * math.acos(bc)
    if form == "paper_literal":
        return 2.0 * math.acos(min(max(1.0 - bc, -1.0), 1.0))
    raise ValueError(f"unknown fisher form {form!r}")


def sample_histogram(grid: HistogramGrid, rng, n: int) -> Matrix:
    """Draw n points from the piecewise-uniform density the grid encodes.

    A bin is chosen per point from the bin masses, then the point is placed
    uniformly inside that bin's box. This is how the empirical baseline
    produces sample dumps; its divergence numbers never go through this
    (the histogram is compared mass-to-mass).
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    spec = grid.spec
    flat = rng.categorical(grid.mass, n)
    idx = np.unravel_index(flat, spec.bins)
    out = np.empty((n, spec.dim))
    for j in range(spec.dim):
        width = (spec.hi[j] - spec.lo[j]) / spec.bins[j]
        out[:, j] = spec.lo[j] + (idx[j] + rng.uniform(n)) * width
    return out


def save_histogram(path, grid: HistogramGrid) -> None:
    """Plain-text dump: per-dimension ranges, drop counts, then flat masses."""
    with open(path, "w") as f:
        f.write(f"# histogram dims={grid.spec.dim}\n")
        for j in range(grid.spec.dim):
            f.write(
                "# dim %d: lo=%.17g hi=%.17g bins=%d\n"
                % (j, grid.spec.lo[j], grid.spec.hi[j], grid.spec.bins[j])
            )
        f.write(f"# in_range={grid.total_in_range} dropped={grid.total_dropped}\n")
        for v in grid.mass:
            f.write("%.17g\n" % v)


def load_histogram(path) -> HistogramGrid:
    with open(path) as f:
        lines = f.read().splitlines()
    if not lines or not lines[0].startswith("# histogram dims="):
        raise ValueError(f"{path}: not a histogram dump")
    dim = int(lines[0].split("dims=")[1])
    lo, hi, bins = [], [], []
    for j in range(dim):
        parts = dict(
            kv.split("=", 1) for kv in lines[1 + j].removeprefix(f"# dim {j}: ").split()
        )
        lo.append(float(parts["lo"]))
        hi.append(float(parts["hi"]))
        bins.append(int(parts["bins"]))
    counts = dict(kv.split("=", 1) for kv in lines[1 + dim].removeprefix("# ").split())
    mass = np.array([float(v) for v in lines[2 + dim :]])
    return HistogramGrid(
        GridSpec(tuple(lo), tuple(hi), tuple(bins)),
        mass,
        int(counts["in_range"]),
        int(counts["dropped"]),
    )
