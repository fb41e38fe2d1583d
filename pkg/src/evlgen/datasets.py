"""Synthetic dataset generators and plain-text dataset files.

Two families: mixtures of unit-variance Gaussians with uniformly placed
centers, and a noisy swiss roll in three dimensions.  Both are pure
functions of their parameters and a seed.  Files carry a two-line header
(generator metadata as JSON, then dim/count) followed by one
space-separated sample per line.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .numcore import Matrix, Rng, assert_finite

CENTER_RANGE = 6.0  # mixture centers are uniform on [-6, 6] per coordinate


@dataclass
class Dataset:
    points: Matrix
    dim: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        if self.points.ndim != 2:
            raise ValueError("points must be an n x d array")
        if self.points.shape[1] != self.dim:
            raise ValueError(
                f"points are {self.points.shape[1]}-d but dim says {self.dim}"
            )
        assert_finite(self.points, "dataset points")

    @property
    def n(self) -> int:
        return self.points.shape[0]


def make_gaussian_mixture(dim: int, n_modes: int, seed: int, n: int) -> Dataset:
    """Equal-weight mixture of unit Gaussians, centers uniform on [-6, 6]^dim.

    Centers, mode choices, and noise come from separate child streams of the
    seed, so the center layout for a given (dim, n_modes, seed) is stable no
    matter how many samples are requested.
    """
    if not 1 <= dim <= 4:
        raise ValueError("dim must be between 1 and 4")
    if n_modes < 1:
        raise ValueError("n_modes must be at least 1")
    if n < 1:
        raise ValueError("n must be at least 1")
    root = Rng(seed)
    centers = (
        root.child(0).uniform(n_modes * dim).reshape(n_modes, dim) * 2.0 - 1.0
    ) * CENTER_RANGE
    modes = root.child(1).integers(0, n_modes, n)
    noise = root.child(2).gaussian(n * dim).reshape(n, dim)
    points = centers[modes] + noise
    meta = {
        "generator": "gaussian_mixture",
        "dim": dim,
        "n_modes": n_modes,
        "seed": seed,
        "n": n,
        "centers": centers.tolist(),
    }
    return Dataset(points, dim, meta)


def swiss_roll_coords(u, v):
    """Noiseless unscaled spiral point(s) for parameters in [0, 1]."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    t = 1.5 * math.pi * (1.0 + 2.0 * u)
    return np.stack([t * np.cos(t), 21.0 * v, t * np.sin(t)], axis=-1)


def make_swiss_roll(n: int, noise: float = 0.1, scale: float = 0.5,
                    seed: int = 0) -> Dataset:
    """Classic swiss-roll surface with Gaussian jitter, then scaled."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if noise < 0.0:
        raise ValueError("noise must be nonnegative")
    root = Rng(seed)
    uv = root.child(0)
    u = uv.uniform(n)
    v = uv.uniform(n)
    eps = root.child(1).gaussian(n * 3).reshape(n, 3) * noise
    points = scale * (swiss_roll_coords(u, v) + eps)
    meta = {
        "generator": "swiss_roll",
        "dim": 3,
        "seed": seed,
        "n": n,
        "noise": noise,
        "scale": scale,
    }
    return Dataset(points, 3, meta)


def save_dataset(path, ds: Dataset) -> None:
    """Write the two-line header and one %.17g-formatted sample per line."""
    with open(path, "w") as f:
        f.write("# " + json.dumps(ds.meta, sort_keys=True) + "\n")
        f.write(f"# dim={ds.dim} count={ds.n}\n")
        for row in ds.points:
            f.write(" ".join("%.17g" % v for v in row) + "\n")


def load_dataset(path) -> Dataset:
    """Parse a dataset file; malformed input raises with the offending line."""
    with open(path) as f:
        lines = f.read().splitlines()
    if not lines:
        raise ValueError(f"{path}: empty file")
    if len(lines) < 2:
        raise ValueError(f"{path}: line 2: missing dim/count header")
    if not lines[0].startswith("# "):
        raise ValueError(f"{path}: line 1: expected '# ' metadata header")
    try:
        meta = json.loads(lines[0][2:])
    except json.JSONDecodeError as e:
        raise ValueError(f"{path}: line 1: bad metadata JSON: {e}") from None
    fields = lines[1].removeprefix("# ").split()
    try:
        parts = dict(kv.split("=", 1) for kv in fields)
        dim = int(parts["dim"])
        count = int(parts["count"])
    except (ValueError, KeyError):
        raise ValueError(
            f"{path}: line 2: expected '# dim=D count=N', got {lines[1]!r}"
        ) from None

    rows = np.empty((count, dim))
    body = lines[2:]
    if len(body) != count:
        raise ValueError(
            f"{path}: header promises {count} samples but file has {len(body)}"
        )
    for i, line in enumerate(body):
        tokens = line.split()
        if len(tokens) != dim:
            raise ValueError(
                f"{path}: line {i + 3}: expected {dim} values, got {len(tokens)}"
            )
        try:
            rows[i] = [float(t) for t in tokens]
        except ValueError:
            raise ValueError(f"{path}: line {i + 3}: non-numeric value") from None
    return Dataset(rows, dim, meta)
