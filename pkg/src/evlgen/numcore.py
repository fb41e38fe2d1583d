"""Seeded random number generation and dense linear algebra primitives.

All numeric data is carried as float64 numpy arrays: a Matrix is a 2-d
row-major array, a Vector is 1-d. Randomness comes from :class:`Rng`,
a thin deterministic wrapper around numpy's PCG64 bit generator:

* uniforms are PCG64's standard 53-bit doubles in [0, 1),
* normal draws use the Marsaglia polar transform of those uniforms,
* child streams are derived from (seed, index path) via ``SeedSequence``,
  so independent sub-streams for parallel runs are reproducible from the
  master seed alone.

Identical seeds produce bit-identical streams for a given numpy version.
"""

from __future__ import annotations

import numpy as np

# Type aliases used across the package; plain ndarrays, float64.
Matrix = np.ndarray
Vector = np.ndarray


class Rng:
    """Deterministic random stream addressed by ``(seed, *path)``.

    ``child(i)`` derives an independent sub-stream; the derivation only
    depends on the seed and the index path, never on how much of the
    parent stream has been consumed.
    """

    def __init__(self, seed: int, _path: tuple[int, ...] = ()):
        self.seed = int(seed)
        self.path = tuple(int(p) for p in _path)
        # spawn_key (not extra entropy words) keeps (seed,) and (seed, 0)
        # distinct: SeedSequence zero-pads its entropy pool
        ss = np.random.SeedSequence(self.seed, spawn_key=self.path)
        self._gen = np.random.Generator(np.random.PCG64(ss))

    def __repr__(self) -> str:
        return f"Rng(seed={self.seed}, path={self.path})"

    def child(self, *indices: int) -> "Rng":
        """Independent sub-stream for run/branch ``indices``."""
        return Rng(self.seed, self.path + tuple(indices))

    def uniform(self, n: int) -> Vector:
        """``n`` doubles uniform in [0, 1)."""
        return self._gen.random(n)

    def integers(self, low: int, high: int, n: int) -> np.ndarray:
        """``n`` integers uniform in [low, high)."""
        return self._gen.integers(low, high, size=n)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def gaussian(self, n: int) -> Vector:
        return gaussian(self, n)

    def categorical(self, probs: Vector, n: int) -> np.ndarray:
        """``n`` indices drawn from the discrete distribution ``probs``.

        Inverse-CDF sampling: one uniform per draw against the cumulative
        sums of ``probs`` (which must be nonnegative, summing to ~1).
        """
        cdf = np.cumsum(np.asarray(probs, dtype=np.float64))
        idx = np.searchsorted(cdf, self.uniform(n) * cdf[-1], side="right")
        return np.minimum(idx, len(cdf) - 1)


def gaussian(rng: Rng, n: int) -> Vector:
    """``n`` independent unit-normal draws via the Marsaglia polar method.

    Pairs (u, v) uniform on [-1, 1) are rejected unless 0 < s = u^2+v^2 < 1;
    accepted pairs yield u*sqrt(-2 ln s / s) and v*sqrt(-2 ln s / s).
    """
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    out = np.empty(n, dtype=np.float64)
    filled = 0
    while filled < n:
        need = n - filled
        # acceptance rate is pi/4, each accepted pair yields two normals
        m = max(int(need * 0.7) + 16, 32)
        u = rng.uniform(2 * m).reshape(2, m) * 2.0 - 1.0
        s = u[0] * u[0] + u[1] * u[1]
        ok = (s > 0.0) & (s < 1.0)
        f = np.sqrt(-2.0 * np.log(s[ok]) / s[ok])
        z = np.concatenate([u[0, ok] * f, u[1, ok] * f])
        take = min(z.size, need)
        out[filled : filled + take] = z[:take]
        filled += take
    return out


def matmul(a: Matrix, b: Matrix) -> Matrix:
    """Dense product of two 2-d float64 matrices."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError(f"matmul needs 2-d operands, got {a.ndim}-d and {b.ndim}-d")
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"inner dimensions differ: {a.shape} x {b.shape}")
    out = a @ b
    assert_finite(out, "matmul result")
    return out


def orthogonal_init(rows: int, cols: int, gain: float, rng: Rng) -> Matrix:
    """Random semi-orthogonal ``rows x cols`` matrix scaled by ``gain``.

    A Gaussian matrix is QR-orthonormalized along its smaller dimension:
    if rows <= cols then W @ W.T == gain^2 * I, else W.T @ W == gain^2 * I.
    The R-diagonal sign fix makes the draw unique for a given stream.
    """
    if rows < 1 or cols < 1:
        raise ValueError(f"need positive dims, got ({rows}, {cols})")
    tall, short = max(rows, cols), min(rows, cols)
    g = gaussian(rng, tall * short).reshape(tall, short)
    q, r = np.linalg.qr(g)
    sign = np.sign(np.diag(r))
    sign[sign == 0] = 1.0
    q = q * sign
    w = q if rows > cols else q.T
    w = gain * w
    assert_finite(w, "orthogonal_init result")
    return np.ascontiguousarray(w)


def assert_finite(arr: np.ndarray, what: str = "array") -> None:
    if not np.isfinite(arr).all():
        raise ValueError(f"{what} contains non-finite entries")
