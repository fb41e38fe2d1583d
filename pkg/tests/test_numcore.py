import numpy as np
import pytest

from evlgen.numcore import Rng, gaussian, matmul, orthogonal_init


class TestMatmul:
    def test_identity(self):
        rng = Rng(7)
        m = gaussian(rng, 9).reshape(3, 3)
        np.testing.assert_array_equal(matmul(np.eye(3), m), m)

    def test_hand_arithmetic(self):
        a = np.array([[1.0, 2.0], [3.0, 4.0]])
        b = np.array([[0.0], [1.0]])
        np.testing.assert_array_equal(matmul(a, b), [[2.0], [4.0]])

    def test_zero_matrix(self):
        rng = Rng(7)
        m = gaussian(rng, 12).reshape(3, 4)
        np.testing.assert_array_equal(matmul(m, np.zeros((4, 2))), np.zeros((3, 2)))

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError, match="inner dimensions"):
            matmul(np.zeros((2, 3)), np.zeros((2, 3)))

    def test_non_2d_rejected(self):
        with pytest.raises(ValueError, match="2-d"):
            matmul(np.zeros(3), np.zeros((3, 2)))

    def test_associativity(self):
        rng = Rng(123)
        for trial in range(5):
            r = rng.child(trial)
            a = gaussian(r, 25).reshape(5, 5)
            b = gaussian(r, 25).reshape(5, 5)
            c = gaussian(r, 25).reshape(5, 5)
            left = matmul(matmul(a, b), c)
            right = matmul(a, matmul(b, c))
            assert np.max(np.abs(left - right)) < 1e-10


class TestGaussian:
    def test_moments(self):
        z = gaussian(Rng(42), 10**6)
        assert abs(z.mean()) < 0.01
        assert abs(z.std() - 1.0) < 0.01

    def test_same_seed_identical(self):
        a = gaussian(Rng(5), 1000)
        b = gaussian(Rng(5), 1000)
        assert a.tobytes() == b.tobytes()

    def test_within_one_sigma_fraction(self):
        # P(|Z| < 1) = 0.6826895 for a standard normal
        z = gaussian(Rng(42), 10**6)
        frac = np.mean(np.abs(z) < 1.0)
        assert abs(frac - 0.6827) < 0.005

    def test_rejects_nonpositive_n(self):
        with pytest.raises(ValueError):
            gaussian(Rng(0), 0)


class TestOrthogonalInit:
    def test_square_gain_one(self):
        w = orthogonal_init(4, 4, 1.0, Rng(1))
        np.testing.assert_allclose(w.T @ w, np.eye(4), atol=1e-8)

    def test_square_relu_gain(self):
        w = orthogonal_init(4, 4, np.sqrt(2.0), Rng(1))
        np.testing.assert_allclose(w.T @ w, 2.0 * np.eye(4), atol=1e-8)

    def test_wide_semi_orthogonal(self):
        w = orthogonal_init(2, 5, 1.0, Rng(2))
        np.testing.assert_allclose(w @ w.T, np.eye(2), atol=1e-8)

    def test_tall_semi_orthogonal(self):
        w = orthogonal_init(7, 3, 1.5, Rng(3))
        np.testing.assert_allclose(w.T @ w, 1.5**2 * np.eye(3), atol=1e-8)

    @pytest.mark.parametrize("rows,cols,gain", [(6, 6, 1.0), (3, 8, 2.0), (9, 4, 0.5)])
    def test_singular_values_equal_gain(self, rows, cols, gain):
        # trace and Frobenius norm of the small Gram matrix pin all
        # singular values to gain within 1e-6
        w = orthogonal_init(rows, cols, gain, Rng(11))
        k = min(rows, cols)
        gram = w @ w.T if rows <= cols else w.T @ w
        assert abs(np.trace(gram) - gain**2 * k) < 1e-6
        assert abs(np.linalg.norm(gram, "fro") - gain**2 * np.sqrt(k)) < 1e-6

    def test_deterministic_given_stream(self):
        a = orthogonal_init(5, 5, 1.0, Rng(9))
        b = orthogonal_init(5, 5, 1.0, Rng(9))
        np.testing.assert_array_equal(a, b)


class TestRng:
    def test_stream_reproducibility(self):
        a = Rng(31337).uniform(1000)
        b = Rng(31337).uniform(1000)
        assert a.tobytes() == b.tobytes()

    def test_uniform_frequency(self):
        # coarse frequency check: 10 equal bins over 1e6 draws
        u = Rng(42).uniform(10**6)
        counts = np.bincount((u * 10).astype(int), minlength=10)
        mass = counts / u.size
        assert np.all(np.abs(mass - 0.1) < 0.001)

    def test_uniform_range(self):
        u = Rng(1).uniform(10**5)
        assert u.min() >= 0.0 and u.max() < 1.0

    def test_children_are_independent_streams(self):
        root = Rng(8)
        a = root.child(0).uniform(100)
        b = root.child(1).uniform(100)
        c = root.uniform(100)
        assert a.tobytes() != b.tobytes()
        assert a.tobytes() != c.tobytes()

    def test_child_reproducible_regardless_of_parent_use(self):
        r1 = Rng(77)
        r1.uniform(1234)  # consume some of the parent stream
        r2 = Rng(77)
        np.testing.assert_array_equal(r1.child(3).uniform(50), r2.child(3).uniform(50))

    def test_nested_children_distinct(self):
        root = Rng(5)
        assert root.child(1, 2).uniform(10).tobytes() != root.child(2, 1).uniform(10).tobytes()

    def test_categorical_frequencies(self):
        probs = np.array([0.2, 0.5, 0.3])
        idx = Rng(4).categorical(probs, 10**5)
        freq = np.bincount(idx, minlength=3) / idx.size
        np.testing.assert_allclose(freq, probs, atol=0.01)

    def test_categorical_degenerate(self):
        idx = Rng(4).categorical(np.array([0.0, 1.0, 0.0]), 1000)
        assert np.all(idx == 1)
