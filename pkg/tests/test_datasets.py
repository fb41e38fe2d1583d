import math

import numpy as np
import pytest

from evlgen.datasets import (
    Dataset,
    load_dataset,
    make_gaussian_mixture,
    make_swiss_roll,
    save_dataset,
    swiss_roll_coords,
)


class TestGaussianMixture:
    def test_single_mode_unit_std(self):
        ds = make_gaussian_mixture(dim=2, n_modes=1, seed=3, n=100_000)
        stds = ds.points.std(axis=0)
        np.testing.assert_allclose(stds, 1.0, atol=0.02)

    def test_centers_inside_range(self):
        for seed in range(1, 6):
            ds = make_gaussian_mixture(dim=4, n_modes=10, seed=seed, n=10)
            centers = np.array(ds.meta["centers"])
            assert centers.shape == (10, 4)
            assert np.all(np.abs(centers) <= 6.0)

    def test_seeds_give_distinct_centers(self):
        layouts = [
            tuple(np.array(make_gaussian_mixture(2, 4, s, 1).meta["centers"]).ravel())
            for s in range(1, 6)
        ]
        assert len(set(layouts)) == 5

    def test_same_seed_reproduces(self):
        a = make_gaussian_mixture(3, 4, seed=2, n=500)
        b = make_gaussian_mixture(3, 4, seed=2, n=500)
        np.testing.assert_array_equal(a.points, b.points)

    def test_centers_stable_across_sample_counts(self):
        small = make_gaussian_mixture(2, 4, seed=9, n=10)
        big = make_gaussian_mixture(2, 4, seed=9, n=10_000)
        assert small.meta["centers"] == big.meta["centers"]

    def test_mode_occupancy_uniform(self):
        k, n = 10, 100_000
        ds = make_gaussian_mixture(dim=1, n_modes=k, seed=4, n=n)
        centers = np.array(ds.meta["centers"])
        # attribute each sample to its nearest center; with unit noise and
        # random centers a few samples cross over, so compare against a
        # 3-sigma multinomial band padded by that leakage
        dist = np.abs(ds.points[:, 0][:, None] - centers[:, 0][None, :])
        counts = np.bincount(np.argmin(dist, axis=1), minlength=k)
        sigma = math.sqrt(n * (1 / k) * (1 - 1 / k))
        assert np.all(np.abs(counts - n / k) < 3 * sigma + 0.02 * n)

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            make_gaussian_mixture(5, 4, 1, 10)
        with pytest.raises(ValueError):
            make_gaussian_mixture(2, 0, 1, 10)
        with pytest.raises(ValueError):
            make_gaussian_mixture(2, 4, 1, 0)


class TestSwissRoll:
    def test_parametrization_at_known_point(self):
        pt = swiss_roll_coords(0.0, 0.5)
        np.testing.assert_allclose(pt, [0.0, 10.5, -1.5 * math.pi], atol=1e-9)
        scaled = 0.5 * pt
        np.testing.assert_allclose(scaled, [0.0, 5.25, -2.3562], atol=1e-4)

    def test_noiseless_points_on_spiral(self):
        ds = make_swiss_roll(5000, noise=0.0, scale=0.5, seed=6)
        unscaled = ds.points / 0.5
        radius = np.hypot(unscaled[:, 0], unscaled[:, 2])
        assert radius.min() >= 1.5 * math.pi - 1e-9
        assert radius.max() <= 4.5 * math.pi + 1e-9

    def test_second_coordinate_band(self):
        ds = make_swiss_roll(50_000, noise=0.1, scale=0.5, seed=7)
        y = ds.points[:, 1]
        assert y.min() > -5 * 0.1 * 0.5
        assert y.max() < 21.0 * 0.5 + 5 * 0.1 * 0.5

    def test_deterministic(self):
        a = make_swiss_roll(100, seed=11)
        b = make_swiss_roll(100, seed=11)
        np.testing.assert_array_equal(a.points, b.points)
        assert a.dim == 3

    def test_supports_paper_sizes(self):
        assert make_swiss_roll(50_000, seed=1).n == 50_000

    def test_negative_noise_rejected(self):
        with pytest.raises(ValueError):
            make_swiss_roll(10, noise=-0.1)


class TestDatasetType:
    def test_dim_mismatch_rejected(self):
        with pytest.raises(ValueError, match="dim"):
            Dataset(np.zeros((5, 3)), dim=2)

    def test_nonfinite_rejected(self):
        pts = np.zeros((2, 2))
        pts[1, 1] = np.nan
        with pytest.raises(ValueError):
            Dataset(pts, dim=2)


class TestFileRoundTrip:
    def test_bit_exact(self, tmp_path):
        pts = np.array(
            [
                [math.pi, 1e-300],
                [-0.0, 1.0 / 3.0],
                [6.02214076e23, -1.7976931348623157e308],
            ]
        )
        ds = Dataset(pts, 2, {"generator": "fixture", "seed": 1})
        path = tmp_path / "d.txt"
        save_dataset(path, ds)
        loaded = load_dataset(path)
        np.testing.assert_array_equal(loaded.points, pts)
        assert loaded.meta["generator"] == "fixture"

    def test_generated_round_trip(self, tmp_path):
        ds = make_gaussian_mixture(3, 2, seed=5, n=200)
        path = tmp_path / "mix.txt"
        save_dataset(path, ds)
        loaded = load_dataset(path)
        np.testing.assert_array_equal(loaded.points, ds.points)
        assert loaded.meta == ds.meta

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.txt"
        path.write_text("")
        with pytest.raises(ValueError, match="empty"):
            load_dataset(path)

    def test_missing_second_header(self, tmp_path):
        path = tmp_path / "p.txt"
        path.write_text('# {"generator": "x"}\n')
        with pytest.raises(ValueError, match="line 2"):
            load_dataset(path)

    def test_row_width_mismatch(self, tmp_path):
        path = tmp_path / "w.txt"
        path.write_text('# {"generator": "x"}\n# dim=2 count=2\n1.0 2.0\n3.0\n')
        with pytest.raises(ValueError, match="line 4"):
            load_dataset(path)

    def test_non_numeric_token(self, tmp_path):
        path = tmp_path / "t.txt"
        path.write_text('# {"generator": "x"}\n# dim=1 count=1\nbanana\n')
        with pytest.raises(ValueError, match="line 3.*non-numeric"):
            load_dataset(path)

    def test_wrong_count(self, tmp_path):
        path = tmp_path / "c.txt"
        path.write_text('# {"generator": "x"}\n# dim=1 count=3\n1.0\n2.0\n')
        with pytest.raises(ValueError, match="promises 3"):
            load_dataset(path)

    def test_bad_metadata_json(self, tmp_path):
        path = tmp_path / "m.txt"
        path.write_text("# {broken\n# dim=1 count=0\n")
        with pytest.raises(ValueError, match="line 1"):
            load_dataset(path)
