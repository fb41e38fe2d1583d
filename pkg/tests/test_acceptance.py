"""End-to-end quality bars for the whole package, one test per criterion.

Criteria 1, 2, 7, 8 and 9 run their measurements inline (a couple of minutes
total, dominated by the two small trainings in criterion 2).  Criteria 3-6
judge results/acceptance.csv, the full evaluation grid produced by
scripts/run_acceptance.py; that file ships with the repository because
regenerating it takes a few hours of single-core compute.  Each CSV row
carries the hash of the run configuration that produced it, and the fixture
recomputes those hashes from the current code, so a stale grid fails loudly
instead of silently vouching for different defaults.
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest

from evlgen.baselines import gmm_fit
from evlgen.evl import (
    GuessBatch,
    batch_loss_fn,
    make_evl_net,
    rejection_sample,
    select_indices,
    train,
)
from evlgen.harness import read_csv_rows, suite_config
from evlgen.metrics import GridSpec, HistogramGrid, fisher_metric, kl_divergence
from evlgen.neuralnet import TrainConfig, gradient_check
from evlgen.numcore import Rng

GRID_CSV = Path(__file__).resolve().parent.parent / "results" / "acceptance.csv"


@pytest.fixture(scope="module")
def suite_rows():
    if not GRID_CSV.exists():
        pytest.fail(
            f"{GRID_CSV} is missing; run `python scripts/run_acceptance.py` "
            "(several hours) to produce it"
        )
    rows = read_csv_rows(GRID_CSV)
    for r in rows:
        expect = suite_config(r["model"], r["dataset"], r["dim"], r["modes"],
                              r["seed"], train_size=r["train_size"]).config_hash()
        if r["config_hash"] != expect:
            pytest.fail(
                f"{GRID_CSV} row {r['model']}/{r['dataset']}/d{r['dim']}/"
                f"m{r['modes']}/s{r['seed']} was produced by a different run "
                "configuration than the current defaults; regenerate with "
                "scripts/run_acceptance.py"
            )
        if math.isnan(r["kl"]):
            pytest.fail(f"{GRID_CSV} contains a failed cell: {r}")
    return rows


def seed_mean(rows, field, model, dim, modes, family="gaussians",
              train_size=50_000, n_seeds=5):
    vals = [r[field] for r in rows
            if r["model"] == model and r["dataset"] == family
            and r["dim"] == dim and r["modes"] == modes
            and r["train_size"] == train_size]
    assert len(vals) == n_seeds, (
        f"expected {n_seeds} seeds for {model}/{family}/d{dim}/m{modes}"
        f"/n{train_size}, found {len(vals)}"
    )
    return float(np.mean(vals))


def test_criterion_01_gradient_check_full_model():
    t0 = time.perf_counter()
    rng = Rng(2024)
    net = make_evl_net(data_dim=2, rng=rng.child(0))
    cfg = TrainConfig()
    noise = rng.child(1).gaussian(cfg.guesses * net.noise_dim)
    noise = noise.reshape(cfg.guesses, net.noise_dim)
    targets = rng.child(2).gaussian(cfg.batch_size * 2).reshape(cfg.batch_size, 2)
    fn = batch_loss_fn(net, noise, targets, cfg)
    max_rel, n_eval, n_skip = gradient_check(
        net.trunk, fn, rng.child(3), samples=130, return_detail=True)
    elapsed = time.perf_counter() - t0
    print(f"max rel err {max_rel:.3g} over {n_eval} params "
          f"({n_skip} kinks skipped), {elapsed:.1f}s")
    assert n_eval >= 100
    assert max_rel < 1e-4
    assert elapsed < 60.0


def test_criterion_02_two_point_fixture_needs_many_guesses():
    # A compact net demonstrates the collapse-vs-coverage contrast cleanly:
    # with two-point data only two guesses per batch ever win, so a wide
    # trunk can park its remaining capacity in scattered never-winning
    # guesses, while this size quantizes onto the modes for every seed
    # tried. The contrast itself is what is under test, not the recipe.
    t0 = time.perf_counter()
    data = np.repeat([[-1.0], [1.0]], 5000, axis=0)
    arch = dict(hidden_width=32, hidden_layers=2, noise_dim=4)
    recipe = dict(lr0=3e-3, lr_decay_per_epoch=0.99, epochs=300)

    net1 = make_evl_net(1, Rng(7).child(0), **arch)
    net1, _ = train(net1, data, TrainConfig(guesses=1, **recipe), Rng(7).child(1))
    single = rejection_sample(net1, Rng(7).child(2), 20_000, K=1)
    # One guess per draw reduces the objective to plain regression, which
    # collapses to the conditional mean; the target spread is 1.0.
    assert float(np.std(single)) < 0.25

    netk = make_evl_net(1, Rng(8).child(0), **arch)
    netk, _ = train(netk, data, TrainConfig(**recipe), Rng(8).child(1))
    many = rejection_sample(netk, Rng(8).child(2), 20_000, K=128)
    lo_mass = float(np.mean((many >= -1.25) & (many <= -0.75)))
    hi_mass = float(np.mean((many >= 0.75) & (many <= 1.25)))
    elapsed = time.perf_counter() - t0
    print(f"collapsed std {np.std(single):.3f}; mode masses "
          f"{lo_mass:.3f}/{hi_mass:.3f}; {elapsed:.0f}s")
    assert lo_mass >= 0.20
    assert hi_mass >= 0.20
    assert elapsed < 300.0


def test_criterion_03_generator_kl_on_gaussian_grids(suite_rows):
    for modes in (1, 2, 4, 10):
        kl_1d = seed_mean(suite_rows, "kl", "evl", 1, modes)
        kl_2d = seed_mean(suite_rows, "kl", "evl", 2, modes)
        print(f"modes={modes}: 1d KL {kl_1d:.4f} (<=0.02), "
              f"2d KL {kl_2d:.4f} (<=0.3)")
        assert kl_1d <= 0.02
        assert kl_2d <= 0.3


def test_criterion_04_model_ordering_across_dims(suite_rows):
    ordered = 0
    for dim in (1, 2, 3, 4):
        gmm = seed_mean(suite_rows, "kl", "gmm", dim, 4)
        emp = seed_mean(suite_rows, "kl", "empirical", dim, 4)
        evl = seed_mean(suite_rows, "kl", "evl", dim, 4)
        ok = gmm <= emp <= evl
        ordered += ok
        print(f"dim={dim}: gmm {gmm:.4f} emp {emp:.4f} evl {evl:.4f}"
              f" {'ordered' if ok else 'NOT ordered'}")
    assert ordered >= 3


def test_criterion_05_small_train_set_reverses_ordering(suite_rows):
    emp_kl = seed_mean(suite_rows, "kl", "empirical", 4, 4, train_size=5_000)
    evl_kl = seed_mean(suite_rows, "kl", "evl", 4, 4, train_size=5_000)
    emp_fi = seed_mean(suite_rows, "fisher", "empirical", 4, 4, train_size=5_000)
    evl_fi = seed_mean(suite_rows, "fisher", "evl", 4, 4, train_size=5_000)
    ratio = max(emp_fi, evl_fi) / min(emp_fi, evl_fi)
    print(f"5e3-point 4d KL: evl {evl_kl:.4f} < emp {emp_kl:.4f}; "
          f"fisher ratio {ratio:.2f}")
    assert evl_kl < emp_kl
    assert ratio <= 2.0


def test_criterion_06_swiss_roll_quality_bands(suite_rows):
    kw = dict(family="swissroll", dim=3, modes=0)
    evl_kl = seed_mean(suite_rows, "kl", "evl", **kw)
    evl_fi = seed_mean(suite_rows, "fisher", "evl", **kw)
    emp_kl = seed_mean(suite_rows, "kl", "empirical", **kw)
    emp_fi = seed_mean(suite_rows, "fisher", "empirical", **kw)
    gmm_fi = seed_mean(suite_rows, "fisher", "gmm", **kw)
    total = sum(r["seconds"] for r in suite_rows if r["dataset"] == "swissroll")
    print(f"evl KL {evl_kl:.3f} in [0.05,0.45], fisher {evl_fi:.3f} in "
          f"[0.15,0.9]; emp {emp_kl:.3f}/{emp_fi:.3f}; gmm fisher "
          f"{gmm_fi:.3f}; {total:.0f}s total")
    assert 0.05 <= evl_kl <= 0.45
    assert 0.15 <= evl_fi <= 0.9
    assert emp_kl < evl_kl
    assert emp_fi < evl_fi
    assert evl_fi < gmm_fi
    assert total < 1800.0


def test_criterion_07_metric_closed_forms():
    spec = GridSpec((0.0,), (1.0,), (2,))

    def grid(mass):
        return HistogramGrid(spec, np.asarray(mass, dtype=np.float64), 1, 0)

    point = grid([1.0, 0.0])
    flat = grid([0.5, 0.5])
    other = grid([0.0, 1.0])

    assert abs(kl_divergence(point, flat) - math.log(2.0)) < 1e-6
    assert abs(kl_divergence(point, point)) < 1e-6
    assert abs(fisher_metric(point, point)) < 1e-6
    assert abs(fisher_metric(point, other) - math.pi) < 1e-6
    assert abs(fisher_metric(point, flat) - math.pi / 2.0) < 1e-6
    assert abs(fisher_metric(point, point, form="paper_literal") - math.pi) < 1e-6
    assert abs(fisher_metric(point, other, form="paper_literal")) < 1e-6

    # Regularization floor: one stray sample out of M landing in a bin the
    # other histogram leaves empty costs (1/M) * ln((1/M)/reg), about
    # 1.5e-4 at M=4e5 against the 1e-32 virtual mass.
    M = 400_000
    stray = grid([1.0 - 1.0 / M, 1.0 / M])
    floor = kl_divergence(stray, point)
    print(f"single mismatched bin floor {floor:.3g}")
    assert 0.9e-4 <= floor <= 3.6e-4


def test_criterion_08_selection_frequencies_match_weights():
    probs = np.array([0.1, 0.2, 0.3, 0.4])
    batch = GuessBatch(coords=np.zeros((4, 1)), logits=np.log(probs))
    idx = select_indices(batch, Rng(512), 100_000)
    freqs = np.bincount(idx, minlength=4) / idx.size
    print("freqs", np.round(freqs, 4))
    assert np.all(np.abs(freqs - probs) <= 0.01)


def test_criterion_09_em_fit_is_monotone_and_recovers_modes():
    rng = Rng(41)
    n = 5000
    noise = rng.child(0).gaussian(2 * n)
    points = np.concatenate([noise[:n] - 2.0, noise[n:] + 3.0]).reshape(-1, 1)
    model, info = gmm_fit(points, rng.child(1), k=2)
    logliks = info["history"]
    assert all(b >= a - 1e-10 for a, b in zip(logliks, logliks[1:]))
    means = np.sort(model.means.ravel())
    print(f"recovered means {means}, {info['n_iter']} iters")
    assert abs(means[0] - (-2.0)) <= 0.1
    assert abs(means[1] - 3.0) <= 0.1
