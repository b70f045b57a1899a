from collections import Counter

import numpy as np
import pytest
from scipy import stats as sps

from intensity.surface import IntensitySurface
from pattern.geometry import RectWindow
from stats.kfunction import k_inhom
from stats.summary import RGrid
from synth.forest import common_parent_pair, synthetic_census, synthetic_forest
from synth.pairing import random_pairing
from synth.poisson import sample_inhom_poisson, sample_poisson
from synth.rng import RngSeed
from synth.thomas import expected_thomas_count, sample_thomas
from utils.errors import DataError, NumericError

W = RectWindow(0.0, 0.0, 100.0, 50.0)


def test_rng_streams_reproducible_and_distinct():
    a = RngSeed(42).spawn(3).generator().random(5)
    b = RngSeed(42).spawn(3).generator().random(5)
    c = RngSeed(42).spawn(4).generator().random(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    with pytest.raises(ValueError):
        RngSeed(-1)


def test_zero_mass_surface_gives_empty_pattern():
    lam = IntensitySurface(W, np.zeros((4, 4)))
    assert all(sample_inhom_poisson(lam, k).n == 0 for k in range(10))


def test_same_seed_same_pattern():
    lam = IntensitySurface(W, np.random.default_rng(0).random((8, 4)) * 0.05)
    assert np.array_equal(sample_inhom_poisson(lam, RngSeed(5, (1,))).xy, sample_inhom_poisson(lam, RngSeed(5, (1,))).xy)


def test_constant_surface_mean_count():
    lam = IntensitySurface.constant(W, 0.04, 4, 4)
    counts = np.array([sample_inhom_poisson(lam, RngSeed(1).spawn(k)).n for k in range(1000)])
    assert abs(counts.mean() - 200) < 3 * np.sqrt(200) / np.sqrt(1000)


@pytest.mark.slow
def test_thinning_count_distribution_and_super_grid():
    rng = np.random.default_rng(3)
    lam = IntensitySurface(W, 0.01 + 0.03 * rng.random((16, 8)))
    # the thinning follows the bilinear surface, integrated here by the midpoint rule
    gx, gy = np.meshgrid((np.arange(800) + 0.5) / 8, (np.arange(400) + 0.5) / 8, indexing="ij")
    dense = lam.evaluate(np.column_stack([gx.ravel(), gy.ravel()])).reshape(800, 400)
    mass = float(dense.mean() * W.area())
    counts = []
    cells = np.zeros((8, 4))
    for k in range(2000):
        p = sample_inhom_poisson(lam, RngSeed(9).spawn(k))
        counts.append(p.n)
        h, _, _ = np.histogram2d(p.x, p.y, bins=[8, 4], range=[[0, 100], [0, 50]])
        cells += h
    counts = np.array(counts)

    # chi-square of the count distribution against Poisson(mass), tails pooled
    lo, hi = int(sps.poisson.ppf(0.01, mass)), int(sps.poisson.ppf(0.99, mass))
    observed = [np.sum(counts < lo)] + [np.sum(counts == v) for v in range(lo, hi + 1)] + [np.sum(counts > hi)]
    probs = [sps.poisson.cdf(lo - 1, mass)] + [sps.poisson.pmf(v, mass) for v in range(lo, hi + 1)] + [sps.poisson.sf(hi, mass)]
    expected = np.array(probs) * len(counts)
    keep = expected >= 5
    obs_kept = np.append(np.array(observed)[keep], np.sum(np.array(observed)[~keep]))
    exp_kept = np.append(expected[keep], np.sum(expected[~keep]))
    if exp_kept[-1] == 0:
        obs_kept, exp_kept = obs_kept[:-1], exp_kept[:-1]
    exp_kept = exp_kept * obs_kept.sum() / exp_kept.sum()
    assert sps.chisquare(obs_kept, exp_kept).pvalue > 0.01

    super_mass = dense.reshape(8, 100, 4, 100).mean(axis=(1, 3)) * 12.5 * 12.5 * len(counts)
    assert np.all(np.abs(cells - super_mass) < 4 * np.sqrt(super_mass))


def test_homogeneous_poisson_mean():
    counts = [sample_poisson(0.02, W, k).n for k in range(300)]
    assert np.mean(counts) == pytest.approx(100, abs=3 * 10 / np.sqrt(300))
    assert sample_poisson(0.0, W, 1).n == 0


def test_thomas_mean_count_and_clustering():
    counts = [sample_thomas(5e-4, 10.0, 2.0, W, RngSeed(3).spawn(k)).n for k in range(1000)]
    mean = expected_thomas_count(5e-4, 10.0, W)
    # variance of a Thomas count is at most mu times the Poisson variance
    se = np.sqrt(mean * 11.0 / 1000)
    assert abs(np.mean(counts) - mean) < 3 * se

    p = sample_thomas(2e-3, 10.0, 0.01, W, 7)
    k = k_inhom(p, p.n / W.area(), RGrid.linspace(1.0, 3))
    assert k.value[-1] > 10 * np.pi

    tiny = [sample_thomas(2e-3, 1e-9, 2.0, W, k).n for k in range(50)]
    assert sum(tiny) == 0
    with pytest.raises(NumericError, match="Thomas parameters"):
        sample_thomas(0.0, 10.0, 2.0, W, 1)
    with pytest.raises(NumericError, match="Thomas parameters"):
        sample_thomas(2e-3, 10.0, -1.0, W, 1)


def test_random_pairing_sizes():
    pairs, left = random_pairing(["a", "b"], 1)
    assert pairs == [("a", "b")] and left is None
    pairs, left = random_pairing(["a", "b", "c", "d", "e"], 2)
    assert len(pairs) == 2 and left is not None
    used = [s for pair in pairs for s in pair] + [left]
    assert sorted(used) == ["a", "b", "c", "d", "e"]
    with pytest.raises(DataError, match="nothing to pair"):
        random_pairing(["a"], 1)


def test_random_pairing_uniform_over_matchings():
    freq = Counter()
    n = 10_000
    for k in range(n):
        pairs, _ = random_pairing(["a", "b", "c", "d"], RngSeed(k))
        freq[tuple(sorted(pairs))] += 1
    assert len(freq) == 3
    for count in freq.values():
        assert abs(count / n - 1 / 3) < 0.02


def test_random_pairing_ignores_input_order():
    codes = ["d", "a", "c", "b", "e", "f"]
    assert random_pairing(codes, 9) == random_pairing(sorted(codes), 9)


def test_synthetic_forest_and_census():
    m, clustered = synthetic_forest(6, 0.5, W, 4, mean_count=60)
    assert m.species == [f"sp{k:03d}" for k in range(6)]
    assert clustered == ["sp000", "sp001", "sp002"]
    departed, _ = synthetic_forest(6, 0.5, W, 5, mean_count=10)
    census = synthetic_census(m, departed)
    latest = census[census["census_id"] == 8]
    assert (latest["status"] == "alive").sum() == sum(m.counts().values())
    assert census["tree_id"].nunique() == sum(m.counts().values()) + sum(departed.counts().values())
    again, _ = synthetic_forest(6, 0.5, W, 4, mean_count=60)
    assert all(np.array_equal(m[c].xy, again[c].xy) for c in m.species)


def test_common_parent_pair_shares_clusters():
    a, b = common_parent_pair(2e-3, 10.0, 1.0, W, 11)
    assert a.n > 0 and b.n > 0
    # most points of b lie close to some point of a
    d = np.min(np.hypot(*(b.xy[:, None, :] - a.xy[None, :, :]).transpose(2, 0, 1)), axis=1)
    assert np.median(d) < 2.0
