import math

import numpy as np
import pytest

from depthguard.data import Dataset, RandomSource, sample_directions
from depthguard.depth import halfspace_depth
from depthguard.oracle import (
    ReplacementPool,
    brute_force_A_eta,
    brute_force_max_move,
    brute_force_sensitivity,
    dp_ratio_audit,
    exact_halfspace_2d,
)


def _median_stat(data):
    return float(np.median(data.points[:, 0]))


def test_a_eta_median_example(five_data):
    pool = [[-1e6], [0.0], [2.0], [1e6]]
    # replacing one low value with 1e6 moves the median from 2 to 3
    assert brute_force_A_eta(_median_stat, five_data, 0.5, pool, k_max=2) == 1


def test_a_eta_unreachable(five_data):
    pool = [[-10.0], [10.0]]
    assert math.isinf(brute_force_A_eta(_median_stat, five_data, 1e6 + 1, pool, k_max=2))


def test_a_eta_constant_stat(five_data):
    assert math.isinf(
        brute_force_A_eta(lambda d: 1.0, five_data, 0.1, [[0.0], [9.0]], k_max=2)
    )


def test_max_move_monotone_in_k(five_data):
    pool = [[-50.0], [0.0], [4.0], [50.0]]
    m1 = brute_force_max_move(_median_stat, five_data, pool, 1)
    m2 = brute_force_max_move(_median_stat, five_data, pool, 2)
    assert m2 >= m1


def test_sensitivity_halfspace_small():
    data = Dataset.from_rows([[1.0], [2.0], [3.0], [4.0], [5.0]])
    dirs = sample_directions(2, 1, seed=0)
    pool = [[-1e6], [1.0], [3.0], [1e6]]
    worst = brute_force_sensitivity(
        lambda d: halfspace_depth([3.0], d, dirs), data, pool
    )
    assert worst <= 1 / 5 + 1e-12
    assert worst == pytest.approx(1 / 5)


def test_sensitivity_constant_stat(five_data):
    assert brute_force_sensitivity(lambda d: 42.0, five_data, [[0.0]]) == 0.0


def test_sensitivity_mean_grows_with_pool(five_data):
    small = brute_force_sensitivity(
        lambda d: float(d.points.mean()), five_data, [[100.0]]
    )
    big = brute_force_sensitivity(
        lambda d: float(d.points.mean()), five_data, [[1e6]]
    )
    assert big > small * 100  # unbounded global sensitivity in the pool limit


def test_guard_trips(five_data):
    with pytest.raises(ValueError):
        brute_force_sensitivity(_median_stat, five_data, [[0.0]] * 10, guard=10)


def test_exact_halfspace_triangle():
    data = Dataset.from_rows([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    assert exact_halfspace_2d([0.25, 0.25], data) == pytest.approx(1 / 3)
    assert exact_halfspace_2d([5.0, 5.0], data) == 0.0


def test_exact_halfspace_duplicated_point():
    data = Dataset.from_rows([[1.0, 1.0]] * 4)
    assert exact_halfspace_2d([1.0, 1.0], data) == 1.0


def test_exact_halfspace_rejects_other_dims(five_data):
    with pytest.raises(ValueError):
        exact_halfspace_2d([0.0], five_data)


def test_sampled_halfspace_never_below_exact():
    rng = np.random.default_rng(17)
    dirs = sample_directions(1000, 2, seed=23)
    gaps = []
    for trial in range(20):
        n = int(rng.integers(5, 51))
        data = Dataset(rng.normal(size=(n, 2)))
        x = rng.normal(size=2) * 0.7
        exact = exact_halfspace_2d(x, data)
        sampled = halfspace_depth(x, data, dirs)
        assert sampled >= exact - 1e-12
        gaps.append(sampled - exact)
    assert np.quantile(gaps, 0.95) <= 0.05


def test_replacement_pool_builder(five_data):
    pool = ReplacementPool.for_data(five_data, magnitude=1e6)
    mags = np.abs(pool.points).max(axis=1)
    assert (mags >= 1e6).sum() == 2  # +/- extreme per coordinate
    assert len(pool) >= 5


def _laplace_depth_mech(scale, x=9.5):
    def mech(dataset, rng, size):
        vals = dataset.points[:, 0]
        depth = min((vals <= x).sum(), (vals >= x).sum()) / dataset.n
        return depth + scale * rng.laplace(size=size)

    return mech


def test_audit_identical_pair_near_zero():
    data = Dataset(np.arange(20, dtype=float)[:, None])
    rng = RandomSource.from_seed(29)
    result = dp_ratio_audit(_laplace_depth_mech(0.05), [(data, data)], 200_000, 50, rng)
    assert result["max_log_ratio"] <= 0.12


def test_audit_detects_halved_noise():
    data = Dataset(np.arange(20, dtype=float)[:, None])
    neighbor = data.replace_row(0, [19.5])
    rng = RandomSource.from_seed(31)
    calibrated = dp_ratio_audit(
        _laplace_depth_mech(0.05), [(data, neighbor)], 300_000, 50, rng.spawn("a")
    )
    broken = dp_ratio_audit(
        _laplace_depth_mech(0.025), [(data, neighbor)], 300_000, 50, rng.spawn("b")
    )
    assert calibrated["max_log_ratio"] <= 1.1
    assert broken["max_log_ratio"] > 1.1


def test_audit_bottom_bin():
    def sometimes_bottom(dataset, rng, size):
        vals = rng.laplace(size=size)
        vals[: size // 4] = np.nan  # refusal marker
        return vals

    data = Dataset(np.zeros((3, 1)))
    rng = RandomSource.from_seed(37)
    result = dp_ratio_audit(sometimes_bottom, [(data, data)], 50_000, 20, rng)
    assert result["max_log_ratio"] <= 0.1
