import math

import numpy as np
import pytest

from depthguard.data import Dataset, PrivacyParams, RandomSource, sample_directions
from depthguard.depth import DepthKind, depth_vector, evaluate_depth
from depthguard.estimators import (
    TruncatedOutlyingnessSpec,
    default_eta,
    private_depth_median_exp,
    private_depth_point,
    private_depth_vector,
    private_projection_depth,
    private_projection_median_ptr,
    private_rank_sum_scale_test,
    rank_sum_scale_test,
    ranks_by_count,
)
from depthguard.mechanisms import (
    BOTTOM,
    BudgetLedger,
    CandidateGrid,
    GridError,
    Prior,
    exponential_weights,
)

SIGNS = sample_directions(2, 1, seed=0)
LAPLACE = PrivacyParams(epsilon=1.0, variant="laplace")


def test_point_zero_noise_is_depth(line_data, zero_noise):
    report = private_depth_point(
        [2.0], line_data, DepthKind.HALFSPACE, SIGNS, LAPLACE, zero_noise
    )
    assert report.payload == pytest.approx(2 / 3)
    assert report.post_processed["clamped"] == pytest.approx(2 / 3)


def test_point_audit_scale(zero_noise):
    data = Dataset(np.arange(100, dtype=float)[:, None])
    params = PrivacyParams(epsilon=0.5, variant="laplace")
    report = private_depth_point([3.0], data, DepthKind.HALFSPACE, SIGNS, params, zero_noise)
    assert report.audit["noise_scale"] == pytest.approx(0.02)


def test_point_rejects_projection_kind(line_data, zero_noise):
    with pytest.raises(ValueError, match="private_projection_depth"):
        private_depth_point(
            [2.0], line_data, DepthKind.PROJECTION_IQR, SIGNS, LAPLACE, zero_noise
        )


def test_point_ledger_budget(line_data, zero_noise):
    ledger = BudgetLedger()
    private_depth_point(
        [2.0], line_data, DepthKind.HALFSPACE, SIGNS, LAPLACE, zero_noise, ledger=ledger
    )
    assert len(ledger.entries) == 1
    assert ledger.totals() == pytest.approx((1.0, 0.0))
    gaussian = PrivacyParams(epsilon=1.0, delta=0.01, variant="gaussian")
    private_depth_point(
        [2.0], line_data, DepthKind.HALFSPACE, SIGNS, gaussian, zero_noise, ledger=ledger
    )
    assert ledger.entries[-1].delta == pytest.approx(0.01)


def test_vector_zero_noise_and_scale(zero_noise):
    data = Dataset(np.arange(5, dtype=float)[:, None])
    report = private_depth_vector(data, DepthKind.HALFSPACE, SIGNS, LAPLACE, zero_noise)
    np.testing.assert_allclose(report.payload, depth_vector(data, DepthKind.HALFSPACE, SIGNS))
    assert report.audit["noise_scale"] == pytest.approx(0.8)


def test_vector_permutation_equivariance(zero_noise):
    rng = np.random.default_rng(3)
    pts = rng.normal(size=(8, 1))
    perm = rng.permutation(8)
    base = private_depth_vector(
        Dataset(pts), DepthKind.HALFSPACE, SIGNS, LAPLACE, zero_noise
    ).payload
    moved = private_depth_vector(
        Dataset(pts[perm]), DepthKind.HALFSPACE, SIGNS, LAPLACE, zero_noise
    ).payload
    np.testing.assert_allclose(moved, base[perm])


def test_vector_noise_dominates_sampling_error():
    # released-minus-sample norm exceeds sample-minus-reference norm
    from depthguard.depth import depth_batch

    dirs = sample_directions(64, 2, seed=5)
    root = RandomSource.from_seed(41)
    reference = Dataset(root.spawn("ref").normal(size=(100_000, 2)))
    wins = 0
    reps = 10
    for rep in range(reps):
        rng = root.spawn(f"rep{rep}")
        data = Dataset(rng.spawn("data").normal(size=(1000, 2)))
        vec = depth_vector(data, DepthKind.HALFSPACE, dirs)
        ref_vec = depth_batch(data.points[:50], reference, DepthKind.HALFSPACE, dirs)
        sampling = np.linalg.norm(vec[:50] - ref_vec) * math.sqrt(1000 / 50)
        report = private_depth_vector(
            data, DepthKind.HALFSPACE, dirs, LAPLACE, rng.spawn("noise")
        )
        noise = np.linalg.norm(report.payload - vec)
        wins += noise > sampling
    assert wins >= 9


def test_projection_depth_zero_noise_release(zero_noise):
    # zero-noise test level is 1 + log(2/delta) = 4, so n must exceed 8
    data = Dataset(np.arange(20, dtype=float)[:, None])
    params = PrivacyParams(epsilon=1.0, delta=0.1, variant="laplace")
    report = private_projection_depth([19.0], data, SIGNS, 100.0, params, zero_noise)
    assert report.released
    assert report.payload["outlyingness"] == pytest.approx(0.95)  # |19-9.5|/10
    assert report.payload["depth"] == pytest.approx(1 / 1.95)
    assert report.ledger_entry.epsilon == pytest.approx(2.0)
    assert report.ledger_entry.delta == pytest.approx(0.1)


def test_projection_depth_small_n_cannot_certify(five_data, zero_noise):
    # n=5 leaves no admissible certificate level below n/2, so PTR refuses
    params = PrivacyParams(epsilon=1.0, delta=0.1, variant="laplace")
    report = private_projection_depth([4.0], five_data, SIGNS, 100.0, params, zero_noise)
    assert report.payload is BOTTOM


def test_projection_depth_constant_data_bottom(zero_noise):
    constant = Dataset.from_rows([[1.0]] * 8)
    params = PrivacyParams(epsilon=1.0, delta=0.1, variant="laplace")
    report = private_projection_depth([5.0], constant, SIGNS, 1.0, params, zero_noise)
    assert report.payload is BOTTOM
    assert report.post_processed == {}


def test_projection_depth_rejects_mad_scale(five_data, zero_noise):
    params = PrivacyParams(epsilon=1.0, delta=0.1, variant="laplace")
    with pytest.raises(ValueError, match="iqr"):
        private_projection_depth(
            [4.0], five_data, SIGNS, 1.0, params, zero_noise, scale="mad"
        )


def test_projection_depth_post_processing_clamps():
    # heavy negative noise drives the raw value negative; the clamped field
    # is computed from the released payload alone
    class NegativeNoise:
        def __init__(self):
            self.calls = 0

        def laplace(self, size=None):
            self.calls += 1
            return 0.0 if self.calls == 1 else -50.0

    data = Dataset(np.arange(20, dtype=float)[:, None])
    params = PrivacyParams(epsilon=1.0, delta=0.1, variant="laplace")
    report = private_projection_depth([10.0], data, SIGNS, 1.0, params, NegativeNoise())
    assert report.released
    assert report.payload["outlyingness"] < 0
    assert report.post_processed["depth"] == 1.0


def test_projection_depth_gaussian_budget(five_data, zero_noise):
    params = PrivacyParams(epsilon=1.0, delta=0.01, variant="gaussian")
    report = private_projection_depth([4.0], five_data, SIGNS, 100.0, params, zero_noise)
    assert report.ledger_entry.epsilon == pytest.approx(2.0)
    assert report.ledger_entry.delta == pytest.approx(
        2.0 * math.exp(1.0) * 0.01 + 0.01**2
    )


def test_median_exp_symmetric_example():
    data = Dataset(np.array([[-2.0], [-1.0], [0.0], [1.0], [2.0]]))
    grid = CandidateGrid.regular([(-2.0, 2.0)], [5])
    from depthguard.depth import depth_batch

    utilities = depth_batch(grid.points, data, DepthKind.HALFSPACE, SIGNS)
    np.testing.assert_allclose(utilities, [0.2, 0.4, 0.6, 0.4, 0.2])
    probs = exponential_weights(utilities, gs=1 / 5, epsilon=1.0)
    np.testing.assert_allclose(probs, probs[::-1])
    assert np.argmax(probs) == 2
    rng = RandomSource.from_seed(2)
    report = private_depth_median_exp(
        data, DepthKind.HALFSPACE, grid, Prior.uniform(), SIGNS, 1.0, rng
    )
    assert report.payload[0] in grid.points[:, 0]
    assert report.audit["exponent_scale"] == pytest.approx(1.0 / (2.0 / 5.0))


def test_median_exp_point_mass_prior():
    data = Dataset(np.array([[-1.0], [0.0], [1.0]]))
    grid = CandidateGrid.regular([(-1.0, 1.0)], [3])
    prior = Prior.from_table([0.0, 0.0, 1.0])
    rng = RandomSource.from_seed(6)
    for _ in range(50):
        report = private_depth_median_exp(
            data, DepthKind.HALFSPACE, grid, prior, SIGNS, 1.0, rng
        )
        assert report.payload[0] == 1.0


def test_median_exp_budget(line_data):
    ledger = BudgetLedger()
    grid = CandidateGrid.regular([(0.0, 4.0)], [5])
    private_depth_median_exp(
        line_data,
        DepthKind.HALFSPACE,
        grid,
        Prior.uniform(),
        SIGNS,
        0.7,
        RandomSource.from_seed(1),
        ledger=ledger,
    )
    assert ledger.totals() == pytest.approx((0.7, 0.0))


def test_projection_median_grid_outside_radius_errors(five_data, zero_noise):
    grid = CandidateGrid.regular([(50.0, 60.0)], [5])
    trunc = TruncatedOutlyingnessSpec(radius=10.0)
    params = PrivacyParams(epsilon=1.0, delta=0.1, variant="laplace")
    with pytest.raises(GridError):
        private_projection_median_ptr(
            five_data, trunc, grid, SIGNS, 1.0, params, zero_noise
        )


def test_projection_median_truncation_masks_outside(zero_noise):
    data = Dataset(np.arange(20, dtype=float)[:, None] / 10.0)
    grid = CandidateGrid.regular([(-6.0, 6.0)], [13])  # points at integers/2
    trunc = TruncatedOutlyingnessSpec(radius=2.0)
    params = PrivacyParams(epsilon=1.0, delta=0.1, variant="laplace")
    report = private_projection_median_ptr(
        data, trunc, grid, SIGNS, 50.0, params, zero_noise
    )
    assert report.released
    assert abs(report.payload[0]) < 2.0  # infinite cost outside the radius


def test_projection_median_budget_laplace_vs_gaussian(zero_noise):
    data = Dataset(np.arange(20, dtype=float)[:, None] / 10.0)
    grid = CandidateGrid.regular([(-1.0, 1.0)], [5])
    trunc = TruncatedOutlyingnessSpec(radius=5.0)
    ledger = BudgetLedger()
    private_projection_median_ptr(
        data,
        trunc,
        grid,
        SIGNS,
        50.0,
        PrivacyParams(epsilon=1.0, delta=0.1, variant="laplace"),
        zero_noise,
        ledger=ledger,
    )
    assert ledger.entries[-1].epsilon == pytest.approx(2.0)
    assert ledger.entries[-1].delta == pytest.approx(0.1)
    private_projection_median_ptr(
        data,
        trunc,
        grid,
        SIGNS,
        50.0,
        PrivacyParams(epsilon=1.0, delta=0.1, variant="gaussian"),
        zero_noise,
        ledger=ledger,
    )
    assert ledger.entries[-1].delta == pytest.approx(0.2)


def test_ranks_by_count_ties():
    np.testing.assert_array_equal(ranks_by_count([0.1, 0.1, 0.5]), [2, 2, 3])


def test_rank_sum_zero_noise_matches_classical(zero_noise):
    rng = np.random.default_rng(12)
    a = Dataset(rng.normal(size=(6, 1)))
    b = Dataset(rng.normal(size=(7, 1)) * 2)
    private = private_rank_sum_scale_test(
        a, b, DepthKind.HALFSPACE, SIGNS, LAPLACE, zero_noise, permutations=50
    )
    pooled = Dataset(np.vstack([a.points, b.points]))
    classical_ranks = ranks_by_count(depth_vector(pooled, DepthKind.HALFSPACE, SIGNS))
    np.testing.assert_array_equal(private.ranks, classical_ranks)


def test_rank_sum_permutation_mean_identity():
    rng = RandomSource.from_seed(19)
    a = Dataset(rng.spawn("a").normal(size=(12, 1)))
    b = Dataset(rng.spawn("b").normal(size=(12, 1)))
    report = private_rank_sum_scale_test(
        a, b, DepthKind.HALFSPACE, SIGNS, LAPLACE, rng.spawn("t"), permutations=200
    )
    n = 24
    # continuous noise breaks all ties, so ranks are exactly 1..n
    assert sorted(report.ranks.tolist()) == list(range(1, n + 1))
    assert report.permutation_mean == pytest.approx(12 * (n + 1) / 2)


def test_rank_sum_requires_group_sizes():
    tiny = Dataset.from_rows([[0.0]])
    big = Dataset(np.arange(5, dtype=float)[:, None])
    with pytest.raises(ValueError):
        private_rank_sum_scale_test(
            tiny, big, DepthKind.HALFSPACE, SIGNS, LAPLACE, RandomSource.from_seed(0)
        )


def test_rank_sum_appends_one_ledger_entry():
    ledger = BudgetLedger()
    rng = RandomSource.from_seed(23)
    a = Dataset(rng.spawn("a").normal(size=(5, 1)))
    b = Dataset(rng.spawn("b").normal(size=(5, 1)))
    private_rank_sum_scale_test(
        a, b, DepthKind.HALFSPACE, SIGNS, LAPLACE, rng.spawn("t"), ledger=ledger,
        permutations=50,
    )
    assert len(ledger.entries) == 1


def test_default_eta_shape():
    assert default_eta(2000) == pytest.approx(math.log(2000) / 2000**0.65)
    assert default_eta(4000) < default_eta(2000)
