"""Desk-scale experiment sweeps behind ``depthguard experiment``.

Each sweep returns (rows, summary): tidy rows with the fixed columns
(experiment, n, epsilon, seed, metric, value) ready for CSV, plus a summary
dict used by plots and by the acceptance suite.
"""

from __future__ import annotations

import math

import numpy as np

from .data import Dataset, PrivacyParams, RandomSource, sample_directions
from .depth import DepthKind, depth_batch
from .estimators import (
    RankSumTestReport,
    TruncatedOutlyingnessSpec,
    default_eta,
    private_depth_point,
    private_projection_depth,
    private_projection_median_ptr,
    private_rank_sum_scale_test,
    rank_sum_scale_test,
)
from .mechanisms import CandidateGrid, Prior, exponential_weights
from .oracle import dp_ratio_audit

EXPERIMENT_NAMES = (
    "consistency",
    "audit",
    "power",
    "ptr-depth",
    "median-exp",
    "projection-median",
)


def _row(experiment, n, epsilon, seed, metric, value) -> dict:
    return {
        "experiment": experiment,
        "n": n,
        "epsilon": epsilon,
        "seed": seed,
        "metric": metric,
        "value": value,
    }


def _gaussian_data(rng: RandomSource, n: int, d: int = 2) -> Dataset:
    return Dataset(rng.normal(size=(n, d)))


# -- consistency of pointwise private depth ------------------------------------


def consistency_experiment(
    seed: int = 0,
    ns: tuple[int, ...] = (200, 1000, 5000),
    reps: int = 100,
    epsilon: float = 1.0,
    m: int = 256,
) -> tuple[list[dict], dict]:
    """Private halfspace depth at the origin of a 2-d standard Gaussian.

    The symmetry center has population depth 1/2, so |released - 0.5| tracks
    estimation error; rows: one per (n, rep).
    """
    root = RandomSource.from_seed(seed).spawn("experiment.consistency")
    dirs = sample_directions(m, 2, seed=seed + 101)
    params = PrivacyParams(epsilon=epsilon, variant="laplace")
    origin = np.zeros(2)
    rows = []
    for n in ns:
        for rep in range(reps):
            rng = root.spawn(f"n={n}.rep={rep}")
            data = _gaussian_data(rng.spawn("data"), n)
            report = private_depth_point(
                origin, data, DepthKind.HALFSPACE, dirs, params, rng.spawn("noise")
            )
            rows.append(
                _row("consistency", n, epsilon, rep, "abs_error", abs(report.payload - 0.5))
            )
    medians = {
        n: float(np.median([r["value"] for r in rows if r["n"] == n])) for n in ns
    }
    return rows, {"median_abs_error": medians, "ns": list(ns)}


# -- empirical privacy-ratio audit ----------------------------------------------


def standard_adjacent_pairs(n: int = 20) -> tuple[list[tuple[Dataset, Dataset]], float]:
    """Handcrafted 1-d adjacent pairs around an integer grid, plus the query x.

    The swaps cover rank shifts of 0 and +-1 on both sides of x, duplicate
    creation, and huge outliers, so at least one pair realizes the full 1/n
    depth change.
    """
    base = np.arange(n, dtype=float)
    x = (n - 1) / 2.0  # 9.5 for n=20, depth exactly 1/2
    swaps = [
        (0, n - 0.5),
        (n - 1, -5.0),
        (0, x - 0.1),
        (n // 2, -1e6),
        (5, 1e6),
        (7, 7.2),
        (3, n - 3.5),
        (n - 4, 2.5),
        (n // 2 - 1, x + 0.8),
        (n // 2 + 2, x - 0.05),
    ]
    left = Dataset(base[:, None])
    pairs = []
    for idx, val in swaps:
        pairs.append((left, left.replace_row(idx, [val])))
    return pairs, x


def _exact_depth_1d(data: Dataset, x: float) -> float:
    vals = data.points[:, 0]
    return min((vals <= x).sum(), (vals >= x).sum()) / data.n


def audit_experiment(
    seed: int = 0,
    samples: int = 1_000_000,
    bins: int = 50,
    epsilon: float = 1.0,
    n: int = 20,
    negative_control: bool = True,
) -> tuple[list[dict], dict]:
    """Binned output-ratio audit of the Laplace mechanism on halfspace depth.

    The negative control halves the noise scale; the audit must flag it.
    """
    pairs, x = standard_adjacent_pairs(n)
    rng = RandomSource.from_seed(seed).spawn("experiment.audit")
    scale = (1.0 / n) / epsilon

    def mech(dataset, stream, size):
        return _exact_depth_1d(dataset, x) + scale * stream.laplace(size=size)

    def broken_mech(dataset, stream, size):
        return _exact_depth_1d(dataset, x) + 0.5 * scale * stream.laplace(size=size)

    result = dp_ratio_audit(mech, pairs, samples, bins, rng.spawn("calibrated"))
    rows = [
        _row("audit", n, epsilon, i, "max_log_ratio", v)
        for i, v in enumerate(result["per_pair"])
    ]
    summary = {"max_log_ratio": result["max_log_ratio"], "bound": epsilon + 0.1}
    if negative_control:
        control = dp_ratio_audit(
            broken_mech, pairs, samples, bins, rng.spawn("negative-control")
        )
        rows += [
            _row("audit", n, epsilon, i, "negative_control_log_ratio", v)
            for i, v in enumerate(control["per_pair"])
        ]
        summary["negative_control_max"] = control["max_log_ratio"]
    return rows, summary


# -- rank-sum scale test power ----------------------------------------------------


def power_experiment(
    seed: int = 0,
    reps: int = 200,
    n_group: int = 50,
    epsilon: float = 2.0,
    scale_factor: float = 3.0,
    m: int = 64,
    alpha: float = 0.05,
    permutations: int = 500,
    kind: DepthKind = DepthKind.IRW,
) -> tuple[list[dict], dict]:
    """Rejection rate of the depth-rank scale test, private vs non-private.

    Group B is the same 2-d Gaussian inflated by ``scale_factor``; noise biases
    the private statistic toward the null, so the private rate must sit at or
    below the classical one.
    """
    root = RandomSource.from_seed(seed).spawn("experiment.power")
    dirs = sample_directions(m, 2, seed=seed + 202)
    params = PrivacyParams(epsilon=epsilon, variant="laplace")
    rows = []
    rejections_private = 0
    rejections_classic = 0
    for rep in range(reps):
        rng = root.spawn(f"rep={rep}")
        group_a = _gaussian_data(rng.spawn("group-a"), n_group)
        group_b = Dataset(scale_factor * rng.spawn("group-b").normal(size=(n_group, 2)))
        private = private_rank_sum_scale_test(
            group_a, group_b, kind, dirs, params, rng.spawn("private"),
            permutations=permutations,
        )
        classic = rank_sum_scale_test(
            group_a, group_b, kind, dirs, rng.spawn("classic"), permutations=permutations
        )
        rejections_private += private.p_value <= alpha
        rejections_classic += classic.p_value <= alpha
        rows.append(_row("power", 2 * n_group, epsilon, rep, "p_private", private.p_value))
        rows.append(_row("power", 2 * n_group, epsilon, rep, "p_classical", classic.p_value))
    summary = {
        "power_private": rejections_private / reps,
        "power_classical": rejections_classic / reps,
        "alpha": alpha,
        "kind": kind.value,
    }
    return rows, summary


# -- PTR pointwise projection depth -------------------------------------------------


def ptr_depth_experiment(
    seed: int = 0,
    reps: int = 100,
    n: int = 2000,
    epsilon: float = 1.0,
    delta: float = 1e-4,
    m: int = 128,
    eta: float | None = None,
    reference_n: int = 100_000,
) -> tuple[list[dict], dict]:
    """Released-value error and refusal rate of PTR projection depth at the origin."""
    if eta is None:
        eta = default_eta(n)
    root = RandomSource.from_seed(seed).spawn("experiment.ptr-depth")
    dirs = sample_directions(m, 2, seed=seed + 303)
    params = PrivacyParams(epsilon=epsilon, delta=delta, variant="laplace")
    origin = np.zeros(2)
    reference = _gaussian_data(root.spawn("reference"), reference_n)
    ref_depth = float(
        depth_batch(origin[None, :], reference, DepthKind.PROJECTION_IQR, dirs)[0]
    )
    rows = []
    errors = []
    bottoms = 0
    for rep in range(reps):
        rng = root.spawn(f"rep={rep}")
        data = _gaussian_data(rng.spawn("data"), n)
        report = private_projection_depth(
            origin, data, dirs, eta, params, rng.spawn("mechanism")
        )
        if report.released:
            err = abs(report.payload["depth"] - ref_depth)
            errors.append(err)
            rows.append(_row("ptr-depth", n, epsilon, rep, "abs_error", err))
        else:
            bottoms += 1
            rows.append(_row("ptr-depth", n, epsilon, rep, "bottom", 1.0))
    summary = {
        "bottom_rate": bottoms / reps,
        "median_abs_error": float(np.median(errors)) if errors else math.inf,
        "reference_depth": ref_depth,
        "eta": eta,
    }
    return rows, summary


# -- exponential-mechanism depth median (exact weights) ------------------------------


def median_exp_experiment(
    exponent_scales: tuple[float, ...] = (125.0, 250.0, 500.0),
) -> tuple[list[dict], dict]:
    """Exact selection probabilities for the 1-d grid median on symmetric data.

    Utilities are exact halfspace depths of grid candidates; the rows list the
    full selection distribution at each exponent scale n*eps/(2C).
    """
    data = Dataset(np.array([[-2.0], [-1.0], [0.0], [1.0], [2.0]]))
    grid = CandidateGrid.regular([(-2.0, 2.0)], [5])
    dirs = sample_directions(1, 1, seed=0)  # exact two-point sphere for d=1
    utilities = depth_batch(grid.points, data, DepthKind.HALFSPACE, dirs)
    rows = []
    argmax_probs = {}
    symmetric = True
    for scale in exponent_scales:
        # exponent_scale = eps/(2 gs) so eps = 2 * gs * scale
        probs = exponential_weights(utilities, gs=1.0, epsilon=2.0 * scale)
        for i, p in enumerate(probs):
            rows.append(
                _row("median-exp", data.n, 2.0 * scale / data.n, int(scale), f"prob_at_{grid.points[i,0]:+.0f}", float(p))
            )
        argmax_probs[scale] = float(probs[int(np.argmax(utilities))])
        symmetric &= bool(np.allclose(probs, probs[::-1], rtol=0, atol=0))
    scales = sorted(argmax_probs)
    monotone = all(
        argmax_probs[a] <= argmax_probs[b] for a, b in zip(scales, scales[1:])
    )
    summary = {
        "argmax_probability": argmax_probs,
        "symmetric": symmetric,
        "monotone_concentration": monotone,
        "utilities": utilities.tolist(),
    }
    return rows, summary


# -- PTR + exponential projection median ----------------------------------------------


def projection_median_experiment(
    seed: int = 0,
    reps: int = 100,
    n: int = 2000,
    epsilon: float = 1.0,
    delta: float = 1e-4,
    radius: float = 10.0,
    bounds: tuple[tuple[float, float], ...] = ((-2.0, 2.0), (-2.0, 2.0)),
    counts: tuple[int, ...] = (21, 21),
    eta: float | None = None,
    m: int = 64,
    success_radius: float = 0.3,
) -> tuple[list[dict], dict]:
    """Distance to the true center of the released private projection median."""
    if eta is None:
        eta = default_eta(n)
    root = RandomSource.from_seed(seed).spawn("experiment.projection-median")
    dirs = sample_directions(m, 2, seed=seed + 404)
    params = PrivacyParams(epsilon=epsilon, delta=delta, variant="laplace")
    grid = CandidateGrid.regular(bounds, counts)
    trunc = TruncatedOutlyingnessSpec(radius=radius)
    rows = []
    hits = 0
    bottoms = 0
    for rep in range(reps):
        rng = root.spawn(f"rep={rep}")
        data = _gaussian_data(rng.spawn("data"), n)
        report = private_projection_median_ptr(
            data, trunc, grid, dirs, eta, params, rng.spawn("mechanism")
        )
        if report.released:
            dist = float(np.linalg.norm(report.payload))
            hits += dist <= success_radius
            rows.append(_row("projection-median", n, epsilon, rep, "dist_to_origin", dist))
        else:
            bottoms += 1
            rows.append(_row("projection-median", n, epsilon, rep, "bottom", 1.0))
    summary = {
        "within_radius": hits,
        "reps": reps,
        "success_radius": success_radius,
        "bottom_rate": bottoms / reps,
        "eta": eta,
    }
    return rows, summary


def run_experiment(name: str, seed: int = 0, **overrides) -> tuple[list[dict], dict]:
    if name == "consistency":
        return consistency_experiment(seed=seed, **overrides)
    if name == "audit":
        return audit_experiment(seed=seed, **overrides)
    if name == "power":
        return power_experiment(seed=seed, **overrides)
    if name == "ptr-depth":
        return ptr_depth_experiment(seed=seed, **overrides)
    if name == "median-exp":
        return median_exp_experiment(**overrides)
    if name == "projection-median":
        return projection_median_experiment(seed=seed, **overrides)
    raise ValueError(f"unknown experiment {name!r}; choose from {EXPERIMENT_NAMES}")
