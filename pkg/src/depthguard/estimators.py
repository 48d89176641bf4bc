"""End-user private statistics: pointwise depth values, depth vectors,
propose-test-release projection depth, exponential-mechanism depth medians,
and the depth-rank scale test.

Every released report carries exactly one ledger entry at the mechanism's
advertised budget.  Post-processed fields (clamping, ranks, p-values) are
derived from released payloads only and cost nothing extra.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .data import Dataset, DirectionSet, PrivacyParams, RandomSource
from .depth import (
    DepthKind,
    PROJECTION_KINDS,
    VECTOR_KINDS,
    depth_batch,
    depth_vector,
    evaluate_depth,
    outlyingness,
    outlyingness_batch,
)
from .mechanisms import (
    BOTTOM,
    BudgetLedger,
    CandidateGrid,
    GridError,
    LedgerEntry,
    MechanismOutcome,
    Prior,
    exponential_mechanism_discrete,
    gaussian_mechanism,
    laplace_mechanism,
    ptr,
    ptr_advertised_privacy,
    ptr_exponential,
)
from .sensitivity import (
    breakdown_holds,
    breakdown_holds_batch,
    global_sensitivity,
    vector_global_sensitivity,
)


def default_eta(n: int, c: float = 1.0, r: float = 0.1) -> float:
    """Default PTR move radius, c * log(n) / n^(3/4 - r)."""
    if n < 2:
        raise ValueError("need n >= 2")
    return c * math.log(n) / n ** (0.75 - r)


@dataclass
class PrivateDepthReport:
    estimator: str
    kind: str
    params: PrivacyParams
    payload: Any  # float, ndarray, grid point, or BOTTOM
    post_processed: dict[str, Any]
    audit: dict[str, Any]
    sensitive_audit: bool
    ledger_entry: LedgerEntry
    extras: dict[str, Any] = field(default_factory=dict)

    @property
    def released(self) -> bool:
        return self.payload is not BOTTOM


def _spend(
    ledger: BudgetLedger | None, mechanism: str, epsilon: float, delta: float, variant: str
) -> LedgerEntry:
    entry = LedgerEntry(mechanism=mechanism, epsilon=epsilon, delta=delta, variant=variant)
    if ledger is not None:
        ledger.append(entry)
    return entry


def _add_noise(value, gs: float, params: PrivacyParams, rng: RandomSource) -> MechanismOutcome:
    if params.variant == "laplace":
        return laplace_mechanism(value, gs, params.epsilon, rng)
    return gaussian_mechanism(value, gs, params.epsilon, params.delta, rng)


def private_depth_point(
    x,
    data: Dataset,
    kind: DepthKind,
    dirs: DirectionSet | None,
    params: PrivacyParams,
    rng: RandomSource,
    ledger: BudgetLedger | None = None,
    **depth_kwargs,
) -> PrivateDepthReport:
    """Depth at a fixed, data-independent point plus calibrated noise."""
    if kind in PROJECTION_KINDS:
        raise ValueError(
            "projection depth has pointwise sensitivity 1; use "
            "private_projection_depth (propose-test-release) instead"
        )
    gs = global_sensitivity(kind, data.n, data.d).value
    value = evaluate_depth(x, data, kind, dirs, **depth_kwargs)
    outcome = _add_noise(value, gs, params, rng)
    entry = _spend(
        ledger,
        "private-depth-point",
        params.epsilon,
        params.delta if params.variant == "gaussian" else 0.0,
        params.variant,
    )
    return PrivateDepthReport(
        estimator="private-depth-point",
        kind=kind.value,
        params=params,
        payload=outcome.payload,
        post_processed={"clamped": float(np.clip(outcome.payload, 0.0, 1.0))},
        audit=outcome.audit,
        sensitive_audit=False,
        ledger_entry=entry,
        extras={"point": np.ravel(np.asarray(x, dtype=float)).tolist()},
    )


def private_depth_vector(
    data: Dataset,
    kind: DepthKind,
    dirs: DirectionSet | None,
    params: PrivacyParams,
    rng: RandomSource,
    ledger: BudgetLedger | None = None,
    **depth_kwargs,
) -> PrivateDepthReport:
    """All n in-sample depth values plus i.i.d. noise at the vector sensitivity.

    The added noise has aggregate l2 size of order sqrt(n), which dominates the
    sampling error of the depth vector; downstream inference must budget for
    that (the rank test below does, by re-deriving its null from ranks).
    """
    if kind not in VECTOR_KINDS:
        raise ValueError(
            "depth vector supports halfspace, irw, simplicial; got " + kind.value
        )
    norm = "l1" if params.variant == "laplace" else "l2"
    gs = vector_global_sensitivity(kind, data.n, data.d, norm=norm).value
    vec = depth_vector(data, kind, dirs, **depth_kwargs)
    outcome = _add_noise(vec, gs, params, rng)
    entry = _spend(
        ledger,
        "private-depth-vector",
        params.epsilon,
        params.delta if params.variant == "gaussian" else 0.0,
        params.variant,
    )
    return PrivateDepthReport(
        estimator="private-depth-vector",
        kind=kind.value,
        params=params,
        payload=outcome.payload,
        post_processed={"clamped": np.clip(outcome.payload, 0.0, 1.0)},
        audit=outcome.audit,
        sensitive_audit=False,
        ledger_entry=entry,
        extras={"noise_note": "aggregate noise is O_p(sqrt(n)), above sampling error"},
    )


def _certificate_lower_bound(
    points: np.ndarray,
    data: Dataset,
    dirs: DirectionSet,
    eta: float,
) -> Any:
    """Breakdown lower bound callable fed to PTR.

    The truncated breakdown point is always >= 1.  A certificate at level
    m = ceil(k_star) proves it exceeds m, hence is >= m + 1 > k_star.
    """

    def lower_bound(k_star: float) -> float:
        m = max(1, math.ceil(k_star))
        if m < data.n / 2:
            ok = breakdown_holds_batch(points, data, dirs, eta, m)
            if bool(ok.all()):
                return m + 1.0
        return 1.0

    return lower_bound


def private_projection_depth(
    x,
    data: Dataset,
    dirs: DirectionSet,
    eta: float,
    params: PrivacyParams,
    rng: RandomSource,
    scale: str = "iqr",
    ledger: BudgetLedger | None = None,
) -> PrivateDepthReport:
    """Propose-test-release projection depth at x (IQR outlyingness scale).

    Releases a noisy outlyingness (and 1/(1+value) as the raw depth) when the
    interval certificate proves the dataset insensitive at the realized test
    level; otherwise the payload is BOTTOM.  Spends (2 eps, delta) under the
    laplace variant and (2 eps, 2 e^eps delta + delta^2) under the gaussian.
    """
    if scale != "iqr":
        raise ValueError(
            "the breakdown certificate brackets medians and IQRs; the MAD "
            "scale has no certificate, so only scale='iqr' is supported"
        )
    p = np.ravel(np.asarray(x, dtype=float))
    o_hat = outlyingness(x, data, dirs, scale="iqr")
    lower_bound = _certificate_lower_bound(p[None, :], data, dirs, eta)
    outcome = ptr(lower_bound, o_hat, eta, params.epsilon, params.delta, params.variant, rng)
    adv_eps, adv_delta = ptr_advertised_privacy(params.variant, params.epsilon, params.delta)
    entry = _spend(ledger, "private-projection-depth", adv_eps, adv_delta, params.variant)
    if outcome.released:
        noisy_o = float(outcome.payload)
        raw_depth = math.inf if noisy_o == -1.0 else 1.0 / (1.0 + noisy_o)
        payload = {"outlyingness": noisy_o, "depth": raw_depth}
        post = {"depth": 1.0 / (1.0 + max(noisy_o, 0.0))}
    else:
        payload = BOTTOM
        post = {}
    return PrivateDepthReport(
        estimator="private-projection-depth",
        kind=DepthKind.PROJECTION_IQR.value,
        params=params,
        payload=payload,
        post_processed=post,
        audit=outcome.audit,
        sensitive_audit=True,
        ledger_entry=entry,
        extras={"eta": eta, "point": p.tolist()},
    )


def private_depth_median_exp(
    data: Dataset,
    kind: DepthKind,
    grid: CandidateGrid,
    prior: Prior,
    dirs: DirectionSet | None,
    epsilon: float,
    rng: RandomSource,
    ledger: BudgetLedger | None = None,
    **depth_kwargs,
) -> PrivateDepthReport:
    """Exponential-mechanism depth median on a data-independent grid.

    The utility of candidate v is its depth, with sensitivity C/n, so the
    selection exponent is n*eps*depth/(2C); exact categorical sampling on the
    finite support makes the draw exactly eps-DP.
    """
    if kind not in VECTOR_KINDS:
        raise ValueError(
            "the exponential-mechanism median supports halfspace, irw, simplicial; got "
            + kind.value
        )
    if not grid.data_independent:
        raise ValueError("the candidate grid must be constructed independently of the data")
    if grid.d != data.d:
        raise ValueError(f"grid has dim {grid.d}, data has dim {data.d}")
    gs = global_sensitivity(kind, data.n, data.d).value
    utilities = depth_batch(grid.points, data, kind, dirs, **depth_kwargs)
    outcome = exponential_mechanism_discrete(grid, utilities, gs, epsilon, prior, rng)
    entry = _spend(ledger, "private-depth-median-exp", epsilon, 0.0, "exponential")
    return PrivateDepthReport(
        estimator="private-depth-median-exp",
        kind=kind.value,
        params=PrivacyParams(epsilon=epsilon, delta=0.0, variant="laplace"),
        payload=outcome.payload,
        post_processed={},
        audit=outcome.audit,
        sensitive_audit=False,
        ledger_entry=entry,
        extras={"grid_spec": dict(grid.spec)},
    )


@dataclass(frozen=True)
class TruncatedOutlyingnessSpec:
    """Truncation radius (chosen without looking at the data) and scale kind."""

    radius: float
    scale: str = "iqr"

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("truncation radius must be positive")
        if self.scale != "iqr":
            raise ValueError("only the IQR outlyingness scale is supported")


def private_projection_median_ptr(
    data: Dataset,
    trunc: TruncatedOutlyingnessSpec,
    grid: CandidateGrid,
    dirs: DirectionSet,
    eta: float,
    params: PrivacyParams,
    rng: RandomSource,
    ledger: BudgetLedger | None = None,
) -> PrivateDepthReport:
    """Projection-depth median via PTR plus the exponential mechanism.

    The cost of grid point v is its truncated outlyingness: +inf outside the
    radius, the IQR outlyingness inside.  Points outside the radius cannot
    distinguish neighboring datasets (both costs are +inf), so the functional
    breakdown bound only needs the certificate at the in-radius grid points.
    Spends (2 eps, delta) laplace / (2 eps, 2 delta) gaussian.
    """
    if not grid.data_independent:
        raise ValueError("the candidate grid must be constructed independently of the data")
    if grid.d != data.d:
        raise ValueError(f"grid has dim {grid.d}, data has dim {data.d}")
    norms = np.linalg.norm(grid.points, axis=1)
    inside = norms < trunc.radius
    if not inside.any():
        raise GridError("every grid point lies outside the truncation radius")

    def cost_fn(points: np.ndarray) -> np.ndarray:
        costs = np.full(points.shape[0], np.inf)
        costs[inside] = outlyingness_batch(points[inside], data, dirs, scale="iqr")
        return costs

    lower_bound = _certificate_lower_bound(grid.points[inside], data, dirs, eta)
    outcome = ptr_exponential(
        lower_bound, cost_fn, grid, eta, params.epsilon, params.delta, params.variant, rng
    )
    adv_delta = params.delta if params.variant == "laplace" else 2.0 * params.delta
    entry = _spend(
        ledger, "private-projection-median", 2.0 * params.epsilon, adv_delta, params.variant
    )
    return PrivateDepthReport(
        estimator="private-projection-median",
        kind=DepthKind.PROJECTION_IQR.value,
        params=params,
        payload=outcome.payload,
        post_processed={},
        audit=outcome.audit,
        sensitive_audit=True,
        ledger_entry=entry,
        extras={"grid_spec": dict(grid.spec), "eta": eta, "radius": trunc.radius},
    )


# -- depth-rank scale test -------------------------------------------------------


def ranks_by_count(values) -> np.ndarray:
    """rank_i = #{j : v_j <= v_i}; ties share the count-based rank."""
    v = np.ravel(np.asarray(values, dtype=float))
    order = np.sort(v)
    return np.searchsorted(order, v, side="right").astype(int)


@dataclass
class RankSumTestReport:
    statistic: float
    p_value: float
    ranks: np.ndarray
    n1: int
    n2: int
    permutation_mean: float
    ledger_entry: LedgerEntry | None
    depth_report: PrivateDepthReport | None = None


def _rank_sum_p_value(
    ranks: np.ndarray, n1: int, rng: RandomSource, permutations: int
) -> tuple[float, float, float]:
    n = ranks.shape[0]
    observed = float(ranks[:n1].sum())
    mean = n1 * float(ranks.sum()) / n  # exact mean over group relabelings
    draws = np.empty(permutations)
    for b in range(permutations):
        perm = rng.permutation(ranks)
        draws[b] = perm[:n1].sum()
    extreme = int((np.abs(draws - mean) >= abs(observed - mean) - 1e-12).sum())
    p = (1.0 + extreme) / (permutations + 1.0)
    return observed, p, mean


def rank_sum_scale_test(
    group_a: Dataset,
    group_b: Dataset,
    kind: DepthKind,
    dirs: DirectionSet | None,
    rng: RandomSource,
    permutations: int = 1000,
    **depth_kwargs,
) -> RankSumTestReport:
    """Non-private baseline: classical depth ranks on the pooled sample."""
    if group_a.n < 2 or group_b.n < 2:
        raise ValueError("each group needs at least 2 observations")
    pooled = Dataset(np.vstack([group_a.points, group_b.points]))
    vec = depth_vector(pooled, kind, dirs, **depth_kwargs)
    ranks = ranks_by_count(vec)
    stat, p, mean = _rank_sum_p_value(ranks, group_a.n, rng, permutations)
    return RankSumTestReport(
        statistic=stat,
        p_value=p,
        ranks=ranks,
        n1=group_a.n,
        n2=group_b.n,
        permutation_mean=mean,
        ledger_entry=None,
    )


def private_rank_sum_scale_test(
    group_a: Dataset,
    group_b: Dataset,
    kind: DepthKind,
    dirs: DirectionSet | None,
    params: PrivacyParams,
    rng: RandomSource,
    ledger: BudgetLedger | None = None,
    permutations: int = 1000,
    **depth_kwargs,
) -> RankSumTestReport:
    """Two-sample scale test from privately released pooled depth values.

    Ranks, the rank-sum statistic, and the permutation p-value are computed
    from the released vector only (free post-processing); the permutation null
    is exact because noisy ranks are still a permutation of 1..n under the
    null.  Noise biases the statistic toward its null mean, so power is below
    the non-private test's.
    """
    if group_a.n < 2 or group_b.n < 2:
        raise ValueError("each group needs at least 2 observations")
    pooled = Dataset(np.vstack([group_a.points, group_b.points]))
    report = private_depth_vector(
        pooled, kind, dirs, params, rng, ledger=ledger, **depth_kwargs
    )
    ranks = ranks_by_count(report.payload)
    stat, p, mean = _rank_sum_p_value(ranks, group_a.n, rng, permutations)
    return RankSumTestReport(
        statistic=stat,
        p_value=p,
        ranks=ranks,
        n1=group_a.n,
        n2=group_b.n,
        permutation_mean=mean,
        ledger_entry=report.ledger_entry,
        depth_report=report,
    )
