"""Closed-form global sensitivities and the interval certificate that
lower-bounds the truncated breakdown point of projection outlyingness.

The certificate brackets, per direction u, how far ``max_changes`` row
replacements can move the projected median and IQR, then turns the bracket
into an interval [lo, up] around the directional outlyingness.  If the
interval stays within ``eta`` of the observed value in every direction, no
attack of that size can move the outlyingness supremum by more than eta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .data import Dataset, DirectionSet, type1_index
from .depth import DepthKind, _point, _projections


class SensitivityBound(NamedTuple):
    value: float
    norm: str  # "l1", "l2", or "any"
    scope: str  # "point" or "vector"


def global_sensitivity(kind: DepthKind, n: int, d: int | None = None) -> SensitivityBound:
    """Worst-case change of a single out-of-sample depth value over adjacent datasets.

    Halfspace and IRW: 1/n (one swap shifts every directional rank by at most
    one).  Simplicial: (d+1)/n (one swap touches C(n-1, d) simplices).
    Projection depth: 1 (the outlyingness ratio has unbounded sensitivity and
    the depth range is [0, 1)).  The value is norm-independent for scalars.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if kind in (DepthKind.HALFSPACE, DepthKind.IRW):
        value = 1.0 / n
    elif kind is DepthKind.SIMPLICIAL:
        if d is None:
            raise ValueError("simplicial sensitivity needs the dimension d")
        value = (d + 1) / n
    else:
        value = 1.0
    return SensitivityBound(value=value, norm="any", scope="point")


def _half_shift(n: int) -> int:
    return (n + 1) // 2 - 1


def vector_global_sensitivity(
    kind: DepthKind, n: int, d: int | None = None, norm: str = "l1"
) -> SensitivityBound:
    """Worst-case change of the in-sample depth vector over adjacent datasets.

    For halfspace/IRW one swap moves the replaced point's own depth by up to
    (floor((n+1)/2) - 1)/n and as many other depths by 1/n each.  For
    simplicial the replaced point moves by at most 1 - (d+1)/n and every other
    point by at most (d+1)/n; the L2 form keeps the n-term sum (a sound upper
    bound), and tests assert only <=, never equality.

    The halfspace/IRW formulas treat ties as measure-zero (continuous data):
    breaking an m-fold tie moves m depth values at once, and a fully tied
    sample can reach 2(n-1)/n, roughly twice this value.
    """
    if n < 2:
        raise ValueError("vector sensitivity needs n >= 2")
    if norm not in ("l1", "l2"):
        raise ValueError("norm must be 'l1' or 'l2'")
    if kind in (DepthKind.HALFSPACE, DepthKind.IRW):
        h = _half_shift(n)
        value = 2.0 * h / n if norm == "l1" else math.sqrt(h * h + h) / n
    elif kind is DepthKind.SIMPLICIAL:
        if d is None:
            raise ValueError("simplicial sensitivity needs the dimension d")
        frac = (d + 1) / n
        value = 1.0 if norm == "l1" else math.sqrt((1.0 - frac) ** 2 + n * frac * frac)
    else:
        raise ValueError(f"no vector sensitivity for {kind}")
    return SensitivityBound(value=value, norm=norm, scope="vector")


# -- interval certificate -----------------------------------------------------


@dataclass(frozen=True)
class OutlyingnessInterval:
    """Bracket for one direction's outlyingness under bounded row changes."""

    lo: float
    up: float
    lo_med: float
    up_med: float
    lo_iqr: float
    up_iqr: float
    degenerate: bool  # lo_iqr == 0, so the upper endpoint blew up to +inf


def _check_changes(n: int, max_changes: float) -> int:
    if not 1.0 <= max_changes < n / 2:
        raise ValueError(
            f"max_changes must satisfy 1 <= k < n/2 (got k={max_changes}, n={n})"
        )
    return int(math.ceil(max_changes - 1e-12))


def _merged_median(base: np.ndarray, z: np.ndarray, copies: int) -> np.ndarray:
    """Median of sorted ``base`` with ``copies`` copies of each z inserted.

    base has length n - copies; the merge is done by index arithmetic so the
    cost is O(log n) per query point.
    """
    n = base.size + copies
    pos = np.searchsorted(base, z, side="left")

    def element(i: int) -> np.ndarray:
        lower = i < pos  # merged[i] comes from base before any z
        upper = i >= pos + copies  # past the inserted block
        out = np.where(lower, base[np.minimum(i, base.size - 1)], z)
        idx = np.clip(i - copies, 0, base.size - 1)
        return np.where(upper, base[idx], out)

    if n % 2:
        return element((n - 1) // 2)
    return 0.5 * (element(n // 2 - 1) + element(n // 2))


def _iqr_window(sorted_vals: np.ndarray, copies: int) -> tuple[float, float]:
    """Range of the IQR over every admissible quantile-offset pair."""
    n = sorted_vals.size
    vals = []
    for k1 in range(-copies, copies + 1):
        rest = copies - abs(k1)
        for k2 in {rest, -rest}:
            p1 = min(max(0.75 + k1 / n, 1.0 / n), 1.0)
            p2 = min(max(0.25 + k2 / n, 1.0 / n), 1.0)
            vals.append(
                sorted_vals[type1_index(n, p1)] - sorted_vals[type1_index(n, p2)]
            )
    return max(min(vals), 0.0), max(vals)


def _median_hull(sorted_vals: np.ndarray, copies: int) -> tuple[float, float]:
    """Exact range of the sample median over every dataset reachable by
    replacing ``copies`` rows.

    Pushing the replaced rows to -inf/+inf realizes the extremes, and sweeping
    a replacement continuously shows every value in between is attained.  For
    odd n the endpoints are the order statistics at 1/2 -+ copies/n; for even
    n the averaged-median convention lands the endpoints half a spacing beyond
    those order statistics, so quantile candidates alone would be unsound.
    """
    n = sorted_vals.size
    if n % 2:
        m0 = (n - 1) // 2
        return float(sorted_vals[m0 - copies]), float(sorted_vals[m0 + copies])
    lo = 0.5 * (sorted_vals[n // 2 - 1 - copies] + sorted_vals[n // 2 - copies])
    hi = 0.5 * (sorted_vals[n // 2 - 1 + copies] + sorted_vals[n // 2 + copies])
    return float(lo), float(hi)


def _interval_components(
    sorted_vals: np.ndarray, z: np.ndarray, max_changes: float
) -> tuple[np.ndarray, np.ndarray, float, float]:
    """(lo_med, up_med, lo_iqr, up_iqr) for query projections ``z`` (vector)."""
    n = sorted_vals.size
    copies = _check_changes(n, max_changes)
    med_lo, med_hi = _median_hull(sorted_vals, copies)
    up_med = np.maximum(np.abs(z - med_lo), np.abs(z - med_hi))
    hull_dist = np.maximum(np.maximum(med_lo - z, z - med_hi), 0.0)
    q_hi = sorted_vals[type1_index(n, 0.5 + max_changes / n)]
    q_lo = sorted_vals[type1_index(n, 0.5 - max_changes / n)]
    m1 = _merged_median(sorted_vals[copies:], z, copies)  # smallest k replaced by z
    m2 = _merged_median(sorted_vals[: n - copies], z, copies)  # largest k replaced
    lo_med = np.minimum(
        hull_dist,
        np.minimum(
            np.minimum(np.abs(z - q_hi), np.abs(z - q_lo)),
            np.minimum(np.abs(z - m1), np.abs(z - m2)),
        ),
    )
    lo_iqr, up_iqr = _iqr_window(sorted_vals, copies)
    return lo_med, up_med, lo_iqr, up_iqr


def outlyingness_interval(
    x, data: Dataset, direction, max_changes: float
) -> OutlyingnessInterval:
    """Interval containing the directional outlyingness of every dataset that
    differs from ``data`` in at most ``max_changes`` rows."""
    u = np.ravel(np.asarray(direction, dtype=float))
    p = _point(x, data.d)
    vals = np.sort(data.points @ u)
    z = np.array([float(p @ u)])
    lo_med, up_med, lo_iqr, up_iqr = _interval_components(vals, z, max_changes)
    lo_med_f, up_med_f = float(lo_med[0]), float(up_med[0])
    degenerate = lo_iqr == 0.0
    if up_iqr > 0:
        lo = lo_med_f / up_iqr
    else:
        lo = math.inf if lo_med_f > 0 else 0.0
    up = up_med_f / lo_iqr if not degenerate else math.inf
    return OutlyingnessInterval(
        lo=lo,
        up=up,
        lo_med=lo_med_f,
        up_med=up_med_f,
        lo_iqr=lo_iqr,
        up_iqr=up_iqr,
        degenerate=degenerate,
    )


def _certify_direction(
    sorted_vals: np.ndarray, z: np.ndarray, eta: float, max_changes: float
) -> np.ndarray:
    """Per query point: does the interval pin this direction's outlyingness
    within eta, for every dataset within ``max_changes`` row changes?"""
    n = sorted_vals.size
    med = (
        sorted_vals[(n - 1) // 2]
        if n % 2
        else 0.5 * (sorted_vals[n // 2 - 1] + sorted_vals[n // 2])
    )
    iqr = sorted_vals[type1_index(n, 0.75)] - sorted_vals[type1_index(n, 0.25)]
    lo_med, up_med, lo_iqr, up_iqr = _interval_components(sorted_vals, z, max_changes)
    if iqr <= 0 or lo_iqr <= 0 or up_iqr <= 0:
        return np.zeros(z.shape, dtype=bool)
    o_u = np.abs(z - med) / iqr
    lo = lo_med / up_iqr
    up = up_med / lo_iqr
    return np.maximum(o_u - lo, up - o_u) < eta


def breakdown_holds_batch(
    points, data: Dataset, dirs: DirectionSet, eta: float, max_changes: float
) -> np.ndarray:
    """Vector of per-point certificates (True where every direction passes)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    _check_changes(data.n, max_changes)
    proj = _projections(data, dirs)
    zs = pts @ dirs.directions.T  # (g, m)
    ok = np.ones(pts.shape[0], dtype=bool)
    for j in range(dirs.m):
        if not ok.any():
            break
        vals = np.sort(proj[:, j])
        ok &= _certify_direction(vals, zs[:, j], eta, max_changes)
    return ok


def breakdown_holds(
    x, data: Dataset, dirs: DirectionSet, eta: float, max_changes: float
) -> bool:
    """True certifies that changing up to ``max_changes`` rows cannot move the
    direction-sampled outlyingness at x by eta or more.

    Soundness direction: the supremum over directions moves at most as far as
    the worst single direction, so requiring the per-direction check in every
    sampled direction certifies the sampled supremum.
    """
    if math.isinf(eta):
        _check_changes(data.n, max_changes)
        return True
    p = _point(x, data.d)
    return bool(breakdown_holds_batch(p[None, :], data, dirs, eta, max_changes)[0])
