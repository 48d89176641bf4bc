"""Independent brute-force validators used as ground truth by the test suite.

Everything here trades speed for trustworthiness: exhaustive neighbor
enumeration for sensitivities and breakdown points, an exact 2-d halfspace
sweep, and an empirical binned audit of the differential-privacy ratio.

Pool semantics: enumerations replace rows with values from a finite pool, so
the enumerated supremum is a lower bound on the true supremum over all of
R^d.  Consequently the enumerated minimum number of changes ("A") is an
*upper* bound on the true truncated breakdown point; tests must pair it with
certificates in the sound direction (a certificate of A > k must imply the
pool-restricted A > k as well).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .data import Dataset

EVAL_GUARD = 1_000_000


@dataclass(frozen=True)
class ReplacementPool:
    """Finite worst-case surrogate replacements: extremes plus existing rows."""

    points: np.ndarray  # (k, d)

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        frozen = np.array(pts)
        frozen.setflags(write=False)
        object.__setattr__(self, "points", frozen)

    def __len__(self):
        return self.points.shape[0]

    @classmethod
    def for_data(cls, data: Dataset, magnitude: float = 1e6) -> "ReplacementPool":
        rows = [data.points[i] for i in range(min(data.n, 4))]
        for axis in range(data.d):
            for sign in (1.0, -1.0):
                e = np.zeros(data.d)
                e[axis] = sign * magnitude
                rows.append(e)
        return cls(np.array(rows))


def _pool_points(pool) -> np.ndarray:
    if isinstance(pool, ReplacementPool):
        return pool.points
    return np.atleast_2d(np.asarray(pool, dtype=float))


def _stat_norm(a, b) -> float:
    diff = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    if diff.ndim == 0:
        return abs(float(diff))
    return float(np.abs(diff).sum())  # L1 for vector statistics


def brute_force_sensitivity(stat, data: Dataset, pool, guard: int = EVAL_GUARD) -> float:
    """Max change of ``stat`` over every single-row replacement from ``pool``."""
    points = _pool_points(pool)
    evals = data.n * points.shape[0]
    if evals > guard:
        raise ValueError(f"{evals} evaluations exceed the guard of {guard}")
    base = stat(data)
    worst = 0.0
    for i in range(data.n):
        for p in points:
            worst = max(worst, _stat_norm(base, stat(data.replace_row(i, p))))
    return worst


def brute_force_max_move(stat, data: Dataset, pool, k: int, guard: int = EVAL_GUARD) -> float:
    """Max change of ``stat`` when up to ``k`` rows are replaced from ``pool``.

    When the pool contains copies of the data's own values, a j-change attack
    is a special case of a k-change attack for j <= k, so this is monotone in k.
    """
    points = _pool_points(pool)
    n_assign = points.shape[0]
    total = sum(
        math.comb(data.n, j) * n_assign**j for j in range(1, k + 1)
    )
    if total > guard:
        raise ValueError(f"{total} evaluations exceed the guard of {guard}")
    base = stat(data)
    worst = 0.0
    for j in range(1, k + 1):
        for rows in itertools.combinations(range(data.n), j):
            for assignment in itertools.product(range(n_assign), repeat=j):
                pts = np.array(data.points)
                for r, a in zip(rows, assignment):
                    pts[r] = points[a]
                worst = max(worst, _stat_norm(base, stat(Dataset(pts))))
    return worst


def brute_force_A_eta(stat, data: Dataset, eta: float, pool, k_max: int, guard: int = EVAL_GUARD):
    """Smallest k <= k_max whose pool-restricted replacements move ``stat`` by
    more than eta; ``math.inf`` when no such k exists within the search."""
    for k in range(1, k_max + 1):
        if brute_force_max_move(stat, data, pool, k, guard=guard) > eta:
            return k
    return math.inf


def exact_halfspace_2d(x, data: Dataset) -> float:
    """Exact bivariate halfspace depth by sweeping the O(n) critical angles.

    The count #{i : (X_i - x).u <= 0} only changes when u crosses a direction
    perpendicular to some X_i - x, so evaluating at every critical angle and
    every arc midpoint realizes the exact infimum over the whole circle.
    """
    if data.d != 2:
        raise ValueError("exact sweep is for d=2 only")
    p = np.ravel(np.asarray(x, dtype=float))
    v = data.points - p[None, :]
    norms = np.linalg.norm(v, axis=1)
    coincident = int((norms == 0).sum())  # rows equal to x sit in every halfspace
    w = v[norms > 0]
    if w.shape[0] == 0:
        return 1.0
    angles = np.arctan2(w[:, 1], w[:, 0])
    crit = np.concatenate([angles + np.pi / 2.0, angles - np.pi / 2.0]) % (2.0 * np.pi)
    crit = np.unique(crit)
    mids = (crit + np.diff(np.concatenate([crit, [crit[0] + 2.0 * np.pi]])) / 2.0) % (
        2.0 * np.pi
    )
    candidates = np.concatenate([crit, mids])
    unit = w / np.linalg.norm(w, axis=1)[:, None]
    best = data.n
    for psi in candidates:
        u = np.array([math.cos(psi), math.sin(psi)])
        cosines = unit @ u
        count = coincident + int((cosines <= 1e-12).sum())
        best = min(best, count)
    return best / data.n


def dp_ratio_audit(mech, pairs, samples: int, bins: int, rng) -> dict:
    """Empirical max |log count-ratio| over equal-mass bins of mech outputs.

    ``mech(dataset, rng, size)`` must return ``size`` draws as a float array;
    ``numpy.nan`` entries stand for the refusal symbol and get their own bin.
    Counts are smoothed by +0.5 before the ratio.  Equal-mass (quantile)
    binning keeps every bin populated, so the estimate tracks the privacy
    bound instead of tail-count noise.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    per_pair = []
    for data_a, data_b in pairs:
        out_a = np.asarray(mech(data_a, rng, samples), dtype=float)
        out_b = np.asarray(mech(data_b, rng, samples), dtype=float)
        fin_a, fin_b = out_a[~np.isnan(out_a)], out_b[~np.isnan(out_b)]
        pooled = np.concatenate([fin_a, fin_b])
        if pooled.size == 0:
            per_pair.append(0.0)  # both always refuse: identical distributions
            continue
        qs = np.linspace(0.0, 1.0, bins + 1)
        edges = np.unique(np.quantile(pooled, qs))
        edges[0], edges[-1] = -np.inf, np.inf
        c_a = np.histogram(fin_a, bins=edges)[0].astype(float)
        c_b = np.histogram(fin_b, bins=edges)[0].astype(float)
        c_a = np.append(c_a, float(np.isnan(out_a).sum()))  # refusal bin
        c_b = np.append(c_b, float(np.isnan(out_b).sum()))
        ratios = np.abs(np.log((c_a + 0.5) / (c_b + 0.5)))
        per_pair.append(float(ratios.max()))
    return {"max_log_ratio": max(per_pair), "per_pair": per_pair}
