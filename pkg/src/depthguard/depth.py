"""Non-private depth functions: halfspace, IRW, simplicial, and projection.

Halfspace, IRW, and projection depth in dimension >= 2 are evaluated over a
finite, data-independent direction set; d=1 is exact because the direction set
{+1, -1} covers the whole sphere.  Simplicial depth enumerates simplices
exactly (guarded by a combination cap) or estimates by Monte Carlo.
"""

from __future__ import annotations

import itertools
import math
from enum import Enum

import numpy as np

from .data import (
    Dataset,
    DirectionSet,
    InputError,
    RandomSource,
    sample_mad,
    type1_index,
)

EXACT_SIMPLEX_CAP = 2_000_000
_ORIENT_TOL = 1e-12
_BARY_TOL = 1e-9


class DepthKind(Enum):
    HALFSPACE = "halfspace"
    IRW = "irw"
    SIMPLICIAL = "simplicial"
    PROJECTION_MAD = "projection-mad"  # outlyingness scaled by MAD
    PROJECTION_IQR = "projection-iqr"  # outlyingness scaled by IQR


PROJECTION_KINDS = (DepthKind.PROJECTION_MAD, DepthKind.PROJECTION_IQR)
VECTOR_KINDS = (DepthKind.HALFSPACE, DepthKind.IRW, DepthKind.SIMPLICIAL)


def _point(x, d: int) -> np.ndarray:
    p = np.ravel(np.asarray(x, dtype=float))
    if p.shape[0] != d:
        raise InputError(f"point has dim {p.shape[0]}, data has dim {d}")
    return p


def _projections(data: Dataset, dirs: DirectionSet) -> np.ndarray:
    if dirs.d != data.d:
        raise InputError(f"directions have dim {dirs.d}, data has dim {data.d}")
    return data.points @ dirs.directions.T  # (n, m)


def halfspace_depth(x, data: Dataset, dirs: DirectionSet) -> float:
    """min over directions u of (1/n) #{i : X_i.u <= x.u}."""
    p = _point(x, data.d)
    proj = _projections(data, dirs)
    z = dirs.directions @ p
    counts = (proj <= z[None, :]).sum(axis=0)
    return float(counts.min()) / data.n


def irw_depth(x, data: Dataset, dirs: DirectionSet) -> float:
    """Average over directions of the one-dimensional center-outward rank."""
    p = _point(x, data.d)
    proj = _projections(data, dirs)
    z = dirs.directions @ p
    le = (proj <= z[None, :]).sum(axis=0) / data.n
    lt = (proj < z[None, :]).sum(axis=0) / data.n
    return float(np.minimum(le, 1.0 - lt).mean())


# -- simplicial ------------------------------------------------------------


def _contains_1d(lo: float, hi: float, x: float) -> bool:
    return lo <= x <= hi


def _contains_2d(verts: np.ndarray, p: np.ndarray) -> bool:
    # closed triangle via three cross products, ties resolved at 1e-12 scale
    crosses = []
    scales = []
    for i in range(3):
        a = verts[i]
        b = verts[(i + 1) % 3]
        e = b - a
        v = p - a
        crosses.append(e[0] * v[1] - e[1] * v[0])
        scales.append(max(np.abs(e).max(), np.abs(v).max(), 1.0) ** 2)
    tol = [_ORIENT_TOL * s for s in scales]
    inside = all(c >= -t for c, t in zip(crosses, tol)) or all(
        c <= t for c, t in zip(crosses, tol)
    )
    if not inside:
        return False
    # guards the degenerate (collinear) case, where all crosses vanish
    lo = verts.min(axis=0) - _ORIENT_TOL
    hi = verts.max(axis=0) + _ORIENT_TOL
    return bool(((p >= lo) & (p <= hi)).all())


def _contains_general(verts: np.ndarray, p: np.ndarray) -> bool:
    d = verts.shape[1]
    a = (verts[1:] - verts[0]).T
    b = p - verts[0]
    lam, residual, *_ = np.linalg.lstsq(a, b, rcond=None)
    if np.linalg.norm(a @ lam - b) > _BARY_TOL * max(1.0, np.abs(verts).max()):
        return False
    coords = np.concatenate([[1.0 - lam.sum()], lam])
    return bool((coords >= -_BARY_TOL).all())


def _simplex_contains(verts: np.ndarray, p: np.ndarray) -> bool:
    d = verts.shape[1]
    if d == 1:
        return _contains_1d(float(verts.min()), float(verts.max()), float(p[0]))
    if d == 2:
        return _contains_2d(verts, p)
    return _contains_general(verts, p)


def _simplicial_1d_count(values: np.ndarray, x: float) -> int:
    # pairs [a, b] with a <= x <= b: all pairs minus pairs strictly one-sided
    n = values.size
    below = int((values < x).sum())
    above = int((values > x).sum())
    return math.comb(n, 2) - math.comb(below, 2) - math.comb(above, 2)


def simplicial_depth(
    x,
    data: Dataset,
    method: str = "exact",
    samples: int | None = None,
    rng: RandomSource | None = None,
    cap: int = EXACT_SIMPLEX_CAP,
) -> float:
    """Fraction of (d+1)-point closed simplices containing x.

    ``method="exact"`` enumerates all subsets (requires C(n, d+1) <= cap);
    ``method="monte-carlo"`` averages over ``samples`` random subsets drawn
    from ``rng``.
    """
    p = _point(x, data.d)
    n, d = data.n, data.d
    if n < d + 1:
        raise InputError(f"simplicial depth needs n >= d+1 (n={n}, d={d})")
    if method == "exact":
        total = math.comb(n, d + 1)
        if total > cap:
            raise InputError(
                f"exact simplicial enumeration of {total} simplices exceeds cap {cap}"
            )
        if d == 1:
            return _simplicial_1d_count(data.points[:, 0], float(p[0])) / total
        hits = 0
        for idx in itertools.combinations(range(n), d + 1):
            if _simplex_contains(data.points[list(idx)], p):
                hits += 1
        return hits / total
    if method == "monte-carlo":
        if samples is None or samples < 1:
            raise ValueError("monte-carlo mode needs samples >= 1")
        if rng is None:
            raise ValueError("monte-carlo mode needs an explicit rng")
        hits = 0
        keys = rng.random(size=(samples, n))
        subsets = np.argpartition(keys, d, axis=1)[:, : d + 1]
        for row in subsets:
            if _simplex_contains(data.points[row], p):
                hits += 1
        return hits / samples
    raise ValueError(f"unknown simplicial method {method!r}")


# -- projection outlyingness ------------------------------------------------


def _direction_stats(proj: np.ndarray, scale: str) -> tuple[np.ndarray, np.ndarray]:
    """Per-direction (median, scale) of the projected sample; proj is (n, m)."""
    meds = np.median(proj, axis=0)
    if scale == "iqr":
        srt = np.sort(proj, axis=0)
        n = proj.shape[0]
        scales = srt[type1_index(n, 0.75)] - srt[type1_index(n, 0.25)]
    elif scale == "mad":
        scales = np.median(np.abs(proj - meds[None, :]), axis=0)
    else:
        raise ValueError(f"unknown scale {scale!r} (use 'mad' or 'iqr')")
    return meds, scales


def outlyingness_batch(points, data: Dataset, dirs: DirectionSet, scale: str = "iqr"):
    """Worst-case standardized projection distance for each query point."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != data.d:
        raise InputError(f"points have dim {pts.shape[1]}, data has dim {data.d}")
    proj = _projections(data, dirs)
    meds, scales = _direction_stats(proj, scale)
    num = np.abs(pts @ dirs.directions.T - meds[None, :])  # (g, m)
    out = np.zeros(pts.shape[0])
    ok = scales > 0
    if ok.any():
        out = np.max(num[:, ok] / scales[None, ok], axis=1, initial=0.0)
    if (~ok).any():
        blown = (num[:, ~ok] > 0).any(axis=1)
        out[blown] = np.inf
    return out


def outlyingness(x, data: Dataset, dirs: DirectionSet, scale: str = "iqr") -> float:
    """max over directions of |x.u - med(X.u)| / scale(X.u); may be +inf."""
    p = _point(x, data.d)
    return float(outlyingness_batch(p[None, :], data, dirs, scale)[0])


def projection_depth(x, data: Dataset, dirs: DirectionSet, scale: str = "iqr") -> float:
    """1 / (1 + outlyingness); infinite outlyingness maps to depth 0."""
    o = outlyingness(x, data, dirs, scale)
    return 0.0 if math.isinf(o) else 1.0 / (1.0 + o)


# -- batch and vector evaluation ---------------------------------------------


def depth_batch(
    points,
    data: Dataset,
    kind: DepthKind,
    dirs: DirectionSet | None = None,
    method: str = "exact",
    samples: int | None = None,
    rng: RandomSource | None = None,
) -> np.ndarray:
    """Depth of each query point with respect to ``data``."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if kind in (DepthKind.HALFSPACE, DepthKind.IRW):
        if dirs is None:
            raise ValueError(f"{kind.value} depth needs a DirectionSet")
        proj = np.sort(_projections(data, dirs), axis=0)  # (n, m) sorted per column
        z = pts @ dirs.directions.T  # (g, m)
        n = data.n
        le = np.empty_like(z)
        lt = np.empty_like(z)
        for j in range(dirs.m):
            le[:, j] = np.searchsorted(proj[:, j], z[:, j], side="right")
            lt[:, j] = np.searchsorted(proj[:, j], z[:, j], side="left")
        if kind is DepthKind.HALFSPACE:
            return le.min(axis=1) / n
        return np.minimum(le / n, 1.0 - lt / n).mean(axis=1)
    if kind is DepthKind.SIMPLICIAL:
        return np.array(
            [
                simplicial_depth(p, data, method=method, samples=samples, rng=rng)
                for p in pts
            ]
        )
    if kind in PROJECTION_KINDS:
        if dirs is None:
            raise ValueError("projection depth needs a DirectionSet")
        scale = "mad" if kind is DepthKind.PROJECTION_MAD else "iqr"
        o = outlyingness_batch(pts, data, dirs, scale)
        out = np.zeros(pts.shape[0])
        finite = np.isfinite(o)
        out[finite] = 1.0 / (1.0 + o[finite])
        return out
    raise ValueError(f"unknown depth kind {kind}")


def evaluate_depth(
    x,
    data: Dataset,
    kind: DepthKind,
    dirs: DirectionSet | None = None,
    **kwargs,
) -> float:
    return float(depth_batch(_point(x, data.d)[None, :], data, kind, dirs, **kwargs)[0])


def depth_vector(
    data: Dataset,
    kind: DepthKind,
    dirs: DirectionSet | None = None,
    method: str = "exact",
    samples: int | None = None,
    rng: RandomSource | None = None,
) -> np.ndarray:
    """Depth of every sample point with respect to the full sample."""
    if kind not in VECTOR_KINDS:
        raise ValueError(
            "depth vector supports halfspace, irw, simplicial; got " + kind.value
        )
    if kind is DepthKind.SIMPLICIAL:
        n, d = data.n, data.d
        if n < d + 1:
            raise InputError(f"simplicial depth needs n >= d+1 (n={n}, d={d})")
        if d == 1 and method == "exact":
            vals = data.points[:, 0]
            total = math.comb(n, 2)
            return np.array(
                [_simplicial_1d_count(vals, float(v)) / total for v in vals]
            )
        return depth_batch(
            data.points, data, kind, method=method, samples=samples, rng=rng
        )
    return depth_batch(data.points, data, kind, dirs)
