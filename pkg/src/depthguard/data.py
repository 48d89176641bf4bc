"""Data containers, projections, seeded randomness, and univariate summaries.

Quantile conventions matter throughout this package: ``empirical_quantile`` is
the left-continuous (type-1) inverse CDF, while ``sample_median`` is the usual
sample median (middle order statistic, averaged for even n).  Both are used,
deliberately, in different places.
"""

from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass, field

import numpy as np


class InputError(ValueError):
    """Malformed input data (bad CSV rows, dimension mismatches, ...)."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """An n-by-d real matrix; each row is one individual (the privacy unit)."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.ndim != 2:
            raise InputError("dataset must be a 2-d array of shape (n, d)")
        if pts.shape[0] < 1 or pts.shape[1] < 1:
            raise InputError("dataset needs at least one row and one column")
        if not np.isfinite(pts).all():
            raise InputError("dataset contains non-finite values")
        object.__setattr__(self, "points", _readonly(pts))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @classmethod
    def from_rows(cls, rows) -> "Dataset":
        return cls(np.asarray(rows, dtype=float))

    def replace_row(self, index: int, value) -> "Dataset":
        """New dataset with row ``index`` swapped for ``value`` (adjacency)."""
        pts = np.array(self.points)
        pts[index] = np.asarray(value, dtype=float)
        return Dataset(pts)


def load_dataset(path, header: bool = False) -> Dataset:
    """Read a CSV file (comma separator, '.' decimal point, no header by default).

    Raises :class:`InputError` naming the offending 1-based row for ragged or
    non-numeric rows, and for empty files.
    """
    rows: list[list[float]] = []
    width: int | None = None
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for lineno, raw in enumerate(reader, start=1):
            if header and lineno == 1:
                continue
            if not raw or all(cell.strip() == "" for cell in raw):
                continue
            try:
                parsed = [float(cell) for cell in raw]
            except ValueError:
                raise InputError(f"row {lineno}: non-numeric cell in {raw!r}") from None
            if width is None:
                width = len(parsed)
            elif len(parsed) != width:
                raise InputError(
                    f"row {lineno}: expected {width} columns, found {len(parsed)}"
                )
            rows.append(parsed)
    if not rows:
        raise InputError(f"{path}: no data rows")
    return Dataset.from_rows(rows)


@dataclass(frozen=True)
class DirectionSet:
    """Unit vectors on the sphere, generated from a seed and never from data."""

    directions: np.ndarray  # (m, d), unit rows
    seed: int

    def __post_init__(self):
        dirs = np.atleast_2d(np.asarray(self.directions, dtype=float))
        norms = np.linalg.norm(dirs, axis=1)
        if not np.allclose(norms, 1.0, atol=1e-12):
            raise ValueError("directions must have unit norm (within 1e-12)")
        object.__setattr__(self, "directions", _readonly(dirs))

    @property
    def m(self) -> int:
        return self.directions.shape[0]

    @property
    def d(self) -> int:
        return self.directions.shape[1]


def sample_directions(m: int, d: int, seed: int) -> DirectionSet:
    """Sample m i.i.d. uniform directions (normalized Gaussian vectors).

    For d=1 the sphere is the two-point set {+1, -1}, which is returned exactly
    regardless of ``m``; no Monte Carlo error where none is needed.
    """
    if m < 1 or d < 1:
        raise ValueError("m and d must be at least 1")
    if d == 1:
        return DirectionSet(np.array([[1.0], [-1.0]]), seed=seed)
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((m, d))
    norms = np.linalg.norm(dirs, axis=1)
    while (norms == 0).any():  # pragma: no cover - measure-zero event
        redo = norms == 0
        dirs[redo] = rng.standard_normal((int(redo.sum()), d))
        norms = np.linalg.norm(dirs, axis=1)
    return DirectionSet(dirs / norms[:, None], seed=seed)


@dataclass(frozen=True)
class ProjectedSample:
    """The univariate sample of projections onto one direction."""

    values: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _readonly(np.ravel(self.values)))
        object.__setattr__(self, "direction", _readonly(np.ravel(self.direction)))

    def __array__(self, dtype=None):
        return np.asarray(self.values, dtype=dtype)

    def __len__(self):
        return self.values.shape[0]


def project(data: Dataset, direction) -> ProjectedSample:
    """Dot every row with ``direction``."""
    u = np.ravel(np.asarray(direction, dtype=float))
    if u.shape[0] != data.d:
        raise InputError(f"direction has dim {u.shape[0]}, data has dim {data.d}")
    return ProjectedSample(values=data.points @ u, direction=u)


def _values(sample) -> np.ndarray:
    if isinstance(sample, ProjectedSample):
        return sample.values
    arr = np.ravel(np.asarray(sample, dtype=float))
    if arr.size == 0:
        raise ValueError("empty sample")
    return arr


def type1_index(n: int, p: float) -> int:
    """0-based order-statistic index of the type-1 quantile at probability p."""
    # tiny slack keeps p*n from drifting just above an integer in float math
    i = int(math.ceil(n * p - 1e-9))
    return min(max(i, 1), n) - 1


def empirical_quantile(sample, p: float) -> float:
    """Type-1 quantile: smallest sorted value v with F_n(v) >= p, for p in (0, 1]."""
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must be in (0, 1], got {p}")
    vals = np.sort(_values(sample))
    return float(vals[type1_index(vals.size, p)])


def sample_median(sample) -> float:
    """Usual sample median: middle order statistic, averaged for even n."""
    return float(np.median(_values(sample)))


def sample_mad(sample) -> float:
    """Median absolute deviation about the sample median."""
    vals = _values(sample)
    return float(np.median(np.abs(vals - np.median(vals))))


def sample_iqr(sample) -> float:
    """Interquartile range via type-1 quantiles at 3/4 and 1/4."""
    vals = np.sort(_values(sample))
    n = vals.size
    return float(vals[type1_index(n, 0.75)] - vals[type1_index(n, 0.25)])


@dataclass(frozen=True)
class PrivacyParams:
    """Privacy budget (epsilon, delta) plus the noise variant to calibrate."""

    epsilon: float
    delta: float = 0.0
    variant: str = "laplace"  # "laplace" or "gaussian"

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")
        if self.variant not in ("laplace", "gaussian"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.variant == "gaussian" and self.delta <= 0:
            raise ValueError("gaussian variant requires delta > 0")


def _label_entropy(label: str) -> int:
    return int.from_bytes(
        hashlib.blake2s(label.encode("utf-8"), digest_size=8).digest(), "big"
    )


@dataclass
class RandomSource:
    """Seeded random stream with standard Laplace and Gaussian draws.

    A RandomSource is single-owner: give each mechanism invocation its own
    stream (``spawn`` derives an independent child from a string label, so
    adding a consumer never perturbs another consumer's draws).
    """

    chain: tuple[int, ...]
    generator: np.random.Generator = field(repr=False, default=None)

    def __post_init__(self):
        if self.generator is None:
            seq = np.random.SeedSequence(list(self.chain))
            self.generator = np.random.Generator(np.random.PCG64(seq))

    @classmethod
    def from_seed(cls, seed: int) -> "RandomSource":
        return cls(chain=(int(seed),))

    def spawn(self, label: str) -> "RandomSource":
        return RandomSource(chain=self.chain + (_label_entropy(label),))

    # -- draws ------------------------------------------------------------
    def laplace(self, size=None):
        return self.generator.laplace(0.0, 1.0, size=size)

    def normal(self, size=None):
        return self.generator.standard_normal(size=size)

    def random(self, size=None):
        return self.generator.random(size=size)

    def integers(self, low, high=None, size=None):
        return self.generator.integers(low, high=high, size=size)

    def permutation(self, x):
        return self.generator.permutation(x)

    def choice(self, a, size=None, replace=True):
        return self.generator.choice(a, size=size, replace=replace)
