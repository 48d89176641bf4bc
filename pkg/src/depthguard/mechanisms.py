"""Privacy primitives: Laplace and Gaussian noise, the discrete exponential
mechanism, propose-test-release (plain and exponential-mechanism flavored),
and budget composition.

Conventions
-----------
* Mechanisms take one single-owner :class:`~depthguard.data.RandomSource`.
* A refused release is the distinguished :data:`BOTTOM` payload, not an error.
* PTR audit metadata conditions on raw data and is flagged non-releasable.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any, Callable

import numpy as np

from .data import RandomSource


class Bottom:
    """Singleton marker for a refused (propose-test-release) output."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "BOTTOM"


BOTTOM = Bottom()


class GridError(ValueError):
    """Every candidate carries zero weight; nothing can be sampled."""


class BudgetExceeded(RuntimeError):
    """A release would push the ledger past its cap."""


@dataclass
class MechanismOutcome:
    payload: Any  # float, ndarray, grid point, or BOTTOM
    audit: dict[str, Any] = field(default_factory=dict)
    sensitive_audit: bool = False

    @property
    def released(self) -> bool:
        return self.payload is not BOTTOM


# -- additive noise -----------------------------------------------------------


def laplace_mechanism(values, gs1: float, epsilon: float, rng: RandomSource) -> MechanismOutcome:
    """Add independent standard Laplace draws scaled by GS1/epsilon."""
    if not math.isfinite(gs1) or gs1 < 0:
        raise ValueError(f"L1 sensitivity must be finite and nonnegative, got {gs1}")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    scale = gs1 / epsilon
    arr = np.asarray(values, dtype=float)
    noisy = arr + scale * rng.laplace(size=arr.shape if arr.shape else None)
    payload = float(noisy) if arr.shape == () else noisy
    return MechanismOutcome(
        payload=payload,
        audit={"mechanism": "laplace", "noise_scale": scale, "epsilon": epsilon},
    )


def gaussian_noise_scale(gs2: float, epsilon: float, delta: float) -> float:
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"gaussian mechanism needs delta in (0, 1), got {delta}")
    return gs2 * math.sqrt(2.0 * math.log(1.25 / delta)) / epsilon


def gaussian_mechanism(
    values, gs2: float, epsilon: float, delta: float, rng: RandomSource
) -> MechanismOutcome:
    """Add Gaussian noise at scale GS2 * sqrt(2 log(1.25/delta)) / epsilon."""
    if not math.isfinite(gs2) or gs2 < 0:
        raise ValueError(f"L2 sensitivity must be finite and nonnegative, got {gs2}")
    scale = gaussian_noise_scale(gs2, epsilon, delta)
    arr = np.asarray(values, dtype=float)
    noisy = arr + scale * rng.normal(size=arr.shape if arr.shape else None)
    payload = float(noisy) if arr.shape == () else noisy
    return MechanismOutcome(
        payload=payload,
        audit={
            "mechanism": "gaussian",
            "noise_scale": scale,
            "epsilon": epsilon,
            "delta": delta,
        },
    )


# -- candidate grids and priors ----------------------------------------------


@dataclass(frozen=True)
class CandidateGrid:
    """Finite support for the discrete exponential mechanism.

    Construction never reads a dataset; both constructors take only geometry,
    which is what keeps the support (and any prior over it) privacy-neutral.
    """

    points: np.ndarray  # (k, d)
    spec: dict = field(default_factory=dict)
    data_independent: bool = True

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        frozen = np.array(pts)
        frozen.setflags(write=False)
        object.__setattr__(self, "points", frozen)

    def __len__(self):
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @classmethod
    def regular(cls, bounds, counts) -> "CandidateGrid":
        """Cartesian grid: ``bounds`` is [(lo, hi)] per axis, ``counts`` per axis."""
        bounds = [tuple(map(float, b)) for b in bounds]
        counts = [int(c) for c in counts]
        if len(bounds) != len(counts):
            raise ValueError("bounds and counts must have one entry per axis")
        if any(c < 1 for c in counts):
            raise ValueError("grid counts must be positive")
        axes = [np.linspace(lo, hi, c) for (lo, hi), c in zip(bounds, counts)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        return cls(points=pts, spec={"bounds": bounds, "counts": counts})

    @classmethod
    def from_points(cls, points, spec: dict | None = None) -> "CandidateGrid":
        return cls(points=points, spec=spec or {"kind": "explicit"})


@dataclass(frozen=True)
class Prior:
    """Nonnegative weights over a candidate grid, chosen independently of data."""

    kind: str = "uniform"  # "uniform", "gaussian", or "table"
    center: tuple | None = None
    scale: float | None = None
    table: np.ndarray | None = None

    @classmethod
    def uniform(cls) -> "Prior":
        return cls(kind="uniform")

    @classmethod
    def gaussian(cls, center, scale: float) -> "Prior":
        if scale <= 0:
            raise ValueError("gaussian prior needs scale > 0")
        return cls(kind="gaussian", center=tuple(float(c) for c in np.ravel(center)), scale=float(scale))

    @classmethod
    def from_table(cls, weights) -> "Prior":
        w = np.asarray(weights, dtype=float)
        if (w < 0).any() or w.sum() <= 0:
            raise ValueError("prior weights must be nonnegative with positive sum")
        return cls(kind="table", table=w)

    def weights(self, grid: CandidateGrid) -> np.ndarray:
        if self.kind == "uniform":
            return np.ones(len(grid))
        if self.kind == "gaussian":
            diff = grid.points - np.asarray(self.center)[None, :]
            return np.exp(-0.5 * (np.linalg.norm(diff, axis=1) / self.scale) ** 2)
        if self.kind == "table":
            if self.table.shape[0] != len(grid):
                raise ValueError("prior table length does not match grid size")
            return np.array(self.table)
        raise ValueError(f"unknown prior kind {self.kind!r}")


# -- exponential mechanism -----------------------------------------------------


def exponential_weights(
    utilities,
    gs: float,
    epsilon: float,
    prior_weights=None,
    normalizer_data_independent: bool = False,
) -> np.ndarray:
    """Normalized selection probabilities prop. to prior * exp(eps*u / (2*gs)).

    The divisor 2 is dropped only when the caller asserts the normalizing term
    does not depend on the sample.  Weights are computed with the max-utility
    shift, which cancels in the ratio, so large exponents cannot overflow.
    """
    u = np.asarray(utilities, dtype=float)
    if gs <= 0 or not math.isfinite(gs):
        raise ValueError("utility sensitivity must be positive and finite")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    factor = 1.0 if normalizer_data_independent else 2.0
    logits = epsilon * u / (factor * gs)
    pw = np.ones_like(u) if prior_weights is None else np.asarray(prior_weights, dtype=float)
    if pw.shape != u.shape:
        raise ValueError("prior weights must align with utilities")
    if (pw < 0).any():
        raise ValueError("prior weights must be nonnegative")
    usable = pw > 0
    if not usable.any():
        raise GridError("all candidate weights are zero")
    shifted = logits - logits[usable].max()
    w = np.where(usable, pw * np.exp(np.where(usable, shifted, 0.0)), 0.0)
    total = w.sum()
    if total <= 0 or not math.isfinite(total):
        raise GridError("all candidate weights are zero")
    return w / total


def _categorical(probs: np.ndarray, rng: RandomSource) -> int:
    cum = np.cumsum(probs)
    return int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))


def exponential_mechanism_discrete(
    grid: CandidateGrid,
    utilities,
    gs: float,
    epsilon: float,
    prior: Prior,
    rng: RandomSource,
    normalizer_data_independent: bool = False,
) -> MechanismOutcome:
    """Draw one grid candidate with probability prop. to prior * exp(eps*u/(2*gs))."""
    probs = exponential_weights(
        utilities,
        gs,
        epsilon,
        prior.weights(grid),
        normalizer_data_independent=normalizer_data_independent,
    )
    idx = _categorical(probs, rng)
    factor = 1.0 if normalizer_data_independent else 2.0
    return MechanismOutcome(
        payload=np.array(grid.points[idx]),
        audit={
            "mechanism": "exponential",
            "index": idx,
            "exponent_scale": epsilon / (factor * gs),
            "grid_size": len(grid),
            "epsilon": epsilon,
            "normalizer_data_independent": normalizer_data_independent,
        },
    )


# -- propose-test-release ------------------------------------------------------


def _ptr_constants(variant: str, delta: float) -> tuple[float, float]:
    if delta <= 0 or delta >= 1:
        raise ValueError(f"PTR needs delta in (0, 1), got {delta}")
    if variant == "laplace":
        return 1.0, math.log(2.0 / delta)
    if variant == "gaussian":
        log_term = math.log(1.25 / delta)
        return math.sqrt(2.0 * log_term), 2.0 * log_term
    raise ValueError(f"unknown variant {variant!r}")


def ptr_advertised_privacy(variant: str, epsilon: float, delta: float) -> tuple[float, float]:
    """Budget actually spent by a plain PTR release."""
    if variant == "laplace":
        return 2.0 * epsilon, delta
    return 2.0 * epsilon, 2.0 * math.exp(epsilon) * delta + delta * delta


def ptr(
    breakdown_fn: Callable[[float], float],
    statistic: float,
    eta: float,
    epsilon: float,
    delta: float,
    variant: str,
    rng: RandomSource,
) -> MechanismOutcome:
    """Release ``statistic`` with noise scale eta/epsilon-style calibration iff
    a noisy insensitivity test passes; otherwise return BOTTOM.

    ``breakdown_fn(k_star)`` must return a lower bound on the truncated
    breakdown point of the statistic, valid at the realized test level
    ``k_star`` (it may ignore the argument and return a constant, including
    +inf for a statistic known to be insensitive).
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    a, b = _ptr_constants(variant, delta)
    v1 = float(rng.laplace() if variant == "laplace" else rng.normal())
    threshold = 1.0 + b / epsilon
    k_star = threshold - (a / epsilon) * v1
    a_lower = float(breakdown_fn(k_star))
    test_stat = a_lower + (a / epsilon) * v1
    audit = {
        "mechanism": f"ptr-{variant}",
        "variant": variant,
        "threshold": threshold,
        "k_star": k_star,
        "breakdown_lower_bound": a_lower,
        "test_statistic": test_stat,
        "eta": eta,
        "advertised": ptr_advertised_privacy(variant, epsilon, delta),
    }
    if test_stat <= threshold:
        return MechanismOutcome(payload=BOTTOM, audit=audit, sensitive_audit=True)
    v2 = float(rng.laplace() if variant == "laplace" else rng.normal())
    noise_scale = eta * a / epsilon
    audit["noise_scale"] = noise_scale
    return MechanismOutcome(
        payload=float(statistic) + noise_scale * v2,
        audit=audit,
        sensitive_audit=True,
    )


def ptr_exponential(
    breakdown_fn: Callable[[float], float],
    cost_fn: Callable[[np.ndarray], np.ndarray],
    grid: CandidateGrid,
    eta: float,
    epsilon: float,
    delta: float,
    variant: str,
    rng: RandomSource,
) -> MechanismOutcome:
    """PTR whose release step samples a grid point with weight exp(-cost*eps/(2*eta)).

    The test guards the whole cost function: ``breakdown_fn(k_star)`` must
    lower-bound the number of row changes needed to move the cost function by
    more than eta in sup norm.  On a failed test nothing is evaluated or
    released except BOTTOM.  A cost of +inf zeroes a candidate; all-infinite
    cost is an error, not a refusal.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    a, b = _ptr_constants(variant, delta)
    v1 = float(rng.laplace() if variant == "laplace" else rng.normal())
    threshold = 1.0 + b / epsilon
    k_star = threshold - (a / epsilon) * v1
    a_lower = float(breakdown_fn(k_star))
    test_stat = a_lower + (a / epsilon) * v1
    advertised = (2.0 * epsilon, delta if variant == "laplace" else 2.0 * delta)
    audit = {
        "mechanism": f"ptr-exponential-{variant}",
        "variant": variant,
        "threshold": threshold,
        "k_star": k_star,
        "breakdown_lower_bound": a_lower,
        "test_statistic": test_stat,
        "eta": eta,
        "grid_size": len(grid),
        "advertised": advertised,
    }
    if test_stat <= threshold:
        return MechanismOutcome(payload=BOTTOM, audit=audit, sensitive_audit=True)
    costs = np.asarray(cost_fn(grid.points), dtype=float)
    if costs.shape[0] != len(grid):
        raise ValueError("cost_fn must return one cost per grid point")
    finite = np.isfinite(costs)
    if not finite.any():
        raise GridError("cost is infinite on the entire grid")
    logits = np.where(finite, -(costs - costs[finite].min()) * epsilon / (2.0 * eta), -np.inf)
    w = np.exp(np.where(finite, logits, -np.inf))
    w[~finite] = 0.0
    idx = _categorical(w / w.sum(), rng)
    audit["exponent_scale"] = epsilon / (2.0 * eta)
    return MechanismOutcome(
        payload=np.array(grid.points[idx]), audit=audit, sensitive_audit=True
    )


# -- composition & ledger -------------------------------------------------------


def compose_basic(spends) -> tuple[float, float]:
    """Coordinate-wise sums of (epsilon, delta) spends."""
    eps = 0.0
    delta = 0.0
    for item in spends:
        if isinstance(item, LedgerEntry):
            e, d = item.epsilon, item.delta
        else:
            e, d = item
        eps += e
        delta += d
    return eps, delta


@dataclass(frozen=True)
class AdvancedCompositionPlan:
    epsilon_total: float
    delta_prime: float
    k: int
    per_mechanism_epsilon: float

    def total_delta(self, per_mechanism_delta: float) -> float:
        return self.k * per_mechanism_delta + self.delta_prime


def compose_advanced(epsilon: float, delta_prime: float, k: int) -> AdvancedCompositionPlan:
    """Per-mechanism budget eps / (2 sqrt(2 k log(1/delta'))) whose k-fold
    composition meets (eps, k*delta + delta'); requires 0 < eps < 1."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError("advanced composition requires 0 < epsilon < 1")
    if delta_prime <= 0:
        raise ValueError("delta_prime must be positive")
    if k < 1:
        raise ValueError("k must be at least 1")
    eps_i = epsilon / (2.0 * math.sqrt(2.0 * k * math.log(1.0 / delta_prime)))
    return AdvancedCompositionPlan(
        epsilon_total=epsilon, delta_prime=delta_prime, k=k, per_mechanism_epsilon=eps_i
    )


@dataclass(frozen=True)
class LedgerEntry:
    mechanism: str
    epsilon: float
    delta: float
    variant: str
    timestamp: str | None = None

    def to_json(self, with_timestamp: bool = True) -> dict:
        out = {
            "mechanism": self.mechanism,
            "epsilon": self.epsilon,
            "delta": self.delta,
            "variant": self.variant,
        }
        if with_timestamp:
            out["timestamp"] = self.timestamp or datetime.now(timezone.utc).isoformat()
        return out


class BudgetLedger:
    """Append-only record of (epsilon, delta) spends."""

    def __init__(self, entries: list[LedgerEntry] | None = None):
        self.entries: list[LedgerEntry] = list(entries or [])

    def append(self, entry: LedgerEntry) -> None:
        self.entries.append(entry)

    def totals(self) -> tuple[float, float]:
        return compose_basic(self.entries)

    @classmethod
    def read(cls, path) -> "BudgetLedger":
        entries = []
        try:
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    rec = json.loads(line)
                    entries.append(
                        LedgerEntry(
                            mechanism=rec["mechanism"],
                            epsilon=float(rec["epsilon"]),
                            delta=float(rec["delta"]),
                            variant=rec.get("variant", "laplace"),
                            timestamp=rec.get("timestamp"),
                        )
                    )
        except FileNotFoundError:
            pass
        return cls(entries)

    @staticmethod
    def append_to_file(path, entry: LedgerEntry) -> None:
        stamped = entry.to_json(with_timestamp=True)
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(stamped, sort_keys=True) + "\n")
