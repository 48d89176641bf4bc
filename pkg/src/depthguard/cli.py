"""Command-line surface: depth, private, experiment, audit, budget.

Exit codes: 0 success (a propose-test-release refusal is a *successful*
private answer and prints ``"bottom"``), 2 configuration error, 3 data error,
4 budget-cap violation.  Configuration is validated before any data file is
opened.  All randomness flows from ``--seed`` through labeled sub-streams, so
adding a command never perturbs another command's draws.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from .data import (
    Dataset,
    InputError,
    PrivacyParams,
    RandomSource,
    load_dataset,
    sample_directions,
)
from .depth import DepthKind, depth_vector, evaluate_depth
from .estimators import (
    default_eta,
    private_depth_median_exp,
    private_depth_point,
    private_depth_vector,
    private_projection_depth,
    private_projection_median_ptr,
    TruncatedOutlyingnessSpec,
)
from .experiments import EXPERIMENT_NAMES, run_experiment
from .mechanisms import (
    BOTTOM,
    BudgetExceeded,
    BudgetLedger,
    CandidateGrid,
    Prior,
    compose_advanced,
)

SCHEMA_VERSION = 1
LEDGER_ENV = "DEPTHGUARD_LEDGER"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_BUDGET = 4


class ConfigError(ValueError):
    pass


def _parse_floats(text: str, what: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise ConfigError(f"could not parse {what} from {text!r}") from None


def _parse_kind(args) -> DepthKind:
    kind = args.kind
    if kind in ("halfspace", "irw", "simplicial"):
        return DepthKind(kind)
    if kind == "projection":
        if not getattr(args, "variant_scale", None):
            raise ConfigError("--kind projection requires --variant o1|o2")
        return (
            DepthKind.PROJECTION_MAD
            if args.variant_scale == "o1"
            else DepthKind.PROJECTION_IQR
        )
    raise ConfigError(f"unknown kind {kind!r}")


def _parse_grid(args, d: int) -> CandidateGrid:
    if not args.grid_bounds:
        raise ConfigError("this estimator requires --grid-bounds (data-independent support)")
    flat = _parse_floats(args.grid_bounds, "--grid-bounds")
    if len(flat) != 2 * d:
        raise ConfigError(f"--grid-bounds needs {2 * d} numbers (lo,hi per axis)")
    bounds = [(flat[2 * i], flat[2 * i + 1]) for i in range(d)]
    if args.grid_counts:
        counts = [int(c) for c in _parse_floats(args.grid_counts, "--grid-counts")]
        if len(counts) == 1:
            counts = counts * d
        if len(counts) != d:
            raise ConfigError(f"--grid-counts needs 1 or {d} integers")
    else:
        counts = [21] * d
    return CandidateGrid.regular(bounds, counts)


def _parse_prior(args, d: int) -> Prior:
    spec = args.prior or "uniform"
    if spec == "uniform":
        return Prior.uniform()
    if spec.startswith("gaussian:"):
        vals = _parse_floats(spec.split(":", 1)[1], "--prior gaussian")
        if len(vals) != d + 1:
            raise ConfigError(f"--prior gaussian needs {d} center coords and a scale")
        return Prior.gaussian(vals[:-1], vals[-1])
    raise ConfigError(f"unknown prior {spec!r} (use 'uniform' or 'gaussian:<center...,scale>')")


def _ledger_path(args) -> str | None:
    return getattr(args, "ledger", None) or os.environ.get(LEDGER_ENV)


def _emit(args, obj) -> None:
    text = json.dumps(obj, sort_keys=True, default=_jsonify)
    out = getattr(args, "out", None)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def _jsonify(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if value is BOTTOM:
        return "bottom"
    raise TypeError(f"cannot serialize {type(value)!r}")


def _payload_json(payload):
    if payload is BOTTOM:
        return "bottom"
    if isinstance(payload, np.ndarray):
        return payload.tolist()
    if isinstance(payload, dict):
        return {k: _payload_json(v) for k, v in payload.items()}
    return payload


# -- depth ------------------------------------------------------------------


def cmd_depth(args) -> int:
    kind = _parse_kind(args)
    if args.point is None and not args.vector:
        raise ConfigError("provide --point or --vector")
    point = None if args.point is None else _parse_floats(args.point, "--point")
    data = load_dataset(args.data, header=args.header)
    dirs = sample_directions(args.directions, data.d, seed=args.seed)
    kwargs = {}
    if kind is DepthKind.SIMPLICIAL and args.mc_samples:
        kwargs = {
            "method": "monte-carlo",
            "samples": args.mc_samples,
            "rng": RandomSource.from_seed(args.seed).spawn("depth.simplicial"),
        }
    if args.vector:
        values = depth_vector(data, kind, dirs, **kwargs)
        result = {"schema": SCHEMA_VERSION, "kind": kind.value, "values": values.tolist()}
    else:
        if len(point) != data.d:
            raise InputError(f"--point has dim {len(point)}, data has dim {data.d}")
        value = evaluate_depth(point, data, kind, dirs, **kwargs)
        result = {"schema": SCHEMA_VERSION, "kind": kind.value, "point": point, "value": value}
    _emit(args, result)
    return EXIT_OK


# -- private -----------------------------------------------------------------


def _advertised_budget(estimator: str, params: PrivacyParams) -> tuple[float, float]:
    if estimator in ("point", "vector"):
        return params.epsilon, params.delta if params.variant == "gaussian" else 0.0
    if estimator == "median-exp":
        return params.epsilon, 0.0
    if estimator == "projection":
        from .mechanisms import ptr_advertised_privacy

        return ptr_advertised_privacy(params.variant, params.epsilon, params.delta)
    if estimator == "median-ptr":
        return (
            2.0 * params.epsilon,
            params.delta if params.variant == "laplace" else 2.0 * params.delta,
        )
    raise ConfigError(f"unknown estimator {estimator!r}")


def _check_budget_cap(args, params: PrivacyParams, ledger_path: str | None) -> None:
    if not args.budget_cap:
        return
    cap = _parse_floats(args.budget_cap, "--budget-cap")
    cap_eps = cap[0]
    cap_delta = cap[1] if len(cap) > 1 else float("inf")
    spent_eps, spent_delta = (
        BudgetLedger.read(ledger_path).totals() if ledger_path else (0.0, 0.0)
    )
    add_eps, add_delta = _advertised_budget(args.estimator, params)
    if spent_eps + add_eps > cap_eps + 1e-12 or spent_delta + add_delta > cap_delta + 1e-12:
        raise BudgetExceeded(
            f"release would spend ({spent_eps + add_eps:g}, {spent_delta + add_delta:g}) "
            f"against cap ({cap_eps:g}, {cap_delta:g})"
        )


def cmd_private(args) -> int:
    # full config validation happens before the data file is touched
    if args.estimator in ("point", "vector"):
        kind = _parse_kind(args)
        if kind in (DepthKind.PROJECTION_MAD, DepthKind.PROJECTION_IQR):
            raise ConfigError("pointwise projection depth must use --estimator projection")
    elif args.estimator == "median-exp":
        kind = _parse_kind(args)
    elif args.estimator in ("projection", "median-ptr"):
        kind = DepthKind.PROJECTION_IQR
    else:
        raise ConfigError(f"unknown estimator {args.estimator!r}")
    try:
        params = PrivacyParams(
            epsilon=args.epsilon, delta=args.delta, variant=args.variant
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if args.estimator == "projection" and args.variant == "laplace" and args.delta <= 0:
        raise ConfigError("propose-test-release needs --delta > 0")
    if args.estimator == "median-ptr" and args.delta <= 0:
        raise ConfigError("propose-test-release needs --delta > 0")
    if args.estimator == "point" and args.point is None:
        raise ConfigError("--estimator point requires --point")
    point = None if args.point is None else _parse_floats(args.point, "--point")
    grid_requested = args.estimator in ("median-exp", "median-ptr")
    if grid_requested and not args.grid_bounds:
        raise ConfigError("median estimators require --grid-bounds")
    if args.estimator == "median-ptr" and args.radius is None:
        raise ConfigError("--estimator median-ptr requires --radius")

    ledger_path = _ledger_path(args)
    _check_budget_cap(args, params, ledger_path)

    data = load_dataset(args.data, header=args.header)
    dirs = sample_directions(args.directions, data.d, seed=args.seed)
    rng = RandomSource.from_seed(args.seed).spawn(f"private.{args.estimator}")
    ledger = BudgetLedger()
    eta = args.eta if args.eta is not None else default_eta(data.n)

    if args.estimator == "point":
        if len(point) != data.d:
            raise InputError(f"--point has dim {len(point)}, data has dim {data.d}")
        report = private_depth_point(point, data, kind, dirs, params, rng, ledger=ledger)
    elif args.estimator == "vector":
        report = private_depth_vector(data, kind, dirs, params, rng, ledger=ledger)
    elif args.estimator == "projection":
        if point is None:
            raise ConfigError("--estimator projection requires --point")
        if len(point) != data.d:
            raise InputError(f"--point has dim {len(point)}, data has dim {data.d}")
        report = private_projection_depth(
            point, data, dirs, eta, params, rng, ledger=ledger
        )
    elif args.estimator == "median-exp":
        grid = _parse_grid(args, data.d)
        prior = _parse_prior(args, data.d)
        report = private_depth_median_exp(
            data, kind, grid, prior, dirs, params.epsilon, rng, ledger=ledger
        )
    else:  # median-ptr
        grid = _parse_grid(args, data.d)
        trunc = TruncatedOutlyingnessSpec(radius=args.radius)
        report = private_projection_median_ptr(
            data, trunc, grid, dirs, eta, params, rng, ledger=ledger
        )

    entry = report.ledger_entry
    if ledger_path:
        BudgetLedger.append_to_file(ledger_path, entry)
    audit = None
    if not report.sensitive_audit or args.unsafe_audit:
        audit = {k: _payload_json(v) for k, v in report.audit.items()}
    result = {
        "schema": SCHEMA_VERSION,
        "estimator": report.estimator,
        "kind": report.kind,
        "params": {
            "epsilon": params.epsilon,
            "delta": params.delta,
            "variant": params.variant,
            "seed": args.seed,
        },
        "payload": _payload_json(report.payload),
        "post_processed": {k: _payload_json(v) for k, v in report.post_processed.items()},
        "ledger_entry": entry.to_json(with_timestamp=False),
        "audit": audit,
    }
    if "grid_spec" in report.extras:
        result["grid_spec"] = report.extras["grid_spec"]
    _emit(args, result)
    return EXIT_OK


# -- experiment ----------------------------------------------------------------


def cmd_experiment(args) -> int:
    if args.name not in EXPERIMENT_NAMES:
        raise ConfigError(
            f"unknown experiment {args.name!r}; choose from {', '.join(EXPERIMENT_NAMES)}"
        )
    overrides = {}
    if args.reps is not None:
        overrides["reps"] = args.reps
    if args.samples is not None and args.name == "audit":
        overrides["samples"] = args.samples
    if args.name != "median-exp":
        overrides["seed"] = args.seed
    rows, summary = run_experiment(args.name, **overrides)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{args.name}.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=["experiment", "n", "epsilon", "seed", "metric", "value"]
        )
        writer.writeheader()
        writer.writerows(rows)
    png_path = out_dir / f"{args.name}.png"
    from .plots import render_experiment

    render_experiment(args.name, rows, summary, png_path)
    _emit(
        args,
        {
            "schema": SCHEMA_VERSION,
            "experiment": args.name,
            "rows": len(rows),
            "csv": str(csv_path),
            "figure": str(png_path),
            "summary": summary,
        },
    )
    return EXIT_OK


# -- audit ----------------------------------------------------------------------


def cmd_audit(args) -> int:
    from .experiments import audit_experiment

    rows, summary = audit_experiment(
        seed=args.seed, samples=args.samples, bins=args.bins, epsilon=args.epsilon
    )
    _emit(args, {"schema": SCHEMA_VERSION, "audit": summary})
    return EXIT_OK


# -- budget -----------------------------------------------------------------------


def cmd_budget(args) -> int:
    ledger_path = _ledger_path(args)
    if not ledger_path:
        raise ConfigError(f"provide --ledger or set {LEDGER_ENV}")
    ledger = BudgetLedger.read(ledger_path)
    eps, delta = ledger.totals()
    result = {
        "schema": SCHEMA_VERSION,
        "entries": len(ledger.entries),
        "basic_total": {"epsilon": eps, "delta": delta},
    }
    if args.advanced_k:
        plan = compose_advanced(args.advanced_epsilon, args.delta_prime, args.advanced_k)
        result["advanced_plan"] = {
            "epsilon_total": plan.epsilon_total,
            "k": plan.k,
            "per_mechanism_epsilon": plan.per_mechanism_epsilon,
            "delta_prime": plan.delta_prime,
        }
    _emit(args, result)
    return EXIT_OK


# -- parser -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="depthguard",
        description="Differentially private data-depth values, medians, and rank tests",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="write the JSON result here instead of stdout")

    p_depth = sub.add_parser("depth", help="non-private depth at points or the sample vector")
    p_depth.add_argument("--kind", required=True, choices=["halfspace", "irw", "simplicial", "projection"])
    p_depth.add_argument("--variant", dest="variant_scale", choices=["o1", "o2"])
    p_depth.add_argument("--data", required=True)
    p_depth.add_argument("--header", action="store_true", help="skip the first CSV line")
    p_depth.add_argument("--point", help="comma-separated coordinates")
    p_depth.add_argument("--vector", action="store_true", help="depth of every sample point")
    p_depth.add_argument("--directions", type=int, default=64)
    p_depth.add_argument("--mc-samples", type=int, dest="mc_samples")
    add_common(p_depth)
    p_depth.set_defaults(handler=cmd_depth)

    p_priv = sub.add_parser("private", help="differentially private releases")
    p_priv.add_argument(
        "--estimator",
        required=True,
        choices=["point", "vector", "projection", "median-exp", "median-ptr"],
    )
    p_priv.add_argument("--kind", default="halfspace", choices=["halfspace", "irw", "simplicial", "projection"])
    p_priv.add_argument("--variant-scale", dest="variant_scale", choices=["o1", "o2"])
    p_priv.add_argument("--data", required=True)
    p_priv.add_argument("--header", action="store_true")
    p_priv.add_argument("--point")
    p_priv.add_argument("--epsilon", type=float, required=True)
    p_priv.add_argument("--delta", type=float, default=0.0)
    p_priv.add_argument("--variant", default="laplace", choices=["laplace", "gaussian"])
    p_priv.add_argument("--eta", type=float, help="PTR move radius (default log(n)/n^0.65)")
    p_priv.add_argument("--radius", type=float, help="truncation radius for median-ptr")
    p_priv.add_argument("--grid-bounds", help="lo,hi per axis, comma-separated")
    p_priv.add_argument("--grid-counts", help="grid points per axis")
    p_priv.add_argument("--prior", help="uniform or gaussian:<center...,scale>")
    p_priv.add_argument("--directions", type=int, default=64)
    p_priv.add_argument("--ledger", help=f"ledger file (or set {LEDGER_ENV})")
    p_priv.add_argument("--budget-cap", help="eps[,delta]; refuse releases beyond the cap")
    p_priv.add_argument(
        "--unsafe-audit",
        action="store_true",
        help="include PTR audit metadata, which conditions on raw data",
    )
    add_common(p_priv)
    p_priv.set_defaults(handler=cmd_private)

    p_exp = sub.add_parser("experiment", help="run a sweep; writes tidy CSV plus a figure")
    p_exp.add_argument("--name", required=True)
    p_exp.add_argument("--out-dir", required=True)
    p_exp.add_argument("--reps", type=int)
    p_exp.add_argument("--samples", type=int)
    add_common(p_exp)
    p_exp.set_defaults(handler=cmd_experiment)

    p_audit = sub.add_parser("audit", help="empirical privacy-ratio audit on standard pairs")
    p_audit.add_argument("--samples", type=int, default=200_000)
    p_audit.add_argument("--bins", type=int, default=50)
    p_audit.add_argument("--epsilon", type=float, default=1.0)
    add_common(p_audit)
    p_audit.set_defaults(handler=cmd_audit)

    p_budget = sub.add_parser("budget", help="ledger totals and composition planning")
    p_budget.add_argument("--ledger", help=f"ledger file (or set {LEDGER_ENV})")
    p_budget.add_argument("--advanced-k", type=int, dest="advanced_k")
    p_budget.add_argument("--advanced-epsilon", type=float, default=0.5)
    p_budget.add_argument("--delta-prime", type=float, default=1e-6)
    add_common(p_budget)
    p_budget.set_defaults(handler=cmd_budget)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports config problems with code 2
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.handler(args)
    except (ConfigError, ValueError) as exc:
        if isinstance(exc, InputError):
            print(f"data error: {exc}", file=sys.stderr)
            return EXIT_DATA
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetExceeded as exc:
        print(f"budget error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (FileNotFoundError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
