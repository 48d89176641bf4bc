"""Figure rendering for experiment sweeps (one PNG per experiment).

Figures are written next to the tidy CSV so a run leaves both a
machine-readable and a glanceable artifact.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_FIGSIZE = (6.0, 4.0)


def _new_axes(title: str):
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    return fig, ax


def _values(rows, metric):
    return [r["value"] for r in rows if r["metric"] == metric]


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=140)
    plt.close(fig)


def _render_consistency(rows, summary, path):
    ns = summary["ns"]
    fig, ax = _new_axes("Private halfspace depth at the center: error vs n")
    data = [
        [r["value"] for r in rows if r["n"] == n and r["metric"] == "abs_error"]
        for n in ns
    ]
    ax.boxplot(data, tick_labels=[str(n) for n in ns])
    ax.plot(
        range(1, len(ns) + 1),
        [summary["median_abs_error"][n] for n in ns],
        "o-",
        color="tab:red",
        label="median",
    )
    ax.set_xlabel("n")
    ax.set_ylabel("|released - 0.5|")
    ax.legend()
    _save(fig, path)


def _render_audit(rows, summary, path):
    calibrated = _values(rows, "max_log_ratio")
    control = _values(rows, "negative_control_log_ratio")
    fig, ax = _new_axes("Empirical privacy-ratio audit per adjacent pair")
    idx = np.arange(len(calibrated))
    ax.bar(idx - 0.2, calibrated, width=0.4, label="calibrated")
    if control:
        ax.bar(idx + 0.2, control, width=0.4, label="halved noise (control)")
    ax.axhline(summary["bound"], color="tab:red", linestyle="--", label="bound")
    ax.set_xlabel("pair")
    ax.set_ylabel("max |log count ratio|")
    ax.legend()
    _save(fig, path)


def _render_power(rows, summary, path):
    fig, ax = _new_axes("Depth-rank scale test: rejection rates")
    ax.bar(
        ["private", "classical"],
        [summary["power_private"], summary["power_classical"]],
        color=["tab:blue", "tab:gray"],
    )
    ax.axhline(summary["alpha"], color="tab:red", linestyle=":", label="level")
    ax.set_ylabel("rejection rate")
    ax.set_ylim(0, 1)
    ax.legend()
    _save(fig, path)


def _render_ptr_depth(rows, summary, path):
    errors = _values(rows, "abs_error")
    fig, ax = _new_axes("PTR projection depth: released error")
    if errors:
        ax.hist(errors, bins=20, color="tab:blue", alpha=0.8)
    ax.axvline(
        summary["median_abs_error"], color="tab:red", linestyle="--", label="median"
    )
    ax.set_xlabel("|released depth - reference|")
    ax.set_ylabel("count")
    ax.legend(title=f"refusal rate {summary['bottom_rate']:.1%}")
    _save(fig, path)


def _render_median_exp(rows, summary, path):
    fig, ax = _new_axes("Grid-median selection probabilities (exact)")
    scales = sorted(summary["argmax_probability"])
    for scale in scales:
        pts = [
            (r["metric"].split("_at_")[1], r["value"])
            for r in rows
            if r["seed"] == int(scale)
        ]
        ax.plot(
            [float(p[0]) for p in pts],
            [p[1] for p in pts],
            "o-",
            label=f"scale {scale:g}",
        )
    ax.set_xlabel("candidate")
    ax.set_ylabel("selection probability")
    ax.legend()
    _save(fig, path)


def _render_projection_median(rows, summary, path):
    dists = _values(rows, "dist_to_origin")
    fig, ax = _new_axes("Private projection median: distance to center")
    if dists:
        ax.hist(dists, bins=20, color="tab:blue", alpha=0.8)
    ax.axvline(summary["success_radius"], color="tab:red", linestyle="--", label="target")
    ax.set_xlabel("distance to origin")
    ax.set_ylabel("count")
    ax.legend(
        title=(
            f"within target {summary['within_radius']}/{summary['reps']}, "
            f"refusals {summary['bottom_rate']:.1%}"
        )
    )
    _save(fig, path)


_RENDERERS = {
    "consistency": _render_consistency,
    "audit": _render_audit,
    "power": _render_power,
    "ptr-depth": _render_ptr_depth,
    "median-exp": _render_median_exp,
    "projection-median": _render_projection_median,
}


def render_experiment(name: str, rows, summary, path) -> None:
    try:
        renderer = _RENDERERS[name]
    except KeyError:
        raise ValueError(f"no figure renderer for experiment {name!r}") from None
    renderer(rows, summary, path)
