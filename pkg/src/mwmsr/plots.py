"""Matplotlib rendering of run trajectories and Monte Carlo summaries.

Figures are written next to the delimited outputs by the CLI report
path; rendering is headless (Agg) and file-based only.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .engine import MonteCarloResult, RunMetrics


def render_trajectory(metrics: RunMetrics, path: str, title: str = "") -> None:
    """Time responses of the normal states with event instants marked.

    Normal trajectories are solid lines with dots at their triggering
    steps; adversary emissions appear as red dashes.
    """
    fig, ax = plt.subplots(figsize=(7.0, 3.6))
    ks = range(metrics.horizon + 1)
    for i in metrics.normal_nodes:
        xs = [metrics.x[k][i - 1] for k in ks]
        (line,) = ax.plot(ks, xs, lw=1.2, label=f"node {i}")
        ev_k = [k for k in ks if metrics.fired[k][i - 1]]
        ax.plot(ev_k, [metrics.x[k][i - 1] for k in ev_k], ".", ms=4.5, color=line.get_color())
    for b, emissions in metrics.adversary_values.items():
        if not emissions:
            continue
        ax.plot(
            [k for k, _ in emissions],
            [v for _, v in emissions],
            linestyle="none",
            marker="_",
            ms=4,
            color="red",
            alpha=0.6,
            label=f"node {b} (Byzantine)",
        )
    lo, hi = metrics.safety_interval
    ax.axhline(lo, color="gray", lw=0.8, ls=":")
    ax.axhline(hi, color="gray", lw=0.8, ls=":")
    ax.set_xlabel("step k")
    ax.set_ylabel("state")
    if title:
        ax.set_title(title, fontsize=10)
    ax.legend(fontsize=7, ncol=2, loc="best")
    ax.spines["right"].set_visible(False)
    ax.spines["top"].set_visible(False)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def render_spread(metrics_by_variant: dict[str, RunMetrics], path: str) -> None:
    """Windowed spread of the normal states per variant, log scale."""
    fig, ax = plt.subplots(figsize=(7.0, 3.2))
    for name, m in metrics_by_variant.items():
        ax.semilogy(
            range(m.horizon + 1), [max(v, 1e-16) for v in m.spread], lw=1.2, label=name
        )
    ax.set_xlabel("step k")
    ax.set_ylabel("spread V[k]")
    ax.legend(fontsize=8)
    ax.spines["right"].set_visible(False)
    ax.spines["top"].set_visible(False)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def render_montecarlo(result: MonteCarloResult, path: str, packages_once: bool = False) -> None:
    """Grouped bars of mean events and mean transmissions per variant."""
    names = [row.variant for row in result.rows]
    events = [row.avg_events for row in result.rows]
    trans = [row.avg_transmissions(packages_once) for row in result.rows]
    xs = range(len(names))
    width = 0.38
    fig, ax = plt.subplots(figsize=(6.4, 3.4))
    ax.bar([x - width / 2 for x in xs], events, width, label="avg events / normal node")
    label = "avg transmissions / normal node" + (" (packages once)" if packages_once else "")
    ax.bar([x + width / 2 for x in xs], trans, width, label=label)
    ax.set_xticks(list(xs))
    ax.set_xticklabels(names, fontsize=8)
    ax.legend(fontsize=8)
    ax.spines["right"].set_visible(False)
    ax.spines["top"].set_visible(False)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
