"""Figure rendering for sweep tables and attack traces.

Everything renders through the Agg backend straight to files so the CLI can be
run headless; the CSV stays the canonical output and these are companions.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

from .campaign import SweepRow


def save_sr_curves(rows: list[SweepRow], path: str | Path) -> None:
    """Success rate vs pixel count, one line per (shape, attack) pair."""
    if not rows:
        raise ValueError("no sweep rows to plot")
    series: dict[tuple[str, str], list[SweepRow]] = {}
    for row in rows:
        series.setdefault((row.shape, row.attack), []).append(row)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for (shape, attack), group in series.items():
        group = sorted(group, key=lambda r: r.pixels)
        ax.plot(
            [r.pixels for r in group],
            [r.sr for r in group],
            marker="o",
            label=f"{shape}/{attack}",
        )
    ax.set_xlabel("perturbed pixels")
    ax.set_ylabel("success rate")
    ax.set_ylim(-0.02, 1.02)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_fitness_history(history: list[float], path: str | Path, title: str = "") -> None:
    """Best fitness per generation for a single attack run."""
    if not history:
        raise ValueError("no fitness history to plot")
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.plot(range(len(history)), history, marker=".", color="tab:red")
    ax.axhline(0.0, color="black", linewidth=0.8, linestyle="--")
    ax.set_xlabel("generation")
    ax.set_ylabel("best fitness")
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
