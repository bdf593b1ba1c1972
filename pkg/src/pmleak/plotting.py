"""Figure rendering for key-rate sweeps (headless backend)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def plot_keyrate_curve(points, path: str) -> str:
    """Log-scale key-rate curve to an image file; returns the path written.

    Zero-rate points cannot appear on the log axis and mark the cutoff, so
    they are dropped from the curves.
    """
    d_pulse = [(pt.distance_km, pt.rate) for pt in points if pt.rate > 0]
    d_click = [(pt.distance_km, pt.rate_per_click) for pt in points if pt.rate_per_click > 0]
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    if d_pulse:
        ax.semilogy(*zip(*d_pulse), marker="o", ms=3, label="per pulse")
    if d_click:
        ax.semilogy(*zip(*d_click), marker="s", ms=3, label="per signal click")
    ax.set_xlabel("distance, km")
    ax.set_ylabel("secret key rate")
    ax.grid(True, which="both", alpha=0.3)
    if d_pulse or d_click:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
