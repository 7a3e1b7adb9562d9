"""Figure rendering for report output.  Matplotlib only, file targets only."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .analysis import HeatMap


def render_heatmap_png(hm: HeatMap, path: str, title: str | None = None) -> None:
    """Write the heatmap's normalized scores as a PNG alongside the data."""
    grid = [
        [hm.scores[hy * hm.width + hx] for hx in range(hm.width)]
        for hy in range(hm.height)
    ]
    fig, ax = plt.subplots(figsize=(6, 5))
    image = ax.imshow(
        grid,
        origin="lower",
        cmap="inferno",
        vmin=0.0,
        vmax=1.0,
        extent=(
            hm.region.x1,
            hm.region.x1 + hm.width * hm.cell_size,
            hm.region.y1,
            hm.region.y1 + hm.height * hm.cell_size,
        ),
        interpolation="nearest",
    )
    fig.colorbar(image, ax=ax, label="deficit score")
    ax.set_xlabel("x (cells)")
    ax.set_ylabel("y (cells)")
    ax.set_title(title or "Weak links")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
