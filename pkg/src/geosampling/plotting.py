"""Matplotlib figures: bar layouts and run diagnostics.

SVG output is byte-stable: fixed hash salt, no date metadata, glyphs as
paths.  Every bar segment carries a gid ``bar-<unit>-<piece>`` so the
rectangles can be counted in the file.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .design import sweep  # noqa: E402
from .layout import BarLayout  # noqa: E402

STABLE_RC = {
    "svg.hashsalt": "geosampling",
    "svg.fonttype": "path",
    "path.simplify": False,
}
MAX_LABELLED_STRIPS = 24


def _save(fig, path) -> None:
    path = Path(path)
    fmt = path.suffix.lstrip(".") or "svg"
    metadata = {"Date": None} if fmt == "svg" else ({"CreationDate": None} if fmt == "pdf" else None)
    with plt.rc_context(STABLE_RC):
        fig.savefig(path, format=fmt, metadata=metadata)
    plt.close(fig)


def plot_layout(layout: BarLayout, path, title: Optional[str] = None,
                label_strips: bool = True) -> int:
    """Draw one vertical segment per interval per unit; returns the count."""
    with plt.rc_context(STABLE_RC):
        fig, ax = plt.subplots(figsize=(7, 4.5))
        colors = plt.get_cmap("tab10")
        count = 0
        g = layout.grid
        for k, bar in enumerate(layout.bars):
            for piece, (a, b) in enumerate(bar):
                rect = ax.bar(k + 1, (b - a) / g, bottom=a / g, width=0.3,
                              color=colors(k % 10), edgecolor="none")[0]
                rect.set_gid(f"bar-{k + 1}-{piece + 1}")
                count += 1
        bounds, masks = sweep(layout)
        if label_strips and layout.n_units and len(masks) <= MAX_LABELLED_STRIPS:
            for cut in bounds[1:-1]:
                ax.axhline(cut / g, color="0.8", lw=0.5, ls="--", zorder=0)
        ax.set_xlim(0.3, max(layout.n_units, 1) + 0.7)
        ax.set_ylim(0, 1)
        ax.set_xticks(range(1, layout.n_units + 1))
        ax.set_xlabel("Population units")
        ax.set_ylabel("Inclusion probabilities")
        if title:
            ax.set_title(title)
        fig.tight_layout()
    _save(fig, path)
    return count


def plot_series(x: Sequence[float], series: dict[str, Sequence[float]], path,
                xlabel: str, ylabel: str, logy: bool = False) -> None:
    with plt.rc_context(STABLE_RC):
        fig, ax = plt.subplots(figsize=(6, 3.5))
        for name, ys in series.items():
            ax.plot(x, ys, label=name, lw=1.2)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if logy:
            ax.set_yscale("log")
        ax.grid(True, alpha=0.3)
        if len(series) > 1:
            ax.legend(frameon=False)
        fig.tight_layout()
    _save(fig, path)
