"""Optional figure rendering for CLI reports (Agg backend, PNG files).

Figures are a side channel; the delimited report stays the machine contract.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .grid import GridFunction

__all__ = [
    "render_grid_slice",
    "render_decay",
    "render_ratios",
]


def _mid_slice(u: GridFunction):
    """2-D section of the node values: full array in 2-D, mid t-slice in 3-D."""
    v = u.values
    if v.ndim == 1:
        return None
    while v.ndim > 2:
        v = np.take(v, v.shape[-1] // 2, axis=-1)
    return v


def render_grid_slice(u: GridFunction, path, title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(5.5, 4.6))
    v = _mid_slice(u)
    if v is None:
        ax.plot(u.node_axes[0], u.values)
        ax.set_xlabel("x")
    else:
        extent = (u.box.lo[0], u.box.hi[0], u.box.lo[1], u.box.hi[1])
        im = ax.imshow(v.T, origin="lower", extent=extent, aspect="auto")
        fig.colorbar(im, ax=ax, shrink=0.85)
        ax.set_xlabel("x")
        ax.set_ylabel("y")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_decay(radii, capacities, path, title: str = "capacity decay") -> None:
    fig, ax = plt.subplots(figsize=(5.5, 4.2))
    ax.loglog(radii, capacities, "o-")
    ax.set_xlabel("outer radius R")
    ax.set_ylabel("capacity")
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_ratios(reports, path, title: str = "lhs / rhs per check") -> None:
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    labels = [f"{r.check}\n{r.inputs.get('map', '')}" for r in reports]
    ratios = [r.ratio for r in reports]
    colors = ["tab:green" if r.passed else "tab:red" for r in reports]
    pos = np.arange(len(reports))
    ax.bar(pos, ratios, color=colors)
    ax.axhline(1.0, color="k", lw=1, ls="--")
    ax.set_xticks(pos)
    ax.set_xticklabels(labels, fontsize=7, rotation=30, ha="right")
    ax.set_ylabel("lhs / rhs")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
