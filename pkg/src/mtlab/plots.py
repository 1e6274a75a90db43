"""Headless figure rendering for the report pipeline.

The backend is pinned to Agg before pyplot loads so rendering works
without a display; every function writes one file and closes its
figure, keeping long suite runs at constant memory.  Figures are a
reading aid next to the delimited tables, not a data format: the
numbers of record live in the CSV output.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

# golden-mean single column
_W = 4.6
_FIGSIZE = (_W, _W * (math.sqrt(5.0) - 1.0) / 2.0)
_DPI = 150


def _finish(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=_DPI, bbox_inches="tight")
    plt.close(fig)
    return path


def weyl_figure(table, path) -> Path:
    """Both spectral ratios against N, with the five-percent corridor."""
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.semilogx(table.N, table.ratio_point, lw=1.0, label="point ratio")
    ax.semilogx(table.N, table.ratio_log, lw=1.0, label="harmonic ratio")
    ax.axhspan(0.95, 1.05, color="0.92", zorder=0)
    ax.axhline(1.0, color="k", lw=0.6)
    ax.set_xlabel("N")
    ax.set_ylabel("ratio to the semiclassical normalizer")
    ax.legend(frameon=False)
    return _finish(fig, path)


def spectrum_figure(lambdas, measure: float, path) -> Path:
    """Counting staircase N(lambda) against the leading-order line."""
    lambdas = np.asarray(lambdas, dtype=float)
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.step(lambdas, np.arange(1, len(lambdas) + 1), where="post", lw=0.9,
            label="counting function")
    ax.plot(lambdas, lambdas * measure / (4.0 * math.pi), lw=0.9, ls="--",
            label="area law")
    ax.set_xlabel("eigenvalue")
    ax.set_ylabel("count")
    ax.legend(frameon=False)
    return _finish(fig, path)


def field_figure(values, h: float, path, label: str = "density") -> Path:
    """Heatmap of node values on a uniform lattice with spacing h.

    Accepts a 2-D array (nodes at ((i+1)h, (j+1)h)) or a 1-D array
    (nodes at (i+1)h), so the same entry point serves planar densities,
    cutoff bands, and interval profiles.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        fig, ax = plt.subplots(figsize=_FIGSIZE)
        ax.plot((np.arange(values.size) + 1) * h, values, lw=1.0)
        ax.set_xlabel("x")
        ax.set_ylabel(label)
        return _finish(fig, path)
    if values.ndim != 2:
        raise ValueError("field figures take 1-D or 2-D node arrays")
    nx, ny = values.shape
    fig, ax = plt.subplots(figsize=(_W, _W * ny / nx))
    im = ax.imshow(
        values.T,
        origin="lower",
        extent=(0.5 * h, (nx + 0.5) * h, 0.5 * h, (ny + 0.5) * h),
        aspect="equal",
        cmap="viridis",
    )
    fig.colorbar(im, ax=ax, label=label, shrink=0.85)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    return _finish(fig, path)


def sandwich_figure(rows, path) -> Path:
    """ln-scale floor / computed moment / ceiling per alpha across N.

    Rejected rows (N below the admissible threshold) are skipped, so a
    sweep that starts small still renders.
    """
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    for alpha in sorted({r.params["alpha"] for r in rows}):
        sub = [
            r for r in rows
            if r.params["alpha"] == alpha and r.ln_lhs is not None
        ]
        if not sub:
            continue
        Ns = [r.params["N"] for r in sub]
        (line,) = ax.semilogx(
            Ns, [r.ln_lhs for r in sub], "o-", ms=3.5, lw=1.0,
            label=f"alpha = {alpha:g}",
        )
        color = line.get_color()
        ax.semilogx(Ns, [r.extra["ln_lower"] for r in sub], "v--",
                    ms=3, lw=0.8, color=color)
        ax.semilogx(Ns, [r.ln_rhs for r in sub], "^--",
                    ms=3, lw=0.8, color=color)
    ax.set_xlabel("N")
    ax.set_ylabel("ln of the exponential moment")
    ax.legend(frameon=False)
    return _finish(fig, path)


def c_of_eps_figure(eps, C, path) -> Path:
    """Fitted constants against 1/eps on log axes, with the slope."""
    eps = np.asarray(eps, dtype=float)
    C = np.asarray(C, dtype=float)
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.loglog(1.0 / eps, C, "o-", ms=3.5, lw=1.0)
    pos = C > 0.0
    if pos.sum() >= 2:
        slope = float(np.polyfit(np.log(1.0 / eps[pos]), np.log(C[pos]), 1)[0])
        ax.set_title(f"slope {slope:.3f}", fontsize=9)
    ax.set_xlabel("1 / eps")
    ax.set_ylabel("minimal constant")
    return _finish(fig, path)


def trend_figure(Ns, values, path, ylabel: str = "minimal C") -> Path:
    """A scalar diagnostic against N on a log axis (remainder trends)."""
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.semilogx(np.asarray(Ns, dtype=float), np.asarray(values, dtype=float),
                "o-", ms=3.5, lw=1.0)
    ax.set_xlabel("N")
    ax.set_ylabel(ylabel)
    return _finish(fig, path)
