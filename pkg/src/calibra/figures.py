"""File-based matplotlib rendering for the reporting commands.

Every report that writes a CSV drops a PNG next to it with the same stem.
Rendering is headless (Agg) and deterministic; nothing here is needed by
the numerical pipeline.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from calibra.grids import Grid


def _finish(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=130, bbox_inches="tight")
    plt.close(fig)
    return path


def save_field_png(
    path: str | Path,
    grid: Grid,
    fields: dict[str, np.ndarray],
    *,
    title: str = "",
) -> Path:
    """Line plot (1D) or stacked pseudocolor panels (2D) of named fields."""
    if grid.ndim == 1:
        fig, ax = plt.subplots(figsize=(7, 4))
        x = grid.axis_centers(0)
        for label, values in fields.items():
            ax.plot(x, values, label=label, linewidth=1.2)
        ax.set_xlabel("x")
        ax.legend()
        ax.grid(alpha=0.3)
        if title:
            ax.set_title(title)
        return _finish(fig, path)
    n = len(fields)
    fig, axes = plt.subplots(n, 1, figsize=(8, 2.6 * n), squeeze=False)
    extent = (grid.lo[0], grid.hi[0], grid.lo[1], grid.hi[1])
    for ax, (label, values) in zip(axes[:, 0], fields.items()):
        im = ax.imshow(values, origin="lower", extent=extent, aspect="auto", cmap="viridis")
        fig.colorbar(im, ax=ax, shrink=0.9)
        ax.set_title(label, fontsize=9)
    if title:
        fig.suptitle(title)
    return _finish(fig, path)


def save_error_png(path: str | Path, rows: Sequence[dict], *, time_key: str = "t") -> Path:
    """Error-vs-time curves, one panel per route, one line per mode count."""
    routes = ["eulerian", "ale", "eulerian_proj", "ale_proj"]
    n_values = sorted({r["N"] for r in rows})
    fig, axes = plt.subplots(2, 2, figsize=(10, 7), sharex=True, sharey=True)
    for ax, route in zip(axes.ravel(), routes):
        for n in n_values:
            pts = sorted(
                ((r[time_key], r[route]) for r in rows if r["N"] == n), key=lambda p: p[0]
            )
            if pts:
                t, e = zip(*pts)
                ax.semilogy(t, e, marker="o", markersize=3, label=f"N={n}")
        ax.set_title(route)
        ax.grid(alpha=0.3, which="both")
    axes[1, 0].set_xlabel(time_key)
    axes[1, 1].set_xlabel(time_key)
    axes[0, 0].set_ylabel("relative L2 error")
    axes[1, 0].set_ylabel("relative L2 error")
    axes[0, 0].legend(fontsize=8)
    return _finish(fig, path)


def save_eigs_png(path: str | Path, rows: Sequence[dict]) -> Path:
    """Normalized eigenvalue decay, Eulerian vs calibrated, per component."""
    comps = sorted({r["component"] for r in rows})
    fig, axes = plt.subplots(1, len(comps), figsize=(4.5 * len(comps), 3.6), squeeze=False)
    for ax, comp in zip(axes[0], comps):
        sub = sorted((r for r in rows if r["component"] == comp), key=lambda r: r["k"])
        k = [r["k"] for r in sub]
        ax.semilogy(k, [max(r["eulerian_ratio"], 1e-300) for r in sub], "o-", label="Eulerian")
        ax.semilogy(k, [max(r["ale_ratio"], 1e-300) for r in sub], "s-", label="calibrated")
        ax.set_title(comp)
        ax.set_xlabel("k")
        ax.grid(alpha=0.3, which="both")
    axes[0][0].set_ylabel("eigenvalue / largest")
    axes[0][0].legend(fontsize=8)
    return _finish(fig, path)


def save_guess_study_png(path: str | Path, rows: Sequence[dict]) -> Path:
    """Calibration error against target time, one line per reference time."""
    refs = sorted({r["reference_t"] for r in rows})
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for ref in refs:
        pts = sorted(
            ((r["target_t"], r["error"]) for r in rows if r["reference_t"] == ref),
            key=lambda p: p[0],
        )
        t, e = zip(*pts)
        ax.semilogy(t, np.maximum(e, 1e-300), marker="o", markersize=3, label=f"ref t={ref:g}")
    ax.set_xlabel("target t")
    ax.set_ylabel("calibration error")
    ax.grid(alpha=0.3, which="both")
    ax.legend(fontsize=8)
    return _finish(fig, path)


def save_order_study_png(path: str | Path, rows: Sequence[dict]) -> Path:
    """Calibration error against time, one line per sweep strategy."""
    strategies = sorted({r["strategy"] for r in rows})
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for s in strategies:
        pts = sorted(
            ((r["target_t"], r["error"]) for r in rows if r["strategy"] == s),
            key=lambda p: p[0],
        )
        t, e = zip(*pts)
        ax.semilogy(t, np.maximum(e, 1e-300), marker="o", markersize=3, label=s)
    ax.set_xlabel("t")
    ax.set_ylabel("calibration error")
    ax.grid(alpha=0.3, which="both")
    ax.legend(fontsize=8)
    return _finish(fig, path)
