"""
Figures written next to CLI outputs when --plot is given. Headless: the Agg
backend is selected before pyplot loads.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from src import encoding
from src.geometry import design_space
from src.models import CurvatureEncoding, DesignParams, HistogramSpec, TrainReport

plt.rcParams.update({
    "font.size": 10,
    "axes.labelsize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
})


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path)
    plt.close(fig)
    return path


def _diagonal(ax, lo: float, hi: float) -> None:
    ax.plot([lo, hi], [lo, hi], color="0.5", lw=0.8, ls="--")


# ---------------------------------------------------------------------------
# Curvature profiles
# ---------------------------------------------------------------------------

def profile_image(enc: CurvatureEncoding, path: str | Path, title: str = "") -> Path:
    """Density of the encoding over the (κ1, κ2) plane; the κ1 < κ2 half stays blank."""
    spec = enc.spec
    matrix = encoding.to_matrix(enc)
    masked = np.ma.masked_where(np.triu(np.ones_like(matrix, dtype=bool), k=1), matrix)

    fig, ax = plt.subplots(figsize=(4.2, 3.6))
    extent = (spec.kappa_min, spec.kappa_max, spec.kappa_min, spec.kappa_max)
    # matrix rows are κ1 bins, columns κ2 bins → plot κ2 on x, κ1 on y
    im = ax.imshow(masked, origin="lower", extent=extent, cmap="viridis", aspect="equal")
    _diagonal(ax, spec.kappa_min, spec.kappa_max)
    ax.set_xlabel(r"$\kappa_2$")
    ax.set_ylabel(r"$\kappa_1$")
    if title:
        ax.set_title(title)
    fig.colorbar(im, ax=ax, label="area fraction")
    return _save(fig, path)


def profile_comparison(rows: list[np.ndarray], labels: list[str], spec: HistogramSpec, path: str | Path) -> Path:
    """Side-by-side density images sharing one colour scale."""
    mats = [encoding.to_matrix(CurvatureEncoding(np.clip(r, 0.0, None), spec)) for r in rows]
    vmax = max(float(m.max()) for m in mats) or 1.0
    upper = np.triu(np.ones((spec.bins, spec.bins), dtype=bool), k=1)
    extent = (spec.kappa_min, spec.kappa_max, spec.kappa_min, spec.kappa_max)

    fig, axes = plt.subplots(1, len(mats), figsize=(3.4 * len(mats), 3.2), squeeze=False)
    for ax, mat, label in zip(axes[0], mats, labels):
        im = ax.imshow(np.ma.masked_where(upper, mat), origin="lower", extent=extent,
                       cmap="viridis", vmin=0.0, vmax=vmax, aspect="equal")
        _diagonal(ax, spec.kappa_min, spec.kappa_max)
        ax.set_title(label)
        ax.set_xlabel(r"$\kappa_2$")
    axes[0][0].set_ylabel(r"$\kappa_1$")
    fig.colorbar(im, ax=axes[0].tolist(), label="area fraction")
    return _save(fig, path)


# ---------------------------------------------------------------------------
# Design space
# ---------------------------------------------------------------------------

def energy_contours(theta: DesignParams, spec: HistogramSpec, path: str | Path) -> Path:
    """Contours of the curvature energy density over the histogram range."""
    k = np.linspace(spec.kappa_min, spec.kappa_max, 201)
    k2, k1 = np.meshgrid(k, k)
    w = design_space.energy_density(theta, k1, k2)

    fig, ax = plt.subplots(figsize=(4.2, 3.6))
    cs = ax.contourf(k2, k1, w, levels=30, cmap="coolwarm")
    ax.contour(k2, k1, w, levels=[0.0], colors="k", linewidths=0.8)
    _diagonal(ax, spec.kappa_min, spec.kappa_max)
    ax.set_xlabel(r"$\kappa_2$")
    ax.set_ylabel(r"$\kappa_1$")
    ax.set_title(design_space.classify(theta).value)
    fig.colorbar(cs, ax=ax, label="energy density")
    return _save(fig, path)


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

def loss_curves(report: TrainReport, path: str | Path, title: str = "") -> Path:
    epochs = np.arange(1, len(report.train_loss) + 1)
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    ax.semilogy(epochs, report.train_loss, label="train")
    test = np.asarray(report.test_loss, dtype=np.float64)
    if np.any(np.isfinite(test)):
        ax.semilogy(epochs, test, label="test")
    ax.set_xlabel("epoch")
    ax.set_ylabel("loss")
    if title:
        ax.set_title(title)
    ax.legend(frameon=False)
    return _save(fig, path)


def parity_plots(true: np.ndarray, pred: np.ndarray, names: tuple[str, ...], r2: np.ndarray, path: str | Path) -> Path:
    """One true-vs-predicted scatter per column, R² in the title."""
    true, pred = np.atleast_2d(true), np.atleast_2d(pred)
    ncols = min(4, len(names))
    nrows = -(-len(names) // ncols)
    fig, axes = plt.subplots(nrows, ncols, figsize=(2.8 * ncols, 2.6 * nrows), squeeze=False)
    for i, ax in enumerate(axes.flat):
        if i >= len(names):
            ax.axis("off")
            continue
        ax.scatter(true[:, i], pred[:, i], s=4, alpha=0.6)
        lo = float(min(true[:, i].min(), pred[:, i].min()))
        hi = float(max(true[:, i].max(), pred[:, i].max()))
        _diagonal(ax, lo, hi)
        score = "n/a" if np.isnan(r2[i]) else f"{r2[i]:.3f}"
        ax.set_title(f"{names[i]}  R² = {score}")
    fig.supxlabel("true")
    fig.supylabel("predicted")
    return _save(fig, path)
