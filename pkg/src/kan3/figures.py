"""Matplotlib renderings saved alongside the delimited outputs."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .ergodic import TORUS0, TORUS1
from .ppm import PALETTE


def _label_rgb(labels: np.ndarray) -> np.ndarray:
    lut = np.zeros((max(PALETTE) + 1, 3))
    for k, rgb in PALETTE.items():
        lut[k] = np.asarray(rgb) / 255.0
    return lut[labels]


def basin_slices_png(basins, path: str, n_slices: int = 6) -> None:
    """A row of basin slices at evenly spaced fiber levels."""
    nt = basins.shape[2]
    idx = np.linspace(0, nt - 1, min(n_slices, nt)).round().astype(int)
    fig, axes = plt.subplots(1, len(idx), figsize=(2.4 * len(idx), 2.8))
    for ax, k in zip(np.atleast_1d(axes), idx):
        sl = basins.labels[:, :, k, 0]
        ax.imshow(_label_rgb(sl.T), origin="lower", extent=(0, 1, 0, 1))
        theta = -1.0 + (2 * k + 1.0) / nt
        ax.set_title(f"theta = {theta:+.2f}", fontsize=8)
        ax.set_xticks([])
        ax.set_yticks([])
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def theta_histogram_png(points: np.ndarray, weights: np.ndarray, path: str,
                        bins: int = 80) -> None:
    fig, ax = plt.subplots(figsize=(5, 3))
    ax.hist(points[:, 2], bins=bins, range=(-1, 1), weights=weights,
            color="#1f5ac8", density=True)
    ax.set_xlabel("theta")
    ax.set_ylabel("pushed mass density")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def hit_matrix_png(hits: np.ndarray, path: str) -> None:
    fig, ax = plt.subplots(figsize=(6, 2.2))
    ax.imshow(hits, aspect="auto", cmap="Greys", interpolation="nearest")
    ax.set_xlabel("iterate n")
    ax.set_ylabel("region pair")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def coverage_png(report, path: str) -> None:
    fig, axes = plt.subplots(1, report.grid[2], figsize=(1.6 * report.grid[2], 2.2))
    for k, ax in enumerate(np.atleast_1d(axes)):
        ax.imshow(report.covered[:, :, k].T, origin="lower", vmin=0, vmax=1,
                  cmap="Blues", interpolation="nearest")
        ax.set_xticks([])
        ax.set_yticks([])
    fig.suptitle(f"{report.object_name}: fraction {report.fraction:.3f}")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def derivative_range_png(report: dict, path: str) -> None:
    """K3 fiber-derivative range against its margins."""
    k3 = report["K3"]
    fig, ax = plt.subplots(figsize=(5, 2.5))
    ax.axhspan(k3["margin_lo"], k3["margin_hi"], color="#cde3f7",
               label="allowed range")
    ax.plot([0, 1], [k3["min"]] * 2, "b-", label="observed min")
    ax.plot([0, 1], [k3["max"]] * 2, "r-", label="observed max")
    ax.set_xticks([])
    ax.set_ylabel("d theta' / d theta")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
