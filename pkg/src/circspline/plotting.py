"""Figures written to image files (non-interactive backend)."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["plot_nla", "plot_pyramid"]


def plot_nla(path, curves: dict, title: str = "") -> None:
    """SNR versus retained coefficients, one line per labelled curve.

    Args:
        path: output image path.
        curves: label -> list of ``(k, snr_db)``.
        title: optional axes title.
    """
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for label, curve in curves.items():
        ks = [k for k, _ in curve]
        snr = [s if math.isfinite(s) else np.nan for _, s in curve]
        ax.plot(ks, snr, marker=".", label=label)
    ax.set_xlabel("retained coefficients K")
    ax.set_ylabel("SNR [dB]")
    if title:
        ax.set_title(title)
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_pyramid(path, x, pyramid, title: str = "") -> None:
    """Input signal above the magnitudes of each level's coefficients."""
    levels = pyramid.levels
    fig, axes = plt.subplots(len(levels) + 2, 1, figsize=(6, 1.4 * (len(levels) + 2)), sharex=False)
    x = np.asarray(x)
    axes[0].plot(x.real, lw=1)
    if np.any(x.imag):
        axes[0].plot(x.imag, lw=1, ls="--")
    axes[0].set_ylabel("x")
    for j, lv in enumerate(levels):
        axes[j + 1].stem(np.abs(lv.hp_coeffs), markerfmt=".", basefmt=" ")
        axes[j + 1].set_ylabel(f"|hp{j}|")
    axes[-1].stem(np.abs(pyramid.root_lp), markerfmt=".", basefmt=" ")
    axes[-1].set_ylabel("|lp|")
    if title:
        axes[0].set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
