"""Figures written next to the CSV reports."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed hash salt and no date stamp keep SVG output byte-stable
_RC = {
    "svg.hashsalt": "motionclip",
    "svg.fonttype": "none",
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def _figure(width=7.0, height=None):
    if height is None:
        height = width * (np.sqrt(5.0) - 1.0) / 4.0
    return plt.subplots(figsize=(width, height))


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_energy(path, energy, fps, selection=None, title=None):
    """Raw and filtered energy against time with the chosen window shaded."""
    with plt.rc_context(_RC):
        fig, ax = _figure()
        t = np.arange(len(energy.raw)) / fps
        ax.plot(t, energy.raw, color="0.6", lw=0.8, label="energy")
        ax.plot(t, energy.filtered, color="C0", lw=1.0, label="filtered")
        if selection is not None:
            ax.axvspan(selection.start_seconds,
                       selection.start_seconds + selection.duration_seconds,
                       color="C1", alpha=0.2, lw=0, label="selected window")
        ax.set_xlabel("time (s)")
        ax.set_ylabel("wavelet energy")
        if title:
            ax.set_title(title)
        ax.legend(frameon=False, loc="upper right")
        _save(fig, path)


def plot_velocity(path, velocity, selection=None):
    with plt.rc_context(_RC):
        fig, ax = _figure(height=2.2)
        t = np.arange(len(velocity.values)) / velocity.fps
        ax.plot(t, velocity.values, color="k", lw=0.7)
        if selection is not None:
            ax.axvspan(selection.start_seconds,
                       selection.start_seconds + selection.duration_seconds,
                       color="C1", alpha=0.2, lw=0)
        ax.set_xlabel("time (s)")
        ax.set_ylabel(f"joint {velocity.joint_index} speed (px/s)")
        _save(fig, path)
