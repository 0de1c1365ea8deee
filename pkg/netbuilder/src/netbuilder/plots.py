"""Raster, channel heatmap and active-count plots from run tables."""

from __future__ import annotations

import warnings

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

EXC_TYPES = (0, 2, 4)
INH_TYPES = (1, 3, 5)


def _warn_if_empty(data_len: int, what: str) -> bool:
    if data_len == 0:
        warnings.warn(f"no {what} records: writing an empty plot", stacklevel=3)
        return True
    return False


def plot_raster(spikes: list[tuple[int, int, int]], path: str) -> str:
    """One mark per spiking minicolumn per millisecond."""
    fig, ax = plt.subplots(figsize=(8, 4))
    if not _warn_if_empty(len(spikes), "spike"):
        ts = [t for t, _a, _b in spikes]
        addr_order = {a: i for i, a in enumerate(sorted({a for _t, a, _b in spikes}))}
        ys = [addr_order[a] for _t, a, _b in spikes]
        ax.plot(ts, ys, ".", markersize=2, color="black")
    ax.set_xlabel("time (ms)")
    ax.set_ylabel("minicolumn")
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path


def channel_grid(
    events: np.ndarray, channels: int, steps: int, types: tuple[int, ...] = EXC_TYPES
) -> np.ndarray:
    """Per-channel, per-millisecond event counts, normalized to the peak."""
    stride = (1 << 20) // channels
    grid = np.zeros((channels, steps))
    if len(events):
        ch = (events[:, 1] >> 7) // stride
        ok = (ch < channels) & (events[:, 0] < steps) & np.isin(events[:, 2], types)
        np.add.at(grid, (ch[ok], events[ok, 0]), events[ok, 3])
    peak = grid.max()
    return grid / peak if peak > 0 else grid


def plot_heatmap(events: np.ndarray, channels: int, steps: int, path: str) -> str:
    """Channel-by-time activity heatmap (excitatory types)."""
    _warn_if_empty(len(events), "event")
    grid = channel_grid(events, channels, steps)
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.imshow(grid, aspect="auto", origin="lower", interpolation="nearest",
              extent=(0, steps, -0.5, channels - 0.5), cmap="magma")
    ax.set_xlabel("time (ms)")
    ax.set_ylabel("channel")
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_active_trace(stats: np.ndarray, path: str) -> str:
    """Bound time-multiplexed slots over time."""
    fig, ax = plt.subplots(figsize=(8, 3))
    if not _warn_if_empty(len(stats), "stats"):
        ax.plot(stats[:, 0], stats[:, 1], color="tab:blue")
    ax.set_xlabel("time (ms)")
    ax.set_ylabel("active slots")
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path
