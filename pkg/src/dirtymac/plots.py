"""Matplotlib renderers for regions, sweeps, and simulation reports.

All functions write a figure file next to the delimited output and return
the path; the Agg backend keeps them headless-safe.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .regions import SuffixRateRegion, region_vertices  # noqa: E402


def _polygon_2d(region: SuffixRateRegion) -> np.ndarray:
    """Boundary vertices of a two-user region, ordered by polar angle."""
    pts = np.array(region_vertices(region), dtype=float)
    center = pts.mean(axis=0)
    order = np.argsort(np.arctan2(pts[:, 1] - center[1], pts[:, 0] - center[0]))
    return pts[order]


def save_region_figure(regions, path: str) -> str:
    """Overlay two-user rate regions; ``regions`` is [(label, region), ...]."""
    fig, ax = plt.subplots(figsize=(5.0, 4.2))
    for label, region in regions:
        if region.K != 2:
            raise ValueError("region plots support two-user regions only")
        poly = _polygon_2d(region)
        closed = np.vstack([poly, poly[:1]])
        ax.plot(closed[:, 0], closed[:, 1], marker="o", label=label)
        ax.fill(closed[:, 0], closed[:, 1], alpha=0.08)
    ax.set_xlabel("rate of user 1 (bits)")
    ax.set_ylabel("rate of user 2 (bits)")
    ax.set_title("rate region boundaries")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_scheme_figure(report, path: str) -> str:
    """Predicted-vs-measured variance per layer and per-user power."""
    active = [ls for ls in report.layers if ls.active]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.5, 3.8))
    if active:
        idx = np.arange(len(active))
        pred = [ls.var_pred for ls in active]
        meas = [ls.var_meas for ls in active]
        ax1.bar(idx - 0.18, pred, width=0.36, label="predicted")
        ax1.bar(idx + 0.18, meas, width=0.36, label="measured")
        ax1.set_xticks(idx, [f"layer {ls.layer}" for ls in active])
        ax1.set_ylabel("effective noise variance")
        ax1.legend(fontsize=8)
    idx = np.arange(len(report.power_target))
    ax2.bar(idx - 0.18, report.power_target, width=0.36, label="budget")
    ax2.bar(idx + 0.18, report.power_meas, width=0.36, label="measured")
    ax2.set_xticks(idx, [f"user {i + 1}" for i in range(len(idx))])
    ax2.set_ylabel("per-dimension power")
    ax2.legend(fontsize=8)
    fig.suptitle(f"scheme statistics ({report.trials} dims, seed {report.seed})",
                 fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_sweep_figure(blocks, path: str) -> str:
    """Sorted gap profiles per (K, k) against the constant budget lines."""
    fig, axes = plt.subplots(1, len(blocks), figsize=(4.2 * len(blocks), 3.6),
                             squeeze=False)
    for ax, block in zip(axes[0], blocks):
        for k in range(1, block.K + 1):
            gaps = np.sort(block.gaps[:, k - 1])[::-1]
            frac = np.linspace(0.0, 1.0, gaps.size)
            line, = ax.plot(frac, gaps, label=f"k={k}")
            ax.axhline(block.gap_bounds[k - 1], color=line.get_color(),
                       linestyle="--", linewidth=0.8)
        ax.set_title(f"K={block.K}")
        ax.set_xlabel("fraction of grid")
        ax.set_ylabel("outer - inner (bits)")
        ax.legend(fontsize=8)
        ax.grid(True, alpha=0.3)
    fig.suptitle("gap profiles vs constant budgets (dashed)", fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_caps_figure(configs, inner_bounds, path: str) -> str:
    """Layer rate caps alongside the suffix bounds they accumulate into."""
    fig, ax = plt.subplots(figsize=(5.0, 3.8))
    idx = np.arange(len(configs))
    ax.bar(idx, [c.rate_cap for c in configs], width=0.5, label="layer cap")
    ax.step(np.arange(len(inner_bounds)), inner_bounds, where="mid",
            color="k", label="suffix bound")
    ax.set_xticks(idx, [f"layer {c.index}" for c in configs])
    ax.set_ylabel("bits per dimension")
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_mi_figure(entries, path: str) -> str:
    """Estimated mutual information vs analytic caps; entries are
    (label, cap_bits, mi_bits, shaping_bits)."""
    fig, ax = plt.subplots(figsize=(5.0, 3.8))
    idx = np.arange(len(entries))
    caps = [e[1] for e in entries]
    mis = [e[2] for e in entries]
    floor = [e[1] - e[3] for e in entries]
    ax.bar(idx - 0.18, caps, width=0.36, label="rate cap")
    ax.bar(idx + 0.18, mis, width=0.36, label="estimated MI")
    ax.plot(idx, floor, "kv", markersize=5, label="cap - shaping loss")
    ax.set_xticks(idx, [e[0] for e in entries])
    ax.set_ylabel("bits per dimension")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
