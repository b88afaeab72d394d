"""Matplotlib renderings written next to the delimited report outputs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def evaluation_figure(report: dict, path: str | Path) -> None:
    """Per-level feature norms of reference vs generated, FID in the title."""
    levels = report["levels"]
    ref = report["per_level_feature_norms"]["reference"]
    gen = report["per_level_feature_norms"]["generated"]
    x = np.arange(1, levels + 1)
    fig, ax = plt.subplots(figsize=(6, 4))
    width = 0.38
    ax.bar(x - width / 2, ref, width, label=f"reference (n={report['reference_count']})")
    ax.bar(x + width / 2, gen, width, label=f"generated (n={report['generated_count']})")
    ax.set_xticks(x)
    ax.set_xlabel("pyramid level")
    ax.set_ylabel("mean feature norm")
    title = f"spatial-FID = {report['spatial_fid']:.4g}"
    if report.get("split_half_baseline") is not None:
        title += f"   (split-half baseline {report['split_half_baseline']:.4g})"
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def sweep_figure(rows: list[dict], path: str | Path) -> None:
    """Spatial-FID against the swept parameter; adaptive row highlighted."""
    labels = [r["value"] for r in rows]
    fids = [r["spatial_fid"] for r in rows]
    axis = rows[0]["axis"] if rows else ""
    x = np.arange(len(labels))
    fig, ax = plt.subplots(figsize=(6, 4))
    colors = ["tab:orange"] + ["tab:blue"] * (len(rows) - 1)
    ax.bar(x, fids, color=colors)
    ax.set_xticks(x)
    ax.set_xticklabels(labels)
    ax.set_xlabel(axis)
    ax.set_ylabel("spatial-FID (lower is better)")
    ax.set_title(f"sweep over {axis} (first bar: adaptive setting)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
