"""Synthetic clustered datasets for tests and desk-scale experiments.

Two flavors: plain clustered patches (cluster anchors drawn fresh per
patch), and count-dependent clustering, where patches fall into count
regimes with disjoint count ranges and regime-specific anchor geometry.
The latter gives counting categories a real spatial signal to condition on.
"""

from __future__ import annotations

import numpy as np

from .dataset import default_type_names
from .layout import Cell, PointPattern

_TYPE_WEIGHTS = (5.0, 3.0, 2.0)


def _type_proportions(num_types: int) -> np.ndarray:
    w = [(_TYPE_WEIGHTS[t] if t < len(_TYPE_WEIGHTS) else 1.0) for t in range(num_types)]
    w = np.asarray(w, dtype=float)
    return w / w.sum()


def _scatter(
    rng: np.random.Generator,
    anchors: np.ndarray,
    count: int,
    std: float,
) -> np.ndarray:
    """count points around the anchors (normalized coordinates, clipped)."""
    if count == 0:
        return np.empty((0, 2))
    assign = rng.integers(len(anchors), size=count)
    pts = anchors[assign] + rng.standard_normal((count, 2)) * std
    return np.clip(pts, 0.0, 1.0 - 1e-9)


def make_synthetic_dataset(
    num_patches: int,
    num_types: int = 3,
    width: float = 256.0,
    height: float = 256.0,
    count_range: tuple[int, int] = (40, 200),
    clusters_per_type: tuple[int, int] = (1, 3),
    cluster_std: float = 0.06,
    count_dependent: bool = False,
    regimes: int = 5,
    seed: int = 0,
) -> tuple[list[PointPattern], list[str]]:
    """Generate clustered point patterns; returns (patterns, type names)."""
    if num_patches < 1 or num_types < 1:
        raise ValueError("need at least one patch and one type")
    rng = np.random.default_rng(seed)
    props = _type_proportions(num_types)
    regime_anchors = None
    if count_dependent:
        # fixed anchor geometry per regime: clusters sit in a regime-specific
        # sector so spatial structure tracks the count bucket
        regime_anchors = []
        for r in range(regimes):
            angle = 2.0 * np.pi * r / regimes
            center = 0.5 + 0.30 * np.array([np.cos(angle), np.sin(angle)])
            per_type = []
            for t in range(num_types):
                k = int(rng.integers(clusters_per_type[0], clusters_per_type[1] + 1))
                per_type.append(center + rng.standard_normal((k, 2)) * 0.08)
            regime_anchors.append(per_type)

    lo, hi = count_range
    patterns = []
    for i in range(num_patches):
        if count_dependent:
            regime = i % regimes
            span = (hi - lo) / regimes
            r_lo = lo + regime * span
            count = int(rng.integers(int(r_lo), int(r_lo + 0.8 * span) + 1))
            anchors_by_type = [
                np.clip(a + rng.standard_normal(a.shape) * 0.02, 0.05, 0.95)
                for a in regime_anchors[regime]
            ]
        else:
            count = int(rng.integers(lo, hi + 1))
            anchors_by_type = []
            for t in range(num_types):
                k = int(rng.integers(clusters_per_type[0], clusters_per_type[1] + 1))
                anchors_by_type.append(rng.uniform(0.1, 0.9, size=(k, 2)))
        type_counts = rng.multinomial(count, props)
        cells = []
        for t in range(num_types):
            pts = _scatter(rng, anchors_by_type[t], int(type_counts[t]), cluster_std)
            for x, y in pts:
                cells.append(Cell(float(x * width), float(y * height), t))
        patterns.append(PointPattern(f"synth_{i:04d}", width, height, tuple(cells)))
    return patterns, default_type_names(num_types)


def uniform_random_patterns(
    num_patches: int,
    num_types: int,
    width: float,
    height: float,
    count_range: tuple[int, int],
    seed: int = 0,
) -> list[PointPattern]:
    """Structure-free baseline: cells placed uniformly at random."""
    rng = np.random.default_rng(seed)
    props = _type_proportions(num_types)
    patterns = []
    for i in range(num_patches):
        count = int(rng.integers(count_range[0], count_range[1] + 1))
        type_counts = rng.multinomial(count, props)
        cells = []
        for t in range(num_types):
            pts = rng.uniform(0.0, 1.0 - 1e-9, size=(int(type_counts[t]), 2))
            for x, y in pts:
                cells.append(Cell(float(x * width), float(y * height), t))
        patterns.append(PointPattern(f"uniform_{i:04d}", width, height, tuple(cells)))
    return patterns
